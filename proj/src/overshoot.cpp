#include "scanstat/overshoot.hpp"

#include <cmath>
#include <stdexcept>

namespace scanstat {

WalkSpec make_walk_spec(const MarkLaw& law, const TiltSolution& tilt) {
  WalkSpec s{law, law.tilted(tilt.theta_c), tilt.m, tilt.theta_c, law.span()};
  // upward drift: E U = [c / vol(B) - mu] / (1 + M) > 0 under the solved tilt
  return s;
}

double walk_overshoot(const WalkSpec& spec, double level, RngStream& rng) {
  const double p_tilt = spec.mgf_m / (1.0 + spec.mgf_m);
  double r = 0.0;
  for (;;) {
    double u = rng.uniform() < p_tilt ? spec.tilted.sample(rng) : -spec.base.sample(rng);
    r += u;
    if (r >= level) return r - level;
  }
}

std::vector<double> default_levels(const WalkSpec& spec) {
  double base = std::max(spec.span.value_or(0.0), 1.0 / spec.theta_c);
  std::vector<double> lv;
  for (double f : {10.0, 20.0, 40.0, 80.0}) {
    double y = f * base;
    if (spec.span) y = *spec.span * std::ceil(y / *spec.span - 1e-9);
    lv.push_back(y);
  }
  return lv;
}

NuEstimate overshoot_constant(const WalkSpec& spec, std::vector<double> levels,
                              std::uint64_t reps, std::uint64_t seed, int workers) {
  if (levels.empty()) levels = default_levels(spec);
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (!(levels[i] > levels[i - 1]))
      throw std::invalid_argument("overshoot_constant: levels must be increasing");
  if (spec.span) {
    for (double y : levels) {
      double k = y / *spec.span;
      if (std::abs(k - std::round(k)) > 1e-9)
        throw std::invalid_argument("overshoot_constant: levels must lie on the span lattice");
    }
  }

  NuEstimate out;
  out.levels = levels;

  if (spec.base.is_degenerate()) {
    // steps are +-eta, levels sit on eta Z, so the walk hits them exactly
    out.est = McEstimate{1.0, 0.0, 0, seed, {"exact: degenerate marks give zero overshoot"}};
    out.level_value.assign(levels.size(), 1.0);
    out.level_se.assign(levels.size(), 0.0);
    out.stable = true;
    return out;
  }

  const int width = static_cast<int>(levels.size());
  std::vector<double> buf;
  run_replicates(seed, "overshoot", reps, workers, width,
                 [&](std::uint64_t, RngStream& rng, double* row) {
                   for (int j = 0; j < width; ++j) {
                     double over = walk_overshoot(spec, levels[j], rng);
                     if (spec.span) {
                       double k = over / *spec.span;
                       if (std::abs(k - std::round(k)) > 1e-9 || over < -1e-12)
                         throw std::runtime_error("overshoot not on the span lattice");
                     }
                     row[j] = std::exp(-spec.theta_c * over);
                   }
                 },
                 buf);

  for (int j = 0; j < width; ++j) {
    auto col = column(buf, width, j);
    McEstimate e = summarize_mean(col, seed);
    out.level_value.push_back(e.value);
    out.level_se.push_back(e.se);
  }
  out.est = McEstimate{out.level_value.back(), out.level_se.back(), reps, seed, {}};

  // stationarity diagnostic: estimates over the top half agree pairwise
  std::size_t half = levels.size() / 2;
  for (std::size_t a = half; a < levels.size() && out.stable; ++a)
    for (std::size_t b = a + 1; b < levels.size(); ++b) {
      double d = std::abs(out.level_value[a] - out.level_value[b]);
      double s = std::hypot(out.level_se[a], out.level_se[b]);
      if (d > 3.0 * s) {
        out.stable = false;
        out.est.notes.push_back("level-stability diagnostic failed");
        break;
      }
    }
  return out;
}

}  // namespace scanstat
