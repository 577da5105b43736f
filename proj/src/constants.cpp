#include "scanstat/constants.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scanstat {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct WlsFit {
  double intercept = 0.0, slope = 0.0;
  double intercept_se = 0.0;
  double worst_residual = 0.0;
};

// weighted least squares of y = K + a x with per-point standard errors
WlsFit fit_intercept(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& se) {
  double Sw = 0, Sx = 0, Sxx = 0, Sy = 0, Sxy = 0;
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = se[i] > 0 ? se[i] : 1e-12;
    w[i] = 1.0 / (s * s);
    Sw += w[i];
    Sx += w[i] * x[i];
    Sxx += w[i] * x[i] * x[i];
    Sy += w[i] * y[i];
    Sxy += w[i] * x[i] * y[i];
  }
  double den = Sw * Sxx - Sx * Sx;
  WlsFit f;
  f.intercept = (Sxx * Sy - Sx * Sxy) / den;
  f.slope = (Sw * Sxy - Sx * Sy) / den;
  double var = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double ci = w[i] * (Sxx - Sx * x[i]) / den;
    var += ci * ci * se[i] * se[i];
  }
  f.intercept_se = std::sqrt(var);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = (y[i] - f.intercept - f.slope * x[i]) / (se[i] > 0 ? se[i] : 1e-12);
    f.worst_residual = std::max(f.worst_residual, std::abs(r));
  }
  return f;
}

double default_grid_step(int dim, double m) {
  if (dim == 1) return m / 1024.0;
  if (dim == 2) return m / 256.0;
  return m / 64.0;
}

// per-box estimate of K_m from sampled suprema
McEstimate km_from_sups(std::span<const double> sups, const TiltSolution& tilt,
                        std::uint64_t seed) {
  const double theta = tilt.theta_c;
  std::vector<double> w(sups.size());
  if (tilt.span) {
    const double eta = *tilt.span;
    // empirical tail sum over levels l in eta Z+, truncated where a term
    // stops contributing (relative 1e-4); exponential tail bound justifies it
    long long kmax = 0;
    for (double s : sups) kmax = std::max(kmax, std::llround(std::floor(s / eta + 1e-9)));
    std::vector<double> count(static_cast<std::size_t>(kmax) + 1, 0.0);
    for (double s : sups) {
      long long k = std::llround(std::floor(s / eta + 1e-9));
      if (k >= 0) count[static_cast<std::size_t>(k)] += 1.0;
    }
    // survival counts: #  { sup >= l }
    for (long long k = kmax - 1; k >= 0; --k) count[k] += count[k + 1];
    double total = 1.0 / (1.0 - std::exp(-eta * theta));
    long long cap = kmax;
    for (long long k = 1; k <= kmax; ++k) {
      double term = std::exp(theta * eta * k) * count[k] / static_cast<double>(sups.size());
      if (term < 1e-4 * total) {
        cap = k - 1;
        break;
      }
      total += term;
    }
    const double eT = std::exp(theta * eta);
    for (std::size_t i = 0; i < sups.size(); ++i) {
      long long k = std::min<long long>(cap, std::llround(std::floor(sups[i] / eta + 1e-9)));
      double tail = k >= 1 ? eT * (std::pow(eT, static_cast<double>(k)) - 1.0) / (eT - 1.0) : 0.0;
      w[i] = eta * (1.0 / (1.0 - std::exp(-eta * theta)) + tail);
    }
  } else {
    // integral identity: K_m = theta^{-1} E e^{theta sup}
    for (std::size_t i = 0; i < sups.size(); ++i)
      w[i] = std::exp(theta * std::max(sups[i], 0.0)) / theta;
  }
  return summarize_mean(w, seed);
}

}  // namespace

std::string route_name(KRoute r) {
  switch (r) {
    case KRoute::local_sup: return "local_sup";
    case KRoute::occupation: return "occupation";
    case KRoute::rectangle_closed_form: return "rectangle_closed_form";
    case KRoute::ball_closed_form: return "ball_closed_form";
    case KRoute::omega_bound: return "omega_bound";
  }
  return "?";
}

KEstimate k_local_sup(const Kernel& kernel, const MarkLaw& law, double c,
                      std::vector<double> m_list, std::uint64_t reps,
                      std::uint64_t seed, int workers) {
  if (m_list.size() < 3)
    throw std::invalid_argument("k_local_sup: need at least three box sizes");
  if (!std::is_sorted(m_list.begin(), m_list.end()))
    throw std::invalid_argument("k_local_sup: box sizes must be increasing");
  const TiltSolution tilt = solve_tilt(law, kernel, c);
  const MarkLaw tilted = law.tilted(tilt.theta_c);
  const int d = kernel.dim();
  const int width = static_cast<int>(m_list.size());
  const double sd = std::sqrt(static_cast<double>(d));

  // grid-step calibration: halve until the sup stabilizes over a small pilot
  std::vector<double> steps(m_list.size());
  for (std::size_t j = 0; j < m_list.size(); ++j) {
    double m = m_list[j];
    double h = default_grid_step(d, m);
    for (int halving = 0; halving < 2; ++halving) {
      int changed = 0;
      const int pilot = 40;
      for (int i = 0; i < pilot; ++i) {
        RngStream rng(seed, "k_local_sup_pilot", static_cast<std::uint64_t>(i) * width + j);
        LocalField f = simulate_local_field(kernel, tilt, law, m * sd + 1e-6, rng);
        if (sup_on_box(f, m, h) != sup_on_box(f, m, 0.5 * h)) ++changed;
      }
      if (changed <= pilot / 50) break;
      h *= 0.5;
    }
    steps[j] = h;
  }

  std::vector<double> buf;
  run_replicates(seed, "k_local_sup", reps, workers, width,
                 [&](std::uint64_t, RngStream& rng, double* row) {
                   for (int j = 0; j < width; ++j) {
                     LocalField f =
                         simulate_local_field(kernel, tilt, law, m_list[j] * sd + 1e-6, rng);
                     row[j] = sup_on_box(f, m_list[j], steps[j]);
                   }
                 },
                 buf);

  KEstimate out;
  out.route = KRoute::local_sup;
  out.reps = reps;
  out.seed = seed;
  std::vector<double> xs, ys, ses;
  for (int j = 0; j < width; ++j) {
    auto sups = column(buf, width, j);
    McEstimate km = km_from_sups(sups, tilt, seed);
    double md = std::pow(m_list[j], d);
    out.diag.m_values.push_back(m_list[j]);
    out.diag.km_over_md.push_back(km.value / md);
    out.diag.km_se.push_back(km.se / md);
    xs.push_back(1.0 / m_list[j]);
    ys.push_back(km.value / md);
    ses.push_back(km.se / md);
  }
  WlsFit fit = fit_intercept(xs, ys, ses);
  out.value = fit.intercept;
  out.se = fit.intercept_se;
  out.diag.extrapolation_residual = fit.worst_residual;
  if (!(out.value > 0.0) || fit.worst_residual > 4.0) {
    out.diag.diagnostic_failure = true;
    out.diag.notes.push_back("1/m extrapolation unstable");
  }
  return out;
}

KEstimate k_occupation(const Kernel& kernel, const MarkLaw& law, double c,
                       std::uint64_t reps, std::uint64_t seed, int workers,
                       RegionSampler sampler) {
  const TiltSolution tilt = solve_tilt(law, kernel, c);
  const MarkLaw tilted = law.tilted(tilt.theta_c);
  const bool degen = law.is_degenerate();
  const double theta = tilt.theta_c;
  const double chi = tilt.chi;

  std::vector<double> buf;
  run_replicates(seed, "k_occupation", reps, workers, 3,
                 [&](std::uint64_t, RngStream& rng, double* row) {
                   LocalField f = simulate_local_field(kernel, tilt, law,
                                                       2.0 * sampler.r0 + 1.0, rng);
                   RegionScanResult scan =
                       region_scan(f, kernel, law, tilted, sampler, rng, !degen);
                   double v = std::max(scan.zero_volume, 1e-300);
                   double g;
                   if (degen) {
                     // (1 - e^{-eta theta}) / chi = eta exactly
                     g = law.degenerate_value() / v;
                   } else {
                     double factor =
                         scan.negative_sup ? 1.0 - std::exp(theta * *scan.negative_sup) : 1.0;
                     g = factor / (chi * v);
                   }
                   row[0] = g;
                   row[1] = scan.truncated ? 1.0 : 0.0;
                   row[2] = (!degen && !scan.negative_sup) ? 1.0 : 0.0;
                 },
                 buf);

  auto vals = column(buf, 3, 0);
  McEstimate e = summarize_mean(vals, seed);
  KEstimate out;
  out.value = e.value;
  out.se = e.se;
  out.route = KRoute::occupation;
  out.reps = reps;
  out.seed = seed;
  double trunc_frac = mean_of(column(buf, 3, 1));
  double nosup_frac = mean_of(column(buf, 3, 2));
  if (trunc_frac > 0.0) {
    out.diag.truncated = true;
    out.diag.notes.push_back("region truncation in " + std::to_string(trunc_frac * 100.0) +
                             "% of replicates");
  }
  if (nosup_frac > 0.0)
    out.diag.notes.push_back("no negative value found in " +
                             std::to_string(nosup_frac * 100.0) +
                             "% of replicates (factor set to its a.s. limit 1)");
  return out;
}

KEstimate k_rectangle(const MarkLaw& law, double c, const std::vector<double>& edges,
                      const McEstimate& nu) {
  Kernel kernel = Kernel::box(edges);
  const TiltSolution tilt = solve_tilt(law, kernel, c);
  const int d = kernel.dim();
  double vol = kernel.volume();
  double core = nu.value * (c / vol - law.mean());
  double k = std::pow(core, d) * std::pow(tilt.chi * vol, d - 1);
  KEstimate out;
  out.value = k;
  out.se = nu.value > 0.0 ? d * k / nu.value * nu.se : 0.0;
  out.route = KRoute::rectangle_closed_form;
  out.reps = nu.reps;
  out.seed = nu.seed;
  return out;
}

double ball_zero_set_mean_volume(int d, double c_hat) {
  if (!(c_hat > 1.0))
    throw std::invalid_argument("ball_zero_set_mean_volume: requires c_hat > 1");
  if (d < 1) throw std::invalid_argument("ball_zero_set_mean_volume: bad dimension");
  // C_d = surface(unit d-ball) / volume(unit (d-1)-ball)^d
  double surf = d * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
  double vball =
      d == 1 ? 1.0 : std::pow(kPi, 0.5 * (d - 1)) / std::tgamma(0.5 * (d - 1) + 1.0);
  double cd = surf / std::pow(vball, d);

  // sum_k c^k Gamma(2k+d) / [(k!)^2 (1+c)^{2k+d}] with term recursion
  double term = std::tgamma(static_cast<double>(d)) / std::pow(1.0 + c_hat, d);
  double sum = term;
  for (int k = 0; k < 100000; ++k) {
    double a = 2.0 * k + d;
    term *= c_hat * a * (a + 1.0) / ((k + 1.0) * (k + 1.0) * (1.0 + c_hat) * (1.0 + c_hat));
    sum += term;
    if (term < 1e-15 * sum) break;
  }
  return cd * sum;
}

double k_ball_lower_bound(int d, double c_hat) {
  return 1.0 / ball_zero_set_mean_volume(d, c_hat);
}

McEstimate omega_inverse_volume(const Kernel& kernel, std::uint64_t reps,
                                std::uint64_t seed, int workers, RegionSampler sampler) {
  std::vector<double> buf;
  run_replicates(seed, "omega_volume", reps, workers, 2,
                 [&](std::uint64_t, RngStream& rng, double* row) {
                   OmegaField om = simulate_omega(kernel, 4.0, rng);
                   bool trunc = false;
                   double v = omega_volume(om, kernel, sampler, rng, &trunc);
                   row[0] = 1.0 / std::max(v, 1e-300);
                   row[1] = trunc ? 1.0 : 0.0;
                 },
                 buf);
  McEstimate e = summarize_mean(column(buf, 2, 0), seed);
  double tf = mean_of(column(buf, 2, 1));
  if (tf > 0.0)
    e.notes.push_back("region truncation in " + std::to_string(tf * 100.0) + "% of replicates");
  return e;
}

KEstimate k_omega_bound_from(const McEstimate& omega_inv, const MarkLaw& law,
                             const TiltSolution& tilt, int dim) {
  double pre = law.is_degenerate()
                   ? law.degenerate_value() * std::pow(1.0 + tilt.m, dim)
                   : std::pow(1.0 + tilt.m, dim) / tilt.chi;
  KEstimate out;
  out.value = pre * omega_inv.value;
  out.se = pre * omega_inv.se;
  out.route = KRoute::omega_bound;
  out.reps = omega_inv.reps;
  out.seed = omega_inv.seed;
  out.diag.notes = omega_inv.notes;
  return out;
}

KEstimate k_omega_bound(const Kernel& kernel, const MarkLaw& law, double c,
                        std::uint64_t reps, std::uint64_t seed, int workers,
                        RegionSampler sampler) {
  const TiltSolution tilt = solve_tilt(law, kernel, c);
  McEstimate inv = omega_inverse_volume(kernel, reps, seed, workers, sampler);
  return k_omega_bound_from(inv, law, tilt, kernel.dim());
}

}  // namespace scanstat
