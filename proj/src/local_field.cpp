#include "scanstat/local_field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace scanstat {

namespace {

struct EventRec {
  double nx, ny, nz, off, mark;
  std::uint8_t stream;
};

void append_band(LocalField& f, const Kernel& kernel, const MarkLaw& law,
                 const MarkLaw& tilted_law, double lo, double hi, RngStream& rng) {
  // stream 1 on [lo, hi), stream 2 on (-hi, -lo]; rates 1 and M(theta_c)
  const double area = kernel.boundary_area();
  std::uint64_t n1 = rng.poisson(area * (hi - lo));
  std::uint64_t n2 = rng.poisson(area * (hi - lo) * f.rate2);
  std::vector<EventRec> batch;
  batch.reserve(n1 + n2);
  for (std::uint64_t i = 0; i < n1; ++i) {
    BoundaryPoint p = kernel.sample_boundary_point(rng);
    batch.push_back({p.normal[0], p.normal[1], p.normal[2], rng.uniform(lo, hi),
                     law.sample(rng), 1});
  }
  for (std::uint64_t i = 0; i < n2; ++i) {
    BoundaryPoint p = kernel.sample_boundary_point(rng);
    batch.push_back({p.normal[0], p.normal[1], p.normal[2], -rng.uniform(lo, hi),
                     tilted_law.sample(rng), 2});
  }
  std::sort(batch.begin(), batch.end(),
            [](const EventRec& a, const EventRec& b) { return std::abs(a.off) < std::abs(b.off); });
  for (const auto& e : batch) {
    f.nx.push_back(e.nx);
    f.ny.push_back(e.ny);
    f.nz.push_back(e.nz);
    f.off.push_back(e.off);
    f.mark.push_back(e.mark);
    f.stream.push_back(e.stream);
    f.abs_off.push_back(std::abs(e.off));
  }
  f.truncation = hi;
}

std::size_t prefix_for_radius(const LocalField& f, double r) {
  return std::upper_bound(f.abs_off.begin(), f.abs_off.end(), r) - f.abs_off.begin();
}

// ---- convex cell by halfplane clipping (d = 2) ----
struct Poly2 {
  std::vector<double> x, y;
  std::size_t size() const { return x.size(); }
};

void clip_halfplane(Poly2& p, double ax, double ay, double b, Poly2& scratch) {
  // keep {u : ax*ux + ay*uy <= b}
  scratch.x.clear();
  scratch.y.clear();
  const std::size_t n = p.size();
  if (n == 0) return;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = (i + 1) % n;
    double si = ax * p.x[i] + ay * p.y[i] - b;
    double sj = ax * p.x[j] + ay * p.y[j] - b;
    if (si <= 0.0) {
      scratch.x.push_back(p.x[i]);
      scratch.y.push_back(p.y[i]);
    }
    if ((si < 0.0 && sj > 0.0) || (si > 0.0 && sj < 0.0)) {
      double t = si / (si - sj);
      scratch.x.push_back(p.x[i] + t * (p.x[j] - p.x[i]));
      scratch.y.push_back(p.y[i] + t * (p.y[j] - p.y[i]));
    }
  }
  std::swap(p.x, scratch.x);
  std::swap(p.y, scratch.y);
}

double poly_area(const Poly2& p) {
  double a = 0.0;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = (i + 1) % n;
    a += p.x[i] * p.y[j] - p.x[j] * p.y[i];
  }
  return 0.5 * std::abs(a);
}

double poly_max_radius(const Poly2& p) {
  double r = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    r = std::max(r, std::hypot(p.x[i], p.y[i]));
  return r;
}

void init_box(Poly2& p, double L) {
  p.x = {-L, L, L, -L};
  p.y = {-L, -L, L, L};
}

}  // namespace

LocalField simulate_local_field(const Kernel& kernel, const TiltSolution& tilt,
                                const MarkLaw& law, double R, RngStream& rng) {
  if (!(R >= 0.0)) throw std::invalid_argument("simulate_local_field: R must be nonnegative");
  LocalField f;
  f.dim = kernel.dim();
  f.rate2 = tilt.m;
  f.truncation = 0.0;
  if (R > 0.0) append_band(f, kernel, law, law.tilted(tilt.theta_c), 0.0, R, rng);
  return f;
}

void extend_local_field(LocalField& f, const Kernel& kernel, const MarkLaw& law,
                        const MarkLaw& tilted_law, double new_R, RngStream& rng) {
  if (new_R <= f.truncation) return;
  append_band(f, kernel, law, tilted_law, f.truncation, new_R, rng);
}

double field_value(const LocalField& f, const Vec3& u) {
  bool touched = false;
  return field_value_touched(f, u, touched);
}

double field_value_touched(const LocalField& f, const Vec3& u, bool& touched) {
  double r = norm2(u, f.dim);
  if (r > f.truncation * (1.0 + 1e-12))
    throw std::runtime_error("field_value: point outside the simulated truncation band");
  std::size_t n = prefix_for_radius(f, r);
  double s = 0.0;
  touched = false;
  for (std::size_t i = 0; i < n; ++i) {
    double d = f.nx[i] * u[0];
    if (f.dim > 1) d += f.ny[i] * u[1];
    if (f.dim > 2) d += f.nz[i] * u[2];
    if (f.stream[i] == 1) {
      if (f.off[i] < d) {
        s += f.mark[i];
        touched = true;
      }
    } else {
      if (d <= f.off[i]) {
        s -= f.mark[i];
        touched = true;
      }
    }
  }
  return s;
}

double sup_on_box(const LocalField& f, double m, double h) {
  if (!(m > 0.0) || !(h > 0.0)) throw std::invalid_argument("sup_on_box: bad box/step");
  const int d = f.dim;
  if (m * std::sqrt(static_cast<double>(d)) > f.truncation * (1.0 + 1e-12))
    throw std::runtime_error("sup_on_box: box exceeds the simulated truncation band");
  const int G = static_cast<int>(std::floor(m / h + 1e-9));
  const std::size_t nev = f.size();

  double best = 0.0;  // Y(0) = 0 is always on the lattice
  std::vector<std::pair<double, double>> cross;
  cross.reserve(nev);

  // iterate rows over the trailing coordinates, sweep along u1
  int rows2 = d >= 2 ? G + 1 : 1;
  int rows3 = d >= 3 ? G + 1 : 1;
  Vec3 u{};
  for (int i3 = 0; i3 < rows3; ++i3) {
    for (int i2 = 0; i2 < rows2; ++i2) {
      u[0] = 0.0;
      u[1] = d >= 2 ? i2 * h : 0.0;
      u[2] = d >= 3 ? i3 * h : 0.0;
      double val = field_value(f, u);
      if (val > best) best = val;
      cross.clear();
      for (std::size_t i = 0; i < nev; ++i) {
        double n1 = f.nx[i];
        if (n1 == 0.0) continue;
        double rest = 0.0;
        if (d > 1) rest += f.ny[i] * u[1];
        if (d > 2) rest += f.nz[i] * u[2];
        double star = (f.off[i] - rest) / n1;
        if (star <= 0.0 || star > m) continue;
        // crossing in +u1 direction flips the event's contribution by
        // sign(n1) * mark for both streams
        cross.emplace_back(star, n1 > 0.0 ? f.mark[i] : -f.mark[i]);
      }
      std::sort(cross.begin(), cross.end());
      std::size_t ci = 0;
      for (int i1 = 1; i1 <= G; ++i1) {
        double x = i1 * h;
        while (ci < cross.size() && cross[ci].first < x) {
          val += cross[ci].second;
          ++ci;
        }
        if (val > best) best = val;
      }
    }
  }
  return best;
}

namespace {

// exact area of the empty cell {u : no event constrains u} for d <= 2;
// constraints are halfplanes m.u <= |y| with m = n (stream 1) or -n (stream 2)
double cell0_area(LocalField& f, const Kernel& kernel, const MarkLaw& law,
                  const MarkLaw& tilted_law, double r_cap, RngStream& rng, bool& truncated) {
  if (f.dim == 1) {
    double lo = -r_cap, hi = r_cap;
    for (std::size_t i = 0; i < f.size(); ++i) {
      double m = f.stream[i] == 1 ? f.nx[i] : -f.nx[i];
      double b = f.abs_off[i];
      if (m > 0.0)
        hi = std::min(hi, b / m);
      else if (m < 0.0)
        lo = std::max(lo, -b / (-m));
    }
    truncated = truncated || (lo <= -r_cap + 1e-12) || (hi >= r_cap - 1e-12);
    return std::max(hi - lo, 0.0);
  }

  double L = std::min(4.0, r_cap);
  Poly2 p, scratch;
  for (;;) {
    if (f.truncation < L * std::sqrt(2.0))
      extend_local_field(f, kernel, law, tilted_law, L * std::sqrt(2.0) + 1e-9, rng);
    init_box(p, L);
    double maxr = L * std::sqrt(2.0);
    for (std::size_t i = 0; i < f.size() && p.size() >= 3; ++i) {
      if (f.abs_off[i] > maxr) break;  // cannot cut the current polygon
      double s = f.stream[i] == 1 ? 1.0 : -1.0;
      clip_halfplane(p, s * f.nx[i], s * f.ny[i], f.abs_off[i], scratch);
      if ((i & 7) == 0) maxr = std::min(maxr, poly_max_radius(p) + 1e-12);
    }
    if (p.size() < 3) return 0.0;
    double mr = poly_max_radius(p);
    if (mr < 0.95 * L || L >= r_cap) {
      truncated = truncated || (mr >= 0.95 * L);
      return poly_area(p);
    }
    L = std::min(2.0 * L, r_cap);
  }
}

}  // namespace

RegionScanResult region_scan(LocalField& f, const Kernel& kernel, const MarkLaw& law,
                             const MarkLaw& tilted_law, const RegionSampler& sampler,
                             RngStream& rng, bool want_negative) {
  RegionScanResult res;
  const int d = f.dim;
  const bool exact_cell0 = d <= 2;

  if (exact_cell0) {
    bool tr = false;
    res.cell0_volume = cell0_area(f, kernel, law, tilted_law, sampler.r_cap, rng, tr);
    res.truncated = res.truncated || tr;
    res.zero_volume = res.cell0_volume;
  }

  // stratified shells r in [lo, hi], hi doubling from r0
  double hi = sampler.r0;
  double lo = 0.0;
  int quiet_shells = 0;
  double neg_best = -HUGE_VAL;
  bool saw_negative = false;
  const double sd = std::sqrt(static_cast<double>(d));

  for (int stage = 0; stage < 40; ++stage) {
    if (f.truncation < hi * sd)
      extend_local_field(f, kernel, law, tilted_law, hi * sd + 1e-9, rng);
    double shell_area = std::pow(2.0 * hi, d) - std::pow(2.0 * lo, d);
    std::uint64_t hits = 0;
    for (int i = 0; i < sampler.points; ++i) {
      Vec3 u{};
      double linf;
      do {
        linf = 0.0;
        for (int k = 0; k < d; ++k) {
          u[k] = rng.uniform(-hi, hi);
          linf = std::max(linf, std::abs(u[k]));
        }
      } while (linf < lo);
      bool touched = false;
      double v = field_value_touched(f, u, touched);
      if (std::abs(v) <= sampler.zero_tol) {
        if (!exact_cell0 || touched) ++hits;  // empty cell already counted exactly
      } else if (v < 0.0) {
        saw_negative = true;
        if (v > neg_best) neg_best = v;
      }
      res.r_final = hi;
    }
    double contrib = shell_area * static_cast<double>(hits) / sampler.points;
    res.zero_volume += contrib;

    if (!sampler.adaptive) break;
    double cum = std::max(res.zero_volume, 1e-300);
    if (contrib < sampler.stop_rel * cum)
      ++quiet_shells;
    else
      quiet_shells = 0;
    if (quiet_shells >= 2) break;
    if (hi >= sampler.r_cap) {
      if (contrib >= sampler.stop_rel * cum) res.truncated = true;
      break;
    }
    lo = hi;
    hi = std::min(2.0 * hi, sampler.r_cap);
  }
  res.r_final = hi;

  if (want_negative) {
    if (law.is_degenerate()) {
      // sup{Y < 0} = -eta almost surely once Y goes negative anywhere
      if (saw_negative) {
        res.negative_sup = -law.degenerate_value();
      } else {
        // quick ring probe before giving up
        double r = std::max(res.r_final, 1.0);
        if (f.truncation < r * sd) extend_local_field(f, kernel, law, tilted_law, r * sd + 1e-9, rng);
        for (int i = 0; i < 256 && !saw_negative; ++i) {
          Vec3 u{};
          for (int k = 0; k < d; ++k) u[k] = rng.uniform(-r, r);
          if (field_value(f, u) < 0.0) saw_negative = true;
        }
        if (saw_negative) res.negative_sup = -law.degenerate_value();
      }
    } else if (d == 2) {
      double rn = std::min(std::max(2.0 * res.r_final, 3.0), sampler.r_cap);
      auto probed = largest_negative_value(f, kernel, law, tilted_law, rn, rng);
      if (saw_negative && neg_best < 0.0) {
        double cand = probed ? std::max(*probed, neg_best) : neg_best;
        res.negative_sup = cand;
      } else {
        res.negative_sup = probed;
      }
    } else {
      if (saw_negative) res.negative_sup = neg_best;
    }
  }
  return res;
}

OccupationEstimate zero_set_volume(LocalField& f, const Kernel& kernel, const MarkLaw& law,
                                   const MarkLaw& tilted_law, const RegionSampler& sampler,
                                   RngStream& rng) {
  // plain hit-or-miss over the doubling stages, no exact-cell shortcut
  OccupationEstimate est;
  const int d = f.dim;
  const double sd = std::sqrt(static_cast<double>(d));
  double hi = sampler.r0;
  double lo = 0.0;
  int quiet = 0;
  for (int stage = 0; stage < 40; ++stage) {
    if (f.truncation < hi * sd) extend_local_field(f, kernel, law, tilted_law, hi * sd + 1e-9, rng);
    double shell_area = std::pow(2.0 * hi, d) - std::pow(2.0 * lo, d);
    std::uint64_t hits = 0;
    for (int i = 0; i < sampler.points; ++i) {
      Vec3 u{};
      double linf;
      do {
        linf = 0.0;
        for (int k = 0; k < d; ++k) {
          u[k] = rng.uniform(-hi, hi);
          linf = std::max(linf, std::abs(u[k]));
        }
      } while (linf < lo);
      if (std::abs(field_value(f, u)) <= sampler.zero_tol) ++hits;
    }
    est.hits += hits;
    est.points += sampler.points;
    est.volume += shell_area * static_cast<double>(hits) / sampler.points;
    est.r_final = hi;
    if (!sampler.adaptive) break;
    double cum = std::max(est.volume, 1e-300);
    double contrib = shell_area * static_cast<double>(hits) / sampler.points;
    if (contrib < sampler.stop_rel * cum)
      ++quiet;
    else
      quiet = 0;
    if (quiet >= 2) break;
    if (hi >= sampler.r_cap) {
      if (contrib >= sampler.stop_rel * cum) est.truncated = true;
      break;
    }
    lo = hi;
    hi = std::min(2.0 * hi, sampler.r_cap);
  }
  return est;
}

std::optional<double> largest_negative_value(LocalField& f, const Kernel& kernel,
                                             const MarkLaw& law, const MarkLaw& tilted_law,
                                             double region_radius, RngStream& rng) {
  const int d = f.dim;
  const double sd = std::sqrt(static_cast<double>(d));
  if (f.truncation < region_radius * sd)
    extend_local_field(f, kernel, law, tilted_law, region_radius * sd + 1e-9, rng);

  double best = -HUGE_VAL;
  bool found = false;

  if (d == 2) {
    // probe both sides of every edge of the event-line arrangement inside the
    // region disk; each cell meeting the disk is visited through its edges
    std::size_t n = prefix_for_radius(f, region_radius);
    std::vector<double> cuts;
    for (std::size_t j = 0; j < n; ++j) {
      double yj = f.off[j];
      double njx = f.nx[j], njy = f.ny[j];
      double px = yj * njx, py = yj * njy;  // foot point of the line
      double tx = -njy, ty = njx;
      double smax2 = region_radius * region_radius - yj * yj;
      if (smax2 <= 0.0) continue;
      double smax = std::sqrt(smax2);
      cuts.clear();
      cuts.push_back(-smax);
      cuts.push_back(smax);
      for (std::size_t k = 0; k < n; ++k) {
        if (k == j) continue;
        double den = f.nx[k] * tx + f.ny[k] * ty;
        if (std::abs(den) < 1e-12) continue;
        double s = (f.off[k] - (f.nx[k] * px + f.ny[k] * py)) / den;
        if (s > -smax && s < smax) cuts.push_back(s);
      }
      std::sort(cuts.begin(), cuts.end());
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        double smid = 0.5 * (cuts[c] + cuts[c + 1]);
        if (cuts[c + 1] - cuts[c] < 1e-12) continue;
        double bx = px + smid * tx, by = py + smid * ty;
        double delta = 1e-7 * (1.0 + std::hypot(bx, by));
        for (int side = -1; side <= 1; side += 2) {
          Vec3 u{bx + side * delta * njx, by + side * delta * njy, 0.0};
          if (norm2(u, 2) > region_radius) continue;
          double v = field_value(f, u);
          if (v < 0.0 && v > best) {
            best = v;
            found = true;
          }
        }
      }
    }
    if (f.size() == 0 || n == 0) return std::nullopt;
    if (law.is_degenerate() && found) return -law.degenerate_value();
    if (found) return best;
    return std::nullopt;
  }

  // sampling fallback (d = 1 or 3)
  int n_pts = 8192;
  for (int i = 0; i < n_pts; ++i) {
    Vec3 u{};
    for (int k = 0; k < d; ++k) u[k] = rng.uniform(-region_radius, region_radius);
    if (norm2(u, d) > region_radius) continue;
    double v = field_value(f, u);
    if (v < 0.0 && v > best) {
      best = v;
      found = true;
    }
  }
  if (law.is_degenerate() && found) return -law.degenerate_value();
  if (found) return best;
  return std::nullopt;
}

// ---- Omega ----

OmegaField simulate_omega(const Kernel& kernel, double R, RngStream& rng) {
  OmegaField om;
  om.dim = kernel.dim();
  om.truncation = 0.0;
  extend_omega(om, kernel, R, rng);
  return om;
}

void extend_omega(OmegaField& om, const Kernel& kernel, double new_R, RngStream& rng) {
  if (new_R <= om.truncation) return;
  double lo = om.truncation, hi = new_R;
  std::uint64_t n = rng.poisson(kernel.boundary_area() * (hi - lo));
  std::vector<std::pair<double, BoundaryPoint>> batch(n);
  for (auto& e : batch) {
    e.first = rng.uniform(lo, hi);
    e.second = kernel.sample_boundary_point(rng);
  }
  std::sort(batch.begin(), batch.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [y, p] : batch) {
    om.nx.push_back(p.normal[0]);
    om.ny.push_back(p.normal[1]);
    om.nz.push_back(p.normal[2]);
    om.off.push_back(y);
  }
  om.truncation = new_R;
}

double omega_volume(OmegaField& om, const Kernel& kernel, const RegionSampler& sampler,
                    RngStream& rng, bool* truncated_out) {
  const int d = om.dim;
  bool truncated = false;

  if (d <= 2) {
    // Omega is the intersection of halfplanes n.u <= y: exact area
    if (d == 1) {
      double lo = -sampler.r_cap, hi = sampler.r_cap;
      for (;;) {
        if (om.truncation < sampler.r_cap) extend_omega(om, kernel, sampler.r_cap + 1e-9, rng);
        for (std::size_t i = 0; i < om.off.size(); ++i) {
          if (om.nx[i] > 0.0)
            hi = std::min(hi, om.off[i] / om.nx[i]);
          else if (om.nx[i] < 0.0)
            lo = std::max(lo, -om.off[i] / (-om.nx[i]));
        }
        truncated = (lo <= -sampler.r_cap + 1e-12) || (hi >= sampler.r_cap - 1e-12);
        if (truncated_out) *truncated_out = truncated;
        return std::max(hi - lo, 0.0);
      }
    }
    double L = 2.0;
    Poly2 p, scratch;
    for (;;) {
      double need = L * std::sqrt(2.0) + 1e-9;
      if (om.truncation < need) extend_omega(om, kernel, need, rng);
      init_box(p, L);
      double maxr = L * std::sqrt(2.0);
      for (std::size_t i = 0; i < om.off.size() && p.size() >= 3; ++i) {
        if (om.off[i] > maxr) break;
        clip_halfplane(p, om.nx[i], om.ny[i], om.off[i], scratch);
        if ((i & 7) == 0) maxr = std::min(maxr, poly_max_radius(p) + 1e-12);
      }
      if (p.size() < 3) {
        if (truncated_out) *truncated_out = false;
        return 0.0;
      }
      double mr = poly_max_radius(p);
      if (mr < 0.95 * L || L >= sampler.r_cap) {
        truncated = mr >= 0.95 * L;
        if (truncated_out) *truncated_out = truncated;
        return poly_area(p);
      }
      L = std::min(2.0 * L, sampler.r_cap);
    }
  }

  // d = 3: stratified hit-or-miss on the exact membership predicate
  double hi = sampler.r0, lo = 0.0;
  double vol = 0.0;
  int quiet = 0;
  const double sd = std::sqrt(3.0);
  for (int stage = 0; stage < 40; ++stage) {
    if (om.truncation < hi * sd) extend_omega(om, kernel, hi * sd + 1e-9, rng);
    double shell = std::pow(2.0 * hi, 3) - std::pow(2.0 * lo, 3);
    std::uint64_t hits = 0;
    for (int i = 0; i < sampler.points; ++i) {
      Vec3 u{};
      double linf;
      do {
        linf = 0.0;
        for (int k = 0; k < 3; ++k) {
          u[k] = rng.uniform(-hi, hi);
          linf = std::max(linf, std::abs(u[k]));
        }
      } while (linf < lo);
      double r = norm2(u, 3);
      bool member = true;
      std::size_t n = std::upper_bound(om.off.begin(), om.off.end(), r) - om.off.begin();
      for (std::size_t e = 0; e < n; ++e) {
        double dp = om.nx[e] * u[0] + om.ny[e] * u[1] + om.nz[e] * u[2];
        if (dp > om.off[e]) {
          member = false;
          break;
        }
      }
      if (member) ++hits;
    }
    double contrib = shell * static_cast<double>(hits) / sampler.points;
    vol += contrib;
    double cum = std::max(vol, 1e-300);
    if (contrib < sampler.stop_rel * cum)
      ++quiet;
    else
      quiet = 0;
    if (quiet >= 2) break;
    if (hi >= sampler.r_cap) {
      if (contrib >= sampler.stop_rel * cum) truncated = true;
      break;
    }
    lo = hi;
    hi = std::min(2.0 * hi, sampler.r_cap);
  }
  if (truncated_out) *truncated_out = truncated;
  return vol;
}

double simulate_omega_volume(const Kernel& kernel, double R, const RegionSampler& sampler,
                             RngStream& rng) {
  OmegaField om = simulate_omega(kernel, R, rng);
  return omega_volume(om, kernel, sampler, rng);
}

}  // namespace scanstat
