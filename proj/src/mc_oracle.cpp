#include "scanstat/mc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scanstat {

double BoxDomain::volume() const {
  double v = 1.0;
  for (int k = 0; k < dim; ++k) v *= hi[k] - lo[k];
  return v;
}

FieldRealization simulate_field(double lambda, const BoxDomain& domain,
                                const Kernel& kernel, const MarkLaw& law, RngStream& rng) {
  if (!(lambda > 0.0)) throw std::invalid_argument("simulate_field: lambda must be positive");
  if (domain.dim != kernel.dim())
    throw std::invalid_argument("simulate_field: domain/kernel dimension mismatch");
  FieldRealization f;
  f.dim = domain.dim;
  f.lambda = lambda;
  Vec3 klo, khi;
  kernel.bounding_box(klo, khi);
  double wvol = 1.0;
  for (int k = 0; k < f.dim; ++k) {
    f.window_lo[k] = domain.lo[k] + klo[k];
    f.window_hi[k] = domain.hi[k] + khi[k];
    wvol *= f.window_hi[k] - f.window_lo[k];
  }
  std::uint64_t n = rng.poisson(lambda * wvol);
  f.px.resize(n);
  f.py.resize(n);
  f.pz.resize(n);
  f.mark.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    f.px[i] = rng.uniform(f.window_lo[0], f.window_hi[0]);
    f.py[i] = f.dim > 1 ? rng.uniform(f.window_lo[1], f.window_hi[1]) : 0.0;
    f.pz[i] = f.dim > 2 ? rng.uniform(f.window_lo[2], f.window_hi[2]) : 0.0;
    f.mark[i] = law.sample(rng);
  }
  return f;
}

namespace {

double grid_scan(const FieldRealization& f, const Kernel& kernel, const BoxDomain& domain,
                 double h) {
  const int d = f.dim;
  if (h <= 0.0) h = kernel.min_extent() / 20.0;
  Vec3 klo, khi;
  kernel.bounding_box(klo, khi);

  // bin points on the kernel bounding-box scale so each window only visits
  // nearby bins
  Vec3 ext{};
  std::array<int, 3> nb{1, 1, 1};
  for (int k = 0; k < d; ++k) {
    ext[k] = khi[k] - klo[k];
    nb[k] = std::max(1, static_cast<int>(std::ceil((f.window_hi[k] - f.window_lo[k]) / ext[k])));
  }
  auto bin_of = [&](double x, int k) {
    int b = static_cast<int>((x - f.window_lo[k]) / ext[k]);
    return std::clamp(b, 0, nb[k] - 1);
  };
  std::vector<std::vector<std::uint32_t>> bins(static_cast<std::size_t>(nb[0]) * nb[1] * nb[2]);
  for (std::size_t i = 0; i < f.size(); ++i) {
    int b0 = bin_of(f.px[i], 0);
    int b1 = d > 1 ? bin_of(f.py[i], 1) : 0;
    int b2 = d > 2 ? bin_of(f.pz[i], 2) : 0;
    bins[(static_cast<std::size_t>(b2) * nb[1] + b1) * nb[0] + b0].push_back(
        static_cast<std::uint32_t>(i));
  }

  std::array<int, 3> g{0, 0, 0};
  for (int k = 0; k < d; ++k)
    g[k] = static_cast<int>(std::floor((domain.hi[k] - domain.lo[k]) / h + 1e-9));
  double best = 0.0;
  Vec3 v{};
  for (int i2 = 0; i2 <= (d > 2 ? g[2] : 0); ++i2)
    for (int i1 = 0; i1 <= (d > 1 ? g[1] : 0); ++i1)
      for (int i0 = 0; i0 <= g[0]; ++i0) {
        v[0] = domain.lo[0] + i0 * h;
        if (d > 1) v[1] = domain.lo[1] + i1 * h;
        if (d > 2) v[2] = domain.lo[2] + i2 * h;
        double s = 0.0;
        // visit bins overlapping v + bbox(B)
        int b0lo = bin_of(v[0] + klo[0], 0), b0hi = bin_of(v[0] + khi[0], 0);
        int b1lo = d > 1 ? bin_of(v[1] + klo[1], 1) : 0;
        int b1hi = d > 1 ? bin_of(v[1] + khi[1], 1) : 0;
        int b2lo = d > 2 ? bin_of(v[2] + klo[2], 2) : 0;
        int b2hi = d > 2 ? bin_of(v[2] + khi[2], 2) : 0;
        for (int b2 = b2lo; b2 <= b2hi; ++b2)
          for (int b1 = b1lo; b1 <= b1hi; ++b1)
            for (int b0 = b0lo; b0 <= b0hi; ++b0)
              for (std::uint32_t i :
                   bins[(static_cast<std::size_t>(b2) * nb[1] + b1) * nb[0] + b0]) {
                Vec3 t{f.px[i] - v[0], d > 1 ? f.py[i] - v[1] : 0.0,
                       d > 2 ? f.pz[i] - v[2] : 0.0};
                if (kernel.contains(t)) s += f.mark[i];
              }
        best = std::max(best, s);
      }
  return best;
}

double exact_box_sweep_1d(const FieldRealization& f, double b, const BoxDomain& domain) {
  std::vector<std::pair<double, double>> pts(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) pts[i] = {f.px[i], f.mark[i]};
  std::sort(pts.begin(), pts.end());
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double v = std::clamp(pts[i].first, domain.lo[0], domain.hi[0]);
    for (double cand : {v, pts[i].first - b}) {
      if (cand < domain.lo[0] || cand > domain.hi[0]) continue;
      double s = 0.0;
      for (std::size_t j = 0; j < pts.size(); ++j)
        if (pts[j].first >= cand && pts[j].first <= cand + b) s += pts[j].second;
      best = std::max(best, s);
    }
  }
  return best;
}

double exact_box_sweep_2d(const FieldRealization& f, double b1, double b2,
                          const BoxDomain& domain) {
  const std::size_t n = f.size();
  if (n == 0) return 0.0;
  // order points by y once; sweep candidate left edges, then run a
  // two-pointer window over the active points in y
  std::vector<std::uint32_t> by_y(n);
  for (std::size_t i = 0; i < n; ++i) by_y[i] = static_cast<std::uint32_t>(i);
  std::sort(by_y.begin(), by_y.end(),
            [&](std::uint32_t a, std::uint32_t b) { return f.py[a] < f.py[b]; });

  std::vector<double> cand_x;
  cand_x.reserve(2 * n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    cand_x.push_back(std::clamp(f.px[i], domain.lo[0], domain.hi[0]));
    double left = f.px[i] - b1;
    if (left >= domain.lo[0] && left <= domain.hi[0]) cand_x.push_back(left);
  }
  cand_x.push_back(domain.lo[0]);
  std::sort(cand_x.begin(), cand_x.end());
  cand_x.erase(std::unique(cand_x.begin(), cand_x.end()), cand_x.end());

  std::vector<std::uint32_t> active;
  std::vector<double> ys, ms;
  double best = 0.0;
  for (double ax : cand_x) {
    active.clear();
    for (std::uint32_t idx : by_y) {
      double x = f.px[idx];
      if (x >= ax && x <= ax + b1) active.push_back(idx);
    }
    if (active.empty()) continue;
    ys.resize(active.size());
    ms.resize(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
      ys[i] = f.py[active[i]];
      ms[i] = f.mark[active[i]];
    }
    // candidate bottom edges: point y (clamped) and point y - b2
    std::size_t lo = 0, hi = 0;
    double sum = 0.0;
    auto window_sum = [&](double ay) {
      while (hi < ys.size() && ys[hi] <= ay + b2) sum += ms[hi++];
      while (lo < ys.size() && ys[lo] < ay) sum -= ms[lo++];
      return sum;
    };
    lo = hi = 0;
    sum = 0.0;
    std::vector<double> cand_y;
    cand_y.reserve(ys.size() + 1);
    for (double y : ys) {
      double cy = std::clamp(y, domain.lo[1], domain.hi[1]);
      if (cy >= domain.lo[1] && cy <= domain.hi[1]) cand_y.push_back(cy);
      double low = y - b2;
      if (low >= domain.lo[1] && low <= domain.hi[1]) cand_y.push_back(low);
    }
    cand_y.push_back(domain.lo[1]);
    std::sort(cand_y.begin(), cand_y.end());
    for (double ay : cand_y) best = std::max(best, window_sum(ay));
  }
  return best;
}

}  // namespace

double sup_scan(const FieldRealization& f, const Kernel& kernel, const BoxDomain& domain,
                ScanMethod method, double grid_h) {
  if (f.size() == 0) return 0.0;
  if (method == ScanMethod::grid) return grid_scan(f, kernel, domain, grid_h);

  if (kernel.shape() != Kernel::Shape::box || f.dim > 2)
    throw std::invalid_argument("exact_box_sweep: requires a box kernel in d <= 2");
  for (double m : f.mark)
    if (m < 0.0)
      throw std::invalid_argument("exact_box_sweep: requires nonnegative marks");
  const auto& b = kernel.box_edges();
  if (f.dim == 1) return exact_box_sweep_1d(f, b[0], domain);
  return exact_box_sweep_2d(f, b[0], b[1], domain);
}

McEstimate estimate_tail_probability(double lambda, const BoxDomain& domain,
                                     const Kernel& kernel, const MarkLaw& law, double c,
                                     std::uint64_t reps, std::uint64_t seed, int workers,
                                     ScanMethod method, double grid_h,
                                     std::vector<double>* sups_out) {
  if (reps < 1) throw std::invalid_argument("estimate_tail_probability: reps >= 1");
  const double threshold = lambda * c;
  // guard the comparison at lattice thresholds against the floating
  // representation of lambda * c
  const double tol = 1e-9 * std::max(1.0, std::abs(threshold));
  std::vector<double> buf;
  run_replicates(seed, "oracle", reps, workers, 2,
                 [&](std::uint64_t, RngStream& rng, double* row) {
                   FieldRealization f = simulate_field(lambda, domain, kernel, law, rng);
                   double sup = sup_scan(f, kernel, domain, method, grid_h);
                   row[0] = sup >= threshold - tol ? 1.0 : 0.0;
                   row[1] = sup;
                 },
                 buf);
  if (sups_out) *sups_out = column(buf, 2, 1);
  buf = column(buf, 2, 0);
  double phat = mean_of(buf);
  // 95% Wilson score half-width
  const double z = 1.959963984540054;
  double nn = static_cast<double>(reps);
  double half = z * std::sqrt(phat * (1.0 - phat) / nn + z * z / (4.0 * nn * nn)) /
                (1.0 + z * z / nn);
  McEstimate e;
  e.value = phat;
  e.se = half;
  e.reps = reps;
  e.seed = seed;
  return e;
}

}  // namespace scanstat
