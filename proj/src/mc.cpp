#include "scanstat/mc.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace scanstat {

double pairwise_sum(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum(x.subspan(0, half)) + pairwise_sum(x.subspan(half));
}

double mean_of(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return pairwise_sum(x) / static_cast<double>(x.size());
}

double se_of(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double m = mean_of(x);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (x[i] - m) * (x[i] - m);
  double var = pairwise_sum(sq) / static_cast<double>(n - 1);
  return std::sqrt(var / static_cast<double>(n));
}

void run_replicates(std::uint64_t seed, std::string_view tag, std::uint64_t reps,
                    int workers, int width,
                    const std::function<void(std::uint64_t, RngStream&, double*)>& body,
                    std::vector<double>& out) {
  if (width <= 0) throw std::invalid_argument("run_replicates: width must be positive");
  out.assign(reps * static_cast<std::uint64_t>(width), 0.0);
  if (reps == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  if (workers <= 0) workers = hw ? static_cast<int>(hw) : 1;
  std::uint64_t w = static_cast<std::uint64_t>(workers);
  if (w > reps) w = reps;

  auto run_range = [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t i = lo; i < hi; ++i) {
      RngStream rng(seed, tag, i);
      body(i, rng, out.data() + i * width);
    }
  };

  if (w == 1) {
    run_range(0, reps);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(w);
  std::uint64_t chunk = (reps + w - 1) / w;
  for (std::uint64_t t = 0; t < w; ++t) {
    std::uint64_t lo = t * chunk;
    std::uint64_t hi = std::min(reps, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(run_range, lo, hi);
  }
  for (auto& th : pool) th.join();
}

std::vector<double> column(const std::vector<double>& buf, int width, int col) {
  std::vector<double> out(buf.size() / width);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = buf[i * width + col];
  return out;
}

McEstimate summarize_mean(std::span<const double> values, std::uint64_t seed) {
  McEstimate e;
  e.value = mean_of(values);
  e.se = se_of(values);
  e.reps = values.size();
  e.seed = seed;
  return e;
}

}  // namespace scanstat
