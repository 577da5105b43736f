#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scanstat/rng.hpp"

namespace scanstat {

// Universal Monte Carlo result record.
struct McEstimate {
  double value = 0.0;
  double se = 0.0;
  std::uint64_t reps = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;
};

// Deterministic pairwise summation: result independent of how replicates were
// scheduled across workers.
double pairwise_sum(std::span<const double> x);

double mean_of(std::span<const double> x);
// standard error of the mean
double se_of(std::span<const double> x);

// Runs `reps` replicates, each writing `width` doubles into its own slice of
// the output buffer (row-major, replicate-major).  Replicate i derives its
// stream from (seed, tag, i); worker count only affects scheduling.
void run_replicates(std::uint64_t seed, std::string_view tag, std::uint64_t reps,
                    int workers, int width,
                    const std::function<void(std::uint64_t, RngStream&, double*)>& body,
                    std::vector<double>& out);

// column extraction from the row-major replicate buffer
std::vector<double> column(const std::vector<double>& buf, int width, int col);

McEstimate summarize_mean(std::span<const double> values, std::uint64_t seed);

}  // namespace scanstat
