#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "scanstat/marks.hpp"
#include "scanstat/mc.hpp"

namespace scanstat {

// Increment law of the ladder walk under the upward-drift measure: with
// probability 1/(1+M) a negated draw from F, with probability M/(1+M) a draw
// from the tilted law F_c.
struct WalkSpec {
  MarkLaw base;
  MarkLaw tilted;
  double mgf_m = 0.0;   // M(theta_c)
  double theta_c = 0.0;
  std::optional<double> span;
};

WalkSpec make_walk_spec(const MarkLaw& law, const TiltSolution& tilt);

// one walk to the level: returns the overshoot R_tau - y (>= 0)
double walk_overshoot(const WalkSpec& spec, double level, RngStream& rng);

// {10, 20, 40, 80} * max(span, 1/theta_c), rounded up to the span lattice
std::vector<double> default_levels(const WalkSpec& spec);

struct NuEstimate {
  McEstimate est;                   // value at the largest level
  std::vector<double> levels;
  std::vector<double> level_value;  // estimate per level
  std::vector<double> level_se;
  bool stable = true;               // top-half estimates agree within 3 sigma
};

// Overshoot constant: limit of E e^{-theta_c (R_tau - y)}.  Degenerate marks
// give exactly 1 (the lattice walk hits integer levels with no excess) and are
// not simulated.
NuEstimate overshoot_constant(const WalkSpec& spec, std::vector<double> levels,
                              std::uint64_t reps, std::uint64_t seed, int workers);

}  // namespace scanstat
