#pragma once

#include <cstdint>
#include <vector>

#include "scanstat/geometry.hpp"
#include "scanstat/marks.hpp"
#include "scanstat/mc.hpp"

namespace scanstat {

struct BoxDomain {
  Vec3 lo{};
  Vec3 hi{};
  int dim = 0;
  double volume() const;
};

// Full marked Poisson field on a window covering every translate v + B, v in D.
struct FieldRealization {
  std::vector<double> px, py, pz;
  std::vector<double> mark;
  Vec3 window_lo{}, window_hi{};
  double lambda = 0.0;
  int dim = 0;
  std::size_t size() const { return mark.size(); }
};

FieldRealization simulate_field(double lambda, const BoxDomain& domain,
                                const Kernel& kernel, const MarkLaw& law, RngStream& rng);

enum class ScanMethod { grid, exact_box_sweep };

// sup over v in D of the mark sum in v + B.  The grid method scans a lattice
// of step h (kernel-generic, biased low by the lattice restriction); the exact
// sweep handles box kernels in d <= 2 with nonnegative marks by enumerating
// candidate window corners at point coordinates.
double sup_scan(const FieldRealization& field, const Kernel& kernel, const BoxDomain& domain,
                ScanMethod method, double grid_h = 0.0);

// p_lambda estimate: fraction of replicates whose scan supremum reaches
// lambda c, with a 95% Wilson half-width as the standard error.
McEstimate estimate_tail_probability(double lambda, const BoxDomain& domain,
                                     const Kernel& kernel, const MarkLaw& law, double c,
                                     std::uint64_t reps, std::uint64_t seed, int workers,
                                     ScanMethod method = ScanMethod::exact_box_sweep,
                                     double grid_h = 0.0,
                                     std::vector<double>* sups_out = nullptr);

}  // namespace scanstat
