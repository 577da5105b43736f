#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "scanstat/mc.hpp"

namespace scanstat {

// Local field for the Gaussian companion problem: mean -|u|^alpha and
// covariance |u|^alpha + |v|^alpha - |u-v|^alpha, realized exactly on a grid
// through a pivoted symmetric factorization of the covariance matrix.
struct GaussLocalField {
  double alpha = 0.0;
  int dim = 0;
  double box = 0.0;   // grid spans [0, box]^d
  double step = 0.0;
  std::vector<std::array<double, 3>> points;
  std::vector<double> values;
};

GaussLocalField simulate_gauss_local(double alpha, int d, double m, double h,
                                     RngStream& rng);

// Nested annular sampling region for the clump / slab routes: each ring
// (inner, outer] is tiled by cells of its own step; inner zoom keeps small
// excursion sets resolved.
struct GaussRegion {
  struct Ring {
    double outer;
    double step;
  };
  std::vector<Ring> rings;  // ascending outer radii; radii must be step-multiples
  static GaussRegion standard(int d);
};

// Route (long-box): K ~ lim m^{-d} E[e^{sup Y} - 1], extrapolated in 1/m from
// a shared realization on the largest box.
McEstimate ktilde_pickands(double alpha, int d, std::vector<double> m_list, double h,
                           std::uint64_t reps, std::uint64_t seed, int workers);

// Route (clump): K = E[1 / vol{u : Y(u) >= -Z}], Z standard exponential.
McEstimate ktilde_clump(double alpha, int d, std::uint64_t reps, const GaussRegion& region,
                        std::uint64_t seed, int workers);

// Route (slab): K = lim_{xi->0} int_0^xi E[1 / vol{u : -b < Y(u) <= xi-b}] db,
// midpoint quadrature at xi and xi/2 with Richardson extrapolation.
McEstimate ktilde_thm3(double alpha, int d, double xi, int quadrature_nodes,
                       std::uint64_t reps, const GaussRegion& region, std::uint64_t seed,
                       int workers);

// Closed form: d^{-1} pi^{(1-d)/2} 4^{1-d/alpha} alpha Gamma(d/2+1) / Gamma(d/alpha-1/2).
double ktilde_lower_bound(double alpha, int d);

// (2 pi)^{-1/2} c^{2d/alpha-1} e^{-c^2/2} a^{d/alpha} K, scaled by the domain
// volume consistently with the per-unit-volume normalization of K.
double gauss_tail(double alpha, int d, double a, double c, double domain_volume,
                  double ktilde);

}  // namespace scanstat
