#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scanstat/geometry.hpp"
#include "scanstat/local_field.hpp"
#include "scanstat/marks.hpp"
#include "scanstat/mc.hpp"

namespace scanstat {

enum class KRoute {
  local_sup,
  occupation,
  rectangle_closed_form,
  ball_closed_form,
  omega_bound,
};

std::string route_name(KRoute r);

struct KDiagnostics {
  double extrapolation_residual = 0.0;  // worst standardized residual of the 1/m fit
  bool truncated = false;
  bool diagnostic_failure = false;
  std::vector<double> m_values;
  std::vector<double> km_over_md;  // K_m / m^d per box size
  std::vector<double> km_se;
  std::vector<std::string> notes;
};

struct KEstimate {
  double value = 0.0;
  double se = 0.0;
  KRoute route = KRoute::local_sup;
  std::uint64_t reps = 0;
  std::uint64_t seed = 0;
  KDiagnostics diag;
};

// Route A: per-box local-supremum Monte Carlo of K_m, then the 1/m fit
// K_m / m^d = K + a/m.
KEstimate k_local_sup(const Kernel& kernel, const MarkLaw& law, double c,
                      std::vector<double> m_list, std::uint64_t reps,
                      std::uint64_t seed, int workers);

// Route B: occupation-measure Monte Carlo,
// K = chi^{-1} E[(1 - e^{theta_c sup{Y<0}}) / sigma({Y = 0})].
KEstimate k_occupation(const Kernel& kernel, const MarkLaw& law, double c,
                       std::uint64_t reps, std::uint64_t seed, int workers,
                       RegionSampler sampler = {});

// Route C (boxes): K = {nu_c [c/vol(B) - mu]}^d (chi_c prod b_k)^{d-1}.
KEstimate k_rectangle(const MarkLaw& law, double c, const std::vector<double>& edges,
                      const McEstimate& nu);

// Mean zero-set volume for the unit-ball kernel with unit point masses,
// by series summation; c_hat is M(theta_c).
double ball_zero_set_mean_volume(int d, double c_hat);

// Closed-form lower bound 1 / ball_zero_set_mean_volume; for d = 2 equals
// 2 (c_hat - 1)^3 / [pi (1 + c_hat)].
double k_ball_lower_bound(int d, double c_hat);

// Mean inverse volume of the limiting random set Omega (kernel-only).
McEstimate omega_inverse_volume(const Kernel& kernel, std::uint64_t reps,
                                std::uint64_t seed, int workers,
                                RegionSampler sampler = {});

// Upper bound from the Omega limit: chi^{-1} [1+M]^d E[1/sigma(Omega)]
// (eta [1+M]^d E[...] for degenerate marks).
KEstimate k_omega_bound(const Kernel& kernel, const MarkLaw& law, double c,
                        std::uint64_t reps, std::uint64_t seed, int workers,
                        RegionSampler sampler = {});
KEstimate k_omega_bound_from(const McEstimate& omega_inv, const MarkLaw& law,
                             const TiltSolution& tilt, int dim);

}  // namespace scanstat
