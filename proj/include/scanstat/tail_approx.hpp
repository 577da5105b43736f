#pragma once

#include <vector>

#include "scanstat/constants.hpp"
#include "scanstat/geometry.hpp"
#include "scanstat/marks.hpp"

namespace scanstat {

enum class TailVariant { linear, saturating };

struct TailComponents {
  double prefactor = 0.0;     // [2 pi vol(B) M''(theta_c)]^{-1/2}
  double exp_term = 0.0;      // e^{-lambda I + x_lambda}
  double lambda_power = 0.0;  // lambda^{d - 1/2}
  double domain_volume = 0.0;
  double k_value = 0.0;
  double x_lambda = 0.0;
  double log_linear = 0.0;    // log of the component product, assembled stably
};

struct TailApprox {
  double p = 0.0;
  TailComponents components;
  TailVariant variant = TailVariant::saturating;
  bool large_linear_flag = false;  // linear product above 0.1
};

// Tail approximation for sup over D of the moving sum at level lambda c.
TailApprox approx_tail(const TiltSolution& tilt, const Kernel& kernel, double lambda,
                       double domain_volume, const KEstimate& k, TailVariant variant);

// Rectangle-kernel closed form; identical to approx_tail with the rectangle
// route constant, kept as an independent assembly for cross-checking.
TailApprox rectangle_tail(const MarkLaw& law, const std::vector<double>& edges, double c,
                          double lambda, double domain_volume, const McEstimate& nu,
                          TailVariant variant);

}  // namespace scanstat
