#include "scanstat/tail_approx.hpp"

#include <cmath>
#include <stdexcept>

namespace scanstat {

namespace {

constexpr double kPi = 3.14159265358979323846;

TailApprox assemble(const TiltSolution& tilt, int dim, double lambda,
                    double domain_volume, double k_value, TailVariant variant) {
  if (!(lambda > 0.0)) throw std::invalid_argument("tail approximation: lambda must be positive");
  if (!(domain_volume > 0.0))
    throw std::invalid_argument("tail approximation: domain volume must be positive");
  if (!(k_value > 0.0)) throw std::invalid_argument("tail approximation: K must be positive");

  TailApprox out;
  out.variant = variant;
  TailComponents& c = out.components;
  c.prefactor = 1.0 / std::sqrt(2.0 * kPi * tilt.kernel_volume * tilt.m2);
  c.x_lambda = x_lambda(lambda, tilt.c, tilt.theta_c, tilt.span);
  c.exp_term = std::exp(-lambda * tilt.rate + c.x_lambda);
  c.lambda_power = std::pow(lambda, dim - 0.5);
  c.domain_volume = domain_volume;
  c.k_value = k_value;
  c.log_linear = std::log(c.prefactor) + (-lambda * tilt.rate + c.x_lambda) +
                 (dim - 0.5) * std::log(lambda) + std::log(domain_volume) +
                 std::log(k_value);
  double linear = std::exp(c.log_linear);
  out.large_linear_flag = linear > 0.1;
  out.p = variant == TailVariant::linear ? linear : -std::expm1(-linear);
  return out;
}

}  // namespace

TailApprox approx_tail(const TiltSolution& tilt, const Kernel& kernel, double lambda,
                       double domain_volume, const KEstimate& k, TailVariant variant) {
  return assemble(tilt, kernel.dim(), lambda, domain_volume, k.value, variant);
}

TailApprox rectangle_tail(const MarkLaw& law, const std::vector<double>& edges, double c,
                          double lambda, double domain_volume, const McEstimate& nu,
                          TailVariant variant) {
  Kernel kernel = Kernel::box(edges);
  const TiltSolution tilt = solve_tilt(law, kernel, c);
  const int d = kernel.dim();
  double vol = kernel.volume();
  double core = nu.value * (c / vol - law.mean());
  double k_value = std::pow(core, d) * std::pow(tilt.chi * vol, d - 1);
  return assemble(tilt, d, lambda, domain_volume, k_value, variant);
}

}  // namespace scanstat
