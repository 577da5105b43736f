#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scanstat/geometry.hpp"
#include "scanstat/rng.hpp"

namespace scanstat {

struct MgfValue {
  double m;   // M(theta)
  double m1;  // M'(theta)
  double m2;  // M''(theta)
};

// Analytic description of a user-supplied exponential-family law.  The MGF
// and its first two derivatives must be exact; numerical differentiation of
// densities is refused by design.
struct GenericLawSpec {
  std::function<MgfValue(double)> mgf;
  double theta_lo;  // open MGF domain (theta_lo, theta_hi), must contain 0
  double theta_hi;
  // draws one sample of the theta-tilted law; theta = 0 is the base law
  std::function<double(double, RngStream&)> sample_tilted;
  std::optional<double> span;  // lattice span if arithmetic
  std::string name = "generic";
};

// Mark distribution F: degenerate, lattice, gaussian, or analytic generic.
class MarkLaw {
 public:
  enum class Tag { degenerate, lattice, gaussian, generic };

  static MarkLaw degenerate(double eta);
  // atoms: (value, probability); values must sit on eta * Z with maximal span
  static MarkLaw lattice(double eta, std::vector<std::pair<double, double>> atoms);
  static MarkLaw gaussian(double mean, double sd);
  static MarkLaw generic(GenericLawSpec spec);

  Tag tag() const { return tag_; }
  MgfValue mgf(double theta) const;  // throws std::domain_error outside Theta
  double mean() const;
  std::optional<double> span() const { return span_; }
  bool arithmetic() const { return span_.has_value(); }
  bool is_degenerate() const { return tag_ == Tag::degenerate; }

  double sample(RngStream& rng) const;
  MarkLaw tilted(double theta) const;  // F_c(dx) = e^{theta x} F(dx) / M(theta)

  std::string describe() const;

  double degenerate_value() const;
  const std::vector<std::pair<double, double>>& atoms() const { return atoms_; }
  double gaussian_mean() const { return g_mean_; }
  double gaussian_sd() const { return g_sd_; }

 private:
  MarkLaw() = default;

  Tag tag_ = Tag::degenerate;
  std::optional<double> span_;
  double eta_ = 0.0;                             // degenerate / lattice
  std::vector<std::pair<double, double>> atoms_; // lattice
  std::vector<double> cum_;                      // lattice sampling
  double g_mean_ = 0.0, g_sd_ = 1.0;             // gaussian
  std::shared_ptr<const GenericLawSpec> gen_;    // generic
  double gen_tilt_ = 0.0;                        // accumulated tilt for generic
};

// Solution of the tilt equation M'(theta_c) = c / vol(B) together with the
// large-deviation rate and the lattice correction factor.
struct TiltSolution {
  double c = 0.0;
  double kernel_volume = 0.0;
  double theta_c = 0.0;
  double rate = 0.0;        // I = theta_c c - vol(B) [M(theta_c) - 1]
  double m = 0.0;           // M(theta_c)
  double m1 = 0.0;          // M'(theta_c)
  double m2 = 0.0;          // M''(theta_c)
  double chi = 0.0;         // theta_c, or (1 - e^{-eta theta_c}) / eta if arithmetic
  double tilted_mean = 0.0; // c / (vol(B) M(theta_c))
  std::optional<double> span;
};

TiltSolution solve_tilt(const MarkLaw& law, double kernel_volume, double c);
TiltSolution solve_tilt(const MarkLaw& law, const Kernel& kernel, double c);

// sawtooth exponent: theta_c (lambda c - eta floor(lambda c / eta)) for
// arithmetic laws, zero otherwise
double x_lambda(double lambda, double c, double theta_c, std::optional<double> span);

}  // namespace scanstat
