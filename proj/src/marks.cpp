#include "scanstat/marks.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace scanstat {

namespace {

long long gcd_ll(long long a, long long b) {
  while (b) {
    long long t = a % b;
    a = b;
    b = t;
  }
  return a;
}

}  // namespace

MarkLaw MarkLaw::degenerate(double eta) {
  if (!(eta > 0.0))
    throw std::invalid_argument("degenerate law: point mass must be positive (P{X>0}>0)");
  MarkLaw l;
  l.tag_ = Tag::degenerate;
  l.eta_ = eta;
  l.span_ = eta;
  return l;
}

MarkLaw MarkLaw::lattice(double eta, std::vector<std::pair<double, double>> atoms) {
  if (!(eta > 0.0)) throw std::invalid_argument("lattice law: span must be positive");
  if (atoms.empty()) throw std::invalid_argument("lattice law: no atoms");
  MarkLaw l;
  l.tag_ = Tag::lattice;
  l.eta_ = eta;
  l.span_ = eta;
  double total = 0.0;
  bool positive_mass = false;
  long long g = 0;
  for (auto& [v, p] : atoms) {
    if (!(p >= 0.0)) throw std::invalid_argument("lattice law: negative probability");
    double kf = v / eta;
    long long k = std::llround(kf);
    if (std::abs(kf - static_cast<double>(k)) > 1e-9)
      throw std::invalid_argument("lattice law: atom not on the declared span lattice");
    if (k != 0) g = g == 0 ? std::abs(k) : gcd_ll(g, std::abs(k));
    total += p;
    if (v > 0.0 && p > 0.0) positive_mass = true;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("lattice law: probabilities must sum to 1");
  if (!positive_mass) throw std::invalid_argument("lattice law: requires P{X>0} > 0");
  if (g != 1)
    throw std::invalid_argument("lattice law: span is not maximal (support lies on a coarser lattice)");
  l.atoms_ = std::move(atoms);
  l.cum_.resize(l.atoms_.size());
  double c = 0.0;
  for (std::size_t i = 0; i < l.atoms_.size(); ++i) {
    c += l.atoms_[i].second;
    l.cum_[i] = c;
  }
  l.cum_.back() = 1.0;
  return l;
}

MarkLaw MarkLaw::gaussian(double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("gaussian law: sd must be positive");
  MarkLaw l;
  l.tag_ = Tag::gaussian;
  l.g_mean_ = mean;
  l.g_sd_ = sd;
  return l;
}

MarkLaw MarkLaw::generic(GenericLawSpec spec) {
  if (!spec.mgf || !spec.sample_tilted)
    throw std::invalid_argument("generic law: mgf and sampler are required");
  if (!(spec.theta_lo < 0.0 && spec.theta_hi > 0.0))
    throw std::invalid_argument("generic law: MGF domain must be an open neighborhood of 0");
  MarkLaw l;
  l.tag_ = Tag::generic;
  l.span_ = spec.span;
  l.gen_ = std::make_shared<const GenericLawSpec>(std::move(spec));
  return l;
}

MgfValue MarkLaw::mgf(double theta) const {
  switch (tag_) {
    case Tag::degenerate: {
      double e = std::exp(theta * eta_);
      return {e, eta_ * e, eta_ * eta_ * e};
    }
    case Tag::lattice: {
      double m = 0.0, m1 = 0.0, m2 = 0.0;
      for (const auto& [v, p] : atoms_) {
        double e = p * std::exp(theta * v);
        m += e;
        m1 += v * e;
        m2 += v * v * e;
      }
      return {m, m1, m2};
    }
    case Tag::gaussian: {
      double a = g_mean_ + g_sd_ * g_sd_ * theta;
      double e = std::exp(g_mean_ * theta + 0.5 * g_sd_ * g_sd_ * theta * theta);
      return {e, a * e, (a * a + g_sd_ * g_sd_) * e};
    }
    case Tag::generic: {
      double t = theta + gen_tilt_;
      if (!(t > gen_->theta_lo && t < gen_->theta_hi))
        throw std::domain_error("mgf: theta outside the MGF domain");
      MgfValue base = gen_->mgf(t);
      if (gen_tilt_ == 0.0) return base;
      MgfValue at = gen_->mgf(gen_tilt_);
      return {base.m / at.m, base.m1 / at.m, base.m2 / at.m};
    }
  }
  return {1, 0, 0};
}

double MarkLaw::mean() const { return mgf(0.0).m1; }

double MarkLaw::sample(RngStream& rng) const {
  switch (tag_) {
    case Tag::degenerate:
      return eta_;
    case Tag::lattice: {
      double u = rng.uniform();
      for (std::size_t i = 0; i < cum_.size(); ++i)
        if (u <= cum_[i]) return atoms_[i].first;
      return atoms_.back().first;
    }
    case Tag::gaussian:
      return rng.normal(g_mean_, g_sd_);
    case Tag::generic:
      return gen_->sample_tilted(gen_tilt_, rng);
  }
  return 0.0;
}

MarkLaw MarkLaw::tilted(double theta) const {
  MgfValue at = mgf(theta);  // validates domain
  switch (tag_) {
    case Tag::degenerate:
      return *this;  // tilting a point mass leaves it unchanged
    case Tag::lattice: {
      std::vector<std::pair<double, double>> re = atoms_;
      for (auto& [v, p] : re) p = p * std::exp(theta * v) / at.m;
      MarkLaw l;
      l.tag_ = Tag::lattice;
      l.eta_ = eta_;
      l.span_ = span_;
      l.atoms_ = std::move(re);
      l.cum_.resize(l.atoms_.size());
      double c = 0.0;
      for (std::size_t i = 0; i < l.atoms_.size(); ++i) {
        c += l.atoms_[i].second;
        l.cum_[i] = c;
      }
      l.cum_.back() = 1.0;
      return l;
    }
    case Tag::gaussian:
      return MarkLaw::gaussian(g_mean_ + g_sd_ * g_sd_ * theta, g_sd_);
    case Tag::generic: {
      MarkLaw l = *this;
      l.gen_tilt_ = gen_tilt_ + theta;
      return l;
    }
  }
  return *this;
}

double MarkLaw::degenerate_value() const {
  if (tag_ != Tag::degenerate) throw std::logic_error("not a degenerate law");
  return eta_;
}

std::string MarkLaw::describe() const {
  std::ostringstream os;
  switch (tag_) {
    case Tag::degenerate:
      os << "degenerate(" << eta_ << ")";
      break;
    case Tag::lattice:
      os << "lattice(eta=" << eta_ << ", " << atoms_.size() << " atoms)";
      break;
    case Tag::gaussian:
      os << "gaussian(" << g_mean_ << ", " << g_sd_ << ")";
      break;
    case Tag::generic:
      os << gen_->name;
      if (gen_tilt_ != 0.0) os << "[tilt " << gen_tilt_ << "]";
      break;
  }
  return os.str();
}

TiltSolution solve_tilt(const MarkLaw& law, double kernel_volume, double c) {
  if (!(kernel_volume > 0.0)) throw std::invalid_argument("solve_tilt: kernel volume must be positive");
  double mu = law.mean();
  if (!(c > std::max(0.0, mu * kernel_volume)))
    throw std::invalid_argument("solve_tilt: requires c > max(0, mean * volume(B))");
  const double target = c / kernel_volume;

  // bracket: M' is strictly increasing (M'' > 0), M'(0) = mean < target
  double lo = 0.0;
  double hi = 1.0;
  double theta_max = 1e308;
  if (law.tag() == MarkLaw::Tag::generic) {
    // approach a finite right domain endpoint geometrically
    // (handled by the domain_error catch below)
  }
  auto m1_at = [&](double th) { return law.mgf(th).m1; };
  for (int it = 0;; ++it) {
    double v;
    try {
      v = m1_at(hi);
    } catch (const std::domain_error&) {
      theta_max = hi;
      hi = 0.5 * (lo + hi);
      if (hi - lo < 1e-14 * std::max(1.0, std::abs(lo)))
        throw std::runtime_error("solve_tilt: threshold not attainable inside the MGF domain");
      continue;
    }
    if (v >= target) break;
    lo = hi;
    hi = theta_max < 1e308 ? 0.5 * (hi + theta_max) : 2.0 * hi;
    if (it > 2000 || (theta_max < 1e308 && theta_max - lo < 1e-14 * std::max(1.0, theta_max)))
      throw std::runtime_error("solve_tilt: threshold not attainable inside the MGF domain");
  }

  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    double v;
    try {
      v = m1_at(mid);
    } catch (const std::domain_error&) {
      hi = mid;
      continue;
    }
    if (v < target)
      lo = mid;
    else
      hi = mid;
  }
  double theta = 0.5 * (lo + hi);
  // Newton polish, M'' available analytically
  for (int it = 0; it < 8; ++it) {
    MgfValue v = law.mgf(theta);
    double step = (v.m1 - target) / v.m2;
    double next = theta - step;
    if (!(next > 0.0)) next = 0.5 * theta;
    theta = next;
    if (std::abs(step) <= 1e-15 * std::max(1.0, theta)) break;
  }

  TiltSolution t;
  t.c = c;
  t.kernel_volume = kernel_volume;
  t.theta_c = theta;
  MgfValue v = law.mgf(theta);
  t.m = v.m;
  t.m1 = v.m1;
  t.m2 = v.m2;
  t.rate = theta * c - kernel_volume * (v.m - 1.0);
  t.span = law.span();
  t.chi = t.span ? (1.0 - std::exp(-*t.span * theta)) / *t.span : theta;
  t.tilted_mean = c / (kernel_volume * v.m);
  if (std::abs(v.m1 - target) > 1e-10 * target)
    throw std::runtime_error("solve_tilt: root refinement failed");
  if (!(t.rate > 0.0) || !(t.m2 > 0.0))
    throw std::runtime_error("solve_tilt: inconsistent solution");
  return t;
}

TiltSolution solve_tilt(const MarkLaw& law, const Kernel& kernel, double c) {
  return solve_tilt(law, kernel.volume(), c);
}

double x_lambda(double lambda, double c, double theta_c, std::optional<double> span) {
  if (!(lambda > 0.0)) throw std::invalid_argument("x_lambda: lambda must be positive");
  if (!span) return 0.0;
  double eta = *span;
  double lc = lambda * c;
  double frac = lc - eta * std::floor(lc / eta);
  if (frac >= eta) frac -= eta;  // guard the floor at exact multiples
  return theta_c * frac;
}

}  // namespace scanstat
