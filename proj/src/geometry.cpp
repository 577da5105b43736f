#include "scanstat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace scanstat {

namespace {

constexpr double kPi = std::numbers::pi;

double unit_ball_volume(int d) {
  // pi^{d/2} / Gamma(d/2 + 1)
  return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

// radical-inverse Halton point, bases 2/3/5
double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

}  // namespace

double dot(const Vec3& a, const Vec3& b, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}

double norm2(const Vec3& a, int d) { return std::sqrt(dot(a, a, d)); }

Kernel Kernel::box(std::vector<double> edges) {
  Kernel k;
  k.shape_ = Shape::box;
  k.dim_ = static_cast<int>(edges.size());
  k.edges_ = std::move(edges);
  k.validate();
  return k;
}

Kernel Kernel::ball(double radius, int dim) {
  Kernel k;
  k.shape_ = Shape::ball;
  k.dim_ = dim;
  k.radius_ = radius;
  k.validate();
  return k;
}

Kernel Kernel::cylinder(double radius, double half_height) {
  Kernel k;
  k.shape_ = Shape::cylinder;
  k.dim_ = 3;
  k.radius_ = radius;
  k.half_height_ = half_height;
  k.validate();
  return k;
}

Kernel Kernel::polygon(std::vector<PolygonFace> faces) {
  Kernel k;
  k.shape_ = Shape::polygon;
  k.dim_ = 2;
  k.faces_ = std::move(faces);
  if (k.faces_.size() < 3) throw std::invalid_argument("polygon: need >= 3 faces");
  for (auto& f : k.faces_) {
    double n = std::hypot(f.normal[0], f.normal[1]);
    if (std::abs(n - 1.0) > 1e-9)
      throw std::invalid_argument("polygon: face normals must be unit vectors");
    if (!(f.length > 0.0))
      throw std::invalid_argument("polygon: face lengths must be positive");
  }
  // sort faces by normal angle, walk edges (edge direction = normal rotated
  // +90 degrees gives a counterclockwise convex chain)
  std::sort(k.faces_.begin(), k.faces_.end(), [](const PolygonFace& a, const PolygonFace& b) {
    return std::atan2(a.normal[1], a.normal[0]) < std::atan2(b.normal[1], b.normal[0]);
  });
  double cx = 0.0, cy = 0.0;
  k.vertices_.assign(k.faces_.size(), Vec3{});
  double px = 0.0, py = 0.0;
  for (std::size_t i = 0; i < k.faces_.size(); ++i) {
    k.vertices_[i] = {px, py, 0.0};
    const auto& f = k.faces_[i];
    px += -f.normal[1] * f.length;
    py += f.normal[0] * f.length;
  }
  if (std::hypot(px, py) > 1e-9 * k.boundary_area())
    throw std::invalid_argument("polygon: edge vectors do not close");
  for (const auto& v : k.vertices_) {
    cx += v[0];
    cy += v[1];
  }
  cx /= static_cast<double>(k.vertices_.size());
  cy /= static_cast<double>(k.vertices_.size());
  for (auto& v : k.vertices_) {
    v[0] -= cx;
    v[1] -= cy;
  }
  k.offsets_.resize(k.faces_.size());
  for (std::size_t i = 0; i < k.faces_.size(); ++i)
    k.offsets_[i] = dot(k.faces_[i].normal, k.vertices_[i], 2);
  k.validate();
  return k;
}

void Kernel::validate() const {
  if (dim_ < 1 || dim_ > 3) throw std::invalid_argument("kernel: dimension must be 1..3");
  switch (shape_) {
    case Shape::box:
      for (double b : edges_)
        if (!(b > 0.0)) throw std::invalid_argument("box: edge lengths must be positive");
      break;
    case Shape::ball:
      if (!(radius_ > 0.0)) throw std::invalid_argument("ball: radius must be positive");
      break;
    case Shape::cylinder:
      if (!(radius_ > 0.0) || !(half_height_ > 0.0))
        throw std::invalid_argument("cylinder: radius and half-height must be positive");
      break;
    case Shape::polygon:
      break;
  }
  if (!(volume() > 0.0) || !(boundary_area() > 0.0))
    throw std::invalid_argument("kernel: degenerate shape");
}

double Kernel::volume() const {
  switch (shape_) {
    case Shape::box: {
      double v = 1.0;
      for (double b : edges_) v *= b;
      return v;
    }
    case Shape::ball:
      return unit_ball_volume(dim_) * std::pow(radius_, dim_);
    case Shape::cylinder:
      return kPi * radius_ * radius_ * 2.0 * half_height_;
    case Shape::polygon: {
      double a = 0.0;
      std::size_t n = vertices_.size();
      for (std::size_t i = 0; i < n; ++i) {
        const auto& p = vertices_[i];
        const auto& q = vertices_[(i + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
      }
      return 0.5 * std::abs(a);
    }
  }
  return 0.0;
}

double Kernel::boundary_area() const {
  switch (shape_) {
    case Shape::box: {
      if (dim_ == 1) return 2.0;  // two endpoints, counting measure
      double s = 0.0;
      for (int k = 0; k < dim_; ++k) {
        double face = 1.0;
        for (int l = 0; l < dim_; ++l)
          if (l != k) face *= edges_[l];
        s += 2.0 * face;
      }
      return s;
    }
    case Shape::ball:
      return dim_ * unit_ball_volume(dim_) * std::pow(radius_, dim_ - 1);
    case Shape::cylinder:
      return 2.0 * kPi * radius_ * 2.0 * half_height_ + 2.0 * kPi * radius_ * radius_;
    case Shape::polygon: {
      double s = 0.0;
      for (const auto& f : faces_) s += f.length;
      return s;
    }
  }
  return 0.0;
}

double Kernel::shadow(const Vec3& e) const {
  if (std::abs(norm2(e, dim_) - 1.0) > 1e-9)
    throw std::invalid_argument("shadow: direction must be a unit vector");
  switch (shape_) {
    case Shape::box: {
      if (dim_ == 1) return 1.0;
      double s = 0.0;
      for (int k = 0; k < dim_; ++k) {
        double face = 1.0;
        for (int l = 0; l < dim_; ++l)
          if (l != k) face *= edges_[l];
        s += std::abs(e[k]) * face;
      }
      return s;
    }
    case Shape::ball:
      // projection of a d-ball is a (d-1)-ball of the same radius
      return dim_ == 1 ? 1.0
                       : unit_ball_volume(dim_ - 1) * std::pow(radius_, dim_ - 1);
    case Shape::cylinder: {
      double s = std::hypot(e[0], e[1]);
      return 4.0 * radius_ * half_height_ * s + kPi * radius_ * radius_ * std::abs(e[2]);
    }
    case Shape::polygon: {
      // half the total |n . e|-weighted perimeter
      double s = 0.0;
      for (const auto& f : faces_) s += std::max(dot(f.normal, e, 2), 0.0) * f.length;
      return s;
    }
  }
  return 0.0;
}

double Kernel::min_shadow() const {
  if (dim_ == 1) return 1.0;
  if (shape_ == Shape::ball) return shadow(Vec3{1.0, 0.0, 0.0});

  auto dir2 = [](double a) { return Vec3{std::cos(a), std::sin(a), 0.0}; };
  auto dir3 = [](double th, double ph) {
    return Vec3{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
  };
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);

  auto golden = [&](auto f, double lo, double hi) {
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 60; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = f(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = f(x2);
      }
    }
    return std::min(f1, f2);
  };

  if (dim_ == 2) {
    const int n = 512;
    double best = 1e300, best_a = 0.0;
    for (int i = 0; i < n; ++i) {
      double a = kPi * i / n;
      double v = shadow(dir2(a));
      if (v < best) {
        best = v;
        best_a = a;
      }
    }
    double w = kPi / n;
    return std::min(best, golden([&](double a) { return shadow(dir2(a)); },
                                 best_a - w, best_a + w));
  }

  // d = 3: Fibonacci sphere grid then refine in (theta, phi)
  const int n = 1024;
  double best = 1e300, bt = 0.0, bp = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = 1.0 - 2.0 * (i + 0.5) / n;
    double th = std::acos(z);
    double ph = 2.0 * kPi * std::fmod(i * gr, 1.0);
    double v = shadow(dir3(th, ph));
    if (v < best) {
      best = v;
      bt = th;
      bp = ph;
    }
  }
  double w = 4.0 / std::sqrt(static_cast<double>(n));
  for (int pass = 0; pass < 3; ++pass) {
    double t = bt;
    golden([&](double th) {
      double v = shadow(dir3(th, bp));
      if (v < best) {
        best = v;
        t = th;
      }
      return v;
    }, bt - w, bt + w);
    bt = t;
    double p = bp;
    golden([&](double ph) {
      double v = shadow(dir3(bt, ph));
      if (v < best) {
        best = v;
        p = ph;
      }
      return v;
    }, bp - w, bp + w);
    bp = p;
    w *= 0.3;
  }
  return best;
}

bool Kernel::contains(const Vec3& t) const {
  switch (shape_) {
    case Shape::box:
      for (int k = 0; k < dim_; ++k)
        if (t[k] < 0.0 || t[k] > edges_[k]) return false;
      return true;
    case Shape::ball:
      return dot(t, t, dim_) <= radius_ * radius_;
    case Shape::cylinder:
      return t[0] * t[0] + t[1] * t[1] <= radius_ * radius_ &&
             std::abs(t[2]) <= half_height_;
    case Shape::polygon:
      for (std::size_t i = 0; i < faces_.size(); ++i)
        if (dot(faces_[i].normal, t, 2) > offsets_[i] + 1e-12) return false;
      return true;
  }
  return false;
}

void Kernel::bounding_box(Vec3& lo, Vec3& hi) const {
  lo = {0, 0, 0};
  hi = {0, 0, 0};
  switch (shape_) {
    case Shape::box:
      for (int k = 0; k < dim_; ++k) hi[k] = edges_[k];
      break;
    case Shape::ball:
      for (int k = 0; k < dim_; ++k) {
        lo[k] = -radius_;
        hi[k] = radius_;
      }
      break;
    case Shape::cylinder:
      lo = {-radius_, -radius_, -half_height_};
      hi = {radius_, radius_, half_height_};
      break;
    case Shape::polygon:
      for (int k = 0; k < 2; ++k) {
        lo[k] = 1e300;
        hi[k] = -1e300;
      }
      for (const auto& v : vertices_)
        for (int k = 0; k < 2; ++k) {
          lo[k] = std::min(lo[k], v[k]);
          hi[k] = std::max(hi[k], v[k]);
        }
      break;
  }
}

double Kernel::circumradius() const {
  switch (shape_) {
    case Shape::box: {
      double s = 0.0;
      for (int k = 0; k < dim_; ++k) s += edges_[k] * edges_[k];
      return std::sqrt(s);
    }
    case Shape::ball:
      return radius_;
    case Shape::cylinder:
      return std::hypot(radius_, half_height_);
    case Shape::polygon: {
      double r = 0.0;
      for (const auto& v : vertices_) r = std::max(r, norm2(v, 2));
      return r;
    }
  }
  return 0.0;
}

double Kernel::min_extent() const {
  switch (shape_) {
    case Shape::box:
      return *std::min_element(edges_.begin(), edges_.end());
    case Shape::ball:
      return radius_;
    case Shape::cylinder:
      return std::min(radius_, half_height_);
    case Shape::polygon: {
      double m = 1e300;
      for (std::size_t i = 0; i < faces_.size(); ++i)
        m = std::min(m, std::abs(offsets_[i]));
      return m;
    }
  }
  return 0.0;
}

BoundaryPoint Kernel::sample_boundary_point(RngStream& rng) const {
  BoundaryPoint p;
  switch (shape_) {
    case Shape::box: {
      if (dim_ == 1) {
        bool right = rng.uniform() < 0.5;
        p.location = {right ? edges_[0] : 0.0, 0, 0};
        p.normal = {right ? 1.0 : -1.0, 0, 0};
        return p;
      }
      // pick face pair proportional to face area
      std::array<double, 3> face_area{};
      double total = 0.0;
      for (int k = 0; k < dim_; ++k) {
        double a = 1.0;
        for (int l = 0; l < dim_; ++l)
          if (l != k) a *= edges_[l];
        face_area[k] = 2.0 * a;
        total += face_area[k];
      }
      double u = rng.uniform() * total;
      int k = 0;
      while (k + 1 < dim_ && u > face_area[k]) {
        u -= face_area[k];
        ++k;
      }
      bool upper = rng.uniform() < 0.5;
      for (int l = 0; l < dim_; ++l) p.location[l] = rng.uniform(0.0, edges_[l]);
      p.location[k] = upper ? edges_[k] : 0.0;
      p.normal = {0, 0, 0};
      p.normal[k] = upper ? 1.0 : -1.0;
      return p;
    }
    case Shape::ball: {
      Vec3 g{};
      double n2 = 0.0;
      do {
        for (int k = 0; k < dim_; ++k) g[k] = rng.normal();
        n2 = dot(g, g, dim_);
      } while (n2 < 1e-30);
      double inv = 1.0 / std::sqrt(n2);
      for (int k = 0; k < dim_; ++k) {
        p.normal[k] = g[k] * inv;
        p.location[k] = radius_ * p.normal[k];
      }
      return p;
    }
    case Shape::cylinder: {
      double lateral = 2.0 * kPi * radius_ * 2.0 * half_height_;
      double caps = 2.0 * kPi * radius_ * radius_;
      if (rng.uniform() * (lateral + caps) < lateral) {
        double a = rng.uniform(0.0, 2.0 * kPi);
        p.normal = {std::cos(a), std::sin(a), 0.0};
        p.location = {radius_ * p.normal[0], radius_ * p.normal[1],
                      rng.uniform(-half_height_, half_height_)};
      } else {
        bool top = rng.uniform() < 0.5;
        double r = radius_ * std::sqrt(rng.uniform());
        double a = rng.uniform(0.0, 2.0 * kPi);
        p.location = {r * std::cos(a), r * std::sin(a), top ? half_height_ : -half_height_};
        p.normal = {0.0, 0.0, top ? 1.0 : -1.0};
      }
      return p;
    }
    case Shape::polygon: {
      double u = rng.uniform() * boundary_area();
      std::size_t i = 0;
      while (i + 1 < faces_.size() && u > faces_[i].length) {
        u -= faces_[i].length;
        ++i;
      }
      const auto& a = vertices_[i];
      const auto& b = vertices_[(i + 1) % vertices_.size()];
      double t = u / faces_[i].length;
      p.location = {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), 0.0};
      p.normal = faces_[i].normal;
      return p;
    }
  }
  return p;
}

void Kernel::sample_boundary(RngStream& rng, std::size_t n,
                             std::vector<BoundaryPoint>& out) const {
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = sample_boundary_point(rng);
}

double Kernel::overlap_deficit(const Vec3& v) const {
  double vol = volume();
  double d2 = dot(v, v, dim_);
  if (d2 == 0.0) return 0.0;

  if (shape_ == Shape::box) {
    double inter = 1.0;
    for (int k = 0; k < dim_; ++k) inter *= std::max(edges_[k] - std::abs(v[k]), 0.0);
    return vol - inter;
  }
  if (shape_ == Shape::ball && dim_ == 2) {
    double delta = std::sqrt(d2);
    if (delta >= 2.0 * radius_) return vol;
    double lens = 2.0 * radius_ * radius_ * std::acos(delta / (2.0 * radius_)) -
                  0.5 * delta * std::sqrt(4.0 * radius_ * radius_ - delta * delta);
    return vol - lens;
  }
  if (std::sqrt(d2) >= 2.0 * circumradius()) return vol;

  // randomized QMC over the bounding box: 8 shifted Halton sequences
  Vec3 lo, hi;
  bounding_box(lo, hi);
  double box_vol = 1.0;
  for (int k = 0; k < dim_; ++k) box_vol *= hi[k] - lo[k];
  const int bases[3] = {2, 3, 5};
  const std::uint64_t n_pts = 65536;
  const int n_shifts = 8;
  std::array<double, n_shifts> means{};
  for (int s = 0; s < n_shifts; ++s) {
    RngStream shift_rng(0xC0FFEEull, "overlap_deficit_qmc", static_cast<std::uint64_t>(s));
    Vec3 shift{};
    for (int k = 0; k < dim_; ++k) shift[k] = shift_rng.uniform();
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < n_pts; ++i) {
      Vec3 u{};
      for (int k = 0; k < dim_; ++k) {
        double x = radical_inverse(i + 1, bases[k]) + shift[k];
        x -= std::floor(x);
        u[k] = lo[k] + (hi[k] - lo[k]) * x;
      }
      Vec3 um{u[0] - v[0], u[1] - v[1], u[2] - v[2]};
      if (contains(u) && contains(um)) ++hits;
    }
    means[s] = box_vol * static_cast<double>(hits) / static_cast<double>(n_pts);
  }
  double inter = 0.0;
  for (double m : means) inter += m;
  inter /= n_shifts;
  return std::max(vol - inter, 0.0);
}

}  // namespace scanstat
