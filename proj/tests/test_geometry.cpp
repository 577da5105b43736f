#include <doctest.h>

#include <cmath>
#include <numbers>

#include "scanstat/geometry.hpp"
#include "scanstat/rng.hpp"

using namespace scanstat;

namespace {
constexpr double kPi = std::numbers::pi;

// boundary-integral estimate of the shadow: mean of (n.e)^+ times the
// boundary area, an independent route for convex kernels
double shadow_by_boundary_mc(const Kernel& k, const Vec3& e, std::size_t n, double* se) {
  RngStream rng(1234, "shadow_mc", 0);
  std::vector<BoundaryPoint> pts;
  k.sample_boundary(rng, n, pts);
  double s = 0, s2 = 0;
  for (const auto& p : pts) {
    double v = std::max(dot(p.normal, e, k.dim()), 0.0);
    s += v;
    s2 += v * v;
  }
  double mean = s / n;
  double var = s2 / n - mean * mean;
  *se = k.boundary_area() * std::sqrt(var / n);
  return k.boundary_area() * mean;
}
}  // namespace

TEST_CASE("closed-form volumes") {
  CHECK(Kernel::box({1.0, 1.0}).volume() == doctest::Approx(1.0));
  CHECK(Kernel::ball(1.0, 2).volume() == doctest::Approx(kPi));
  CHECK(Kernel::cylinder(1.0, 1.0).volume() == doctest::Approx(2.0 * kPi));
  CHECK(Kernel::ball(2.0, 3).volume() == doctest::Approx(4.0 / 3.0 * kPi * 8.0));
  CHECK(Kernel::box({3.0}).volume() == doctest::Approx(3.0));
}

TEST_CASE("closed-form boundary areas") {
  CHECK(Kernel::box({1.0, 1.0}).boundary_area() == doctest::Approx(4.0));
  CHECK(Kernel::ball(1.0, 2).boundary_area() == doctest::Approx(2.0 * kPi));
  CHECK(Kernel::ball(1.0, 3).boundary_area() == doctest::Approx(4.0 * kPi));
  CHECK(Kernel::cylinder(1.0, 1.0).boundary_area() == doctest::Approx(6.0 * kPi));
}

TEST_CASE("kernel validation") {
  CHECK_THROWS_AS(Kernel::box({1.0, -1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::ball(0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::cylinder(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::ball(1.0, 7), std::invalid_argument);
}

TEST_CASE("boundary sampling: normals and locations") {
  RngStream rng(5, "boundary", 0);
  Kernel disk = Kernel::ball(1.0, 2);
  std::vector<BoundaryPoint> pts;
  const std::size_t n = 20000;
  disk.sample_boundary(rng, n, pts);
  double mx = 0, my = 0;
  for (const auto& p : pts) {
    // on the unit circle the location equals the normal
    CHECK(p.location[0] == doctest::Approx(p.normal[0]).epsilon(1e-12));
    CHECK(p.location[1] == doctest::Approx(p.normal[1]).epsilon(1e-12));
    CHECK(norm2(p.normal, 2) == doctest::Approx(1.0).epsilon(1e-12));
    mx += p.normal[0];
    my += p.normal[1];
  }
  // divergence theorem: normals integrate to zero
  CHECK(std::abs(mx / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(my / n) < 4.0 / std::sqrt(static_cast<double>(n)));

  Kernel square = Kernel::box({1.0, 1.0});
  square.sample_boundary(rng, n, pts);
  int face_count[4] = {0, 0, 0, 0};
  for (const auto& p : pts) {
    CHECK(norm2(p.normal, 2) == doctest::Approx(1.0));
    double t0 = p.location[0], t1 = p.location[1];
    bool on_boundary = t0 == 0.0 || t0 == 1.0 || t1 == 0.0 || t1 == 1.0;
    CHECK(on_boundary);
    if (p.normal[0] < -0.5) ++face_count[0];
    if (p.normal[0] > 0.5) ++face_count[1];
    if (p.normal[1] < -0.5) ++face_count[2];
    if (p.normal[1] > 0.5) ++face_count[3];
  }
  double sd = std::sqrt(0.25 * 0.75 * n);
  for (int f = 0; f < 4; ++f) CHECK(std::abs(face_count[f] - 0.25 * n) < 4.0 * sd);
}

TEST_CASE("shadows: closed forms and boundary-integral cross-check") {
  Kernel disk = Kernel::ball(1.0, 2);
  CHECK(disk.shadow(Vec3{1, 0, 0}) == doctest::Approx(2.0));
  Kernel square = Kernel::box({1.0, 1.0});
  CHECK(square.shadow(Vec3{1, 0, 0}) == doctest::Approx(1.0));
  double inv = 1.0 / std::sqrt(2.0);
  CHECK(square.shadow(Vec3{inv, inv, 0}) == doctest::Approx(std::sqrt(2.0)));

  for (const Kernel& k : {disk, square, Kernel::cylinder(1.0, 1.0)}) {
    Vec3 e{};
    if (k.dim() == 2)
      e = {std::cos(0.7), std::sin(0.7), 0.0};
    else
      e = {0.36, 0.48, 0.8};
    double se = 0.0;
    double mc = shadow_by_boundary_mc(k, e, 50000, &se);
    CHECK(std::abs(mc - k.shadow(e)) < 4.0 * se);
  }
}

TEST_CASE("min_shadow") {
  CHECK(Kernel::ball(1.0, 2).min_shadow() == doctest::Approx(2.0));
  CHECK(Kernel::box({1.0, 1.0}).min_shadow() == doctest::Approx(1.0).epsilon(1e-6));
  // grid-minimization oracle: for a 2x1 box the minimum is the short axis
  CHECK(Kernel::box({2.0, 1.0}).min_shadow() == doctest::Approx(1.0).epsilon(1e-6));
  Kernel cyl = Kernel::cylinder(1.0, 1.0);
  double ms = cyl.min_shadow();
  CHECK(ms <= kPi + 1e-9);      // axis direction gives pi r^2
  CHECK(ms >= 2.0);             // any shadow contains a diameter section
}

TEST_CASE("overlap deficit: closed forms") {
  Kernel square = Kernel::box({1.0, 1.0});
  CHECK(square.overlap_deficit(Vec3{0, 0, 0}) == doctest::Approx(0.0));
  for (double s : {0.1, 0.3, 0.7, 1.0})
    CHECK(square.overlap_deficit(Vec3{s, 0, 0}) == doctest::Approx(s));
  CHECK(square.overlap_deficit(Vec3{5, 5, 0}) == doctest::Approx(1.0));

  Kernel disk = Kernel::ball(1.0, 2);
  // lens closed form against the lower bound |v| beta / 2 = |v|
  for (double s : {0.01, 0.05, 0.1}) {
    double def = disk.overlap_deficit(Vec3{s, 0, 0});
    CHECK(def >= s);
    CHECK(def == doctest::Approx(2.0 * s).epsilon(0.05));  // ~ diameter * |v|
  }
  CHECK(disk.overlap_deficit(Vec3{3, 0, 0}) == doctest::Approx(kPi));
}

TEST_CASE("overlap deficit: QMC path against the d=3 two-cap closed form") {
  Kernel b3 = Kernel::ball(1.0, 3);
  for (double delta : {0.2, 0.7, 1.5}) {
    double inter = kPi / 12.0 * (4.0 + delta) * (2.0 - delta) * (2.0 - delta);
    double expect = b3.volume() - inter;
    CHECK(b3.overlap_deficit(Vec3{delta, 0, 0}) == doctest::Approx(expect).epsilon(5e-3));
  }
  // cylinder QMC sanity: axial shift has a box-like closed form
  Kernel cyl = Kernel::cylinder(1.0, 1.0);
  double expect = cyl.volume() * 0.25;  // shift h/2 along the axis removes 1/4
  CHECK(cyl.overlap_deficit(Vec3{0, 0, 0.5}) == doctest::Approx(expect).epsilon(5e-3));
}

TEST_CASE("shift inequality: deficit >= |v| beta / 2 on a direction grid") {
  for (const Kernel& k :
       {Kernel::ball(1.0, 2), Kernel::box({1.0, 1.0}), Kernel::box({2.0, 1.0})}) {
    double beta = k.min_shadow();
    double eps = 0.1 * k.min_extent();
    for (int i = 0; i < 100; ++i) {
      double a = 2.0 * kPi * i / 100.0;
      for (double r : {0.25 * eps, 0.5 * eps, eps}) {
        Vec3 v{r * std::cos(a), r * std::sin(a), 0.0};
        double linf = std::max(std::abs(v[0]), std::abs(v[1]));
        if (linf > eps) continue;
        CHECK(k.overlap_deficit(v) >= norm2(v, 2) * beta / 2.0 - 1e-9);
      }
    }
  }
}

TEST_CASE("polygon kernels reproduce the square") {
  std::vector<PolygonFace> faces{
      {{1, 0, 0}, 1.0}, {{0, 1, 0}, 1.0}, {{-1, 0, 0}, 1.0}, {{0, -1, 0}, 1.0}};
  Kernel poly = Kernel::polygon(faces);
  CHECK(poly.volume() == doctest::Approx(1.0));
  CHECK(poly.boundary_area() == doctest::Approx(4.0));
  double inv = 1.0 / std::sqrt(2.0);
  CHECK(poly.shadow(Vec3{inv, inv, 0}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(poly.min_shadow() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(poly.contains(Vec3{0.49, 0.0, 0.0}));
  CHECK(!poly.contains(Vec3{0.51, 0.0, 0.0}));

  // an open chain must be rejected
  faces[3].length = 2.0;
  CHECK_THROWS_AS(Kernel::polygon(faces), std::invalid_argument);
}
