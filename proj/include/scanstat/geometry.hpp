#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "scanstat/rng.hpp"

namespace scanstat {

// Points and directions live in R^d with d <= 3; unused coordinates are 0.
using Vec3 = std::array<double, 3>;

double dot(const Vec3& a, const Vec3& b, int d);
double norm2(const Vec3& a, int d);

struct BoundaryPoint {
  Vec3 location{};  // point on the kernel boundary
  Vec3 normal{};    // outward unit normal there
};

struct PolygonFace {
  Vec3 normal{};  // unit outward normal (d = 2)
  double length = 0.0;
};

// Scanning set B: a fixed bounded shape translated across the domain.
// Boxes have their corner at the origin (B = prod [0, b_k]); balls, cylinders
// and polygons are centered at the origin.
class Kernel {
 public:
  enum class Shape { box, ball, cylinder, polygon };

  static Kernel box(std::vector<double> edges);
  static Kernel ball(double radius, int dim);
  static Kernel cylinder(double radius, double half_height);  // d = 3
  // Convex polygon (d = 2) from outward unit normals and edge lengths,
  // reconstructed up to translation (centered at its vertex centroid).
  static Kernel polygon(std::vector<PolygonFace> faces);

  Shape shape() const { return shape_; }
  int dim() const { return dim_; }

  double volume() const;
  double boundary_area() const;

  // (d-1)-volume of the orthogonal projection of B along unit direction e;
  // equals the boundary integral of (n_t . e)^+ for convex B.
  double shadow(const Vec3& e) const;
  // beta = inf over unit directions of shadow(e), grid search plus
  // golden-section refinement
  double min_shadow() const;
  // volume of B \ (v + B); closed forms for boxes and d=2 balls, randomized
  // quasi-Monte Carlo otherwise
  double overlap_deficit(const Vec3& v) const;

  bool contains(const Vec3& t) const;
  void bounding_box(Vec3& lo, Vec3& hi) const;
  double circumradius() const;  // max |t| over B
  double min_extent() const;    // min edge / radius, scale for perturbation tests

  // i.i.d. samples from the surface measure on the boundary, with outward
  // normals
  void sample_boundary(RngStream& rng, std::size_t n,
                       std::vector<BoundaryPoint>& out) const;
  BoundaryPoint sample_boundary_point(RngStream& rng) const;

  const std::vector<double>& box_edges() const { return edges_; }
  double ball_radius() const { return radius_; }
  double cyl_half_height() const { return half_height_; }

 private:
  Kernel() = default;
  void validate() const;

  Shape shape_ = Shape::box;
  int dim_ = 0;
  std::vector<double> edges_;       // box
  double radius_ = 0.0;             // ball, cylinder
  double half_height_ = 0.0;        // cylinder
  std::vector<PolygonFace> faces_;  // polygon
  std::vector<Vec3> vertices_;      // polygon, derived
  std::vector<double> offsets_;     // polygon face plane offsets, derived
};

}  // namespace scanstat
