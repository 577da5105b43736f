#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "scanstat/geometry.hpp"
#include "scanstat/marks.hpp"
#include "scanstat/mc.hpp"

namespace scanstat {

// One realization of the limiting boundary field: two marked Poisson streams
// on (boundary normal, signed offset), truncated to |offset| <= R.  Stream 1
// has rate 1 per unit surface x offset on [0, R] with marks from F; stream 2
// has rate M(theta_c) on [-R, 0) with marks from the tilted law F_c.
// The field value at u depends only on normals, offsets and marks.
struct LocalField {
  std::vector<double> nx, ny, nz;  // outward unit normals
  std::vector<double> off;         // signed offsets y_i (stream 1 >= 0, stream 2 < 0)
  std::vector<double> mark;
  std::vector<std::uint8_t> stream;  // 1 or 2
  std::vector<double> abs_off;       // |off|, ascending (events sorted by it)
  double truncation = 0.0;           // R
  int dim = 0;
  double rate2 = 0.0;  // M(theta_c), stream-2 intensity per unit surface

  std::size_t size() const { return off.size(); }
};

LocalField simulate_local_field(const Kernel& kernel, const TiltSolution& tilt,
                                const MarkLaw& law, double R, RngStream& rng);

// Adds the Poisson increment on |offset| in (field.R, new_R]; the realization
// restricted to the old band is unchanged.
void extend_local_field(LocalField& field, const Kernel& kernel, const MarkLaw& law,
                        const MarkLaw& tilted_law, double new_R, RngStream& rng);

// Exact field value Y(u); throws if ||u|| exceeds the truncation.
double field_value(const LocalField& field, const Vec3& u);
// Same, also reporting whether any event contributed (u outside the empty
// cell around the origin).
double field_value_touched(const LocalField& field, const Vec3& u, bool& touched);

// Maximum of Y over the lattice {0, h, ..., m}^d, exact at lattice points.
double sup_on_box(const LocalField& field, double m, double h);

struct RegionSampler {
  double r0 = 0.5;          // initial half-width
  int points = 4096;        // points per doubling stage
  bool adaptive = true;     // grow until the outer shell stops contributing
  double r_cap = 40.0;
  double stop_rel = 1e-3;   // shell contribution threshold (relative)
  double zero_tol = 1e-9;
};

struct OccupationEstimate {
  double volume = 0.0;
  double r_final = 0.0;
  bool truncated = false;
  std::uint64_t hits = 0;
  std::uint64_t points = 0;
};

// Hit-or-miss measure of {u : Y(u) = 0} on [-r, r]^d, stratified over the
// doubling stages.  The field is extended on demand while the region grows.
OccupationEstimate zero_set_volume(LocalField& field, const Kernel& kernel,
                                   const MarkLaw& law, const MarkLaw& tilted_law,
                                   const RegionSampler& sampler, RngStream& rng);

// Largest strictly negative value attained by Y on the search region, or
// nothing if Y never goes negative there.  In d <= 2 every arrangement cell
// that meets the region is probed through its edges, so the search is
// exhaustive up to the region truncation; degenerate marks short-circuit to
// -eta as soon as any negative value exists.
std::optional<double> largest_negative_value(LocalField& field, const Kernel& kernel,
                                             const MarkLaw& law, const MarkLaw& tilted_law,
                                             double region_radius, RngStream& rng);

// Fused scan used by the occupation-measure route: exact empty-cell area
// (d <= 2) plus stratified sampling of the remaining zero set, and the
// negative-value search, sharing one pass over the field.
struct RegionScanResult {
  double zero_volume = 0.0;
  double cell0_volume = 0.0;  // exact when dim <= 2
  std::optional<double> negative_sup;
  double r_final = 0.0;
  bool truncated = false;
};
RegionScanResult region_scan(LocalField& field, const Kernel& kernel, const MarkLaw& law,
                             const MarkLaw& tilted_law, const RegionSampler& sampler,
                             RngStream& rng, bool want_negative);

// ---- limiting random set from the unit-rate boundary process ----
// Omega = {u : n_i . u <= 0 or y_i >= n_i . u for every event i}; an event
// excludes u exactly when it falls in the sliver swept by the boundary moving
// from B to u + B, so events with y > ||u|| never matter and membership inside
// radius R is decided exactly.
struct OmegaField {
  std::vector<double> nx, ny, nz;
  std::vector<double> off;  // >= 0, ascending
  double truncation = 0.0;
  int dim = 0;
};

OmegaField simulate_omega(const Kernel& kernel, double R, RngStream& rng);
void extend_omega(OmegaField& om, const Kernel& kernel, double new_R, RngStream& rng);

// sigma_d(Omega); exact convex-polygon area in d <= 2, stratified hit-or-miss
// in d = 3.  Grows the realization until the set is interior.
double omega_volume(OmegaField& om, const Kernel& kernel, const RegionSampler& sampler,
                    RngStream& rng, bool* truncated = nullptr);

// convenience: simulate + measure
double simulate_omega_volume(const Kernel& kernel, double R, const RegionSampler& sampler,
                             RngStream& rng);

}  // namespace scanstat
