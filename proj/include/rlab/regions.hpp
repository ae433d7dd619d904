#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rlab/net.hpp"
#include "rlab/types.hpp"

namespace rlab {

// Convex polygon, CCW vertex order, signed area > 0.
struct Polygon2D {
  std::vector<Vector2> vertices;

  static Polygon2D rectangle(double a_lo, double b_lo, double a_hi, double b_hi);
  static Polygon2D square(double center_a, double center_b, double half_width);

  Vector2 centroid() const;
  bool contains(const Vector2& p) const;
  void validate() const;
};

// Shoelace area: 1/2 |sum (a_k b_{k+1} - b_k a_{k+1})| with wraparound.
double area(const Polygon2D& poly);

// Axis-aligned bounding-box anisotropy: sqrt(1 - (min_ext/max_ext)^2);
// 0 for degenerate (single-point) boxes.
double eccentricity(const Polygon2D& poly);
double bbox_eccentricity(double extent_a, double extent_b);

// Edge count after merging consecutive collinear vertices.
Index boundaries(const Polygon2D& poly, double collinear_tol = 1e-9);

// Tolerances of the subdivision; all configurable and reported in exports.
struct RegionEpsilons {
  double sign = 1e-10;       // vertices within this distance count as on a line
  double sliver_area = 1e-14;  // fragments below are dropped and tallied
  double collinear = 1e-9;
};

// Splits a convex CCW polygon by the line alpha*a + beta*b + gamma = 0.
// Either side may be absent; `dropped_area` tallies discarded slivers.
struct CutResult {
  std::optional<Polygon2D> negative;
  std::optional<Polygon2D> positive;
  double dropped_area = 0.0;
};
CutResult cut_polygon(const Polygon2D& poly, double alpha, double beta, double gamma,
                      const RegionEpsilons& eps = {});

struct RegionPolygon {
  Polygon2D polygon;
  ActivationPattern pattern;
  AffineMap affine;  // plane -> embedding output (A: out x 2)
  double area = 0.0;
  double eccentricity = 0.0;
  Index boundaries = 0;
};

struct RegionSet {
  Polygon2D domain;
  std::vector<RegionPolygon> regions;
  double dropped_sliver_area = 0.0;
  RegionEpsilons epsilons;

  double total_region_area() const {
    double s = 0.0;
    for (const auto& r : regions) s += r.area;
    return s;
  }
};

struct RegionAggregate {
  Index count = 0;
  double mean_area = 0.0;
  double mean_eccentricity = 0.0;
  double mean_boundaries = 0.0;
};
RegionAggregate aggregate(const RegionSet& set);

// Exact tessellation of `domain` by layerwise hyperplane cuts: each fragment
// carries the affine map composed through the ReLU masks fixed so far; every
// hidden neuron of a layer contributes one cut line per fragment; fragment
// signs are fixed at the centroid. Regions are emitted sorted by pattern
// bits so parallel and serial runs agree.
RegionSet extract_exact(const MlpNetwork& planar_net, const Polygon2D& domain,
                        const RegionEpsilons& eps = {});

// Uniform-lattice activation-pattern census over the domain's bounding box
// (cell centers; points outside the domain are skipped).
struct GridCell {
  Index cells = 0;
  double min_a = 0.0, max_a = 0.0, min_b = 0.0, max_b = 0.0;
};
struct GridResult {
  Index unique_patterns = 0;
  Index sampled_points = 0;
  std::unordered_map<ActivationPattern, GridCell, ActivationPattern::Hash> counts;

  double mean_cell_eccentricity() const;
};
GridResult extract_grid(const MlpNetwork& planar_net, const Polygon2D& domain, Index resolution);

void save_region_set(const RegionSet& set, const std::string& path);
RegionSet load_region_set(const std::string& path);

} // namespace rlab
