#pragma once

#include <array>
#include <string>

#include "rlab/data.hpp"
#include "rlab/net.hpp"
#include "rlab/types.hpp"

namespace rlab {

// A 2D analysis plane inside R^d: centered at the circumcenter of three
// anchor inputs, spanned by a Gram-Schmidt orthonormal basis. Plane
// coordinates (a,b) lift to x = C + a*u1 + b*u2.
struct PlaneEmbedding {
  Vector x0, x1, x2;      // anchors
  Vector center;          // circumcenter
  Vector u1, u2;          // orthonormal basis
  double extent = 0.0;    // half-width of the analysis square in plane units
  std::array<Index, 3> anchor_indices{-1, -1, -1};

  Vector lift(double a, double b) const { return center + a * u1 + b * u2; }
  Vector2 plane_coords(const VectorRef& x) const {
    return {(x - center).dot(u1), (x - center).dot(u2)};
  }
};

// Circumcenter from the 2x2 Gram system M beta = 1/2 [||v1||^2, ||v2||^2]
// with v1 = x1-x0, v2 = x2-x0; C = x0 + beta0 v1 + beta1 v2.
Vector circumcenter(const VectorRef& x0, const VectorRef& x1, const VectorRef& x2);

// u1 = w1/||w1||, u2 = normalize(w2 - (w2.u1) u1) with w_i = x_i - C.
std::pair<Vector, Vector> orthobasis(const VectorRef& x0, const VectorRef& x1,
                                     const VectorRef& x2, const VectorRef& center);

// Full construction: circumcenter, basis, extent = extent_factor * circumradius.
PlaneEmbedding make_plane(const VectorRef& x0, const VectorRef& x1, const VectorRef& x2,
                          double extent_factor = 1.25);

// One sample per requested class, deterministic per seed.
std::array<Index, 3> anchor_pick(const LabeledSet& set, const std::array<int, 3>& class_ids,
                                 std::uint64_t seed);

// First layer rewritten as W' = W [u1 u2], b' = W C + b; the rest unchanged.
// The result takes plane coordinates and reproduces the original network on
// lifted points.
MlpNetwork restrict_to_plane(const MlpNetwork& net, const PlaneEmbedding& embedding);

void save_plane(const PlaneEmbedding& embedding, const std::string& path);
PlaneEmbedding load_plane(const std::string& path);

} // namespace rlab
