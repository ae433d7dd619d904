#include "rlab/plane.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace rlab {

Vector circumcenter(const VectorRef& x0, const VectorRef& x1, const VectorRef& x2) {
  if (x0.size() != x1.size() || x0.size() != x2.size())
    throw ShapeError("circumcenter: anchor dimension mismatch");
  const Vector v1 = x1 - x0;
  const Vector v2 = x2 - x0;

  Eigen::Matrix2d m;
  m << v1.dot(v1), v1.dot(v2), v1.dot(v2), v2.dot(v2);
  Eigen::Vector2d rhs(0.5 * v1.squaredNorm(), 0.5 * v2.squaredNorm());

  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (std::abs(det) < 1e-12 * m.norm())
    throw NumericError("circumcenter: degenerate triangle");
  const Eigen::Vector2d beta = m.inverse() * rhs;
  return x0 + beta[0] * v1 + beta[1] * v2;
}

std::pair<Vector, Vector> orthobasis(const VectorRef& x0, const VectorRef& x1,
                                     const VectorRef& x2, const VectorRef& center) {
  (void)x0;
  const Vector w1 = x1 - center;
  const Vector w2 = x2 - center;
  const double n1 = w1.norm();
  if (n1 < 1e-300) throw NumericError("orthobasis: zero first direction");
  Vector u1 = w1 / n1;
  Vector perp = w2 - w2.dot(u1) * u1;
  const double n2 = perp.norm();
  if (n2 < 1e-9 * w2.norm() || w2.norm() < 1e-300)
    throw NumericError("orthobasis: directions parallel or zero");
  return {std::move(u1), perp / n2};
}

PlaneEmbedding make_plane(const VectorRef& x0, const VectorRef& x1, const VectorRef& x2,
                          double extent_factor) {
  PlaneEmbedding e;
  e.x0 = x0;
  e.x1 = x1;
  e.x2 = x2;
  e.center = circumcenter(x0, x1, x2);
  auto [u1, u2] = orthobasis(x0, x1, x2, e.center);
  e.u1 = std::move(u1);
  e.u2 = std::move(u2);
  e.extent = extent_factor * (x0 - e.center).norm();
  return e;
}

std::array<Index, 3> anchor_pick(const LabeledSet& set, const std::array<int, 3>& class_ids,
                                 std::uint64_t seed) {
  std::array<Index, 3> out{-1, -1, -1};
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<Index> members;
    for (Index i = 0; i < set.size(); ++i)
      if (set.labels[static_cast<std::size_t>(i)] == class_ids[k]) members.push_back(i);
    if (members.empty())
      throw DataError("anchor_pick: class " + std::to_string(class_ids[k]) + " not present");
    Rng rng = Rng::stream(seed, 0x616e63ULL, k);
    out[k] = members[rng.uniform_index(members.size())];
  }
  return out;
}

MlpNetwork restrict_to_plane(const MlpNetwork& net, const PlaneEmbedding& embedding) {
  if (net.input_dim() != embedding.center.size())
    throw ShapeError("restrict_to_plane: network input dim != plane ambient dim");
  MlpNetwork planar = net;
  Matrix basis(embedding.center.size(), 2);
  basis.col(0) = embedding.u1;
  basis.col(1) = embedding.u2;
  const Layer& first = net.layers.front();
  planar.layers.front().weights = first.weights * basis;
  planar.layers.front().bias = first.weights * embedding.center + first.bias;
  return planar;
}

void save_plane(const PlaneEmbedding& e, const std::string& path) {
  nlohmann::json j;
  j["anchor_indices"] = {e.anchor_indices[0], e.anchor_indices[1], e.anchor_indices[2]};
  auto vec = [](const Vector& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    return out;
  };
  j["x0"] = vec(e.x0);
  j["x1"] = vec(e.x1);
  j["x2"] = vec(e.x2);
  j["center"] = vec(e.center);
  j["u1"] = vec(e.u1);
  j["u2"] = vec(e.u2);
  j["extent"] = e.extent;
  std::ofstream f(path);
  if (!f) throw FormatError("plane: cannot open " + path + " for writing");
  f << j.dump(2) << "\n";
}

PlaneEmbedding load_plane(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("plane: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  auto vec = [&](const char* key) {
    const auto arr = j.at(key).get<std::vector<double>>();
    return Eigen::Map<const Vector>(arr.data(), static_cast<Index>(arr.size())).eval();
  };
  PlaneEmbedding e;
  e.x0 = vec("x0");
  e.x1 = vec("x1");
  e.x2 = vec("x2");
  e.center = vec("center");
  e.u1 = vec("u1");
  e.u2 = vec("u2");
  e.extent = j.at("extent").get<double>();
  const auto idx = j.at("anchor_indices").get<std::vector<Index>>();
  e.anchor_indices = {idx[0], idx[1], idx[2]};
  return e;
}

} // namespace rlab
