#include "rlab/net.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "snapshot container assumes a little-endian host");

namespace rlab {

std::string ActivationPattern::hex() const {
  static const char* digits = "0123456789abcdef";
  const std::size_t nibbles = (size_ + 3) / 4;
  std::string out(nibbles, '0');
  for (std::size_t n = 0; n < nibbles; ++n) {
    const std::size_t bit = n * 4;
    unsigned v = 0;
    for (unsigned k = 0; k < 4; ++k) {
      const std::size_t i = bit + k;
      if (i < size_ && get(i)) v |= 1u << k;
    }
    out[nibbles - 1 - n] = digits[v];
  }
  return out;
}

ActivationPattern ActivationPattern::from_hex(const std::string& h, std::size_t bits) {
  ActivationPattern p(bits);
  const std::size_t nibbles = h.size();
  for (std::size_t n = 0; n < nibbles; ++n) {
    const char c = h[nibbles - 1 - n];
    unsigned v = 0;
    if (c >= '0' && c <= '9')
      v = unsigned(c - '0');
    else if (c >= 'a' && c <= 'f')
      v = unsigned(c - 'a') + 10;
    else if (c >= 'A' && c <= 'F')
      v = unsigned(c - 'A') + 10;
    else
      throw FormatError("pattern hex: invalid digit");
    for (unsigned k = 0; k < 4; ++k) {
      const std::size_t i = n * 4 + k;
      if (i < bits && ((v >> k) & 1u)) p.set(i, true);
    }
  }
  return p;
}

void MlpNetwork::validate() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    if (l.bias.size() != l.weights.rows())
      throw ShapeError("layer " + std::to_string(i) + ": bias length != weight rows");
    if (i + 1 < layers.size() && layers[i + 1].weights.cols() != l.weights.rows())
      throw ShapeError("layer " + std::to_string(i) + ": output width != next input width");
    if (!l.weights.allFinite() || !l.bias.allFinite())
      throw NumericError("layer " + std::to_string(i) + ": non-finite parameters");
  }
  if (!layers.empty() && layers.back().relu_after)
    throw ShapeError("last layer must be linear (relu_after = false)");
}

void Gradients::init_like(const MlpNetwork& net) {
  weights.clear();
  bias.clear();
  for (const auto& l : net.layers) {
    weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    bias.push_back(Vector::Zero(l.bias.size()));
  }
}

void Gradients::setZero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : bias) b.setZero();
}

Gradients& Gradients::operator+=(const Gradients& o) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += o.weights[i];
    bias[i] += o.bias[i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : bias) b *= s;
  return *this;
}

std::pair<Vector, ActivationPattern> forward(const MlpNetwork& net, const VectorRef& x) {
  if (x.size() != net.input_dim())
    throw ShapeError("forward: input length " + std::to_string(x.size()) + " != input_dim " +
                     std::to_string(net.input_dim()));
  if (!x.allFinite()) throw NumericError("forward: non-finite input");

  ActivationPattern pattern(static_cast<std::size_t>(net.hidden_units()));
  Vector h = x;
  std::size_t bit = 0;
  for (const Layer& l : net.layers) {
    Vector z = l.weights * h + l.bias;
    if (!z.allFinite()) throw NumericError("forward: non-finite preactivation");
    if (l.relu_after) {
      for (Index i = 0; i < z.size(); ++i) {
        const bool active = z[i] > 0.0;
        pattern.set(bit++, active);
        if (!active) z[i] = 0.0;
      }
    }
    h = std::move(z);
  }
  return {std::move(h), std::move(pattern)};
}

Matrix forward_batch(const MlpNetwork& net, const MatrixRef& x, ForwardCache* cache) {
  if (x.cols() != net.input_dim()) throw ShapeError("forward_batch: column count != input_dim");
  if (!x.allFinite()) throw NumericError("forward_batch: non-finite input");

  if (cache) {
    cache->inputs.assign(net.layers.size(), Matrix());
    cache->masks.assign(net.layers.size(), Matrix());
    cache->valid = true;
  }
  Matrix h = x;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const Layer& l = net.layers[li];
    if (cache) cache->inputs[li] = h;
    Matrix z = h * l.weights.transpose();
    z.rowwise() += l.bias.transpose();
    if (!z.allFinite()) throw NumericError("forward_batch: non-finite preactivation");
    if (l.relu_after) {
      Matrix mask = (z.array() > 0.0).cast<double>();
      z.array() *= mask.array();
      if (cache) cache->masks[li] = std::move(mask);
    }
    h = std::move(z);
  }
  if (cache) cache->output = h;
  return h;
}

std::vector<ActivationPattern> patterns_batch(const MlpNetwork& net, const MatrixRef& x) {
  const Index n = x.rows();
  const std::size_t bits = static_cast<std::size_t>(net.hidden_units());
  std::vector<ActivationPattern> out(static_cast<std::size_t>(n), ActivationPattern(bits));

  Matrix h = x;
  std::size_t bit0 = 0;
  for (const Layer& l : net.layers) {
    Matrix z = h * l.weights.transpose();
    z.rowwise() += l.bias.transpose();
    if (l.relu_after) {
      const Index m = z.cols();
      for (Index r = 0; r < n; ++r) {
        auto& p = out[static_cast<std::size_t>(r)];
        for (Index c = 0; c < m; ++c) {
          const bool active = z(r, c) > 0.0;
          if (active)
            p.set(bit0 + static_cast<std::size_t>(c), true);
          else
            z(r, c) = 0.0;
        }
      }
      bit0 += static_cast<std::size_t>(m);
    }
    h = std::move(z);
  }
  return out;
}

Matrix backward(const MlpNetwork& net, const ForwardCache& cache, const MatrixRef& output_grad,
                Gradients& grads) {
  if (!cache.valid) throw StateError("backward: forward cache missing or stale");
  if (cache.inputs.size() != net.layers.size())
    throw StateError("backward: cache does not match network");
  if (output_grad.rows() != cache.output.rows() || output_grad.cols() != cache.output.cols())
    throw ShapeError("backward: output_grad shape mismatch");
  if (grads.weights.size() != net.layers.size()) grads.init_like(net);

  Matrix delta = output_grad;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& l = net.layers[li];
    if (l.relu_after) delta.array() *= cache.masks[li].array();
    grads.weights[li].noalias() += delta.transpose() * cache.inputs[li];
    grads.bias[li].noalias() += delta.colwise().sum().transpose();
    Matrix prev = delta * l.weights;
    delta = std::move(prev);
  }
  return delta;
}

AffineMap region_affine(const MlpNetwork& net, const ActivationPattern& pattern) {
  if (pattern.size() != static_cast<std::size_t>(net.hidden_units()))
    throw ShapeError("region_affine: pattern length does not match network");

  const Index d = net.input_dim();
  Matrix a = Matrix::Identity(d, d);
  Vector c = Vector::Zero(d);
  std::size_t bit = 0;
  for (const Layer& l : net.layers) {
    Matrix a2 = l.weights * a;
    Vector c2 = l.weights * c + l.bias;
    if (l.relu_after) {
      for (Index i = 0; i < a2.rows(); ++i) {
        if (!pattern.get(bit++)) {
          a2.row(i).setZero();
          c2[i] = 0.0;
        }
      }
    }
    a = std::move(a2);
    c = std::move(c2);
  }
  return {std::move(a), std::move(c)};
}

std::size_t param_count(const MlpNetwork& net) {
  std::size_t n = 0;
  for (const auto& l : net.layers)
    n += static_cast<std::size_t>(l.weights.size()) + static_cast<std::size_t>(l.bias.size());
  return n;
}

MlpNetwork make_mlp(const std::vector<Index>& dims, Rng& rng) {
  if (dims.size() < 2) throw ShapeError("make_mlp: need at least input and output dims");
  MlpNetwork net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const Index fan_in = dims[i];
    const Index fan_out = dims[i + 1];
    Layer l;
    l.weights.resize(fan_out, fan_in);
    const double wb = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (Index r = 0; r < fan_out; ++r)
      for (Index c = 0; c < fan_in; ++c) l.weights(r, c) = rng.uniform(-wb, wb);
    l.bias.resize(fan_out);
    const double bb = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Index r = 0; r < fan_out; ++r) l.bias[r] = rng.uniform(-bb, bb);
    l.relu_after = (i + 2 < dims.size());
    net.layers.push_back(std::move(l));
  }
  return net;
}

namespace {

void write_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::ifstream& f) {
  std::uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  if (!f) throw FormatError("snapshot: truncated file");
  return v;
}

} // namespace

void save_snapshot(const MlpNetwork& net, const std::string& path, std::uint64_t seed,
                   int epoch) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("snapshot: cannot open " + path + " for writing");
  f.write("SPSC", 4);
  write_u32(f, 1u);
  write_u32(f, static_cast<std::uint32_t>(net.layers.size()));
  for (const Layer& l : net.layers) {
    write_u32(f, static_cast<std::uint32_t>(l.weights.rows()));
    write_u32(f, static_cast<std::uint32_t>(l.weights.cols()));
    f.write(reinterpret_cast<const char*>(l.weights.data()),
            static_cast<std::streamsize>(sizeof(double)) * l.weights.size());
    f.write(reinterpret_cast<const char*>(l.bias.data()),
            static_cast<std::streamsize>(sizeof(double)) * l.bias.size());
  }
  if (!f) throw FormatError("snapshot: write failed for " + path);
  f.close();

  nlohmann::json manifest;
  manifest["seed"] = seed;
  manifest["epoch"] = epoch;
  nlohmann::json arch = nlohmann::json::array();
  for (const Layer& l : net.layers) {
    arch.push_back({{"rows", l.weights.rows()}, {"cols", l.weights.cols()},
                    {"relu", l.relu_after}});
  }
  manifest["architecture"] = arch;
  std::ofstream jf(path + ".json");
  if (!jf) throw FormatError("snapshot: cannot open manifest " + path + ".json");
  jf << manifest.dump(2) << "\n";
}

MlpNetwork load_snapshot(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("snapshot: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::string(magic, 4) != "SPSC") throw FormatError("snapshot: bad magic");
  const std::uint32_t version = read_u32(f);
  if (version != 1u) throw FormatError("snapshot: unsupported version");
  const std::uint32_t n_layers = read_u32(f);

  std::ifstream jf(path + ".json");
  if (!jf) throw FormatError("snapshot: missing manifest " + path + ".json");
  nlohmann::json manifest = nlohmann::json::parse(jf);
  const auto& arch = manifest.at("architecture");
  if (arch.size() != n_layers) throw FormatError("snapshot: manifest/container layer mismatch");

  MlpNetwork net;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::uint32_t rows = read_u32(f);
    const std::uint32_t cols = read_u32(f);
    if (arch[i].at("rows").get<std::uint32_t>() != rows ||
        arch[i].at("cols").get<std::uint32_t>() != cols)
      throw FormatError("snapshot: manifest/container shape mismatch at layer " +
                        std::to_string(i));
    Layer l;
    l.weights.resize(rows, cols);
    l.bias.resize(rows);
    f.read(reinterpret_cast<char*>(l.weights.data()),
           static_cast<std::streamsize>(sizeof(double)) * l.weights.size());
    f.read(reinterpret_cast<char*>(l.bias.data()),
           static_cast<std::streamsize>(sizeof(double)) * l.bias.size());
    if (!f) throw FormatError("snapshot: truncated payload");
    l.relu_after = arch[i].at("relu").get<bool>();
    net.layers.push_back(std::move(l));
  }
  net.validate();
  return net;
}

} // namespace rlab
