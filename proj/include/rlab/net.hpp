#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rlab/errors.hpp"
#include "rlab/rng.hpp"
#include "rlab/types.hpp"

namespace rlab {

// Packed activation bits, one per hidden ReLU unit, layer-major order.
// Bit b is 1 iff the corresponding preactivation is > 0 (exact zero is
// inactive, so patterns on boundaries resolve to the closed side).
class ActivationPattern {
 public:
  ActivationPattern() = default;
  explicit ActivationPattern(std::size_t bits)
      : size_(bits), words_((bits + 63) / 64, 0) {}

  std::size_t size() const { return size_; }

  bool get(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1ULL;
  }
  void set(std::size_t i, bool v) {
    if (v)
      words_[i >> 6] |= 1ULL << (i & 63);
    else
      words_[i >> 6] &= ~(1ULL << (i & 63));
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

  bool operator==(const ActivationPattern& o) const {
    return size_ == o.size_ && words_ == o.words_;
  }
  bool operator!=(const ActivationPattern& o) const { return !(*this == o); }
  bool operator<(const ActivationPattern& o) const {
    if (size_ != o.size_) return size_ < o.size_;
    for (std::size_t w = words_.size(); w-- > 0;) {
      if (words_[w] != o.words_[w]) return words_[w] < o.words_[w];
    }
    return false;
  }

  std::string hex() const;
  static ActivationPattern from_hex(const std::string& h, std::size_t bits);

  struct Hash {
    std::size_t operator()(const ActivationPattern& p) const {
      std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ p.size_;
      for (std::uint64_t w : p.words_) {
        h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      }
      return static_cast<std::size_t>(h);
    }
  };

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

struct Layer {
  Matrix weights;   // rows = output width, cols = input width
  Vector bias;      // length = rows
  bool relu_after = true;
};

// Plain ReLU MLP. The embedding output layer is linear (relu_after false).
struct MlpNetwork {
  std::vector<Layer> layers;

  Index input_dim() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
  Index output_dim() const { return layers.empty() ? 0 : layers.back().weights.rows(); }

  // Total hidden ReLU units, i.e. the activation pattern length.
  Index hidden_units() const {
    Index n = 0;
    for (const auto& l : layers)
      if (l.relu_after) n += l.weights.rows();
    return n;
  }

  void validate() const;
};

// General affine map x -> A x + c. AffineMap2D of the region engine is the
// cols()==2 case.
struct AffineMap {
  Matrix A;
  Vector c;

  Vector operator()(const VectorRef& x) const { return A * x + c; }
  Index in_dim() const { return A.cols(); }
  Index out_dim() const { return A.rows(); }
};

// Per-layer state retained for the backward pass (batch convention:
// rows = samples).
struct ForwardCache {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> masks;   // relu mask per layer (empty when linear)
  Matrix output;
  bool valid = false;
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;

  void init_like(const MlpNetwork& net);
  void setZero();
  Gradients& operator+=(const Gradients& o);
  Gradients& operator*=(double s);
};

// Single-sample forward pass returning the output and activation pattern.
std::pair<Vector, ActivationPattern> forward(const MlpNetwork& net, const VectorRef& x);

// Batched forward (rows = samples). Stores layer state in `cache` if given.
Matrix forward_batch(const MlpNetwork& net, const MatrixRef& x, ForwardCache* cache = nullptr);

// Activation patterns for every row of x, evaluated in one pass.
std::vector<ActivationPattern> patterns_batch(const MlpNetwork& net, const MatrixRef& x);

// Reverse-mode gradients. `output_grad` is dLoss/dOutput (rows = samples).
// Parameter gradients are ACCUMULATED into `grads`; the return value is
// dLoss/dInput so stacked networks (backbone -> heads) chain.
Matrix backward(const MlpNetwork& net, const ForwardCache& cache, const MatrixRef& output_grad,
                Gradients& grads);

// The affine map the network applies on the linear region with the given
// activation pattern: A = W_L D_{L-1} W_{L-1} ... D_1 W_1, c accumulates
// masked biases.
AffineMap region_affine(const MlpNetwork& net, const ActivationPattern& pattern);

std::size_t param_count(const MlpNetwork& net);

// Builds the stack dims[0] -> dims[1] -> ... with ReLU between layers and a
// linear final layer. Kaiming-style uniform fan-in init for weights,
// U(+-1/sqrt(fan_in)) for biases.
MlpNetwork make_mlp(const std::vector<Index>& dims, Rng& rng);

// --- weight snapshot container ---------------------------------------------
// Binary layout: magic "SPSC", version u32, layer count u32, then per layer
// rows u32, cols u32, rows*cols weight doubles (row-major) followed by rows
// bias doubles. All integers little-endian, doubles IEEE754 little-endian.
// A sidecar JSON manifest (<path>.json) records architecture (incl. relu
// flags), seed and epoch; load_snapshot reads both files.
void save_snapshot(const MlpNetwork& net, const std::string& path, std::uint64_t seed,
                   int epoch);
MlpNetwork load_snapshot(const std::string& path);

} // namespace rlab
