#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rlab/errors.hpp"
#include "rlab/rng.hpp"
#include "rlab/types.hpp"

namespace rlab {

// Flattened samples, one per row, pixels/coordinates in [0,1].
struct LabeledSet {
  Matrix images;            // n x d
  std::vector<int> labels;  // n
  std::string name;

  Index size() const { return images.rows(); }
  Index dim() const { return images.cols(); }
  void validate() const;
};

struct AugmentationPolicy {
  bool crop_enabled = true;
  double crop_scale_lo = 0.6;   // side-length fraction
  double crop_scale_hi = 1.0;
  bool hflip_enabled = true;
  double hflip_prob = 0.5;
  bool blur_enabled = true;
  double blur_sigma_lo = 0.1;
  double blur_sigma_hi = 1.0;
  bool grayscale_enabled = true; // identity on these datasets
  double jitter_sigma = 0.0;     // Gaussian jitter for non-raster (2D) data

  bool any_enabled() const {
    return crop_enabled || hflip_enabled || blur_enabled || jitter_sigma > 0.0;
  }
  void validate() const;
};

// The deterministic two-moons arcs before noise and rescaling. Class 0 is the
// outer arc (cos t, sin t), class 1 the inner arc (1 - cos t, 0.5 - sin t),
// t evenly spaced over [0, pi].
Matrix moons_arcs(Index n);

// n points (n/2 per class) on the arcs plus N(0, noise^2), min-max rescaled
// per axis into [0,1]^2.
LabeledSet make_moons(Index n, double noise, std::uint64_t seed);

// IDX (big-endian) readers/writers; pixel bytes are divided by 255.
LabeledSet load_idx(const std::string& images_path, const std::string& labels_path);
void save_idx(const LabeledSet& set, const std::string& images_path,
              const std::string& labels_path);

// Single-image stochastic augmentation. The image must be a square raster;
// output pixels stay in [0,1].
Vector augment(const VectorRef& image, const AugmentationPolicy& policy, Rng& rng);

struct Batch {
  Matrix x;                 // view 1 (or the plain batch)
  Matrix x2;                // view 2 (two_views only; otherwise 0x0)
  std::vector<int> labels;
  std::vector<Index> indices;

  Index size() const { return x.rows(); }
};

// Deterministic epoch batching: seeded shuffle per (seed, epoch); per-sample
// augmentation streams derive from (seed, epoch, index, view) so a parallel
// map over samples is schedule-independent. A trailing batch of size < 2 is
// dropped (pairwise objectives need two samples).
std::vector<Batch> epoch_batches(const LabeledSet& set, Index batch_size, std::uint64_t seed,
                                 int epoch, bool two_views, const AugmentationPolicy& policy);

// Moons CSV (a,b,label), one row per sample.
void save_moons_csv(const LabeledSet& set, const std::string& path);

} // namespace rlab
