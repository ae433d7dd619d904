#include "rlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace rlab {

void LabeledSet::validate() const {
  if (images.rows() != static_cast<Index>(labels.size()))
    throw DataError(name + ": image/label count mismatch");
  if ((images.array() < 0.0).any() || (images.array() > 1.0).any())
    throw DataError(name + ": pixel outside [0,1]");
}

void AugmentationPolicy::validate() const {
  if (crop_enabled && !(crop_scale_lo > 0.0 && crop_scale_lo <= crop_scale_hi &&
                        crop_scale_hi <= 1.0))
    throw ConfigError("augmentation: crop scale range must satisfy 0 < lo <= hi <= 1");
  if (hflip_prob < 0.0 || hflip_prob > 1.0)
    throw ConfigError("augmentation: hflip probability outside [0,1]");
  if (blur_enabled && !(blur_sigma_lo >= 0.0 && blur_sigma_lo <= blur_sigma_hi))
    throw ConfigError("augmentation: blur sigma range invalid");
  if (jitter_sigma < 0.0) throw ConfigError("augmentation: jitter sigma negative");
}

Matrix moons_arcs(Index n) {
  if (n < 2) throw ShapeError("moons: need n >= 2");
  const Index n_out = n / 2;
  const Index n_in = n - n_out;
  Matrix pts(n, 2);
  for (Index i = 0; i < n_out; ++i) {
    const double t = std::numbers::pi * double(i) / double(std::max<Index>(n_out - 1, 1));
    pts(i, 0) = std::cos(t);
    pts(i, 1) = std::sin(t);
  }
  for (Index i = 0; i < n_in; ++i) {
    const double t = std::numbers::pi * double(i) / double(std::max<Index>(n_in - 1, 1));
    pts(n_out + i, 0) = 1.0 - std::cos(t);
    pts(n_out + i, 1) = 0.5 - std::sin(t);
  }
  return pts;
}

LabeledSet make_moons(Index n, double noise, std::uint64_t seed) {
  if (n < 2) throw ShapeError("make_moons: need n >= 2");
  if (noise < 0.0) throw ShapeError("make_moons: noise must be >= 0");
  const Index n_out = n / 2;

  Matrix pts = moons_arcs(n);
  Rng rng = Rng::stream(seed, 0x6d6f6f6eULL);
  if (noise > 0.0) {
    for (Index i = 0; i < n; ++i) {
      pts(i, 0) += rng.normal(0.0, noise);
      pts(i, 1) += rng.normal(0.0, noise);
    }
  }
  // min-max rescale each axis into [0,1]
  for (Index c = 0; c < 2; ++c) {
    const double lo = pts.col(c).minCoeff();
    const double hi = pts.col(c).maxCoeff();
    const double span = hi > lo ? hi - lo : 1.0;
    pts.col(c) = (pts.col(c).array() - lo) / span;
  }

  LabeledSet set;
  set.images = std::move(pts);
  set.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) set.labels[static_cast<std::size_t>(i)] = i < n_out ? 0 : 1;
  set.name = "moons";
  return set;
}

namespace {

std::uint32_t read_be32(std::ifstream& f, const std::string& what) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) throw FormatError("idx: truncated header in " + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  f.write(reinterpret_cast<char*>(b), 4);
}

} // namespace

LabeledSet load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream imf(images_path, std::ios::binary);
  if (!imf) throw FormatError("idx: cannot open " + images_path);
  const std::uint32_t im_magic = read_be32(imf, images_path);
  if (im_magic != 0x00000803u)
    throw FormatError("idx: bad image magic in " + images_path);
  const std::uint32_t count = read_be32(imf, images_path);
  const std::uint32_t rows = read_be32(imf, images_path);
  const std::uint32_t cols = read_be32(imf, images_path);

  std::ifstream lbf(labels_path, std::ios::binary);
  if (!lbf) throw FormatError("idx: cannot open " + labels_path);
  const std::uint32_t lb_magic = read_be32(lbf, labels_path);
  if (lb_magic != 0x00000801u)
    throw FormatError("idx: bad label magic in " + labels_path);
  const std::uint32_t lb_count = read_be32(lbf, labels_path);
  if (lb_count != count)
    throw DataError("idx: image count " + std::to_string(count) + " != label count " +
                    std::to_string(lb_count));

  const std::size_t dim = std::size_t(rows) * std::size_t(cols);
  std::vector<unsigned char> buf(dim);
  LabeledSet set;
  set.images.resize(static_cast<Index>(count), static_cast<Index>(dim));
  set.labels.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    imf.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim));
    if (!imf) throw FormatError("idx: truncated image payload in " + images_path);
    for (std::size_t j = 0; j < dim; ++j)
      set.images(static_cast<Index>(i), static_cast<Index>(j)) = double(buf[j]) / 255.0;
    unsigned char lb = 0;
    lbf.read(reinterpret_cast<char*>(&lb), 1);
    if (!lbf) throw FormatError("idx: truncated label payload in " + labels_path);
    set.labels[i] = int(lb);
  }
  set.name = images_path;
  return set;
}

void save_idx(const LabeledSet& set, const std::string& images_path,
              const std::string& labels_path) {
  const Index n = set.size();
  const Index dim = set.dim();
  const auto side = static_cast<Index>(std::lround(std::sqrt(double(dim))));
  if (side * side != dim) throw ShapeError("save_idx: images are not square rasters");

  std::ofstream imf(images_path, std::ios::binary);
  if (!imf) throw FormatError("idx: cannot open " + images_path + " for writing");
  write_be32(imf, 0x00000803u);
  write_be32(imf, static_cast<std::uint32_t>(n));
  write_be32(imf, static_cast<std::uint32_t>(side));
  write_be32(imf, static_cast<std::uint32_t>(side));
  std::vector<unsigned char> buf(static_cast<std::size_t>(dim));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < dim; ++j) {
      const double q = std::clamp(set.images(i, j), 0.0, 1.0) * 255.0;
      buf[static_cast<std::size_t>(j)] = static_cast<unsigned char>(std::lround(q));
    }
    imf.write(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim));
  }

  std::ofstream lbf(labels_path, std::ios::binary);
  if (!lbf) throw FormatError("idx: cannot open " + labels_path + " for writing");
  write_be32(lbf, 0x00000801u);
  write_be32(lbf, static_cast<std::uint32_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto lb = static_cast<unsigned char>(set.labels[static_cast<std::size_t>(i)]);
    lbf.write(reinterpret_cast<const char*>(&lb), 1);
  }
}

namespace {

// Bilinear sample with clamp-to-edge, pixel centers at integer coordinates.
double sample_bilinear(const VectorRef& img, Index side, double r, double c) {
  const double rc = std::clamp(r, 0.0, double(side - 1));
  const double cc = std::clamp(c, 0.0, double(side - 1));
  const Index r0 = static_cast<Index>(std::floor(rc));
  const Index c0 = static_cast<Index>(std::floor(cc));
  const Index r1 = std::min<Index>(r0 + 1, side - 1);
  const Index c1 = std::min<Index>(c0 + 1, side - 1);
  const double fr = rc - double(r0);
  const double fc = cc - double(c0);
  const double v00 = img[r0 * side + c0];
  const double v01 = img[r0 * side + c1];
  const double v10 = img[r1 * side + c0];
  const double v11 = img[r1 * side + c1];
  return (1 - fr) * ((1 - fc) * v00 + fc * v01) + fr * ((1 - fc) * v10 + fc * v11);
}

Vector gaussian_blur(const VectorRef& img, Index side, double sigma) {
  const Index radius = std::max<Index>(1, static_cast<Index>(std::ceil(3.0 * sigma)));
  Vector kernel(2 * radius + 1);
  for (Index k = -radius; k <= radius; ++k)
    kernel[k + radius] = std::exp(-0.5 * double(k) * double(k) / (sigma * sigma));
  kernel /= kernel.sum();

  // separable: rows then columns, clamp-to-edge
  Vector tmp(side * side), out(side * side);
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      double acc = 0.0;
      for (Index k = -radius; k <= radius; ++k) {
        const Index cc = std::clamp<Index>(c + k, 0, side - 1);
        acc += kernel[k + radius] * img[r * side + cc];
      }
      tmp[r * side + c] = acc;
    }
  }
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      double acc = 0.0;
      for (Index k = -radius; k <= radius; ++k) {
        const Index rr = std::clamp<Index>(r + k, 0, side - 1);
        acc += kernel[k + radius] * tmp[rr * side + c];
      }
      out[r * side + c] = acc;
    }
  }
  return out;
}

} // namespace

Vector augment(const VectorRef& image, const AugmentationPolicy& policy, Rng& rng) {
  policy.validate();

  // 2D point data: jitter is the only applicable transform.
  if (image.size() == 2 && policy.jitter_sigma > 0.0) {
    Vector out = image;
    out[0] = std::clamp(out[0] + rng.normal(0.0, policy.jitter_sigma), 0.0, 1.0);
    out[1] = std::clamp(out[1] + rng.normal(0.0, policy.jitter_sigma), 0.0, 1.0);
    return out;
  }
  if (image.size() == 2) return image;

  const auto side = static_cast<Index>(std::lround(std::sqrt(double(image.size()))));
  if (side * side != image.size())
    throw ShapeError("augment: image is not a square raster");

  Vector out = image;
  if (policy.crop_enabled) {
    const double scale = rng.uniform(policy.crop_scale_lo, policy.crop_scale_hi);
    const double crop = scale * double(side);
    const double max_off = double(side) - crop;
    const double off_r = rng.uniform(0.0, 1.0) * max_off;
    const double off_c = rng.uniform(0.0, 1.0) * max_off;
    Vector resized(side * side);
    const double step = side > 1 ? (crop - 1.0) / double(side - 1) : 0.0;
    for (Index r = 0; r < side; ++r)
      for (Index c = 0; c < side; ++c)
        resized[r * side + c] =
            sample_bilinear(out, side, off_r + double(r) * step, off_c + double(c) * step);
    out = std::move(resized);
  }
  if (policy.hflip_enabled && rng.uniform() < policy.hflip_prob) {
    for (Index r = 0; r < side; ++r)
      for (Index c = 0; c < side / 2; ++c)
        std::swap(out[r * side + c], out[r * side + (side - 1 - c)]);
  }
  // grayscale on grayscale data is the identity; nothing to do
  if (policy.blur_enabled) {
    const double sigma = rng.uniform(policy.blur_sigma_lo, policy.blur_sigma_hi);
    if (sigma > 0.0) out = gaussian_blur(out, side, sigma);
  }
  out = out.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

std::vector<Batch> epoch_batches(const LabeledSet& set, Index batch_size, std::uint64_t seed,
                                 int epoch, bool two_views, const AugmentationPolicy& policy) {
  if (batch_size < 2) throw ConfigError("batches: batch_size must be >= 2");
  const Index n = set.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng shuffle_rng = Rng::stream(seed, 0x736866ULL, static_cast<std::uint64_t>(epoch));
  shuffle_rng.shuffle(order);

  const bool do_augment = policy.any_enabled();
  std::vector<Batch> batches;
  for (Index start = 0; start < n; start += batch_size) {
    const Index bs = std::min(batch_size, n - start);
    if (bs < 2) break;
    Batch b;
    b.x.resize(bs, set.dim());
    if (two_views) b.x2.resize(bs, set.dim());
    b.labels.resize(static_cast<std::size_t>(bs));
    b.indices.resize(static_cast<std::size_t>(bs));
    for (Index i = 0; i < bs; ++i) {
      const Index idx = order[static_cast<std::size_t>(start + i)];
      b.indices[static_cast<std::size_t>(i)] = idx;
      b.labels[static_cast<std::size_t>(i)] = set.labels[static_cast<std::size_t>(idx)];
      const auto row = set.images.row(idx).transpose();
      if (do_augment) {
        Rng r1 = Rng::stream(seed, static_cast<std::uint64_t>(epoch),
                             static_cast<std::uint64_t>(idx), 1);
        b.x.row(i) = augment(row, policy, r1).transpose();
        if (two_views) {
          Rng r2 = Rng::stream(seed, static_cast<std::uint64_t>(epoch),
                               static_cast<std::uint64_t>(idx), 2);
          b.x2.row(i) = augment(row, policy, r2).transpose();
        }
      } else {
        b.x.row(i) = row.transpose();
        if (two_views) b.x2.row(i) = row.transpose();
      }
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

void save_moons_csv(const LabeledSet& set, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw FormatError("moons csv: cannot open " + path);
  f << "a,b,label\n";
  char buf[96];
  for (Index i = 0; i < set.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d\n", set.images(i, 0), set.images(i, 1),
                  set.labels[static_cast<std::size_t>(i)]);
    f << buf;
  }
}

} // namespace rlab
