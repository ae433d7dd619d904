#include "rlab/losses.hpp"

#include <cmath>
#include <limits>

namespace rlab {

namespace {

constexpr double kNormFloor = 1e-300;

// z = e / ||e|| per row; returns norms for the backward chain.
Matrix normalize_rows(const MatrixRef& e, Vector& norms, const char* who) {
  norms = e.rowwise().norm();
  if ((norms.array() < kNormFloor).any())
    throw NumericError(std::string(who) + ": zero-norm embedding row");
  return e.array().colwise() / norms.array();
}

// Chains dL/dz back through row normalization: de = (dz - z (z . dz)) / ||e||.
Matrix normalization_backward(const MatrixRef& z, const MatrixRef& dz, const Vector& norms) {
  Vector dots = (z.array() * dz.array()).rowwise().sum();
  Matrix de = dz - (z.array().colwise() * dots.array()).matrix();
  de.array().colwise() /= norms.array();
  return de;
}

// Shared softmax-contrastive core. Z: M x D normalized rows; positives[i]
// lists the positive indices of anchor i (empty = not an anchor). Returns
// the mean anchor loss and dL/dZ.
//   L_i = -(1/|P(i)|) sum_{p in P(i)} [ s_ip/T - log sum_{a != i} exp(s_ia/T) ]
EmbeddingGrad softmax_contrastive(const MatrixRef& z, const std::vector<std::vector<Index>>& positives,
                                  double temperature) {
  const Index m = z.rows();
  Matrix sims = z * z.transpose();  // cosine, rows normalized

  Index n_anchors = 0;
  for (const auto& p : positives)
    if (!p.empty()) ++n_anchors;
  if (n_anchors == 0) throw DataError("contrastive loss: no anchor has a positive");

  Matrix grad_s = Matrix::Zero(m, m);  // dL/dS
  double loss = 0.0;
  const double inv_t = 1.0 / temperature;

  for (Index i = 0; i < m; ++i) {
    const auto& pos = positives[static_cast<std::size_t>(i)];
    if (pos.empty()) continue;

    // log-sum-exp over a != i with max subtraction
    double mx = -std::numeric_limits<double>::infinity();
    for (Index a = 0; a < m; ++a)
      if (a != i) mx = std::max(mx, sims(i, a) * inv_t);
    double denom = 0.0;
    for (Index a = 0; a < m; ++a)
      if (a != i) denom += std::exp(sims(i, a) * inv_t - mx);
    const double lse = mx + std::log(denom);

    const double inv_p = 1.0 / double(pos.size());
    for (Index p : pos) loss -= inv_p * (sims(i, p) * inv_t - lse);

    // dL_i/ds_ij = (1/T) (q_ij - [j in P]/|P|), j != i
    for (Index a = 0; a < m; ++a) {
      if (a == i) continue;
      grad_s(i, a) += inv_t * std::exp(sims(i, a) * inv_t - mx) / denom;
    }
    for (Index p : pos) grad_s(i, p) -= inv_t * inv_p;
  }

  const double scale = 1.0 / double(n_anchors);
  loss *= scale;
  grad_s *= scale;

  EmbeddingGrad out;
  out.value = loss;
  out.dembeddings = (grad_s + grad_s.transpose()) * z;
  return out;
}

} // namespace

CrossEntropyGrad loss_cross_entropy(const MatrixRef& logits, const std::vector<int>& labels) {
  const Index n = logits.rows();
  const Index c = logits.cols();
  if (c < 2) throw ShapeError("cross_entropy: need at least 2 classes");
  if (static_cast<Index>(labels.size()) != n)
    throw ShapeError("cross_entropy: label count != batch size");

  CrossEntropyGrad out;
  out.dlogits.resize(n, c);
  double loss = 0.0;
  for (Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) throw ShapeError("cross_entropy: label out of range");
    const double mx = logits.row(i).maxCoeff();
    Vector ex = (logits.row(i).array() - mx).exp().transpose();
    const double z = ex.sum();
    loss -= logits(i, y) - mx - std::log(z);
    out.dlogits.row(i) = (ex / z).transpose();
    out.dlogits(i, y) -= 1.0;
  }
  out.value = loss / double(n);
  out.dlogits /= double(n);
  return out;
}

TripletGrad loss_triplet(const MatrixRef& anchor, const MatrixRef& positive,
                         const MatrixRef& negative, double margin) {
  const Index n = anchor.rows();
  if (positive.rows() != n || negative.rows() != n || positive.cols() != anchor.cols() ||
      negative.cols() != anchor.cols())
    throw ShapeError("triplet: embedding shape mismatch");

  TripletGrad out;
  out.danchor = Matrix::Zero(n, anchor.cols());
  out.dpositive = Matrix::Zero(n, anchor.cols());
  out.dnegative = Matrix::Zero(n, anchor.cols());
  double loss = 0.0;
  const double inv_n = 1.0 / double(n);
  for (Index i = 0; i < n; ++i) {
    const RowVector ap = anchor.row(i) - positive.row(i);
    const RowVector an = anchor.row(i) - negative.row(i);
    const double dap = ap.norm();
    const double dan = an.norm();
    const double v = dap - dan + margin;
    if (v <= 0.0) continue;
    loss += v;
    // subgradient 0 at coincident points
    if (dap > kNormFloor) {
      out.danchor.row(i) += inv_n * ap / dap;
      out.dpositive.row(i) -= inv_n * ap / dap;
    }
    if (dan > kNormFloor) {
      out.danchor.row(i) -= inv_n * an / dan;
      out.dnegative.row(i) += inv_n * an / dan;
    }
  }
  out.value = loss * inv_n;
  return out;
}

EmbeddingGrad loss_supcon(const MatrixRef& embeddings, const std::vector<int>& labels,
                          double temperature) {
  const Index n = embeddings.rows();
  if (static_cast<Index>(labels.size()) != n)
    throw ShapeError("supcon: label count != batch size");
  if (temperature <= 0.0) throw ConfigError("supcon: temperature must be > 0");

  Vector norms;
  Matrix z = normalize_rows(embeddings, norms, "supcon");
  std::vector<std::vector<Index>> positives(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j && labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)])
        positives[static_cast<std::size_t>(i)].push_back(j);

  EmbeddingGrad core = softmax_contrastive(z, positives, temperature);
  core.dembeddings = normalization_backward(z, core.dembeddings, norms);
  return core;
}

TwoViewGrad loss_ntxent(const MatrixRef& view1, const MatrixRef& view2, double temperature) {
  const Index n = view1.rows();
  if (n < 2) throw ShapeError("ntxent: batch must be >= 2");
  if (view2.rows() != n || view2.cols() != view1.cols())
    throw ShapeError("ntxent: view shape mismatch");
  if (temperature <= 0.0) throw ConfigError("ntxent: temperature must be > 0");

  Matrix stacked(2 * n, view1.cols());
  stacked.topRows(n) = view1;
  stacked.bottomRows(n) = view2;
  Vector norms;
  Matrix z = normalize_rows(stacked, norms, "ntxent");

  std::vector<std::vector<Index>> positives(static_cast<std::size_t>(2 * n));
  for (Index i = 0; i < n; ++i) {
    positives[static_cast<std::size_t>(i)] = {i + n};
    positives[static_cast<std::size_t>(i + n)] = {i};
  }

  EmbeddingGrad core = softmax_contrastive(z, positives, temperature);
  Matrix dstacked = normalization_backward(z, core.dembeddings, norms);

  TwoViewGrad out;
  out.value = core.value;
  out.dview1 = dstacked.topRows(n);
  out.dview2 = dstacked.bottomRows(n);
  return out;
}

NegativeQueue::NegativeQueue(Index capacity, Index dim) : capacity_(capacity) {
  if (capacity < 1) throw ConfigError("queue: capacity must be >= 1");
  storage_.resize(capacity, dim);
}

void NegativeQueue::fill_random(Rng& rng) {
  for (Index i = 0; i < capacity_; ++i) {
    Vector v(storage_.cols());
    for (Index j = 0; j < v.size(); ++j) v[j] = rng.normal();
    const double nrm = v.norm();
    storage_.row(i) = (v / (nrm > kNormFloor ? nrm : 1.0)).transpose();
  }
  head_ = 0;
  size_ = capacity_;
}

void NegativeQueue::enqueue(const VectorRef& v) {
  if (v.size() != storage_.cols()) throw ShapeError("queue: dimension mismatch");
  const double nrm = v.norm();
  if (nrm < kNormFloor) throw NumericError("queue: zero-norm entry");
  storage_.row(head_) = (v / nrm).transpose();
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

void NegativeQueue::enqueue_rows(const MatrixRef& rows) {
  for (Index i = 0; i < rows.rows(); ++i) enqueue(rows.row(i).transpose());
}

Matrix NegativeQueue::as_matrix() const {
  Matrix out(size_, storage_.cols());
  // oldest first
  const Index start = size_ == capacity_ ? head_ : 0;
  for (Index i = 0; i < size_; ++i) out.row(i) = storage_.row((start + i) % capacity_);
  return out;
}

EmbeddingGrad loss_moco(const MatrixRef& query, const MatrixRef& key, const NegativeQueue& queue,
                        double temperature) {
  const Index n = query.rows();
  if (key.rows() != n || key.cols() != query.cols())
    throw ShapeError("moco: query/key shape mismatch");
  if (queue.size() == 0) throw StateError("moco: negative queue is empty");
  if (temperature <= 0.0) throw ConfigError("moco: temperature must be > 0");

  Vector qnorms, knorms;
  Matrix q = normalize_rows(query, qnorms, "moco");
  Matrix k = normalize_rows(key, knorms, "moco");
  Matrix negatives = queue.as_matrix();  // K x D, unit rows

  const double inv_t = 1.0 / temperature;
  const Index kn = negatives.rows();

  Matrix neg_logits = q * negatives.transpose() * inv_t;   // n x K
  Vector pos_logits = (q.array() * k.array()).rowwise().sum() * inv_t;

  EmbeddingGrad out;
  out.value = 0.0;
  Matrix dq = Matrix::Zero(n, q.cols());
  const double inv_n = 1.0 / double(n);
  for (Index i = 0; i < n; ++i) {
    double mx = pos_logits[i];
    for (Index j = 0; j < kn; ++j) mx = std::max(mx, neg_logits(i, j));
    const double pe = std::exp(pos_logits[i] - mx);
    double denom = pe;
    for (Index j = 0; j < kn; ++j) denom += std::exp(neg_logits(i, j) - mx);
    out.value -= pos_logits[i] - mx - std::log(denom);

    const double p0 = pe / denom;
    dq.row(i) += inv_n * inv_t * (p0 - 1.0) * k.row(i);
    for (Index j = 0; j < kn; ++j) {
      const double pj = std::exp(neg_logits(i, j) - mx) / denom;
      dq.row(i) += inv_n * inv_t * pj * negatives.row(j);
    }
  }
  out.value *= inv_n;
  out.dembeddings = normalization_backward(q, dq, qnorms);
  return out;
}

SimSiamGrad loss_simsiam(const MatrixRef& p1, const MatrixRef& p2, const MatrixRef& z1,
                         const MatrixRef& z2) {
  const Index n = p1.rows();
  if (p2.rows() != n || z1.rows() != n || z2.rows() != n || p2.cols() != p1.cols() ||
      z1.cols() != p1.cols() || z2.cols() != p1.cols())
    throw ShapeError("simsiam: shape mismatch");

  SimSiamGrad out;
  out.dp1 = Matrix::Zero(n, p1.cols());
  out.dp2 = Matrix::Zero(n, p1.cols());
  out.dz1 = Matrix::Zero(n, p1.cols());
  out.dz2 = Matrix::Zero(n, p1.cols());
  out.value = 0.0;

  const double w = -0.5 / double(n);
  auto accumulate = [&](const MatrixRef& p, const MatrixRef& target, Matrix& dp) {
    for (Index i = 0; i < n; ++i) {
      const double pn = p.row(i).norm();
      const double tn = target.row(i).norm();
      if (pn < kNormFloor || tn < kNormFloor)
        throw NumericError("simsiam: zero-norm vector");
      const double cosv = p.row(i).dot(target.row(i)) / (pn * tn);
      out.value += w * cosv;
      dp.row(i) += w * (target.row(i) / (pn * tn) - cosv * p.row(i) / (pn * pn));
    }
  };
  accumulate(p1, z2, out.dp1);
  accumulate(p2, z1, out.dp2);
  return out;
}

EmbeddingGrad loss_byol(const MatrixRef& online_pred, const MatrixRef& target_proj) {
  const Index n = online_pred.rows();
  if (target_proj.rows() != n || target_proj.cols() != online_pred.cols())
    throw ShapeError("byol: shape mismatch");

  Vector pnorms, tnorms;
  Matrix p = normalize_rows(online_pred, pnorms, "byol");
  Matrix t = normalize_rows(target_proj, tnorms, "byol");

  EmbeddingGrad out;
  out.value = (p - t).rowwise().squaredNorm().mean();
  // d/dp_hat of mean ||p_hat - t_hat||^2
  Matrix dp_hat = 2.0 / double(n) * (p - t);
  out.dembeddings = normalization_backward(p, dp_hat, pnorms);
  return out;
}

double representation_std(const MatrixRef& embeddings) {
  const Index n = embeddings.rows();
  if (n < 2) throw ShapeError("representation_std: need batch >= 2");
  Vector norms;
  Matrix z = normalize_rows(embeddings, norms, "representation_std");
  RowVector mean = z.colwise().mean();
  RowVector var = (z.rowwise() - mean).array().square().colwise().sum() / double(n - 1);
  return var.array().sqrt().mean();
}

} // namespace rlab
