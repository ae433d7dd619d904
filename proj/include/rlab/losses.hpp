#pragma once

#include <vector>

#include "rlab/errors.hpp"
#include "rlab/rng.hpp"
#include "rlab/types.hpp"

namespace rlab {

// All losses take embeddings with one sample per row and return the scalar
// plus dLoss/dInput matrices, so they compose with MlpNetwork::backward.
// Losses that L2-normalize internally differentiate through the
// normalization.

struct CrossEntropyGrad {
  double value;
  Matrix dlogits;
};
// Mean softmax cross-entropy over the batch.
CrossEntropyGrad loss_cross_entropy(const MatrixRef& logits, const std::vector<int>& labels);

struct TripletGrad {
  double value;
  Matrix danchor, dpositive, dnegative;
};
// Mean over rows of max(0, d(a,p) - d(a,n) + margin), Euclidean d.
TripletGrad loss_triplet(const MatrixRef& anchor, const MatrixRef& positive,
                         const MatrixRef& negative, double margin);

struct EmbeddingGrad {
  double value;
  Matrix dembeddings;
};
// Supervised contrastive loss, averaged over anchors with >= 1 positive.
// Embeddings are L2-normalized internally.
EmbeddingGrad loss_supcon(const MatrixRef& embeddings, const std::vector<int>& labels,
                          double temperature);

struct TwoViewGrad {
  double value;
  Matrix dview1, dview2;
};
// NT-Xent over the 2N stacked normalized embeddings; positives are (i, i+N).
TwoViewGrad loss_ntxent(const MatrixRef& view1, const MatrixRef& view2, double temperature);

// FIFO ring of L2-normalized negatives for the momentum-contrast loss.
class NegativeQueue {
 public:
  NegativeQueue(Index capacity, Index dim);

  // Pre-fills with seeded random unit vectors (reference initialization).
  void fill_random(Rng& rng);

  void enqueue(const VectorRef& v);
  void enqueue_rows(const MatrixRef& rows);

  Index size() const { return size_; }
  Index capacity() const { return capacity_; }
  Index dim() const { return storage_.cols(); }

  // Entries in FIFO order (oldest first), one per row.
  Matrix as_matrix() const;

 private:
  Index capacity_;
  Index head_ = 0;  // next slot to overwrite
  Index size_ = 0;
  Matrix storage_;  // capacity x dim
};

// InfoNCE with positive = paired key row, negatives = queue entries.
// Gradients flow to the query branch only; keys are constants.
EmbeddingGrad loss_moco(const MatrixRef& query, const MatrixRef& key, const NegativeQueue& queue,
                        double temperature);

struct SimSiamGrad {
  double value;
  Matrix dp1, dp2;  // predictor-branch gradients
  Matrix dz1, dz2;  // stop-gradient branch: exactly zero
};
// -1/2 [cos(p1, stopgrad(z2)) + cos(p2, stopgrad(z1))], mean over rows.
SimSiamGrad loss_simsiam(const MatrixRef& p1, const MatrixRef& p2, const MatrixRef& z1,
                         const MatrixRef& z2);

// Mean squared error between L2-normalized prediction and L2-normalized
// stop-gradient target, one direction; the training step symmetrizes.
EmbeddingGrad loss_byol(const MatrixRef& online_pred, const MatrixRef& target_proj);

// Collapse probe: L2-normalize rows, per-dimension sample std, mean over
// dimensions.
double representation_std(const MatrixRef& embeddings);

} // namespace rlab
