#pragma once

#include <cstdint>
#include <vector>

#include "fairwos/graph.hpp"
#include "fairwos/params.hpp"

namespace fairwos {

// One-layer graph-convolution encoder with a softmax classification head.
// The head exists only to give the encoder a training signal; downstream
// consumers read the hidden embedding. Same layer form as the classifier:
// the self path has its own weight and skips neighborhood averaging.
struct EncoderParams {
  ParameterSet params;  // enc.self_w, enc.neigh_w [F x dim], enc.b [1 x dim],
                        // head.w [dim x 2], head.b [1 x 2]
  std::size_t dim = 16;
  bool trained = false;
  double best_val_acc = 0.0;
};

EncoderParams init_encoder(std::size_t in_dim, std::size_t dim, std::uint64_t seed);

// relu(X * self_w + (N X) * neigh_w + b) with X the standardized features and
// N the diagonal-free normalized adjacency. Rows are node embeddings.
Mat encoder_embed(const TrainView& g, const EncoderParams& enc);

// Trains the encoder with cross-entropy on labeled training nodes, keeping
// the parameters with the best validation accuracy. epochs == 0 returns the
// seeded initialization flagged untrained.
EncoderParams pretrain_encoder(const TrainView& g, std::size_t dim, std::size_t epochs,
                               std::uint64_t seed, const OptimizerConfig& opt);

// Derived binary attribute columns. `values` holds the raw per-node scores,
// `bits` the thresholded 0/1 matrix. A column is active only when its
// training-split bits contain both values; inactive (degenerate) columns
// carry no usable signal and are skipped by counterfactual search, with
// their regularizer weight pinned to zero.
struct PseudoAttrs {
  Mat values;
  Mat bits;
  std::vector<double> thresholds;
  std::vector<bool> active;
  std::size_t num_active() const;
};

// Thresholds each column of `values` at its training-split median.
PseudoAttrs binarize_columns(const Mat& values, const std::vector<int>& train_ids);

// binarize_columns applied to the trained encoder's embedding after z-scoring
// its columns on the training split. Standardization keeps the classifier
// input on the same scale as the raw-feature path and leaves the bits
// unchanged: it is monotone per column, so the median threshold moves with
// the values.
PseudoAttrs extract_pseudo_attrs(const TrainView& g, const EncoderParams& enc);

void export_pseudo_attrs_csv(const PseudoAttrs& attrs, const std::string& path);

}  // namespace fairwos
