#pragma once

#include <cstdint>
#include <vector>

#include "fairwos/graph.hpp"
#include "fairwos/params.hpp"

namespace fairwos {

enum class Backbone { gcn, gin };

struct GnnMeta {
  Backbone backbone = Backbone::gcn;
  std::size_t layers = 1;
  std::size_t hidden = 16;
};

// Classifier over node features: per layer
//   h' = relu(h * self_w + (N h) * neigh_w + b)
// where N is the off-diagonal normalized adjacency for GCN and the raw
// adjacency for GIN, followed by a sigmoid scalar head on the last layer.
// The self path never mixes neighbors, which is what the perturbation bound
// checker relies on.
struct GnnParams {
  GnnMeta meta;
  ParameterSet params;  // layer<k>.self_w / .neigh_w / .bias, head.w, head.b
  std::uint64_t init_seed = 0;
};

GnnParams init_gnn(std::size_t in_dim, const GnnMeta& meta, std::uint64_t seed);

// Forward pass with every intermediate needed by the backward pass and the
// bound checker: inputs[k] is the k-th layer input (inputs[0] = x0),
// neigh[k] the aggregated neighbor matrix fed to layer k.
struct GnnForward {
  std::vector<Mat> inputs;
  std::vector<Mat> preacts;
  std::vector<Mat> neigh;
  Mat logits;  // n x 1
  Mat probs;   // sigmoid(logits)
  const Mat& embeddings() const { return inputs.back(); }
};

const CsrMatrix& neighbor_operator(const NeighborOps& nb, Backbone backbone);

GnnForward gnn_forward(const Mat& x0, const NeighborOps& nb, const GnnMeta& meta,
                       const ParameterSet& params);

// Accumulates gradients into `params` from the head gradient `dlogits` plus
// an optional extra gradient on the final embeddings (empty matrix to skip).
void gnn_backprop(const Mat& x0, const NeighborOps& nb, const GnnMeta& meta,
                  ParameterSet& params, const GnnForward& fwd, const Mat& dlogits,
                  const Mat& dh_extra);

// (sigmoid(logit) - y) / |mask| on mask rows, zero elsewhere: the gradient
// of mean binary cross-entropy with respect to the head logits.
Mat utility_dlogits(const Mat& probs, const std::vector<int>& labels,
                    const std::vector<int>& mask);

// Trains the classifier on utility loss alone, keeping the best validation
// accuracy parameters. epochs == 0 returns the seeded initialization.
struct PretrainedClassifier {
  GnnParams gnn;
  bool trained = false;
  double best_val_acc = 0.0;
};
PretrainedClassifier pretrain_classifier(const TrainView& g, const Mat& x0, const GnnMeta& meta,
                                         std::size_t epochs, std::uint64_t seed,
                                         const OptimizerConfig& opt);

// Ground-truth labels on labeled training nodes, thresholded predictions
// (p >= 0.5 maps to 1) everywhere else.
std::vector<int> pseudo_labels(const TrainView& g, const Mat& probs);

double accuracy_on(const Mat& probs, const std::vector<int>& labels,
                   const std::vector<int>& ids);

}  // namespace fairwos
