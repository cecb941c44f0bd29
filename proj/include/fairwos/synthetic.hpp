#pragma once

#include <cstdint>

#include "fairwos/graph.hpp"

namespace fairwos {

// Two-block benchmark generator. Nodes split into two equal sensitive
// groups; edges follow a stochastic block model keyed to the group
// (intra_prob within, inter_prob across). Every feature column is a noisy
// reading of one latent per-node signal: the first leak_dims columns read it
// strongly but shifted by the group, the rest read it weakly and cleanly.
// Labels draw from a logistic model on the signal with a mild direct group
// term. Both the shift and the direct term scale with label_bias, so zero
// removes every group channel except the block structure of the edges.
struct SyntheticSpec {
  std::size_t num_nodes = 500;
  double intra_prob = 0.06;
  double inter_prob = 0.006;
  std::size_t num_features = 8;
  std::size_t leak_dims = 3;
  double label_bias = 0.8;
  std::uint64_t seed = 0;
};

// Deterministic for equal specs: equal seeds give bit-identical graphs.
// Splits are a seed-shuffled 50/25/25 partition; every node is labeled and
// carries a sensitive bit.
Graph generate_synthetic(const SyntheticSpec& spec);

}  // namespace fairwos
