#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fairwos/matrix.hpp"

namespace fairwos {

enum class Split { train, val, test };

// Undirected attributed graph. `labels` uses -1 for unlabeled nodes;
// `sensitive` uses -1 for nodes without a recorded group. The sensitive
// column exists for evaluation only: training code never receives a Graph,
// it receives a TrainView, which has no accessor for it.
struct Graph {
  std::size_t num_nodes = 0;
  std::vector<std::pair<int, int>> edges;  // src < dst, sorted, deduplicated
  Mat features;                            // num_nodes x num_features
  std::vector<int> labels;
  std::vector<Split> splits;
  std::vector<int> sensitive;
  bool has_sensitive = false;

  // Checks internal consistency (sizes, edge ranges, ordering). Throws
  // ValidationError on the first violation.
  void validate() const;
};

// Projection of Graph handed to every training-path operation. Exposes
// topology, features, labels, and splits; deliberately nothing else.
class TrainView {
 public:
  explicit TrainView(const Graph& g) : g_(&g) {}

  std::size_t num_nodes() const { return g_->num_nodes; }
  const std::vector<std::pair<int, int>>& edges() const { return g_->edges; }
  const Mat& features() const { return g_->features; }
  const std::vector<int>& labels() const { return g_->labels; }
  const std::vector<Split>& splits() const { return g_->splits; }

  std::vector<int> split_ids(Split s) const;      // all nodes in a split
  std::vector<int> labeled_ids(Split s) const;    // nodes in a split with labels
  std::vector<char> split_mask(Split s) const;    // size num_nodes, 0/1

 private:
  const Graph* g_;
};

// Compressed sparse row matrix over node indices. Values are stored in
// column-sorted order within each row.
struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;  // size n+1
  std::vector<int> col;
  std::vector<double> val;

  double entry(std::size_t i, std::size_t j) const;
  std::size_t nnz() const { return col.size(); }
};

// Symmetrically normalized adjacency with self-loops added before
// normalization. Exactly symmetric entry-for-entry: the (i,j) and (j,i)
// values are computed by the same expression.
struct NormalizedAdjacency {
  CsrMatrix mat;
};

NormalizedAdjacency normalize_adjacency(const TrainView& g);

// The three message operators the models use: the normalized adjacency with
// its diagonal, the same matrix with the diagonal removed (the neighbor
// operator when the self path goes through a separate weight), and the raw
// unweighted adjacency.
struct NeighborOps {
  CsrMatrix normalized;
  CsrMatrix normalized_offdiag;
  CsrMatrix raw;
};

NeighborOps build_neighbor_ops(const TrainView& g);

// out = N * h with each output entry accumulated in ascending value order of
// its contributions, so any relabeling of nodes that fixes a row's neighbor
// multiset reproduces the row bit-for-bit.
Mat aggregate(const CsrMatrix& n, const Mat& h);

// Each column z-scored with the mean and population standard deviation of its
// training-split rows; a column with std below 1e-12 divides by 1 instead.
Mat standardize_columns(const Mat& x, const std::vector<int>& train_ids);

// standardize_columns applied to the graph's feature matrix.
Mat standardized_features(const TrainView& g);

// FNV-1a over the raw bytes of the matrix, tagging which embedding state a
// derived structure was computed from.
std::uint64_t embedding_snapshot_id(const Mat& h);

}  // namespace fairwos
