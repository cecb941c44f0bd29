#include "fairwos/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fairwos/error.hpp"

namespace fairwos {

void Graph::validate() const {
  if (features.rows != num_nodes) {
    throw ValidationError("graph: feature rows " + std::to_string(features.rows) +
                          " != num_nodes " + std::to_string(num_nodes));
  }
  if (labels.size() != num_nodes || splits.size() != num_nodes) {
    throw ValidationError("graph: label/split size mismatch");
  }
  if (has_sensitive && sensitive.size() != num_nodes) {
    throw ValidationError("graph: sensitive size mismatch");
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto [a, b] = edges[i];
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= num_nodes ||
        static_cast<std::size_t>(b) >= num_nodes) {
      throw ValidationError("graph: edge endpoint out of range");
    }
    if (a >= b) throw ValidationError("graph: edges must satisfy src < dst");
    if (i > 0 && !(edges[i - 1] < edges[i])) {
      throw ValidationError("graph: edges must be sorted and unique");
    }
  }
  for (int l : labels) {
    if (l != -1 && l != 0 && l != 1) throw ValidationError("graph: label must be -1/0/1");
  }
  ensure_finite(features, "graph features");
}

std::vector<int> TrainView::split_ids(Split s) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < g_->num_nodes; ++i) {
    if (g_->splits[i] == s) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> TrainView::labeled_ids(Split s) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < g_->num_nodes; ++i) {
    if (g_->splits[i] == s && g_->labels[i] != -1) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<char> TrainView::split_mask(Split s) const {
  std::vector<char> out(g_->num_nodes, 0);
  for (std::size_t i = 0; i < g_->num_nodes; ++i) {
    if (g_->splits[i] == s) out[i] = 1;
  }
  return out;
}

double CsrMatrix::entry(std::size_t i, std::size_t j) const {
  for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
    if (col[k] == static_cast<int>(j)) return val[k];
  }
  return 0.0;
}

namespace {

// Builds a CSR matrix from per-node sorted neighbor lists and a value
// function of (i, j).
template <typename ValueFn>
CsrMatrix build_csr(std::size_t n, const std::vector<std::vector<int>>& adj, ValueFn value) {
  CsrMatrix m;
  m.n = n;
  m.row_ptr.resize(n + 1, 0);
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < n; ++i) nnz += adj[i].size();
  m.col.reserve(nnz);
  m.val.reserve(nnz);
  for (std::size_t i = 0; i < n; ++i) {
    m.row_ptr[i] = m.col.size();
    for (int j : adj[i]) {
      m.col.push_back(j);
      m.val.push_back(value(i, static_cast<std::size_t>(j)));
    }
  }
  m.row_ptr[n] = m.col.size();
  return m;
}

std::vector<std::vector<int>> adjacency_lists(const TrainView& g, bool with_self) {
  std::vector<std::vector<int>> adj(g.num_nodes());
  for (const auto& [a, b] : g.edges()) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  if (with_self) {
    for (std::size_t i = 0; i < adj.size(); ++i) adj[i].push_back(static_cast<int>(i));
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

}  // namespace

NormalizedAdjacency normalize_adjacency(const TrainView& g) {
  const std::size_t n = g.num_nodes();
  auto adj = adjacency_lists(g, /*with_self=*/true);
  std::vector<double> deg(n);
  for (std::size_t i = 0; i < n; ++i) deg[i] = static_cast<double>(adj[i].size());
  NormalizedAdjacency out;
  // One rounding per entry; deg[i]*deg[j] commutes bitwise, so (i,j) and
  // (j,i) are identical doubles.
  out.mat = build_csr(n, adj, [&](std::size_t i, std::size_t j) {
    return 1.0 / std::sqrt(deg[i] * deg[j]);
  });
  return out;
}

NeighborOps build_neighbor_ops(const TrainView& g) {
  NeighborOps ops;
  ops.normalized = normalize_adjacency(g).mat;
  const std::size_t n = g.num_nodes();
  auto adj_noself = adjacency_lists(g, /*with_self=*/false);
  // Off-diagonal part reuses the already normalized values so the two
  // matrices agree exactly off the diagonal.
  ops.normalized_offdiag = build_csr(n, adj_noself, [&](std::size_t i, std::size_t j) {
    return ops.normalized.entry(i, j);
  });
  ops.raw = build_csr(n, adj_noself, [](std::size_t, std::size_t) { return 1.0; });
  return ops;
}

Mat aggregate(const CsrMatrix& n, const Mat& h) {
  if (n.n != h.rows) {
    throw ShapeError("aggregate: operator rows " + std::to_string(n.n) + " vs features " +
                     h.shape_str());
  }
  Mat out(n.n, h.cols);
  std::vector<double> buf;
  for (std::size_t i = 0; i < n.n; ++i) {
    const std::size_t begin = n.row_ptr[i];
    const std::size_t end = n.row_ptr[i + 1];
    if (begin == end) continue;
    for (std::size_t c = 0; c < h.cols; ++c) {
      buf.clear();
      for (std::size_t k = begin; k < end; ++k) {
        buf.push_back(n.val[k] * h(static_cast<std::size_t>(n.col[k]), c));
      }
      // Ascending-value accumulation: the sum depends only on the multiset
      // of contributions, not on neighbor order.
      std::sort(buf.begin(), buf.end());
      double s = 0.0;
      for (double v : buf) s += v;
      out(i, c) = s;
    }
  }
  return out;
}

Mat standardize_columns(const Mat& x, const std::vector<int>& train_ids) {
  if (train_ids.empty()) throw ValidationError("standardize_columns: empty training split");
  Mat out(x.rows, x.cols);
  for (std::size_t c = 0; c < x.cols; ++c) {
    double mean = 0.0;
    for (int i : train_ids) mean += x(static_cast<std::size_t>(i), c);
    mean /= static_cast<double>(train_ids.size());
    double var = 0.0;
    for (int i : train_ids) {
      const double d = x(static_cast<std::size_t>(i), c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(train_ids.size());
    double sd = std::sqrt(var);
    if (sd < 1e-12) sd = 1.0;
    for (std::size_t r = 0; r < x.rows; ++r) out(r, c) = (x(r, c) - mean) / sd;
  }
  return out;
}

Mat standardized_features(const TrainView& g) {
  return standardize_columns(g.features(), g.split_ids(Split::train));
}

std::uint64_t embedding_snapshot_id(const Mat& h) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto mix = [&hash](const void* p, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ULL;
    }
  };
  const std::uint64_t r = h.rows, c = h.cols;
  mix(&r, sizeof(r));
  mix(&c, sizeof(c));
  if (!h.data.empty()) mix(h.data.data(), h.data.size() * sizeof(double));
  return hash;
}

}  // namespace fairwos
