#include "fairwos/counterfactual.hpp"

#include <algorithm>
#include <fstream>

#include "fairwos/error.hpp"
#include "fairwos/graph.hpp"

namespace fairwos {

namespace {

void check_inputs(const Mat& h, const Mat& bits, const std::vector<int>& labels, int k,
                  const std::vector<int>& pool, const std::vector<bool>& column_active) {
  if (h.rows != bits.rows) throw ShapeError("counterfactuals: embeddings vs bits row mismatch");
  if (labels.size() != h.rows) throw ShapeError("counterfactuals: label size mismatch");
  if (column_active.size() != bits.cols) {
    throw ShapeError("counterfactuals: active mask size mismatch");
  }
  if (k < 1) throw ValidationError("counterfactuals: k must be at least 1");
  for (int j : pool) {
    if (j < 0 || static_cast<std::size_t>(j) >= h.rows) {
      throw ValidationError("counterfactuals: pool node out of range");
    }
  }
}

bool entry_less(const CfEntry& a, const CfEntry& b) {
  if (a.dist != b.dist) return a.dist < b.dist;
  return a.node < b.node;
}

}  // namespace

CfIndex find_counterfactuals(const Mat& h, const Mat& bits, const std::vector<int>& labels,
                             int k, const std::vector<int>& pool,
                             const std::vector<bool>& column_active) {
  check_inputs(h, bits, labels, k, pool, column_active);
  CfIndex cf;
  cf.num_nodes = h.rows;
  cf.columns = bits.cols;
  cf.k = k;
  cf.snapshot = embedding_snapshot_id(h);
  cf.column_active = column_active;
  cf.slots.resize(cf.num_nodes * cf.columns);

  // All query-to-pool distances up front; every column reuses them.
  Mat dist(h.rows, pool.size());
  for (std::size_t v = 0; v < h.rows; ++v) {
    for (std::size_t t = 0; t < pool.size(); ++t) {
      dist(v, t) = squared_distance_rows(h, v, h, static_cast<std::size_t>(pool[t]));
    }
  }

  std::vector<CfEntry> candidates;
  for (std::size_t i = 0; i < cf.columns; ++i) {
    if (!column_active[i]) continue;
    for (std::size_t v = 0; v < cf.num_nodes; ++v) {
      candidates.clear();
      const double vbit = bits(v, i);
      for (std::size_t t = 0; t < pool.size(); ++t) {
        const int j = pool[t];
        if (static_cast<std::size_t>(j) == v) continue;
        if (labels[static_cast<std::size_t>(j)] != labels[v]) continue;
        if (bits(static_cast<std::size_t>(j), i) == vbit) continue;
        candidates.push_back({j, dist(v, t)});
      }
      CfSlot& slot = cf.at(v, i);
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                     candidates.size());
      std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end(),
                        entry_less);
      slot.entries.assign(candidates.begin(), candidates.begin() + take);
      slot.shortfall = candidates.size() < static_cast<std::size_t>(k);
    }
  }
  return cf;
}

CfIndex brute_force_counterfactuals(const Mat& h, const Mat& bits,
                                    const std::vector<int>& labels, int k,
                                    const std::vector<int>& pool,
                                    const std::vector<bool>& column_active) {
  check_inputs(h, bits, labels, k, pool, column_active);
  CfIndex cf;
  cf.num_nodes = h.rows;
  cf.columns = bits.cols;
  cf.k = k;
  cf.snapshot = embedding_snapshot_id(h);
  cf.column_active = column_active;
  cf.slots.resize(cf.num_nodes * cf.columns);

  for (std::size_t v = 0; v < cf.num_nodes; ++v) {
    for (std::size_t i = 0; i < cf.columns; ++i) {
      if (!column_active[i]) continue;
      std::vector<CfEntry> candidates;
      for (int j : pool) {
        const auto ju = static_cast<std::size_t>(j);
        if (ju == v || labels[ju] != labels[v] || bits(ju, i) == bits(v, i)) continue;
        double d = 0.0;
        for (std::size_t c = 0; c < h.cols; ++c) {
          const double diff = h(v, c) - h(ju, c);
          d += diff * diff;
        }
        candidates.push_back({j, d});
      }
      std::sort(candidates.begin(), candidates.end(), entry_less);
      if (candidates.size() > static_cast<std::size_t>(k)) {
        candidates.resize(static_cast<std::size_t>(k));
      }
      CfSlot& slot = cf.at(v, i);
      slot.shortfall = candidates.size() < static_cast<std::size_t>(k);
      slot.entries = std::move(candidates);
    }
  }
  return cf;
}

void dump_counterfactuals_csv(const CfIndex& cf, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "node,column,rank,cf_node,distance,shortfall\n";
  char buf[40];
  for (std::size_t v = 0; v < cf.num_nodes; ++v) {
    for (std::size_t i = 0; i < cf.columns; ++i) {
      if (!cf.column_active[i]) continue;
      const CfSlot& slot = cf.at(v, i);
      const int sf = slot.shortfall ? 1 : 0;
      if (slot.entries.empty()) {
        out << v << ',' << i << ",-1,-1," << ',' << sf << "\n";
        continue;
      }
      for (std::size_t r = 0; r < slot.entries.size(); ++r) {
        std::snprintf(buf, sizeof buf, "%.17g", slot.entries[r].dist);
        out << v << ',' << i << ',' << r << ',' << slot.entries[r].node << ',' << buf << ','
            << sf << "\n";
      }
    }
  }
}

}  // namespace fairwos
