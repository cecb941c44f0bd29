#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairwos/matrix.hpp"

namespace fairwos {

struct CfEntry {
  int node = -1;
  double dist = 0.0;  // squared euclidean distance in embedding space
};

// Retrieved counterfactuals for one (node, attribute column) pair, sorted by
// ascending distance with ties broken by ascending node id. `shortfall` is
// set when fewer than the requested k candidates exist; that is data, not an
// error.
struct CfSlot {
  std::vector<CfEntry> entries;
  bool shortfall = false;
};

struct CfIndex {
  std::size_t num_nodes = 0;
  std::size_t columns = 0;
  int k = 0;
  std::uint64_t snapshot = 0;  // embedding_snapshot_id of the matrix searched
  std::vector<bool> column_active;
  std::vector<CfSlot> slots;  // node-major: slots[v * columns + i]

  CfSlot& at(std::size_t v, std::size_t i) { return slots[v * columns + i]; }
  const CfSlot& at(std::size_t v, std::size_t i) const { return slots[v * columns + i]; }
};

// For every node v and active column i, the k nearest pool nodes j (by
// embedding distance) with labels[j] == labels[v] and bits(j, i) !=
// bits(v, i); j == v never qualifies. Inactive columns get empty slots
// without shortfall flags. `labels` are the pseudo-labels, covering every
// node.
CfIndex find_counterfactuals(const Mat& h, const Mat& bits, const std::vector<int>& labels,
                             int k, const std::vector<int>& pool,
                             const std::vector<bool>& column_active);

// Reference implementation: plain scan per (node, column), full sort, no
// shared precomputation. Must agree exactly with find_counterfactuals.
CfIndex brute_force_counterfactuals(const Mat& h, const Mat& bits,
                                    const std::vector<int>& labels, int k,
                                    const std::vector<int>& pool,
                                    const std::vector<bool>& column_active);

void dump_counterfactuals_csv(const CfIndex& cf, const std::string& path);

}  // namespace fairwos
