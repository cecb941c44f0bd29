#pragma once

#include <string>

#include "fairwos/graph.hpp"

namespace fairwos {

// Reads the two-file CSV form: a node table
//   id,feat_0,...,feat_{F-1},label,split[,sensitive]
// with ids equal to row order, empty label for unlabeled nodes, split one of
// train/val/test, and an optional 0/1 sensitive column; and an edge list
//   src,dst
// Directed duplicates and repeated edges collapse to one undirected edge;
// self-loops are dropped. Parse and validation errors name the file and
// 1-based line.
Graph load_graph_csv(const std::string& nodes_path, const std::string& edges_path);

void save_graph_csv(const Graph& g, const std::string& nodes_path,
                    const std::string& edges_path);

}  // namespace fairwos
