#include "fairwos/graph_io.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "fairwos/error.hpp"

namespace fairwos {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void fail(const std::string& file, std::size_t line, const std::string& msg,
                       bool parse) {
  const std::string full = file + " line " + std::to_string(line) + ": " + msg;
  if (parse) throw ParseError(full);
  throw ValidationError(full);
}

double parse_double(const std::string& s, const std::string& file, std::size_t line) {
  if (s.empty()) fail(file, line, "empty numeric field", true);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size()) {
    fail(file, line, "not a number: '" + s + "'", true);
  }
  return v;
}

long parse_long(const std::string& s, const std::string& file, std::size_t line) {
  if (s.empty()) fail(file, line, "empty integer field", true);
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) {
    fail(file, line, "not an integer: '" + s + "'", true);
  }
  return v;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

Graph load_graph_csv(const std::string& nodes_path, const std::string& edges_path) {
  const auto node_lines = read_lines(nodes_path);
  if (node_lines.empty()) throw ParseError(nodes_path + " line 1: missing header");

  const auto header = split_csv_line(node_lines[0]);
  if (header.size() < 4 || header[0] != "id") {
    fail(nodes_path, 1, "expected header id,feat_0,...,label,split[,sensitive]", true);
  }
  bool has_sensitive = header.back() == "sensitive";
  const std::size_t tail = has_sensitive ? 3 : 2;  // label, split [, sensitive]
  if (header.size() < tail + 2) fail(nodes_path, 1, "too few columns", true);
  const std::size_t num_features = header.size() - 1 - tail;
  for (std::size_t f = 0; f < num_features; ++f) {
    if (header[1 + f] != "feat_" + std::to_string(f)) {
      fail(nodes_path, 1, "expected column feat_" + std::to_string(f) + ", got '" +
                              header[1 + f] + "'", true);
    }
  }
  if (header[1 + num_features] != "label" || header[2 + num_features] != "split") {
    fail(nodes_path, 1, "expected label,split after feature columns", true);
  }

  Graph g;
  g.num_nodes = node_lines.size() - 1;
  g.features = Mat(g.num_nodes, num_features);
  g.labels.resize(g.num_nodes);
  g.splits.resize(g.num_nodes);
  g.has_sensitive = has_sensitive;
  if (has_sensitive) g.sensitive.assign(g.num_nodes, -1);

  for (std::size_t r = 0; r < g.num_nodes; ++r) {
    const std::size_t lineno = r + 2;
    const auto fields = split_csv_line(node_lines[r + 1]);
    if (fields.size() != header.size()) {
      fail(nodes_path, lineno,
           "expected " + std::to_string(header.size()) + " fields, got " +
               std::to_string(fields.size()), true);
    }
    const long id = parse_long(fields[0], nodes_path, lineno);
    if (id != static_cast<long>(r)) {
      fail(nodes_path, lineno,
           "ids must be contiguous from 0; expected " + std::to_string(r) + ", got " +
               std::to_string(id), false);
    }
    for (std::size_t f = 0; f < num_features; ++f) {
      g.features(r, f) = parse_double(fields[1 + f], nodes_path, lineno);
    }
    const std::string& label = fields[1 + num_features];
    if (label.empty()) {
      g.labels[r] = -1;
    } else if (label == "0" || label == "1") {
      g.labels[r] = label[0] - '0';
    } else {
      fail(nodes_path, lineno, "label must be empty, 0, or 1; got '" + label + "'", false);
    }
    const std::string& split = fields[2 + num_features];
    if (split == "train") {
      g.splits[r] = Split::train;
    } else if (split == "val") {
      g.splits[r] = Split::val;
    } else if (split == "test") {
      g.splits[r] = Split::test;
    } else {
      fail(nodes_path, lineno, "split must be train/val/test; got '" + split + "'", false);
    }
    if (has_sensitive) {
      const std::string& s = fields[3 + num_features];
      if (s.empty()) {
        g.sensitive[r] = -1;
      } else if (s == "0" || s == "1") {
        g.sensitive[r] = s[0] - '0';
      } else {
        fail(nodes_path, lineno, "sensitive must be empty, 0, or 1; got '" + s + "'", false);
      }
    }
  }

  const auto edge_lines = read_lines(edges_path);
  if (edge_lines.empty()) throw ParseError(edges_path + " line 1: missing header");
  {
    const auto h = split_csv_line(edge_lines[0]);
    if (h.size() != 2 || h[0] != "src" || h[1] != "dst") {
      fail(edges_path, 1, "expected header src,dst", true);
    }
  }
  std::set<std::pair<int, int>> edge_set;
  for (std::size_t r = 1; r < edge_lines.size(); ++r) {
    if (edge_lines[r].empty()) continue;
    const auto fields = split_csv_line(edge_lines[r]);
    if (fields.size() != 2) fail(edges_path, r + 1, "expected 2 fields", true);
    long a = parse_long(fields[0], edges_path, r + 1);
    long b = parse_long(fields[1], edges_path, r + 1);
    if (a < 0 || b < 0 || a >= static_cast<long>(g.num_nodes) ||
        b >= static_cast<long>(g.num_nodes)) {
      fail(edges_path, r + 1,
           "edge endpoint out of range [0, " + std::to_string(g.num_nodes) + ")", false);
    }
    if (a == b) continue;  // self-loops are added by normalization, never stored
    if (a > b) std::swap(a, b);
    edge_set.insert({static_cast<int>(a), static_cast<int>(b)});
  }
  g.edges.assign(edge_set.begin(), edge_set.end());
  g.validate();
  return g;
}

void save_graph_csv(const Graph& g, const std::string& nodes_path,
                    const std::string& edges_path) {
  g.validate();
  std::ofstream nodes(nodes_path);
  if (!nodes) throw Error("cannot write " + nodes_path);
  nodes << "id";
  for (std::size_t f = 0; f < g.features.cols; ++f) nodes << ",feat_" << f;
  nodes << ",label,split";
  if (g.has_sensitive) nodes << ",sensitive";
  nodes << "\n";
  char buf[40];
  for (std::size_t r = 0; r < g.num_nodes; ++r) {
    nodes << r;
    for (std::size_t f = 0; f < g.features.cols; ++f) {
      std::snprintf(buf, sizeof buf, "%.17g", g.features(r, f));
      nodes << ',' << buf;
    }
    nodes << ',';
    if (g.labels[r] != -1) nodes << g.labels[r];
    switch (g.splits[r]) {
      case Split::train: nodes << ",train"; break;
      case Split::val: nodes << ",val"; break;
      case Split::test: nodes << ",test"; break;
    }
    if (g.has_sensitive) {
      nodes << ',';
      if (g.sensitive[r] != -1) nodes << g.sensitive[r];
    }
    nodes << "\n";
  }
  std::ofstream edges(edges_path);
  if (!edges) throw Error("cannot write " + edges_path);
  edges << "src,dst\n";
  for (const auto& [a, b] : g.edges) edges << a << ',' << b << "\n";
}

}  // namespace fairwos
