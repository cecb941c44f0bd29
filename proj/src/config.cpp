#include "fairwos/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fairwos/error.hpp"
#include "fairwos/graph_io.hpp"

namespace fairwos {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || errno != 0 || end != v.c_str() + v.size()) {
    throw ValidationError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
  return x;
}

long to_long(const std::string& v, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || errno != 0 || end != v.c_str() + v.size()) {
    throw ValidationError("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
  return x;
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) {
    const long v = to_long(item, "seeds");
    if (v < 0) throw ValidationError("config: seeds must be nonnegative");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  if (out.empty()) throw ValidationError("config: empty seed list");
  return out;
}

std::vector<double> alpha_grid_preset(const std::string& name) {
  if (name == "main") return {0.01, 0.05, 1.0, 2.0, 5.0};
  if (name == "sweep") return {0.01, 0.02, 0.04, 0.08};
  throw ValidationError("config: unknown alpha grid preset '" + name + "'");
}

std::vector<int> k_grid_preset(const std::string& name) {
  if (name == "main") return {1, 2, 5, 10, 20};
  if (name == "sweep") return {1, 2, 3, 4};
  throw ValidationError("config: unknown k grid preset '" + name + "'");
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  RunConfig cfg;
  bool saw_synthetic = false, saw_csv = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path + " line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "mode") {
      if (value != "fairwos" && value != "vanilla") {
        throw ValidationError("config: mode must be fairwos or vanilla");
      }
      cfg.mode = value;
    } else if (key == "backbone") {
      if (value == "gcn") {
        cfg.backbone = Backbone::gcn;
      } else if (value == "gin") {
        cfg.backbone = Backbone::gin;
      } else {
        throw ValidationError("config: backbone must be gcn or gin");
      }
    } else if (key == "layers") {
      cfg.layers = static_cast<std::size_t>(to_long(value, key));
    } else if (key == "hidden") {
      cfg.hidden = static_cast<std::size_t>(to_long(value, key));
    } else if (key == "encoder_dim") {
      cfg.encoder_dim = static_cast<std::size_t>(to_long(value, key));
    } else if (key == "alpha") {
      cfg.alpha = to_double(value, key);
    } else if (key == "k") {
      cfg.k = static_cast<int>(to_long(value, key));
    } else if (key == "pretrain_epochs") {
      cfg.pretrain_epochs = static_cast<std::size_t>(to_long(value, key));
    } else if (key == "finetune_epochs") {
      cfg.finetune_epochs = static_cast<std::size_t>(to_long(value, key));
    } else if (key == "learning_rate") {
      cfg.learning_rate = to_double(value, key);
    } else if (key == "patience") {
      cfg.patience = static_cast<int>(to_long(value, key));
    } else if (key == "optimizer") {
      if (value != "adam" && value != "sgd") {
        throw ValidationError("config: optimizer must be adam or sgd");
      }
      cfg.optimizer = value;
    } else if (key == "disable_encoder") {
      cfg.disable_encoder = to_bool(value, key);
    } else if (key == "disable_fairness") {
      cfg.disable_fairness = to_bool(value, key);
    } else if (key == "disable_weight_update") {
      cfg.disable_weight_update = to_bool(value, key);
    } else if (key == "freeze_counterfactuals") {
      cfg.freeze_counterfactuals = to_bool(value, key);
    } else if (key == "export_counterfactuals") {
      cfg.export_counterfactuals = to_bool(value, key);
    } else if (key == "seeds") {
      cfg.seeds = parse_seed_list(value);
    } else if (key == "out") {
      cfg.out_dir = value;
    } else if (key == "synthetic") {
      cfg.use_synthetic = to_bool(value, key);
      saw_synthetic = saw_synthetic || cfg.use_synthetic;
    } else if (key == "synthetic_nodes") {
      cfg.synthetic.num_nodes = static_cast<std::size_t>(to_long(value, key));
      saw_synthetic = true;
    } else if (key == "synthetic_intra") {
      cfg.synthetic.intra_prob = to_double(value, key);
      saw_synthetic = true;
    } else if (key == "synthetic_inter") {
      cfg.synthetic.inter_prob = to_double(value, key);
      saw_synthetic = true;
    } else if (key == "synthetic_features") {
      cfg.synthetic.num_features = static_cast<std::size_t>(to_long(value, key));
      saw_synthetic = true;
    } else if (key == "synthetic_leak_dims") {
      cfg.synthetic.leak_dims = static_cast<std::size_t>(to_long(value, key));
      saw_synthetic = true;
    } else if (key == "synthetic_label_bias") {
      cfg.synthetic.label_bias = to_double(value, key);
      saw_synthetic = true;
    } else if (key == "synthetic_seed") {
      cfg.synthetic.seed = static_cast<std::uint64_t>(to_long(value, key));
      saw_synthetic = true;
    } else if (key == "nodes_csv") {
      cfg.nodes_csv = value;
      saw_csv = true;
    } else if (key == "edges_csv") {
      cfg.edges_csv = value;
      saw_csv = true;
    } else if (key == "alpha_grid") {
      cfg.alpha_grid.clear();
      if (value == "main" || value == "sweep") {
        cfg.alpha_grid = alpha_grid_preset(value);
      } else {
        for (const auto& item : split_list(value)) {
          cfg.alpha_grid.push_back(to_double(item, key));
        }
      }
    } else if (key == "k_grid") {
      cfg.k_grid.clear();
      if (value == "main" || value == "sweep") {
        cfg.k_grid = k_grid_preset(value);
      } else {
        for (const auto& item : split_list(value)) {
          cfg.k_grid.push_back(static_cast<int>(to_long(item, key)));
        }
      }
    } else {
      throw ValidationError("config: unknown key '" + key + "' at " + path + " line " +
                            std::to_string(lineno));
    }
  }
  if (saw_synthetic && !cfg.use_synthetic) {
    // synthetic_* keys given without synthetic = true is almost certainly a
    // mistake; require the explicit switch.
    if (!saw_csv) cfg.use_synthetic = true;
  }
  if (cfg.use_synthetic && saw_csv) {
    throw ValidationError("config: both synthetic and CSV dataset given; pick one source");
  }
  return cfg;
}

std::map<std::string, std::string> RunConfig::echo() const {
  std::map<std::string, std::string> e;
  e["mode"] = mode;
  e["backbone"] = backbone == Backbone::gcn ? "gcn" : "gin";
  e["layers"] = std::to_string(layers);
  e["hidden"] = std::to_string(hidden);
  e["encoder_dim"] = std::to_string(encoder_dim);
  e["alpha"] = fmt(alpha);
  e["k"] = std::to_string(k);
  e["pretrain_epochs"] = std::to_string(pretrain_epochs);
  e["finetune_epochs"] = std::to_string(finetune_epochs);
  e["learning_rate"] = fmt(learning_rate);
  e["patience"] = std::to_string(patience);
  e["optimizer"] = optimizer;
  e["disable_encoder"] = disable_encoder ? "true" : "false";
  e["disable_fairness"] = disable_fairness ? "true" : "false";
  e["disable_weight_update"] = disable_weight_update ? "true" : "false";
  e["freeze_counterfactuals"] = freeze_counterfactuals ? "true" : "false";
  {
    std::string s;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(seeds[i]);
    }
    e["seeds"] = s;
  }
  e["out"] = out_dir;
  if (use_synthetic) {
    e["dataset"] = "synthetic";
    e["synthetic_nodes"] = std::to_string(synthetic.num_nodes);
    e["synthetic_intra"] = fmt(synthetic.intra_prob);
    e["synthetic_inter"] = fmt(synthetic.inter_prob);
    e["synthetic_features"] = std::to_string(synthetic.num_features);
    e["synthetic_leak_dims"] = std::to_string(synthetic.leak_dims);
    e["synthetic_label_bias"] = fmt(synthetic.label_bias);
    e["synthetic_seed"] = std::to_string(synthetic.seed);
  } else {
    e["dataset"] = "csv";
    e["nodes_csv"] = nodes_csv;
    e["edges_csv"] = edges_csv;
  }
  if (!alpha_grid.empty()) {
    std::string s;
    for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
      if (i) s += ",";
      s += fmt(alpha_grid[i]);
    }
    e["alpha_grid"] = s;
  }
  if (!k_grid.empty()) {
    std::string s;
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(k_grid[i]);
    }
    e["k_grid"] = s;
  }
  return e;
}

void validate_config(const RunConfig& cfg, const std::string& command) {
  if (!cfg.use_synthetic && (cfg.nodes_csv.empty() || cfg.edges_csv.empty())) {
    throw ValidationError(
        "config: no dataset; set synthetic = true or both nodes_csv and edges_csv");
  }
  if (cfg.alpha < 0.0) throw ValidationError("config: alpha must be nonnegative");
  if (cfg.k < 1) throw ValidationError("config: k must be at least 1");
  if (cfg.learning_rate <= 0.0) throw ValidationError("config: learning_rate must be positive");
  if (cfg.patience < 1) throw ValidationError("config: patience must be at least 1");
  if (cfg.layers < 1) throw ValidationError("config: layers must be at least 1");
  if (cfg.hidden < 1) throw ValidationError("config: hidden must be at least 1");
  if (cfg.encoder_dim < 1) throw ValidationError("config: encoder_dim must be at least 1");
  if (cfg.seeds.empty()) throw ValidationError("config: empty seed list");
  if (cfg.use_synthetic && cfg.synthetic.num_nodes == 0) {
    throw ValidationError("config: synthetic_nodes must be positive");
  }
  if (command == "sweep" && cfg.alpha_grid.empty() && cfg.k_grid.empty()) {
    throw ValidationError("config: sweep needs alpha_grid and/or k_grid");
  }
  for (double a : cfg.alpha_grid) {
    if (a < 0.0) throw ValidationError("config: alpha_grid entries must be nonnegative");
  }
  for (int k : cfg.k_grid) {
    if (k < 1) throw ValidationError("config: k_grid entries must be at least 1");
  }
}

TrainConfig to_train_config(const RunConfig& cfg, std::uint64_t seed) {
  TrainConfig tc;
  tc.mode = cfg.mode;
  tc.gnn.backbone = cfg.backbone;
  tc.gnn.layers = cfg.layers;
  tc.gnn.hidden = cfg.hidden;
  tc.encoder_dim = cfg.encoder_dim;
  tc.alpha = cfg.alpha;
  tc.k = cfg.k;
  tc.pretrain_epochs = cfg.pretrain_epochs;
  tc.finetune_epochs = cfg.finetune_epochs;
  tc.learning_rate = cfg.learning_rate;
  tc.patience = cfg.patience;
  tc.seed = seed;
  tc.optimizer = cfg.optimizer == "sgd" ? OptimizerConfig::Kind::sgd
                                        : OptimizerConfig::Kind::adam;
  tc.disable_encoder = cfg.disable_encoder;
  tc.disable_fairness = cfg.disable_fairness;
  tc.disable_weight_update = cfg.disable_weight_update;
  tc.freeze_counterfactuals = cfg.freeze_counterfactuals;
  return tc;
}

Graph load_dataset(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.use_synthetic) {
    SyntheticSpec spec = cfg.synthetic;
    // Offset by the run seed so each seeded run sees its own draw while
    // staying reproducible; generation and training use separate streams.
    spec.seed = spec.seed + seed;
    return generate_synthetic(spec);
  }
  return load_graph_csv(cfg.nodes_csv, cfg.edges_csv);
}

}  // namespace fairwos
