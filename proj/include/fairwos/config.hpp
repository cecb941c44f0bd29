#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairwos/fairness.hpp"
#include "fairwos/synthetic.hpp"

namespace fairwos {

// Resolved run configuration. Populated from a flat key = value config file
// plus command-line overrides; validation rejects unknown keys, malformed
// values, and ambiguous dataset sources (synthetic and CSV both given).
struct RunConfig {
  std::string mode = "fairwos";  // fairwos | vanilla
  Backbone backbone = Backbone::gcn;
  std::size_t layers = 1;
  std::size_t hidden = 16;
  std::size_t encoder_dim = 16;
  double alpha = 0.08;
  int k = 1;
  std::size_t pretrain_epochs = 1000;
  std::size_t finetune_epochs = 15;
  double learning_rate = 0.001;
  int patience = 15;
  std::string optimizer = "adam";  // adam | sgd
  bool disable_encoder = false;
  bool disable_fairness = false;
  bool disable_weight_update = false;
  bool freeze_counterfactuals = false;
  bool export_counterfactuals = false;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::string out_dir = "out";
  bool timing = false;

  bool use_synthetic = false;
  SyntheticSpec synthetic;
  std::string nodes_csv;
  std::string edges_csv;

  std::vector<double> alpha_grid;
  std::vector<int> k_grid;

  // The key/value pairs as resolved, echoed into reports.
  std::map<std::string, std::string> echo() const;
};

RunConfig parse_config_file(const std::string& path);

// Parses "0,1,2"-style lists; used by both the config file and --seeds.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// Named grid presets: alpha "main" = {0.01, 0.05, 1, 2, 5}, alpha "sweep" =
// {0.01, 0.02, 0.04, 0.08}; k "main" = {1, 2, 5, 10, 20}, k "sweep" =
// {1, 2, 3, 4}.
std::vector<double> alpha_grid_preset(const std::string& name);
std::vector<int> k_grid_preset(const std::string& name);

// Command-specific validation: every command requires an unambiguous
// dataset; sweep additionally requires at least one grid.
void validate_config(const RunConfig& cfg, const std::string& command);

TrainConfig to_train_config(const RunConfig& cfg, std::uint64_t seed);

// The dataset for one run: synthetic graphs mix the run seed into the
// generator seed so independent runs draw independent graphs; CSV datasets
// load as-is.
Graph load_dataset(const RunConfig& cfg, std::uint64_t seed);

}  // namespace fairwos
