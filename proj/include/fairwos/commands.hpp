#pragma once

#include <cstdint>
#include <string>

#include "fairwos/config.hpp"

namespace fairwos {

// Subcommand entry points. Each returns a process exit code: 0 on success.
// All artifacts land under cfg.out_dir; reports are deterministic given
// (config, seeds) apart from the timestamp field, with wall-clock timings
// included only when cfg.timing is set.

int cmd_generate(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);

struct TheoryArgs {
  std::string run_dir;  // empty = cfg.out_dir
  long seed = -1;       // -1 = first configured seed
  double p = 2.0;
  std::size_t trials = 100;
};
int cmd_theory(const RunConfig& cfg, const TheoryArgs& args);

struct EvalArgs {
  std::string checkpoint;  // empty = <run_dir>/seed_<seed>/checkpoint.json
  std::string run_dir;
  long seed = -1;
};
int cmd_eval(const RunConfig& cfg, const EvalArgs& args);

}  // namespace fairwos
