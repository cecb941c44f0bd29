#include <iostream>
#include <limits>
#include <string>

#include <CLI11.hpp>

#include "fairwos/commands.hpp"
#include "fairwos/config.hpp"
#include "fairwos/error.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string seeds;
  std::string out;
  bool timing = false;
};

void add_common(CLI::App* app, CommonOpts& opts) {
  app->add_option("-c,--config", opts.config_path, "run configuration file")->required();
  app->add_option("--seeds", opts.seeds, "override seed list, e.g. 0,1,2");
  app->add_option("--out", opts.out, "override output directory");
  app->add_flag("--time", opts.timing, "record wall-clock timings in reports");
}

fairwos::RunConfig resolve(const CommonOpts& opts, const std::string& command) {
  fairwos::RunConfig cfg = fairwos::parse_config_file(opts.config_path);
  if (!opts.seeds.empty()) cfg.seeds = fairwos::parse_seed_list(opts.seeds);
  if (!opts.out.empty()) cfg.out_dir = opts.out;
  cfg.timing = cfg.timing || opts.timing;
  fairwos::validate_config(cfg, command);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fair node classification without observed sensitive attributes"};
  app.require_subcommand(1);

  CommonOpts gen_opts, train_opts, sweep_opts, theory_opts, eval_opts;

  CLI::App* gen = app.add_subcommand("generate", "write a synthetic dataset as CSV");
  add_common(gen, gen_opts);

  CLI::App* train = app.add_subcommand("train", "train over the configured seeds");
  add_common(train, train_opts);

  CLI::App* sweep = app.add_subcommand("sweep", "grid over alpha and k");
  add_common(sweep, sweep_opts);

  CLI::App* theory = app.add_subcommand("theory", "check the theoretical bounds on a run");
  add_common(theory, theory_opts);
  fairwos::TheoryArgs targs;
  std::string p_str = "2";
  theory->add_option("--run", targs.run_dir, "run directory holding seed_<s>/ outputs");
  theory->add_option("--seed", targs.seed, "seed to check (default: first configured)");
  theory->add_option("--p", p_str, "norm order: 1, 2, or inf");
  theory->add_option("--trials", targs.trials, "perturbation trials")->check(CLI::PositiveNumber);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(eval, eval_opts);
  fairwos::EvalArgs eargs;
  eval->add_option("--checkpoint", eargs.checkpoint, "checkpoint file to load");
  eval->add_option("--run", eargs.run_dir, "run directory holding seed_<s>/ outputs");
  eval->add_option("--seed", eargs.seed, "seed to evaluate (default: first configured)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return fairwos::cmd_generate(resolve(gen_opts, "generate"));
    if (train->parsed()) return fairwos::cmd_train(resolve(train_opts, "train"));
    if (sweep->parsed()) return fairwos::cmd_sweep(resolve(sweep_opts, "sweep"));
    if (theory->parsed()) {
      if (p_str == "inf") {
        targs.p = std::numeric_limits<double>::infinity();
      } else {
        try {
          targs.p = std::stod(p_str);
        } catch (const std::exception&) {
          throw fairwos::ValidationError("--p must be 1, 2, or inf");
        }
      }
      return fairwos::cmd_theory(resolve(theory_opts, "theory"), targs);
    }
    if (eval->parsed()) return fairwos::cmd_eval(resolve(eval_opts, "eval"), eargs);
  } catch (const fairwos::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fairwos::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
