#include "fairwos/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "fairwos/bounds.hpp"
#include "fairwos/error.hpp"
#include "fairwos/graph_io.hpp"
#include "fairwos/metrics.hpp"
#include "fairwos/serialize.hpp"

namespace fairwos {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json config_echo_json(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.echo()) j[k] = v;
  return j;
}

struct SeedMetrics {
  std::uint64_t seed = 0;
  double acc = 0.0;
  std::optional<double> dsp, deo;
  int selected_epoch = 0;
  double pretrain_val_acc = 0.0;
  double encoder_val_acc = 0.0;
};

json tally_json(const GroupTally& t) {
  json j;
  j["size"] = t.size;
  j["pred_pos"] = t.pred_pos;
  j["labeled"] = t.labeled;
  j["correct"] = t.correct;
  j["y_pos"] = t.y_pos;
  j["true_pos"] = t.true_pos;
  return j;
}

json seed_metrics_json(const SeedMetrics& m) {
  json j;
  j["seed"] = m.seed;
  j["acc"] = m.acc;
  j["dsp"] = m.dsp ? json(*m.dsp) : json(nullptr);
  j["deo"] = m.deo ? json(*m.deo) : json(nullptr);
  j["selected_epoch"] = m.selected_epoch;
  j["pretrain_val_acc"] = m.pretrain_val_acc;
  j["encoder_val_acc"] = m.encoder_val_acc;
  return j;
}

void add_stat(json& agg, const std::string& name, const std::vector<double>& xs) {
  if (xs.empty()) {
    agg[name + "_mean"] = nullptr;
    agg[name + "_std"] = nullptr;
    return;
  }
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  agg[name + "_mean"] = mean;
  agg[name + "_std"] = std::sqrt(var);
}

json aggregate_json(const std::vector<SeedMetrics>& rows) {
  std::vector<double> acc, dsp, deo;
  for (const auto& r : rows) {
    acc.push_back(r.acc);
    if (r.dsp) dsp.push_back(*r.dsp);
    if (r.deo) deo.push_back(*r.deo);
  }
  json agg = json::object();
  add_stat(agg, "acc", acc);
  add_stat(agg, "dsp", dsp);
  add_stat(agg, "deo", deo);
  return agg;
}

// Test-split metrics of a trained model on its training graph.
SeedMetrics evaluate_test(const Graph& g, const TrainResult& res, std::uint64_t seed) {
  const TrainView view(g);
  const NeighborOps nb = build_neighbor_ops(view);
  const GnnForward fwd = gnn_forward(res.model.x0, nb, res.model.gnn.meta, res.model.gnn.params);
  const std::vector<int> preds = threshold_predictions(fwd.probs);
  const FairnessReport rep =
      fairness_metrics(preds, g.labels, g.has_sensitive ? g.sensitive : std::vector<int>{},
                       view.labeled_ids(Split::test));
  SeedMetrics m;
  m.seed = seed;
  m.acc = rep.accuracy;
  m.dsp = rep.delta_sp;
  m.deo = rep.delta_eo;
  m.selected_epoch = res.selected_epoch;
  m.pretrain_val_acc = res.pretrain_val_acc;
  m.encoder_val_acc = res.encoder_val_acc;
  return m;
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << "\n";
}

TrainResult run_one(const Graph& g, const RunConfig& cfg, std::uint64_t seed,
                    PipelineCache* cache) {
  const TrainConfig tc = to_train_config(cfg, seed);
  if (cfg.mode == "vanilla") return train_vanilla(g, tc);
  return train_fairwos(g, tc, cache);
}

}  // namespace

int cmd_generate(const RunConfig& cfg) {
  if (!cfg.use_synthetic) {
    throw ValidationError("generate: config must select the synthetic dataset");
  }
  fs::create_directories(cfg.out_dir);
  const Graph g = generate_synthetic(cfg.synthetic);
  const std::string nodes = cfg.out_dir + "/nodes.csv";
  const std::string edges = cfg.out_dir + "/edges.csv";
  save_graph_csv(g, nodes, edges);

  std::size_t train = 0, val = 0, test = 0, labeled = 0, positive = 0;
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    switch (g.splits[i]) {
      case Split::train: ++train; break;
      case Split::val: ++val; break;
      case Split::test: ++test; break;
    }
    if (g.labels[i] != -1) {
      ++labeled;
      positive += static_cast<std::size_t>(g.labels[i]);
    }
  }
  std::cout << "generated " << g.num_nodes << " nodes, " << g.edges.size() << " edges"
            << " (mean degree "
            << 2.0 * static_cast<double>(g.edges.size()) / static_cast<double>(g.num_nodes)
            << ")\n"
            << "splits train/val/test: " << train << "/" << val << "/" << test << "\n"
            << "labeled " << labeled << ", positive rate "
            << static_cast<double>(positive) / static_cast<double>(labeled) << "\n"
            << "wrote " << nodes << ", " << edges << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<SeedMetrics> rows;
  json per_seed = json::array();
  json seed_times = json::array();
  for (const std::uint64_t seed : cfg.seeds) {
    const auto ts = std::chrono::steady_clock::now();
    const Graph g = load_dataset(cfg, seed);
    const TrainResult res = run_one(g, cfg, seed, nullptr);
    const SeedMetrics m = evaluate_test(g, res, seed);
    rows.push_back(m);
    per_seed.push_back(seed_metrics_json(m));

    const std::string seed_dir = cfg.out_dir + "/seed_" + std::to_string(seed);
    fs::create_directories(seed_dir);
    save_trace_jsonl(res.trace, seed_dir + "/trace.jsonl");
    save_checkpoint(res.model, seed, seed_dir + "/checkpoint.json");
    if (cfg.mode == "fairwos") {
      export_pseudo_attrs_csv(res.model.pseudo, seed_dir + "/pseudo_attrs.csv");
      if (cfg.export_counterfactuals && res.model.pseudo.num_active() > 0) {
        const TrainView view(g);
        const NeighborOps nb = build_neighbor_ops(view);
        const GnnForward fwd =
            gnn_forward(res.model.x0, nb, res.model.gnn.meta, res.model.gnn.params);
        const CfIndex cf = find_counterfactuals(
            fwd.embeddings(), res.model.pseudo.bits, res.model.plabels,
            std::max(cfg.k, 1), view.split_ids(Split::train), res.model.pseudo.active);
        dump_counterfactuals_csv(cf, seed_dir + "/counterfactuals.csv");
      }
    }
    if (cfg.timing) seed_times.push_back(seconds_since(ts));
  }

  json report;
  report["command"] = "train";
  report["config"] = config_echo_json(cfg);
  report["per_seed"] = per_seed;
  report["aggregate"] = aggregate_json(rows);
  if (cfg.timing) {
    json rt;
    rt["total"] = seconds_since(t0);
    rt["per_seed"] = seed_times;
    report["runtime_s"] = rt;
  }
  report["timestamp"] = timestamp_utc();
  write_json(report, cfg.out_dir + "/report.json");

  const json& agg = report["aggregate"];
  std::cout << "train: " << rows.size() << " seeds, acc_mean "
            << agg["acc_mean"].dump() << ", dsp_mean " << agg["dsp_mean"].dump()
            << ", deo_mean " << agg["deo_mean"].dump() << "\n"
            << "wrote " << cfg.out_dir << "/report.json\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  if (cfg.mode != "fairwos") throw ValidationError("sweep: only the fairwos mode sweeps");
  fs::create_directories(cfg.out_dir);
  const auto t0 = std::chrono::steady_clock::now();

  const std::vector<double> alphas =
      cfg.alpha_grid.empty() ? std::vector<double>{cfg.alpha} : cfg.alpha_grid;
  const std::vector<int> ks = cfg.k_grid.empty() ? std::vector<int>{cfg.k} : cfg.k_grid;

  // Grid cells share their pretraining per seed: alpha and k only steer the
  // fine-tuning phase, so the encoder, pretrained classifier, and
  // pseudo-labels are reused across cells.
  struct Cell {
    double alpha;
    int k;
    std::vector<SeedMetrics> rows;
  };
  std::vector<Cell> cells;
  for (const double a : alphas) {
    for (const int k : ks) cells.push_back({a, k, {}});
  }

  for (const std::uint64_t seed : cfg.seeds) {
    const Graph g = load_dataset(cfg, seed);
    PipelineCache cache;
    for (Cell& cell : cells) {
      RunConfig cell_cfg = cfg;
      cell_cfg.alpha = cell.alpha;
      cell_cfg.k = cell.k;
      const TrainResult res = run_one(g, cell_cfg, seed, &cache);
      cell.rows.push_back(evaluate_test(g, res, seed));
    }
  }

  json cells_json = json::array();
  for (const Cell& cell : cells) {
    json cj;
    cj["alpha"] = cell.alpha;
    cj["k"] = cell.k;
    json per_seed = json::array();
    for (const auto& r : cell.rows) per_seed.push_back(seed_metrics_json(r));
    cj["per_seed"] = per_seed;
    cj["aggregate"] = aggregate_json(cell.rows);
    cells_json.push_back(std::move(cj));
  }

  json report;
  report["command"] = "sweep";
  report["config"] = config_echo_json(cfg);
  report["cells"] = cells_json;
  if (cfg.timing) {
    json rt;
    rt["total"] = seconds_since(t0);
    report["runtime_s"] = rt;
  }
  report["timestamp"] = timestamp_utc();
  write_json(report, cfg.out_dir + "/sweep_report.json");
  std::cout << "sweep: " << cells.size() << " cells x " << cfg.seeds.size() << " seeds\n"
            << "wrote " << cfg.out_dir << "/sweep_report.json\n";
  return 0;
}

namespace {

Mat rebuild_x0(const Graph& g, const Checkpoint& ckpt) {
  const TrainView view(g);
  if (ckpt.input == "encoder") {
    if (!ckpt.encoder) throw ValidationError("checkpoint: encoder input without encoder params");
    return encoder_embed(view, *ckpt.encoder);
  }
  return standardized_features(view);
}

}  // namespace

int cmd_theory(const RunConfig& cfg, const TheoryArgs& args) {
  const std::string run_dir = args.run_dir.empty() ? cfg.out_dir : args.run_dir;
  const std::uint64_t seed =
      args.seed >= 0 ? static_cast<std::uint64_t>(args.seed) : cfg.seeds.front();
  const std::string seed_dir = run_dir + "/seed_" + std::to_string(seed);

  const Checkpoint ckpt = load_checkpoint(seed_dir + "/checkpoint.json");
  const Graph g = load_dataset(cfg, seed);
  const TrainView view(g);
  const Mat x0 = rebuild_x0(g, ckpt);
  const NeighborOps nb = build_neighbor_ops(view);

  const PerturbationBoundReport pert =
      check_counterfactual_bound(ckpt.gnn, x0, nb, args.trials, args.p, seed);

  json report;
  report["command"] = "theory";
  report["seed"] = seed;
  json pj;
  pj["p"] = args.p == std::numeric_limits<double>::infinity() ? json("inf") : json(args.p);
  pj["trials"] = pert.trials;
  pj["passed"] = pert.passed;
  pj["bound"] = pert.bound;
  pj["max_observed"] = pert.max_observed;
  pj["all_pass"] = pert.all_pass;
  json samples = json::array();
  for (const PerturbationTrial& t : pert.samples) {
    json sj;
    sj["node"] = t.node;
    sj["column"] = t.column;
    sj["sign"] = t.sign;
    sj["observed"] = t.observed;
    sj["pass"] = t.pass;
    samples.push_back(std::move(sj));
  }
  pj["samples"] = std::move(samples);
  report["perturbation"] = pj;

  json cj;
  const TrainingTrace trace = load_trace_jsonl(seed_dir + "/trace.jsonl");
  const bool diagnostic = cfg.optimizer == "sgd" && cfg.freeze_counterfactuals;
  if (trace.records.empty()) {
    cj["applicable"] = false;
    cj["reason"] = "no fine-tuning trace";
  } else if (!diagnostic) {
    cj["applicable"] = false;
    cj["reason"] =
        "trace was not recorded under the fixed-objective descent mode "
        "(optimizer = sgd with freeze_counterfactuals = true)";
  } else {
    const double l_est = estimate_lipschitz(trace);
    const ConvergenceBoundReport conv =
        check_convergence_bound(trace, cfg.learning_rate, l_est);
    cj["applicable"] = true;
    cj["l_estimate"] = conv.l_estimate;
    cj["m_coeff"] = conv.m_coeff;
    cj["lhs_min_grad_sq"] = conv.lhs_min_grad_sq;
    cj["rhs"] = conv.rhs;
    cj["steps"] = conv.steps;
    cj["assumption_violated"] = conv.assumption_violated;
    cj["running_min_monotone"] = conv.running_min_monotone;
    cj["pass"] = conv.pass;
    if (!conv.note.empty()) cj["note"] = conv.note;
  }
  report["convergence"] = cj;
  report["timestamp"] = timestamp_utc();
  write_json(report, run_dir + "/theory.json");

  std::cout << "perturbation bound: " << pert.passed << "/" << pert.trials
            << " trials within bound " << pert.bound << " (max observed " << pert.max_observed
            << ") -> " << (pert.all_pass ? "PASS" : "FAIL") << "\n";
  if (cj["applicable"].get<bool>()) {
    if (cj["assumption_violated"].get<bool>()) {
      std::cout << "convergence bound: assumptions violated ("
                << cj.value("note", std::string("")) << ")\n";
    } else {
      std::cout << "convergence bound: min grad^2 " << cj["lhs_min_grad_sq"].get<double>()
                << " <= " << cj["rhs"].get<double>() << " -> "
                << (cj["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
    }
  } else {
    std::cout << "convergence bound: not applicable (" << cj["reason"].get<std::string>()
              << ")\n";
  }
  std::cout << "wrote " << run_dir << "/theory.json\n";
  return pert.all_pass ? 0 : 1;
}

int cmd_eval(const RunConfig& cfg, const EvalArgs& args) {
  const std::string run_dir = args.run_dir.empty() ? cfg.out_dir : args.run_dir;
  const std::uint64_t seed =
      args.seed >= 0 ? static_cast<std::uint64_t>(args.seed) : cfg.seeds.front();
  const std::string ckpt_path = args.checkpoint.empty()
                                    ? run_dir + "/seed_" + std::to_string(seed) +
                                          "/checkpoint.json"
                                    : args.checkpoint;
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Graph g = load_dataset(cfg, seed);
  const TrainView view(g);
  const Mat x0 = rebuild_x0(g, ckpt);
  const NeighborOps nb = build_neighbor_ops(view);
  const GnnForward fwd = gnn_forward(x0, nb, ckpt.gnn.meta, ckpt.gnn.params);
  const std::vector<int> preds = threshold_predictions(fwd.probs);
  const FairnessReport rep =
      fairness_metrics(preds, g.labels, g.has_sensitive ? g.sensitive : std::vector<int>{},
                       view.labeled_ids(Split::test));

  json report;
  report["command"] = "eval";
  report["checkpoint"] = ckpt_path;
  report["seed"] = seed;
  report["test_evaluated"] = rep.evaluated;
  report["acc"] = rep.accuracy;
  report["dsp"] = rep.delta_sp ? json(*rep.delta_sp) : json(nullptr);
  report["deo"] = rep.delta_eo ? json(*rep.delta_eo) : json(nullptr);
  report["group0"] = tally_json(rep.group0);
  report["group1"] = tally_json(rep.group1);
  report["timestamp"] = timestamp_utc();
  fs::create_directories(run_dir);
  write_json(report, run_dir + "/eval.json");

  std::cout << "eval: acc " << rep.accuracy << ", dsp " << report["dsp"].dump() << ", deo "
            << report["deo"].dump() << " over " << rep.evaluated << " test nodes\n"
            << "wrote " << run_dir << "/eval.json\n";
  return 0;
}

}  // namespace fairwos
