#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairwos/counterfactual.hpp"
#include "fairwos/encoder.hpp"
#include "fairwos/gnn.hpp"
#include "fairwos/gradcheck.hpp"
#include "fairwos/graph.hpp"

namespace fairwos {

// Per-attribute regularizer weights on the probability simplex over active
// columns: entries are nonnegative, inactive columns are exactly zero, and
// the active entries sum to 1.
struct LambdaVec {
  std::vector<double> w;
  std::vector<bool> active;
};

LambdaVec uniform_lambda(const std::vector<bool>& active);
double lambda_norm_sq(const LambdaVec& l);

// Per-column disparity: mean over training nodes that have at least one
// retrieved counterfactual of the node's mean squared embedding distance to
// its counterfactuals. A column with no contributing nodes reports 0 and is
// marked inactive.
struct DisparityVec {
  std::vector<double> d;
  std::vector<bool> active;
  std::vector<int> contributing;     // training nodes with >= 1 counterfactual
  std::vector<int> shortfall_nodes;  // training nodes with fewer than k
};

// Distances run from h_query rows to h_cf rows, so the same routine serves
// both the snapshot-consistent case (both arguments the snapshot) and the
// live-versus-frozen case inside the training objective.
DisparityVec disparity_vector(const Mat& h_query, const Mat& h_cf, const CfIndex& cf,
                              const std::vector<char>& train_mask);

// Single-column accessor; requires h to be the exact matrix the index was
// built from (checked via snapshot id).
double disparity(const Mat& h, const CfIndex& cf, std::size_t column,
                 const std::vector<char>& train_mask);

// utility + alpha * sum_i lambda_i d_i + ||lambda||^2.
double total_objective(double utility, const DisparityVec& d, const LambdaVec& l, double alpha);

// Closed-form minimizer of
//   sum_i c_i lambda_i + ||lambda||^2,  c = alpha * d,
// over the simplex on active columns: sort the active costs descending,
// find the support segment whose multiplier b = -(2 + sum c) / |support|
// prices the included columns nonnegative and the excluded ones out, then
// lambda_i = max(0, (-b - c_i) / 2). Larger disparity never gets a larger
// weight. Throws when no column is active.
LambdaVec solve_lambda(const DisparityVec& d, double alpha);

// Max KKT violation of a candidate solution: stationarity residual on the
// support, dual feasibility off it, simplex feasibility. Zero at the exact
// minimizer.
double kkt_residual(const DisparityVec& d, double alpha, const LambdaVec& l);

// Training objective in the classifier parameters: utility cross-entropy
// plus the weighted disparity of live embeddings against the frozen
// counterfactual snapshot. Gradients flow through the live side only.
class FairnessObjective : public DifferentiableProgram {
 public:
  FairnessObjective(const Mat& x0, const NeighborOps& nb, const GnnMeta& meta,
                    std::vector<int> labeled_train, const std::vector<int>& labels,
                    std::vector<char> train_mask, double alpha, const LambdaVec& lambda,
                    const CfIndex* cf, const Mat* snapshot);

  double loss(const ParameterSet& params) const override;
  double loss_and_grad(ParameterSet& params) const override;

  double last_utility() const { return last_utility_; }
  double last_fairness() const { return last_fairness_; }
  bool fairness_enabled() const { return fairness_on_; }

 private:
  double fairness_term(const Mat& emb, Mat* dh) const;

  const Mat& x0_;
  const NeighborOps& nb_;
  GnnMeta meta_;
  std::vector<int> labeled_train_;
  const std::vector<int>& labels_;
  std::vector<char> train_mask_;
  double alpha_;
  const LambdaVec& lambda_;
  const CfIndex* cf_;
  const Mat* snapshot_;
  std::vector<int> contributing_;  // per column, fixed by the index
  bool fairness_on_ = false;
  mutable double last_utility_ = 0.0;
  mutable double last_fairness_ = 0.0;
};

struct ThetaStepInfo {
  double utility = 0.0;
  double fairness = 0.0;
  double grad_norm = 0.0;
  double step_norm = 0.0;
  std::vector<double> flat_grad;  // for secant curvature estimates
};

// One full-batch optimizer step on the objective. The returned info reflects
// the pre-step parameter point.
ThetaStepInfo update_theta(GnnParams& model, Optimizer& opt, const FairnessObjective& objective);

struct EpochRecord {
  int epoch = 0;
  double loss_utility = 0.0;
  double loss_fair = 0.0;
  double loss_total = 0.0;  // utility + fairness, the quantity the step descends
  double objective = 0.0;   // total_objective including ||lambda||^2
  std::vector<double> disparity;
  std::vector<double> lambda;
  double grad_norm = 0.0;
  double theta_step_norm = 0.0;
  std::optional<double> grad_diff_norm;
  double val_acc = 0.0;
  std::optional<double> val_dsp;
  std::optional<double> val_deo;
};

struct TrainingTrace {
  std::vector<EpochRecord> records;
  // Loss after the last recorded step, under that step's objective. Each
  // record's loss_total is a pre-step value, so without this trailer the last
  // step's decrease would be invisible to descent-based diagnostics.
  std::optional<double> final_loss;
};

struct TrainConfig {
  std::string mode = "fairwos";  // fairwos | vanilla
  GnnMeta gnn;
  std::size_t encoder_dim = 16;
  double alpha = 0.08;
  int k = 1;
  std::size_t pretrain_epochs = 1000;
  std::size_t finetune_epochs = 15;
  double learning_rate = 0.001;
  // Defaults to the fine-tuning horizon: with checkpoint retention doing the
  // model selection, stopping before the horizon only hides later epochs.
  int patience = 15;
  std::uint64_t seed = 0;
  OptimizerConfig::Kind optimizer = OptimizerConfig::Kind::adam;
  bool disable_encoder = false;
  bool disable_fairness = false;
  bool disable_weight_update = false;
  bool freeze_counterfactuals = false;  // diagnostic: fixed index, snapshot, and lambda

  OptimizerConfig optimizer_config() const {
    OptimizerConfig oc;
    oc.kind = optimizer;
    oc.lr = learning_rate;
    return oc;
  }
  double effective_alpha() const { return disable_fairness ? 0.0 : alpha; }
};

struct ModelState {
  std::string mode = "fairwos";
  std::optional<EncoderParams> encoder;
  PseudoAttrs pseudo;  // empty for vanilla
  Mat x0;
  GnnParams gnn;
  LambdaVec lambda;
  std::vector<int> plabels;  // empty for vanilla
};

struct TrainResult {
  ModelState model;
  TrainingTrace trace;
  double encoder_val_acc = 0.0;
  double pretrain_val_acc = 0.0;
  int selected_epoch = 0;  // 0 = pretrained state won
};

// Reusable stage outputs for runs that share a seed and pretraining setup
// (sweeps over alpha/k). Filled on first use; callers must not share a cache
// across different graphs, seeds, or pretraining configs.
struct PipelineCache {
  std::optional<EncoderParams> encoder;
  std::optional<PseudoAttrs> pseudo;
  std::optional<PretrainedClassifier> classifier;
  std::optional<std::vector<int>> plabels;
};

// The full pipeline: encoder pretraining, pseudo-attribute extraction,
// classifier pretraining, pseudo-labels, then alternating fine-tuning
// (rebuild counterfactuals, step theta against the frozen snapshot, re-solve
// lambda) with composite early stopping on val accuracy minus val
// statistical parity gap.
TrainResult train_fairwos(const Graph& g, const TrainConfig& cfg,
                          PipelineCache* cache = nullptr);

// Backbone on standardized raw features, utility loss only. Shares the
// result shape so evaluation code treats both uniformly.
TrainResult train_vanilla(const Graph& g, const TrainConfig& cfg);

}  // namespace fairwos
