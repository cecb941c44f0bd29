#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fairwos/counterfactual.hpp"
#include "fairwos/encoder.hpp"
#include "fairwos/error.hpp"
#include "fairwos/fairness.hpp"
#include "fairwos/gnn.hpp"
#include "fairwos/gradcheck.hpp"
#include "fairwos/graph.hpp"
#include "fairwos/metrics.hpp"
#include "fairwos/rng.hpp"
#include "fairwos/synthetic.hpp"

#include "qp_oracle.hpp"

using namespace fairwos;

namespace {

DisparityVec dvec_of(std::vector<double> d) {
  DisparityVec v;
  v.active.assign(d.size(), true);
  v.d = std::move(d);
  return v;
}

double linf(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("uniform lambda spreads mass over active columns only") {
  const LambdaVec l = uniform_lambda({true, false, true});
  CHECK(l.w == std::vector<double>{0.5, 0.0, 0.5});
  CHECK(lambda_norm_sq(l) == doctest::Approx(0.5));
  CHECK_THROWS_WITH_AS(uniform_lambda({false, false}),
                       doctest::Contains("no active pseudo-attributes"), ValidationError);
}

TEST_CASE("equal disparities solve to the uniform point") {
  for (double alpha : {0.01, 1.0, 5.0}) {
    const LambdaVec l = solve_lambda(dvec_of({3.0, 3.0, 3.0, 3.0}), alpha);
    for (double w : l.w) CHECK(w == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("a single column takes all the weight") {
  const LambdaVec l = solve_lambda(dvec_of({9.9}), 2.0);
  CHECK(l.w == std::vector<double>{1.0});
}

TEST_CASE("two-column hand solution with an interior optimum") {
  const LambdaVec l = solve_lambda(dvec_of({1.0, 0.0}), 1.0);
  CHECK(l.w[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(l.w[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(kkt_residual(dvec_of({1.0, 0.0}), 1.0, l) < 1e-12);
}

TEST_CASE("a sufficiently costly column is priced out entirely") {
  const LambdaVec l = solve_lambda(dvec_of({4.0, 0.0}), 1.0);
  CHECK(l.w[0] == 0.0);
  CHECK(l.w[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kkt_residual(dvec_of({4.0, 0.0}), 1.0, l) < 1e-12);
}

TEST_CASE("inactive columns stay at zero and all-inactive throws") {
  DisparityVec d = dvec_of({5.0, 1.0, 2.0});
  d.active[0] = false;
  const LambdaVec l = solve_lambda(d, 1.0);
  CHECK(l.w[0] == 0.0);
  CHECK(l.w[1] + l.w[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(l.w[1] > l.w[2]);  // smaller disparity keeps more weight

  DisparityVec none = dvec_of({1.0});
  none.active[0] = false;
  CHECK_THROWS_WITH_AS(solve_lambda(none, 1.0),
                       doctest::Contains("no active pseudo-attributes"), ValidationError);
}

TEST_CASE("solver agrees with both oracles and passes the kkt audit") {
  Rng rng = make_rng(2024, Stream::bound_trials);
  std::uniform_int_distribution<std::size_t> i_dist(1, 10);
  std::uniform_real_distribution<double> d_dist(0.0, 10.0);
  const double alphas[] = {0.01, 0.05, 1.0, 2.0, 5.0};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> d(i_dist(rng));
    for (double& x : d) x = d_dist(rng);
    const double alpha = alphas[trial % 5];
    const DisparityVec dv = dvec_of(d);
    const LambdaVec l = solve_lambda(dv, alpha);

    double sum = 0.0;
    for (double w : l.w) {
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(kkt_residual(dv, alpha, l) < 1e-8);
    CHECK(linf(l.w, qp_oracle::pgd_lambda(dv, alpha)) < 1e-6);
    CHECK(linf(l.w, qp_oracle::enumerate_lambda(dv, alpha)) < 1e-9);

    // monotone pricing across all pairs
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (d[i] > d[j]) CHECK(l.w[i] <= l.w[j] + 1e-12);
      }
    }
  }
}

TEST_CASE("kkt residual exposes a corrupted solution") {
  const DisparityVec dv = dvec_of({1.0, 0.0});
  LambdaVec l = solve_lambda(dv, 1.0);
  l.w[0] += 0.1;
  l.w[1] -= 0.1;
  CHECK(kkt_residual(dv, 1.0, l) > 1e-3);
}

namespace {

// One node with one counterfactual at a chosen embedding offset.
struct DisparityFixture {
  Mat h{2, 2};
  CfIndex cf;
  std::vector<char> mask{1, 1};

  explicit DisparityFixture(double hx = 1.0, double hy = 0.0, double cx = 0.0, double cy = 1.0) {
    h(0, 0) = hx;
    h(0, 1) = hy;
    h(1, 0) = cx;
    h(1, 1) = cy;
    cf.num_nodes = 2;
    cf.columns = 1;
    cf.k = 1;
    cf.snapshot = embedding_snapshot_id(h);
    cf.column_active = {true};
    cf.slots.resize(2);
    CfEntry e;
    e.node = 1;
    e.dist = squared_distance_rows(h, 0, h, 1);
    cf.slots[0].entries.push_back(e);
    // node 1 has no counterfactual and must not dilute the mean
  }
};

}  // namespace

TEST_CASE("disparity between opposite unit vectors is two") {
  const DisparityFixture f;
  const DisparityVec dv = disparity_vector(f.h, f.h, f.cf, f.mask);
  CHECK(dv.d[0] == doctest::Approx(2.0));
  CHECK(dv.active[0]);
  CHECK(dv.contributing[0] == 1);
  CHECK(disparity(f.h, f.cf, 0, f.mask) == doctest::Approx(2.0));
}

TEST_CASE("identical representations have zero disparity") {
  const DisparityFixture f(0.7, 0.3, 0.7, 0.3);
  CHECK(disparity(f.h, f.cf, 0, f.mask) == 0.0);
}

TEST_CASE("per node disparities average over contributing nodes") {
  Mat h(4, 1);
  h(0, 0) = 0.0;
  h(1, 0) = std::sqrt(2.0);
  h(2, 0) = 0.0;
  h(3, 0) = 2.0;
  CfIndex cf;
  cf.num_nodes = 4;
  cf.columns = 1;
  cf.k = 1;
  cf.snapshot = embedding_snapshot_id(h);
  cf.column_active = {true};
  cf.slots.resize(4);
  cf.slots[0].entries.push_back({1, 2.0});  // node 0: disparity 2
  cf.slots[2].entries.push_back({3, 4.0});  // node 2: disparity 4
  const std::vector<char> mask{1, 1, 1, 1};
  CHECK(disparity(h, cf, 0, mask) == doctest::Approx(3.0));
}

TEST_CASE("disparity refuses a stale snapshot") {
  const DisparityFixture f;
  Mat other = f.h;
  other(0, 0) += 1e-9;
  CHECK_THROWS_AS(disparity(other, f.cf, 0, f.mask), ValidationError);
}

TEST_CASE("all-empty column reports zero and goes inactive for the epoch") {
  DisparityFixture f;
  f.cf.slots[0].entries.clear();
  const DisparityVec dv = disparity_vector(f.h, f.h, f.cf, f.mask);
  CHECK(dv.d[0] == 0.0);
  CHECK_FALSE(dv.active[0]);
}

TEST_CASE("total objective hand values") {
  LambdaVec l;
  l.w = {0.25, 0.25, 0.25, 0.25};
  l.active.assign(4, true);
  CHECK(total_objective(0.5, dvec_of({1, 1, 1, 1}), l, 1.0) == doctest::Approx(1.75));
  CHECK(total_objective(0.5, dvec_of({1, 1, 1, 1}), l, 0.0) == doctest::Approx(0.75));
  CHECK(total_objective(0.5, dvec_of({0, 0, 0, 0}), l, 3.0) == doctest::Approx(0.75));
}

namespace {

struct ObjectiveFixture {
  Graph g;
  Mat x0;
  NeighborOps nb;
  GnnMeta meta;
  GnnParams model;
  std::vector<int> labeled_train;
  std::vector<char> train_mask;
  PseudoAttrs pseudo;
  std::vector<int> plabels;
  CfIndex cf;
  Mat snapshot;
  LambdaVec lambda;

  explicit ObjectiveFixture(std::uint64_t seed = 0, std::size_t nodes = 20,
                            std::size_t attr_cols = 4, int k = 2) {
    SyntheticSpec spec;
    spec.num_nodes = nodes;
    spec.seed = seed + 50;
    g = generate_synthetic(spec);
    const TrainView view(g);
    nb = build_neighbor_ops(view);
    const Mat std_feat = standardized_features(view);
    // raw standardized features as attribute source keeps the fixture cheap
    Mat values(nodes, attr_cols);
    for (std::size_t v = 0; v < nodes; ++v) {
      for (std::size_t c = 0; c < attr_cols; ++c) values(v, c) = std_feat(v, c % std_feat.cols);
    }
    pseudo = binarize_columns(values, view.split_ids(Split::train));
    x0 = values;
    meta.hidden = 8;
    model = init_gnn(x0.cols, meta, seed);
    labeled_train = view.labeled_ids(Split::train);
    train_mask = view.split_mask(Split::train);
    plabels = g.labels;  // fully labeled synthetic graph
    const GnnForward fwd = gnn_forward(x0, nb, meta, model.params);
    snapshot = fwd.embeddings();
    cf = find_counterfactuals(snapshot, pseudo.bits, plabels, k, view.split_ids(Split::train),
                              pseudo.active);
    lambda = uniform_lambda(pseudo.active);
  }

  FairnessObjective objective(double alpha) const {
    return FairnessObjective(x0, nb, meta, labeled_train, g.labels, train_mask, alpha, lambda,
                             &cf, &snapshot);
  }
};

}  // namespace

TEST_CASE("alpha zero reduces bitwise to the plain utility objective") {
  ObjectiveFixture f;
  const FairnessObjective obj = f.objective(0.0);
  CHECK_FALSE(obj.fairness_enabled());

  ParameterSet params = f.model.params;
  const double loss = obj.loss_and_grad(params);

  // independent composition from the public primitives
  const GnnForward fwd = gnn_forward(f.x0, f.nb, f.meta, f.model.params);
  const double ref_loss = cross_entropy_loss(fwd.probs, f.g.labels, f.labeled_train);
  const Mat dlogits = utility_dlogits(fwd.probs, f.g.labels, f.labeled_train);
  ParameterSet ref_params = f.model.params;
  ref_params.zero_grads();
  gnn_backprop(f.x0, f.nb, f.meta, ref_params, fwd, dlogits, Mat());
  CHECK(loss == ref_loss);
  for (std::size_t p = 0; p < params.items().size(); ++p) {
    CHECK(params.items()[p].grad.data == ref_params.items()[p].grad.data);
  }
}

TEST_CASE("fairness term at the snapshot point matches the disparity vector") {
  ObjectiveFixture f;
  const double alpha = 0.7;
  const FairnessObjective obj = f.objective(alpha);
  REQUIRE(obj.fairness_enabled());
  const double loss = obj.loss(f.model.params);
  const double utility = obj.last_utility();

  const DisparityVec dv = disparity_vector(f.snapshot, f.snapshot, f.cf, f.train_mask);
  double expected = 0.0;
  for (std::size_t i = 0; i < dv.d.size(); ++i) expected += alpha * f.lambda.w[i] * dv.d[i];
  CHECK(loss - utility == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("full objective gradient passes the finite difference check") {
  for (std::uint64_t seed : {0ull, 1ull}) {
    ObjectiveFixture f(seed);
    const FairnessObjective obj = f.objective(0.5);
    ParameterSet params = f.model.params;
    const GradCheckReport rep = grad_check(obj, params, seed + 9);
    CHECK(rep.max_rel_err < 1e-4);
  }
}

TEST_CASE("a small sgd step never increases the fixed objective") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ObjectiveFixture f(seed);
    const FairnessObjective obj = f.objective(0.8);
    GnnParams model = f.model;
    OptimizerConfig oc;
    oc.kind = OptimizerConfig::Kind::sgd;
    oc.lr = 1e-3;
    Optimizer opt(oc);
    const double before = obj.loss(model.params);
    const ThetaStepInfo info = update_theta(model, opt, obj);
    const double after = obj.loss(model.params);
    CHECK(after <= before + 1e-12);
    CHECK(info.step_norm > 0.0);
    CHECK(info.utility + info.fairness == doctest::Approx(before));
  }
}

TEST_CASE("pipeline reduction: no finetuning returns the pretrained classifier") {
  SyntheticSpec spec;
  spec.num_nodes = 100;
  spec.seed = 31;
  const Graph g = generate_synthetic(spec);
  TrainConfig cfg;
  cfg.alpha = 0.0;
  cfg.pretrain_epochs = 40;
  cfg.finetune_epochs = 0;
  cfg.encoder_dim = 8;
  cfg.seed = 3;
  const TrainResult res = train_fairwos(g, cfg);

  const TrainView view(g);
  OptimizerConfig oc = cfg.optimizer_config();
  const EncoderParams enc = pretrain_encoder(view, cfg.encoder_dim, cfg.pretrain_epochs,
                                             cfg.seed, oc);
  const PseudoAttrs pseudo = extract_pseudo_attrs(view, enc);
  const PretrainedClassifier pc = pretrain_classifier(view, pseudo.values, cfg.gnn,
                                                      cfg.pretrain_epochs, cfg.seed, oc);
  CHECK(res.model.gnn.params.flat_values() == pc.gnn.params.flat_values());
  CHECK(res.selected_epoch == 0);
  CHECK(res.trace.records.empty());
}

TEST_CASE("training is deterministic and cache-transparent") {
  SyntheticSpec spec;
  spec.num_nodes = 100;
  spec.seed = 17;
  const Graph g = generate_synthetic(spec);
  TrainConfig cfg;
  cfg.pretrain_epochs = 50;
  cfg.finetune_epochs = 5;
  cfg.encoder_dim = 8;
  cfg.alpha = 0.5;
  cfg.seed = 1;

  const TrainResult a = train_fairwos(g, cfg);
  const TrainResult b = train_fairwos(g, cfg);
  CHECK(a.model.gnn.params.flat_values() == b.model.gnn.params.flat_values());
  CHECK(a.model.lambda.w == b.model.lambda.w);
  REQUIRE(a.trace.records.size() == b.trace.records.size());
  for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
    CHECK(a.trace.records[i].loss_total == b.trace.records[i].loss_total);
  }

  // a warm cache must not change a single bit of the result
  PipelineCache cache;
  const TrainResult c = train_fairwos(g, cfg, &cache);
  TrainConfig other = cfg;
  other.alpha = 2.0;
  (void)train_fairwos(g, other, &cache);  // populates nothing new, reuses stages
  const TrainResult d = train_fairwos(g, cfg, &cache);
  CHECK(c.model.gnn.params.flat_values() == a.model.gnn.params.flat_values());
  CHECK(d.model.gnn.params.flat_values() == a.model.gnn.params.flat_values());
  CHECK(d.model.lambda.w == a.model.lambda.w);
}

TEST_CASE("every trace record satisfies the lambda invariants") {
  SyntheticSpec spec;
  spec.num_nodes = 120;
  spec.seed = 23;
  const Graph g = generate_synthetic(spec);
  TrainConfig cfg;
  cfg.pretrain_epochs = 50;
  cfg.finetune_epochs = 8;
  cfg.encoder_dim = 8;
  cfg.alpha = 1.0;
  const TrainResult res = train_fairwos(g, cfg);
  REQUIRE(!res.trace.records.empty());
  for (const EpochRecord& rec : res.trace.records) {
    double sum = 0.0;
    for (std::size_t i = 0; i < rec.lambda.size(); ++i) {
      CHECK(rec.lambda[i] >= 0.0);
      sum += rec.lambda[i];
      if (!res.model.pseudo.active[i]) CHECK(rec.lambda[i] == 0.0);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rec.loss_total == doctest::Approx(rec.loss_utility + rec.loss_fair));
  }
}

TEST_CASE("ablation flags steer the trace") {
  SyntheticSpec spec;
  spec.num_nodes = 100;
  spec.seed = 29;
  const Graph g = generate_synthetic(spec);
  TrainConfig base;
  base.pretrain_epochs = 40;
  base.finetune_epochs = 6;
  base.encoder_dim = 8;
  base.alpha = 1.0;

  TrainConfig no_fair = base;
  no_fair.disable_fairness = true;
  const TrainResult nf = train_fairwos(g, no_fair);
  for (const EpochRecord& rec : nf.trace.records) {
    CHECK(rec.loss_fair == 0.0);
    for (double d : rec.disparity) CHECK(d == 0.0);
  }

  TrainConfig no_update = base;
  no_update.disable_weight_update = true;
  const TrainResult nu = train_fairwos(g, no_update);
  const LambdaVec uni = uniform_lambda(nu.model.pseudo.active);
  for (const EpochRecord& rec : nu.trace.records) CHECK(rec.lambda == uni.w);

  TrainConfig frozen = base;
  frozen.freeze_counterfactuals = true;
  const TrainResult fz = train_fairwos(g, frozen);
  const LambdaVec uni2 = uniform_lambda(fz.model.pseudo.active);
  for (const EpochRecord& rec : fz.trace.records) CHECK(rec.lambda == uni2.w);
  CHECK(fz.trace.final_loss.has_value());

  TrainConfig no_enc = base;
  no_enc.disable_encoder = true;
  const TrainResult ne = train_fairwos(g, no_enc);
  CHECK_FALSE(ne.model.encoder.has_value());
  const Mat std_feat = standardized_features(TrainView(g));
  CHECK(ne.model.x0.data == std_feat.data);

  // the unablated run keeps the encoder and updates lambda away from uniform
  const TrainResult full = train_fairwos(g, base);
  CHECK(full.model.encoder.has_value());
  bool moved = false;
  for (const EpochRecord& rec : full.trace.records) {
    if (rec.lambda != uniform_lambda(full.model.pseudo.active).w) moved = true;
  }
  CHECK(moved);
}

TEST_CASE("objective is softly monotone during default finetuning") {
  const SyntheticSpec spec;
  const Graph g = generate_synthetic(spec);
  TrainConfig cfg;
  cfg.pretrain_epochs = 300;
  const TrainResult res = train_fairwos(g, cfg);
  REQUIRE(res.trace.records.size() >= 2);
  std::size_t down = 0, total = 0;
  for (std::size_t i = 0; i + 1 < res.trace.records.size(); ++i) {
    ++total;
    if (res.trace.records[i + 1].objective <= res.trace.records[i].objective + 1e-12) ++down;
  }
  CHECK(double(down) / double(total) >= 0.9);
}

TEST_CASE("alpha zero finetuning preserves utility") {
  const SyntheticSpec base;
  double diff_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticSpec spec = base;
    spec.seed = base.seed + 0x100000001b3ULL * seed;
    const Graph g = generate_synthetic(spec);
    TrainConfig cfg;
    cfg.alpha = 0.0;
    cfg.pretrain_epochs = 300;
    cfg.seed = seed;
    PipelineCache cache;
    const TrainResult res = train_fairwos(g, cfg, &cache);

    const TrainView view(g);
    const NeighborOps nb = build_neighbor_ops(view);
    const std::vector<int> test_ids = view.labeled_ids(Split::test);
    const GnnForward tuned = gnn_forward(res.model.x0, nb, res.model.gnn.meta,
                                         res.model.gnn.params);
    const GnnForward pre = gnn_forward(res.model.x0, nb, cache.classifier->gnn.meta,
                                       cache.classifier->gnn.params);
    diff_sum += accuracy_on(tuned.probs, g.labels, test_ids) -
                accuracy_on(pre.probs, g.labels, test_ids);
  }
  CHECK(std::abs(diff_sum / 10.0) <= 0.01);
}
