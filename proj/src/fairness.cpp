#include "fairwos/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairwos/error.hpp"
#include "fairwos/metrics.hpp"

namespace fairwos {

LambdaVec uniform_lambda(const std::vector<bool>& active) {
  LambdaVec l;
  l.active = active;
  l.w.assign(active.size(), 0.0);
  std::size_t m = 0;
  for (bool a : active) {
    if (a) ++m;
  }
  if (m == 0) throw ValidationError("no active pseudo-attributes");
  const double share = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i]) l.w[i] = share;
  }
  return l;
}

double lambda_norm_sq(const LambdaVec& l) {
  double s = 0.0;
  for (double w : l.w) s += w * w;
  return s;
}

DisparityVec disparity_vector(const Mat& h_query, const Mat& h_cf, const CfIndex& cf,
                              const std::vector<char>& train_mask) {
  if (h_query.rows != cf.num_nodes || h_cf.rows != cf.num_nodes) {
    throw ShapeError("disparity_vector: embedding rows do not match index");
  }
  if (train_mask.size() != cf.num_nodes) {
    throw ShapeError("disparity_vector: train mask size mismatch");
  }
  DisparityVec out;
  out.d.assign(cf.columns, 0.0);
  out.active.assign(cf.columns, false);
  out.contributing.assign(cf.columns, 0);
  out.shortfall_nodes.assign(cf.columns, 0);
  for (std::size_t i = 0; i < cf.columns; ++i) {
    if (!cf.column_active[i]) continue;
    double sum = 0.0;
    int contributing = 0;
    for (std::size_t v = 0; v < cf.num_nodes; ++v) {
      if (!train_mask[v]) continue;
      const CfSlot& slot = cf.at(v, i);
      if (slot.shortfall) ++out.shortfall_nodes[i];
      if (slot.entries.empty()) continue;
      double node_sum = 0.0;
      for (const CfEntry& e : slot.entries) {
        node_sum += squared_distance_rows(h_query, v, h_cf, static_cast<std::size_t>(e.node));
      }
      sum += node_sum / static_cast<double>(slot.entries.size());
      ++contributing;
    }
    out.contributing[i] = contributing;
    if (contributing > 0) {
      out.d[i] = sum / static_cast<double>(contributing);
      out.active[i] = true;
    }
  }
  return out;
}

double disparity(const Mat& h, const CfIndex& cf, std::size_t column,
                 const std::vector<char>& train_mask) {
  if (column >= cf.columns) throw ValidationError("disparity: column out of range");
  if (embedding_snapshot_id(h) != cf.snapshot) {
    throw ValidationError(
        "disparity: embeddings do not match the snapshot the index was built from");
  }
  return disparity_vector(h, h, cf, train_mask).d[column];
}

double total_objective(double utility, const DisparityVec& d, const LambdaVec& l, double alpha) {
  if (d.d.size() != l.w.size()) throw ShapeError("total_objective: size mismatch");
  double fair = 0.0;
  for (std::size_t i = 0; i < d.d.size(); ++i) fair += l.w[i] * d.d[i];
  return utility + alpha * fair + lambda_norm_sq(l);
}

LambdaVec solve_lambda(const DisparityVec& d, double alpha) {
  if (alpha < 0.0) throw ValidationError("solve_lambda: alpha must be nonnegative");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < d.active.size(); ++i) {
    if (d.active[i]) idx.push_back(i);
  }
  if (idx.empty()) throw ValidationError("no active pseudo-attributes");

  LambdaVec l;
  l.active = d.active;
  l.w.assign(d.active.size(), 0.0);

  const std::size_t m = idx.size();
  // Candidate values v_i = -c_i / 2; the solution is their euclidean
  // projection onto the simplex, which realizes the b-segment rule stated in
  // the header: the support is the tail of smallest costs.
  std::vector<std::pair<double, std::size_t>> v(m);
  for (std::size_t t = 0; t < m; ++t) {
    v[t] = {-(alpha * d.d[idx[t]]) / 2.0, idx[t]};
  }
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  double cum = 0.0;
  double tau = 0.0;
  std::size_t rho = 0;
  for (std::size_t t = 0; t < m; ++t) {
    cum += v[t].first;
    const double cand = (cum - 1.0) / static_cast<double>(t + 1);
    if (v[t].first - cand > 0.0) {
      rho = t + 1;
      tau = cand;
    }
  }
  for (std::size_t t = 0; t < m; ++t) {
    l.w[v[t].second] = t < rho ? std::max(0.0, v[t].first - tau) : 0.0;
  }
  return l;
}

double kkt_residual(const DisparityVec& d, double alpha, const LambdaVec& l) {
  if (d.d.size() != l.w.size()) throw ShapeError("kkt_residual: size mismatch");
  constexpr double kSupportTol = 1e-12;
  double sum = 0.0;
  double b_acc = 0.0;
  std::size_t support = 0;
  double res = 0.0;
  for (std::size_t i = 0; i < l.w.size(); ++i) {
    if (!d.active[i]) {
      res = std::max(res, std::abs(l.w[i]));  // inactive columns pinned to zero
      continue;
    }
    sum += l.w[i];
    res = std::max(res, std::max(0.0, -l.w[i]));
    if (l.w[i] > kSupportTol) {
      b_acc += -(alpha * d.d[i]) - 2.0 * l.w[i];
      ++support;
    }
  }
  if (support == 0) return 1.0;
  const double b = b_acc / static_cast<double>(support);
  for (std::size_t i = 0; i < l.w.size(); ++i) {
    if (!d.active[i]) continue;
    const double c = alpha * d.d[i];
    if (l.w[i] > kSupportTol) {
      res = std::max(res, std::abs(c + 2.0 * l.w[i] + b));  // stationarity on the support
    } else {
      res = std::max(res, std::max(0.0, -(c + b)));  // priced out: multiplier must be >= 0
    }
  }
  res = std::max(res, std::abs(sum - 1.0));
  return res;
}

FairnessObjective::FairnessObjective(const Mat& x0, const NeighborOps& nb, const GnnMeta& meta,
                                     std::vector<int> labeled_train,
                                     const std::vector<int>& labels,
                                     std::vector<char> train_mask, double alpha,
                                     const LambdaVec& lambda, const CfIndex* cf,
                                     const Mat* snapshot)
    : x0_(x0),
      nb_(nb),
      meta_(meta),
      labeled_train_(std::move(labeled_train)),
      labels_(labels),
      train_mask_(std::move(train_mask)),
      alpha_(alpha),
      lambda_(lambda),
      cf_(cf),
      snapshot_(snapshot) {
  if (labeled_train_.empty()) throw ValidationError("fairness objective: no labeled training nodes");
  if (alpha_ > 0.0 && cf_ != nullptr) {
    if (snapshot_ == nullptr) throw ValidationError("fairness objective: missing snapshot");
    if (train_mask_.size() != cf_->num_nodes) {
      throw ShapeError("fairness objective: train mask size mismatch");
    }
    contributing_.assign(cf_->columns, 0);
    for (std::size_t i = 0; i < cf_->columns; ++i) {
      if (!cf_->column_active[i]) continue;
      for (std::size_t v = 0; v < cf_->num_nodes; ++v) {
        if (train_mask_[v] && !cf_->at(v, i).entries.empty()) ++contributing_[i];
      }
      if (contributing_[i] > 0 && lambda_.w[i] > 0.0) fairness_on_ = true;
    }
  }
}

double FairnessObjective::fairness_term(const Mat& emb, Mat* dh) const {
  double total = 0.0;
  for (std::size_t i = 0; i < cf_->columns; ++i) {
    if (!cf_->column_active[i] || contributing_[i] == 0) continue;
    const double li = lambda_.w[i];
    if (li == 0.0) continue;
    const double col_coeff = alpha_ * li / static_cast<double>(contributing_[i]);
    for (std::size_t v = 0; v < cf_->num_nodes; ++v) {
      if (!train_mask_[v]) continue;
      const CfSlot& slot = cf_->at(v, i);
      if (slot.entries.empty()) continue;
      const double node_coeff = col_coeff / static_cast<double>(slot.entries.size());
      for (const CfEntry& e : slot.entries) {
        const auto j = static_cast<std::size_t>(e.node);
        total += node_coeff * squared_distance_rows(emb, v, *snapshot_, j);
        if (dh) {
          double* drow = dh->row_ptr(v);
          const double* hv = emb.row_ptr(v);
          const double* hj = snapshot_->row_ptr(j);
          for (std::size_t c = 0; c < emb.cols; ++c) {
            drow[c] += node_coeff * 2.0 * (hv[c] - hj[c]);
          }
        }
      }
    }
  }
  return total;
}

double FairnessObjective::loss(const ParameterSet& params) const {
  const GnnForward fwd = gnn_forward(x0_, nb_, meta_, params);
  last_utility_ = cross_entropy_loss(fwd.probs, labels_, labeled_train_);
  last_fairness_ = fairness_on_ ? fairness_term(fwd.embeddings(), nullptr) : 0.0;
  return last_utility_ + last_fairness_;
}

double FairnessObjective::loss_and_grad(ParameterSet& params) const {
  params.zero_grads();
  const GnnForward fwd = gnn_forward(x0_, nb_, meta_, params);
  last_utility_ = cross_entropy_loss(fwd.probs, labels_, labeled_train_);
  const Mat dlogits = utility_dlogits(fwd.probs, labels_, labeled_train_);
  Mat dh_extra;
  if (fairness_on_) {
    const Mat& emb = fwd.embeddings();
    dh_extra = Mat(emb.rows, emb.cols);
    last_fairness_ = fairness_term(emb, &dh_extra);
  } else {
    last_fairness_ = 0.0;
  }
  gnn_backprop(x0_, nb_, meta_, params, fwd, dlogits, dh_extra);
  return last_utility_ + last_fairness_;
}

ThetaStepInfo update_theta(GnnParams& model, Optimizer& opt, const FairnessObjective& objective) {
  ThetaStepInfo info;
  objective.loss_and_grad(model.params);
  info.utility = objective.last_utility();
  info.fairness = objective.last_fairness();
  info.grad_norm = model.params.grad_norm();
  info.flat_grad.reserve(model.params.total_size());
  for (const auto& p : model.params.items()) {
    info.flat_grad.insert(info.flat_grad.end(), p.grad.data.begin(), p.grad.data.end());
  }
  const std::vector<double> before = model.params.flat_values();
  opt.step(model.params);
  const std::vector<double> after = model.params.flat_values();
  double s = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double diff = after[i] - before[i];
    s += diff * diff;
  }
  info.step_norm = std::sqrt(s);
  return info;
}

namespace {

struct ValScore {
  double acc = 0.0;
  std::optional<double> dsp, deo;
  // Composite selection score: accuracy minus the parity gap when the gap is
  // measurable, plain accuracy otherwise.
  double composite() const { return acc - dsp.value_or(0.0); }
};

ValScore validation_score(const Mat& probs, const Graph& g, const std::vector<int>& val_ids) {
  ValScore out;
  const std::vector<int> preds = threshold_predictions(probs);
  const FairnessReport rep =
      fairness_metrics(preds, g.labels, g.has_sensitive ? g.sensitive : std::vector<int>{},
                       val_ids);
  out.acc = rep.accuracy;
  out.dsp = rep.delta_sp;
  out.deo = rep.delta_eo;
  return out;
}

double diff_norm(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

TrainResult train_fairwos(const Graph& g, const TrainConfig& cfg, PipelineCache* cache) {
  g.validate();
  const TrainView view(g);
  const OptimizerConfig oc = cfg.optimizer_config();
  TrainResult res;
  res.model.mode = "fairwos";

  // Stage 1: input representation. Either the pretrained encoder's embedding
  // or, with the encoder disabled, the standardized raw features.
  if (cfg.disable_encoder) {
    if (cache && cache->pseudo) {
      res.model.pseudo = *cache->pseudo;
    } else {
      res.model.pseudo =
          binarize_columns(standardized_features(view), view.split_ids(Split::train));
      if (cache) cache->pseudo = res.model.pseudo;
    }
  } else {
    if (cache && cache->encoder && cache->pseudo) {
      res.model.encoder = *cache->encoder;
      res.model.pseudo = *cache->pseudo;
    } else {
      res.model.encoder =
          pretrain_encoder(view, cfg.encoder_dim, cfg.pretrain_epochs, cfg.seed, oc);
      res.model.pseudo = extract_pseudo_attrs(view, *res.model.encoder);
      if (cache) {
        cache->encoder = res.model.encoder;
        cache->pseudo = res.model.pseudo;
      }
    }
    res.encoder_val_acc = res.model.encoder->best_val_acc;
  }
  res.model.x0 = res.model.pseudo.values;
  const Mat& x0 = res.model.x0;

  // Stage 2: classifier pretraining on utility loss, then pseudo-labels for
  // the counterfactual matching conditions.
  const NeighborOps nb = build_neighbor_ops(view);
  PretrainedClassifier pretrained;
  if (cache && cache->classifier) {
    pretrained = *cache->classifier;
  } else {
    pretrained = pretrain_classifier(view, x0, cfg.gnn, cfg.pretrain_epochs, cfg.seed, oc);
    if (cache) cache->classifier = pretrained;
  }
  res.pretrain_val_acc = pretrained.best_val_acc;
  if (cache && cache->plabels) {
    res.model.plabels = *cache->plabels;
  } else {
    const GnnForward fwd0 = gnn_forward(x0, nb, cfg.gnn, pretrained.gnn.params);
    res.model.plabels = pseudo_labels(view, fwd0.probs);
    if (cache) cache->plabels = res.model.plabels;
  }

  // Stage 3: alternating fine-tuning.
  double alpha = cfg.effective_alpha();
  if (res.model.pseudo.num_active() == 0) alpha = 0.0;

  GnnParams theta = pretrained.gnn;
  Optimizer opt(oc);
  LambdaVec lambda;
  lambda.w.assign(res.model.pseudo.active.size(), 0.0);
  lambda.active = res.model.pseudo.active;
  if (res.model.pseudo.num_active() > 0) lambda = uniform_lambda(res.model.pseudo.active);

  const std::vector<int> train_ids = view.split_ids(Split::train);
  const std::vector<char> train_mask = view.split_mask(Split::train);
  const std::vector<int> labeled_train = view.labeled_ids(Split::train);
  const std::vector<int> val_ids = view.labeled_ids(Split::val);

  auto score_of = [&](const GnnParams& p) {
    const GnnForward fwd = gnn_forward(x0, nb, cfg.gnn, p.params);
    return validation_score(fwd.probs, g, val_ids);
  };

  GnnParams best_params = theta;
  LambdaVec best_lambda = lambda;
  double best_score = score_of(theta).composite();
  res.selected_epoch = 0;
  int since_improve = 0;

  // Frozen-diagnostic state lives outside the loop so every epoch sees the
  // same index and snapshot.
  CfIndex frozen_cf;
  Mat frozen_snap;
  bool frozen_ready = false;

  std::vector<double> prev_grad;
  for (std::size_t epoch = 1; epoch <= cfg.finetune_epochs; ++epoch) {
    CfIndex cf_local;
    Mat snap_local;
    const CfIndex* cf = nullptr;
    const Mat* snap = nullptr;
    DisparityVec dvec;
    dvec.d.assign(res.model.pseudo.active.size(), 0.0);
    dvec.active.assign(res.model.pseudo.active.size(), false);
    if (alpha > 0.0) {
      if (cfg.freeze_counterfactuals) {
        if (!frozen_ready) {
          const GnnForward fwd = gnn_forward(x0, nb, cfg.gnn, theta.params);
          frozen_snap = fwd.embeddings();
          frozen_cf = find_counterfactuals(frozen_snap, res.model.pseudo.bits,
                                           res.model.plabels, cfg.k, train_ids,
                                           res.model.pseudo.active);
          frozen_ready = true;
        }
        cf = &frozen_cf;
        snap = &frozen_snap;
      } else {
        const GnnForward fwd = gnn_forward(x0, nb, cfg.gnn, theta.params);
        snap_local = fwd.embeddings();
        cf_local = find_counterfactuals(snap_local, res.model.pseudo.bits, res.model.plabels,
                                        cfg.k, train_ids, res.model.pseudo.active);
        cf = &cf_local;
        snap = &snap_local;
      }
      dvec = disparity_vector(*snap, *snap, *cf, train_mask);
    }

    const FairnessObjective objective(x0, nb, cfg.gnn, labeled_train, g.labels, train_mask,
                                      alpha, lambda, cf, snap);
    const ThetaStepInfo info = update_theta(theta, opt, objective);
    res.trace.final_loss = objective.loss(theta.params);

    EpochRecord rec;
    rec.epoch = static_cast<int>(epoch);
    rec.loss_utility = info.utility;
    rec.loss_fair = info.fairness;
    rec.loss_total = info.utility + info.fairness;
    rec.objective = total_objective(info.utility, dvec, lambda, alpha);
    rec.disparity = dvec.d;
    rec.grad_norm = info.grad_norm;
    rec.theta_step_norm = info.step_norm;
    if (!prev_grad.empty()) rec.grad_diff_norm = diff_norm(info.flat_grad, prev_grad);
    prev_grad = info.flat_grad;

    // Weight update runs after the theta step, against the epoch's snapshot
    // disparities. Frozen diagnostics and the no-update ablation keep lambda
    // fixed.
    bool any_active = false;
    for (bool a : dvec.active) any_active = any_active || a;
    if (alpha > 0.0 && any_active && !cfg.disable_weight_update &&
        !cfg.freeze_counterfactuals) {
      lambda = solve_lambda(dvec, alpha);
    }
    rec.lambda = lambda.w;

    const ValScore val = score_of(theta);
    rec.val_acc = val.acc;
    rec.val_dsp = val.dsp;
    rec.val_deo = val.deo;
    res.trace.records.push_back(std::move(rec));

    if (val.composite() > best_score) {
      best_score = val.composite();
      best_params = theta;
      best_lambda = lambda;
      res.selected_epoch = static_cast<int>(epoch);
      since_improve = 0;
    } else {
      ++since_improve;
      if (since_improve >= cfg.patience) break;
    }
  }

  res.model.gnn = best_params;
  res.model.lambda = best_lambda;
  return res;
}

TrainResult train_vanilla(const Graph& g, const TrainConfig& cfg) {
  g.validate();
  const TrainView view(g);
  TrainResult res;
  res.model.mode = "vanilla";
  res.model.x0 = standardized_features(view);
  const PretrainedClassifier pretrained = pretrain_classifier(
      view, res.model.x0, cfg.gnn, cfg.pretrain_epochs, cfg.seed, cfg.optimizer_config());
  res.model.gnn = pretrained.gnn;
  res.pretrain_val_acc = pretrained.best_val_acc;
  res.model.lambda.w.clear();
  res.model.lambda.active.clear();
  return res;
}

}  // namespace fairwos
