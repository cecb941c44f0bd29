#include "fairwos/gnn.hpp"

#include <cmath>

#include "fairwos/error.hpp"
#include "fairwos/gradcheck.hpp"
#include "fairwos/pretrain.hpp"
#include "fairwos/rng.hpp"

namespace fairwos {

namespace {

std::string layer_name(std::size_t k, const char* part) {
  return "layer" + std::to_string(k) + "." + part;
}

}  // namespace

GnnParams init_gnn(std::size_t in_dim, const GnnMeta& meta, std::uint64_t seed) {
  if (meta.layers == 0) throw ValidationError("gnn: need at least one layer");
  if (meta.hidden == 0) throw ValidationError("gnn: hidden dim must be positive");
  GnnParams p;
  p.meta = meta;
  p.init_seed = seed;
  Rng rng = make_rng(seed, Stream::classifier_init);
  std::size_t d = in_dim;
  for (std::size_t k = 0; k < meta.layers; ++k) {
    p.params.add(layer_name(k, "self_w"), glorot_uniform(d, meta.hidden, rng));
    p.params.add(layer_name(k, "neigh_w"), glorot_uniform(d, meta.hidden, rng));
    p.params.add(layer_name(k, "bias"), Mat(1, meta.hidden));
    d = meta.hidden;
  }
  p.params.add("head.w", glorot_uniform(d, 1, rng));
  p.params.add("head.b", Mat(1, 1));
  return p;
}

const CsrMatrix& neighbor_operator(const NeighborOps& nb, Backbone backbone) {
  return backbone == Backbone::gcn ? nb.normalized_offdiag : nb.raw;
}

GnnForward gnn_forward(const Mat& x0, const NeighborOps& nb, const GnnMeta& meta,
                       const ParameterSet& params) {
  const CsrMatrix& op = neighbor_operator(nb, meta.backbone);
  GnnForward fwd;
  fwd.inputs.push_back(x0);
  for (std::size_t k = 0; k < meta.layers; ++k) {
    const Mat& h = fwd.inputs.back();
    fwd.neigh.push_back(aggregate(op, h));
    Mat z = matmul(h, params.at(layer_name(k, "self_w")).value);
    add_inplace(z, matmul(fwd.neigh.back(), params.at(layer_name(k, "neigh_w")).value));
    const Mat& b = params.at(layer_name(k, "bias")).value;
    for (std::size_t r = 0; r < z.rows; ++r) {
      for (std::size_t c = 0; c < z.cols; ++c) z(r, c) += b(0, c);
    }
    ensure_finite(z, "gnn preactivation");
    fwd.preacts.push_back(z);
    fwd.inputs.push_back(activation(z, Activation::relu));
  }
  fwd.logits = linear_forward(fwd.inputs.back(), params.at("head.w").value,
                              &params.at("head.b").value);
  fwd.probs = activation(fwd.logits, Activation::sigmoid);
  return fwd;
}

void gnn_backprop(const Mat& x0, const NeighborOps& nb, const GnnMeta& meta,
                  ParameterSet& params, const GnnForward& fwd, const Mat& dlogits,
                  const Mat& dh_extra) {
  const CsrMatrix& op = neighbor_operator(nb, meta.backbone);
  const Mat& emb = fwd.embeddings();

  add_inplace(params.at("head.w").grad, matmul_at_b(emb, dlogits));
  {
    double s = 0.0;
    for (double v : dlogits.data) s += v;
    params.at("head.b").grad(0, 0) += s;
  }

  Mat dh = matmul_a_bt(dlogits, params.at("head.w").value);
  if (dh_extra.size() > 0) add_inplace(dh, dh_extra);

  for (std::size_t k = meta.layers; k-- > 0;) {
    const Mat mask = relu_mask(fwd.preacts[k]);
    Mat dz = std::move(dh);
    for (std::size_t i = 0; i < dz.data.size(); ++i) dz.data[i] *= mask.data[i];

    add_inplace(params.at(layer_name(k, "self_w")).grad, matmul_at_b(fwd.inputs[k], dz));
    add_inplace(params.at(layer_name(k, "neigh_w")).grad, matmul_at_b(fwd.neigh[k], dz));
    Mat& db = params.at(layer_name(k, "bias")).grad;
    for (std::size_t c = 0; c < dz.cols; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < dz.rows; ++r) s += dz(r, c);
      db(0, c) += s;
    }

    if (k == 0) break;
    // Both neighbor operators are symmetric, so the adjoint of aggregation
    // is aggregation again.
    dh = matmul_a_bt(dz, params.at(layer_name(k, "self_w")).value);
    add_inplace(dh, aggregate(op, matmul_a_bt(dz, params.at(layer_name(k, "neigh_w")).value)));
  }
  (void)x0;
}

Mat utility_dlogits(const Mat& probs, const std::vector<int>& labels,
                    const std::vector<int>& mask) {
  if (mask.empty()) throw ValidationError("utility_dlogits: empty mask");
  Mat d(probs.rows, 1);
  const double inv = 1.0 / static_cast<double>(mask.size());
  for (int node : mask) {
    const auto r = static_cast<std::size_t>(node);
    d(r, 0) = (probs(r, 0) - static_cast<double>(labels[r])) * inv;
  }
  return d;
}

namespace {

class UtilityObjective : public DifferentiableProgram {
 public:
  UtilityObjective(const Mat& x0, const NeighborOps& nb, const GnnMeta& meta,
                   std::vector<int> mask, const std::vector<int>& labels)
      : x0_(x0), nb_(nb), meta_(meta), mask_(std::move(mask)), labels_(labels) {
    if (mask_.empty()) throw ValidationError("classifier pretraining: no labeled training nodes");
  }

  double loss(const ParameterSet& params) const override {
    const GnnForward fwd = gnn_forward(x0_, nb_, meta_, params);
    return cross_entropy_loss(fwd.probs, labels_, mask_);
  }

  double loss_and_grad(ParameterSet& params) const override {
    params.zero_grads();
    const GnnForward fwd = gnn_forward(x0_, nb_, meta_, params);
    const double loss = cross_entropy_loss(fwd.probs, labels_, mask_);
    gnn_backprop(x0_, nb_, meta_, params, fwd, utility_dlogits(fwd.probs, labels_, mask_),
                 Mat());
    return loss;
  }

 private:
  const Mat& x0_;
  const NeighborOps& nb_;
  GnnMeta meta_;
  std::vector<int> mask_;
  const std::vector<int>& labels_;
};

}  // namespace

PretrainedClassifier pretrain_classifier(const TrainView& g, const Mat& x0, const GnnMeta& meta,
                                         std::size_t epochs, std::uint64_t seed,
                                         const OptimizerConfig& opt) {
  PretrainedClassifier out;
  out.gnn = init_gnn(x0.cols, meta, seed);
  const NeighborOps nb = build_neighbor_ops(g);
  UtilityObjective objective(x0, nb, meta, g.labeled_ids(Split::train), g.labels());
  const auto val_ids = g.labeled_ids(Split::val);
  auto val_acc = [&](const ParameterSet& params) {
    if (val_ids.empty()) return 0.0;
    const GnnForward fwd = gnn_forward(x0, nb, meta, params);
    return accuracy_on(fwd.probs, g.labels(), val_ids);
  };
  Optimizer optimizer(opt);
  const PretrainOutcome outcome =
      run_pretrain(objective, out.gnn.params, optimizer, epochs, val_acc);
  out.trained = outcome.trained;
  out.best_val_acc = outcome.best_val_acc;
  return out;
}

std::vector<int> pseudo_labels(const TrainView& g, const Mat& probs) {
  if (probs.rows != g.num_nodes() || probs.cols != 1) {
    throw ShapeError("pseudo_labels: expected one probability per node");
  }
  std::vector<int> out(g.num_nodes());
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    if (g.splits()[v] == Split::train && g.labels()[v] != -1) {
      out[v] = g.labels()[v];
    } else {
      out[v] = probs(v, 0) >= 0.5 ? 1 : 0;
    }
  }
  return out;
}

double accuracy_on(const Mat& probs, const std::vector<int>& labels,
                   const std::vector<int>& ids) {
  if (ids.empty()) throw ValidationError("accuracy_on: empty id list");
  int correct = 0;
  for (int node : ids) {
    const auto r = static_cast<std::size_t>(node);
    const int pred = probs(r, 0) >= 0.5 ? 1 : 0;
    if (pred == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

}  // namespace fairwos
