#include "fairwos/encoder.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "fairwos/error.hpp"
#include "fairwos/gradcheck.hpp"
#include "fairwos/pretrain.hpp"
#include "fairwos/rng.hpp"

namespace fairwos {

namespace {

// Cross-entropy over labeled training nodes of
//   softmax(relu(X w_s + (N X) w_n + b) w_h + b_h)
// with X the standardized features and N the diagonal-free normalized
// adjacency. X and N X are precomputed; only the parameters vary.
class EncoderObjective : public DifferentiableProgram {
 public:
  EncoderObjective(Mat x, Mat nx, std::vector<int> mask, const std::vector<int>& labels)
      : x_(std::move(x)), nx_(std::move(nx)), mask_(std::move(mask)), labels_(labels) {
    if (mask_.empty()) throw ValidationError("encoder pretraining: no labeled training nodes");
  }

  double loss(const ParameterSet& params) const override {
    Mat probs, z1;
    forward(params, probs, z1);
    return cross_entropy_loss(probs, labels_, mask_);
  }

  double loss_and_grad(ParameterSet& params) const override {
    Mat probs, z1;
    forward(params, probs, z1);
    const double loss = cross_entropy_loss(probs, labels_, mask_);

    const double inv = 1.0 / static_cast<double>(mask_.size());
    Mat dz2(probs.rows, probs.cols);
    for (int node : mask_) {
      const auto r = static_cast<std::size_t>(node);
      for (std::size_t c = 0; c < probs.cols; ++c) dz2(r, c) = probs(r, c) * inv;
      dz2(r, static_cast<std::size_t>(labels_[r])) -= inv;
    }

    const Mat h = activation(z1, Activation::relu);
    params.at("head.w").grad = matmul_at_b(h, dz2);
    Mat& dbh = params.at("head.b").grad;
    for (std::size_t c = 0; c < dz2.cols; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < dz2.rows; ++r) s += dz2(r, c);
      dbh(0, c) = s;
    }

    Mat dh = matmul_a_bt(dz2, params.at("head.w").value);
    const Mat mask = relu_mask(z1);
    for (std::size_t i = 0; i < dh.data.size(); ++i) dh.data[i] *= mask.data[i];

    params.at("enc.self_w").grad = matmul_at_b(x_, dh);
    params.at("enc.neigh_w").grad = matmul_at_b(nx_, dh);
    Mat& db = params.at("enc.b").grad;
    for (std::size_t c = 0; c < dh.cols; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < dh.rows; ++r) s += dh(r, c);
      db(0, c) = s;
    }
    return loss;
  }

  void forward(const ParameterSet& params, Mat& probs, Mat& z1) const {
    z1 = linear_forward(x_, params.at("enc.self_w").value, &params.at("enc.b").value);
    add_inplace(z1, matmul(nx_, params.at("enc.neigh_w").value));
    const Mat h = activation(z1, Activation::relu);
    const Mat z2 = linear_forward(h, params.at("head.w").value, &params.at("head.b").value);
    probs = activation(z2, Activation::softmax_rows);
  }

 private:
  Mat x_;
  Mat nx_;
  std::vector<int> mask_;
  const std::vector<int>& labels_;
};

}  // namespace

EncoderParams init_encoder(std::size_t in_dim, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ValidationError("encoder dim must be positive");
  EncoderParams enc;
  enc.dim = dim;
  Rng rng = make_rng(seed, Stream::encoder_init);
  enc.params.add("enc.self_w", glorot_uniform(in_dim, dim, rng));
  enc.params.add("enc.neigh_w", glorot_uniform(in_dim, dim, rng));
  enc.params.add("enc.b", Mat(1, dim));
  enc.params.add("head.w", glorot_uniform(dim, 2, rng));
  enc.params.add("head.b", Mat(1, 2));
  return enc;
}

Mat encoder_embed(const TrainView& g, const EncoderParams& enc) {
  const Mat x = standardized_features(g);
  const NeighborOps nb = build_neighbor_ops(g);
  Mat z = linear_forward(x, enc.params.at("enc.self_w").value, &enc.params.at("enc.b").value);
  add_inplace(z, matmul(aggregate(nb.normalized_offdiag, x),
                        enc.params.at("enc.neigh_w").value));
  return activation(z, Activation::relu);
}

EncoderParams pretrain_encoder(const TrainView& g, std::size_t dim, std::size_t epochs,
                               std::uint64_t seed, const OptimizerConfig& opt) {
  EncoderParams enc = init_encoder(g.features().cols, dim, seed);
  const Mat x = standardized_features(g);
  const NeighborOps nb = build_neighbor_ops(g);
  EncoderObjective objective(x, aggregate(nb.normalized_offdiag, x),
                             g.labeled_ids(Split::train), g.labels());
  const auto val_ids = g.labeled_ids(Split::val);
  auto val_acc = [&](const ParameterSet& params) {
    if (val_ids.empty()) return 0.0;
    Mat probs, z1;
    objective.forward(params, probs, z1);
    int correct = 0;
    for (int node : val_ids) {
      const auto r = static_cast<std::size_t>(node);
      const int pred = probs(r, 1) > probs(r, 0) ? 1 : 0;
      if (pred == g.labels()[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(val_ids.size());
  };
  Optimizer optimizer(opt);
  const PretrainOutcome outcome = run_pretrain(objective, enc.params, optimizer, epochs, val_acc);
  enc.trained = outcome.trained;
  enc.best_val_acc = outcome.best_val_acc;
  return enc;
}

std::size_t PseudoAttrs::num_active() const {
  std::size_t n = 0;
  for (bool a : active) {
    if (a) ++n;
  }
  return n;
}

PseudoAttrs binarize_columns(const Mat& values, const std::vector<int>& train_ids) {
  if (train_ids.empty()) throw ValidationError("binarize_columns: empty training split");
  PseudoAttrs out;
  out.values = values;
  out.bits = Mat(values.rows, values.cols);
  out.thresholds.resize(values.cols);
  out.active.resize(values.cols);
  std::vector<double> col(train_ids.size());
  for (std::size_t c = 0; c < values.cols; ++c) {
    for (std::size_t t = 0; t < train_ids.size(); ++t) {
      col[t] = values(static_cast<std::size_t>(train_ids[t]), c);
    }
    std::sort(col.begin(), col.end());
    const std::size_t m = col.size();
    const double median = m % 2 == 1 ? col[m / 2] : 0.5 * (col[m / 2 - 1] + col[m / 2]);
    out.thresholds[c] = median;
    for (std::size_t r = 0; r < values.rows; ++r) {
      out.bits(r, c) = values(r, c) > median ? 1.0 : 0.0;
    }
    // Active only if training rows land on both sides of the threshold;
    // a one-sided column cannot pair counterfactuals.
    bool saw0 = false, saw1 = false;
    for (int t : train_ids) {
      (out.bits(static_cast<std::size_t>(t), c) > 0.5 ? saw1 : saw0) = true;
    }
    out.active[c] = saw0 && saw1;
  }
  return out;
}

PseudoAttrs extract_pseudo_attrs(const TrainView& g, const EncoderParams& enc) {
  const auto train = g.split_ids(Split::train);
  return binarize_columns(standardize_columns(encoder_embed(g, enc), train), train);
}

void export_pseudo_attrs_csv(const PseudoAttrs& attrs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "id";
  for (std::size_t c = 0; c < attrs.values.cols; ++c) out << ",x0_" << c;
  for (std::size_t c = 0; c < attrs.bits.cols; ++c) out << ",bit_" << c;
  out << "\n";
  char buf[40];
  for (std::size_t r = 0; r < attrs.values.rows; ++r) {
    out << r;
    for (std::size_t c = 0; c < attrs.values.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", attrs.values(r, c));
      out << ',' << buf;
    }
    for (std::size_t c = 0; c < attrs.bits.cols; ++c) {
      out << ',' << static_cast<int>(attrs.bits(r, c));
    }
    out << "\n";
  }
}

}  // namespace fairwos
