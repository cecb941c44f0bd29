#include "fairwos/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fairwos/error.hpp"
#include "fairwos/rng.hpp"

namespace fairwos {

namespace {

// Largest eigenvalue of a small symmetric matrix by cyclic Jacobi rotations.
double jacobi_max_eigenvalue(Mat s) {
  const std::size_t n = s.rows;
  if (n == 1) return s(0, 0);
  double scale = 0.0;
  for (double v : s.data) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  const double tol = 1e-15 * scale;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::abs(s(i, j)));
    }
    if (off <= tol) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(s(p, q)) <= tol) continue;
        const double theta = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double snv = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double skp = s(k, p), skq = s(k, q);
          s(k, p) = c * skp - snv * skq;
          s(k, q) = snv * skp + c * skq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double spk = s(p, k), sqk = s(q, k);
          s(p, k) = c * spk - snv * sqk;
          s(q, k) = snv * spk + c * sqk;
        }
      }
    }
  }
  double mx = s(0, 0);
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, s(i, i));
  return mx;
}

double vector_p_norm(const std::vector<double>& v, double p) {
  if (p == std::numeric_limits<double>::infinity()) {
    double mx = 0.0;
    for (double x : v) mx = std::max(mx, std::abs(x));
    return mx;
  }
  if (p == 1.0) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void check_p(double p) {
  if (p != 1.0 && p != 2.0 && p != std::numeric_limits<double>::infinity()) {
    throw ValidationError("operator norm: p must be 1, 2, or inf");
  }
}

}  // namespace

double matrix_operator_norm(const Mat& w, double p) {
  check_p(p);
  if (w.rows == 0 || w.cols == 0) return 0.0;
  if (p == 1.0) {
    // On row vectors, the 1-norm gain is the largest absolute row sum.
    double mx = 0.0;
    for (std::size_t i = 0; i < w.rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < w.cols; ++j) s += std::abs(w(i, j));
      mx = std::max(mx, s);
    }
    return mx;
  }
  if (p == std::numeric_limits<double>::infinity()) {
    double mx = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < w.rows; ++i) s += std::abs(w(i, j));
      mx = std::max(mx, s);
    }
    return mx;
  }
  // Spectral norm via the smaller Gram matrix.
  const Mat gram = w.rows <= w.cols ? matmul_a_bt(w, w) : matmul_at_b(w, w);
  return std::sqrt(std::max(0.0, jacobi_max_eigenvalue(gram)));
}

PerturbationBoundReport check_counterfactual_bound(const GnnParams& model, const Mat& x0,
                                                   const NeighborOps& nb, std::size_t trials,
                                                   double p, std::uint64_t seed) {
  check_p(p);
  if (trials == 0) throw ValidationError("perturbation bound: need at least one trial");
  const GnnMeta& meta = model.meta;
  const GnnForward fwd = gnn_forward(x0, nb, meta, model.params);

  PerturbationBoundReport rep;
  rep.p = p;
  rep.trials = trials;
  rep.bound = 1.0;
  for (std::size_t k = 0; k < meta.layers; ++k) {
    rep.bound *= matrix_operator_norm(
        model.params.at("layer" + std::to_string(k) + ".self_w").value, p);
  }

  Rng rng = make_rng(seed, Stream::bound_trials);
  std::uniform_int_distribution<std::size_t> node_dist(0, x0.rows - 1);
  std::uniform_int_distribution<std::size_t> col_dist(0, x0.cols - 1);
  std::uniform_int_distribution<int> sign_dist(0, 1);

  // Runs one node's self chain with the neighbor aggregates frozen at their
  // unperturbed values; the baseline row goes through the same code path so
  // both sides share rounding behavior.
  auto self_chain = [&](std::size_t node, const std::vector<double>& start) {
    std::vector<double> cur = start;
    for (std::size_t k = 0; k < meta.layers; ++k) {
      const std::string prefix = "layer" + std::to_string(k);
      const Mat& wa = model.params.at(prefix + ".self_w").value;
      const Mat& wn = model.params.at(prefix + ".neigh_w").value;
      const Mat& b = model.params.at(prefix + ".bias").value;
      const Mat& neigh = fwd.neigh[k];
      std::vector<double> next(wa.cols);
      for (std::size_t c = 0; c < wa.cols; ++c) {
        double z = b(0, c);
        for (std::size_t d = 0; d < wa.rows; ++d) z += cur[d] * wa(d, c);
        for (std::size_t d = 0; d < wn.rows; ++d) z += neigh(node, d) * wn(d, c);
        next[c] = z > 0.0 ? z : 0.0;
      }
      cur = std::move(next);
    }
    return cur;
  };

  for (std::size_t t = 0; t < trials; ++t) {
    PerturbationTrial trial;
    trial.node = static_cast<int>(node_dist(rng));
    trial.column = col_dist(rng);
    trial.sign = sign_dist(rng) == 0 ? -1 : 1;

    std::vector<double> base(x0.cols);
    for (std::size_t c = 0; c < x0.cols; ++c) base[c] = x0(static_cast<std::size_t>(trial.node), c);
    std::vector<double> flipped = base;
    flipped[trial.column] += static_cast<double>(trial.sign);  // unit perturbation

    const auto z_base = self_chain(static_cast<std::size_t>(trial.node), base);
    const auto z_flip = self_chain(static_cast<std::size_t>(trial.node), flipped);
    std::vector<double> diff(z_base.size());
    for (std::size_t c = 0; c < diff.size(); ++c) diff[c] = z_flip[c] - z_base[c];
    trial.observed = vector_p_norm(diff, p);
    trial.pass = trial.observed <= rep.bound + 1e-9;

    rep.max_observed = std::max(rep.max_observed, trial.observed);
    if (trial.pass) ++rep.passed;
    if (rep.samples.size() < 10) rep.samples.push_back(trial);
  }
  rep.all_pass = rep.passed == rep.trials;
  return rep;
}

ConvergenceBoundReport check_convergence_bound(const TrainingTrace& trace, double lr,
                                               double l_estimate) {
  if (trace.records.empty()) throw ValidationError("convergence bound: empty trace");
  if (lr <= 0.0) throw ValidationError("convergence bound: lr must be positive");
  ConvergenceBoundReport rep;
  rep.lr = lr;
  rep.l_estimate = l_estimate;
  rep.steps = trace.records.size();

  if (l_estimate <= 0.0) {
    rep.assumption_violated = true;
    rep.note = "nonpositive curvature estimate";
    return rep;
  }
  rep.m_coeff = lr - l_estimate * lr * lr / 2.0;
  if (lr >= 2.0 / l_estimate) {
    rep.assumption_violated = true;
    rep.note = "step size too large: lr >= 2/L";
    return rep;
  }

  // Each record holds the loss and gradient at the point BEFORE its step.
  // With the final post-step loss present all T steps count; without it the
  // last step's decrease is unobservable, so the window shrinks to the first
  // T-1 steps and the last record only contributes its loss (it is the
  // endpoint of step T-2).
  std::size_t grad_window = trace.records.size();
  if (!trace.final_loss.has_value()) {
    if (trace.records.size() < 2) {
      rep.assumption_violated = true;
      rep.note = "single record without a final loss, no decrease observable";
      return rep;
    }
    grad_window = trace.records.size() - 1;
  }
  rep.steps = grad_window;

  double min_grad_sq = std::numeric_limits<double>::infinity();
  double min_loss = std::numeric_limits<double>::infinity();
  double running = std::numeric_limits<double>::infinity();
  rep.running_min_monotone = true;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const EpochRecord& r = trace.records[i];
    min_loss = std::min(min_loss, r.loss_total);
    if (i >= grad_window) continue;
    const double g2 = r.grad_norm * r.grad_norm;
    min_grad_sq = std::min(min_grad_sq, g2);
    const double next_running = std::min(running, g2);
    if (next_running > running) rep.running_min_monotone = false;
    running = next_running;
  }
  if (trace.final_loss.has_value()) min_loss = std::min(min_loss, *trace.final_loss);
  rep.lhs_min_grad_sq = min_grad_sq;
  rep.rhs = (trace.records.front().loss_total - min_loss) /
            (rep.m_coeff * static_cast<double>(rep.steps));
  rep.pass = rep.lhs_min_grad_sq <= rep.rhs + 1e-9;
  return rep;
}

double estimate_lipschitz(const TrainingTrace& trace) {
  double best = 0.0;
  const auto& recs = trace.records;
  for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
    if (!recs[i + 1].grad_diff_norm.has_value()) continue;
    const double step = recs[i].theta_step_norm;
    if (step <= 0.0) continue;
    best = std::max(best, *recs[i + 1].grad_diff_norm / step);
  }
  return best;
}

}  // namespace fairwos
