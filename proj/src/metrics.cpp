#include "fairwos/metrics.hpp"

#include <cmath>
#include <cstdlib>

#include "fairwos/error.hpp"

namespace fairwos {

FairnessReport fairness_metrics(const std::vector<int>& pred, const std::vector<int>& labels,
                                const std::vector<int>& sensitive,
                                const std::vector<int>& ids) {
  if (ids.empty()) throw ValidationError("fairness_metrics: empty id list");
  if (pred.size() != labels.size()) {
    throw ShapeError("fairness_metrics: pred/label size mismatch");
  }
  const bool have_sensitive = !sensitive.empty();
  if (have_sensitive && sensitive.size() != labels.size()) {
    throw ShapeError("fairness_metrics: sensitive size mismatch");
  }

  FairnessReport rep;
  int correct = 0;
  for (int node : ids) {
    const auto r = static_cast<std::size_t>(node);
    if (r >= pred.size()) throw ValidationError("fairness_metrics: id out of range");
    const int p = pred[r];
    if (p != 0 && p != 1) throw ValidationError("fairness_metrics: predictions must be 0/1");
    const int y = labels[r];
    if (y != -1) {
      ++rep.evaluated;
      if (p == y) ++correct;
    }
    const int s = have_sensitive ? sensitive[r] : -1;
    if (s != 0 && s != 1) continue;
    GroupTally& g = s == 0 ? rep.group0 : rep.group1;
    ++g.size;
    g.pred_pos += p;
    if (y != -1) {
      ++g.labeled;
      if (p == y) ++g.correct;
      if (y == 1) {
        ++g.y_pos;
        g.true_pos += p;
      }
    }
  }
  if (rep.evaluated == 0) throw ValidationError("fairness_metrics: no labeled nodes in id list");
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(rep.evaluated);

  if (rep.group0.size > 0 && rep.group1.size > 0) {
    const double r0 = static_cast<double>(rep.group0.pred_pos) / rep.group0.size;
    const double r1 = static_cast<double>(rep.group1.pred_pos) / rep.group1.size;
    rep.delta_sp = std::abs(r0 - r1);
  }
  if (rep.group0.y_pos > 0 && rep.group1.y_pos > 0) {
    const double t0 = static_cast<double>(rep.group0.true_pos) / rep.group0.y_pos;
    const double t1 = static_cast<double>(rep.group1.true_pos) / rep.group1.y_pos;
    rep.delta_eo = std::abs(t0 - t1);
  }
  return rep;
}

std::vector<int> threshold_predictions(const Mat& probs) {
  if (probs.cols != 1) throw ShapeError("threshold_predictions: expected a single column");
  std::vector<int> out(probs.rows);
  for (std::size_t r = 0; r < probs.rows; ++r) out[r] = probs(r, 0) >= 0.5 ? 1 : 0;
  return out;
}

}  // namespace fairwos
