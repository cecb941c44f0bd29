#pragma once

#include <optional>
#include <vector>

#include "fairwos/matrix.hpp"

namespace fairwos {

struct GroupTally {
  int size = 0;        // nodes with this sensitive value among ids
  int pred_pos = 0;    // predicted positive
  int labeled = 0;     // nodes with a known label
  int correct = 0;
  int y_pos = 0;       // labeled positive
  int true_pos = 0;    // predicted positive among labeled positive
};

// Group fairness metrics over an explicit node list. Metrics that need a
// group or stratum that is absent stay unset rather than defaulting to
// zero: delta_sp needs both groups nonempty, delta_eo needs labeled
// positives in both groups.
struct FairnessReport {
  int evaluated = 0;       // ids with known labels (accuracy denominator)
  double accuracy = 0.0;
  std::optional<double> delta_sp;
  std::optional<double> delta_eo;
  GroupTally group0, group1;
};

// `pred` and `labels` are per-node (-1 allowed in labels for unknown);
// `sensitive` is per-node with -1 for unknown, or empty when the dataset has
// no sensitive column. `ids` selects the evaluation subset.
FairnessReport fairness_metrics(const std::vector<int>& pred, const std::vector<int>& labels,
                                const std::vector<int>& sensitive,
                                const std::vector<int>& ids);

std::vector<int> threshold_predictions(const Mat& probs);

}  // namespace fairwos
