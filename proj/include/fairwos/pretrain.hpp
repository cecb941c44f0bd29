#pragma once

#include <cstddef>
#include <functional>

#include "fairwos/gradcheck.hpp"
#include "fairwos/params.hpp"

namespace fairwos {

struct PretrainOutcome {
  double best_val_acc = 0.0;
  bool trained = false;  // false when epochs == 0
};

// Full-batch pretraining loop shared by the encoder and the classifier.
// Runs `epochs` optimizer steps and leaves `params` at the state with the
// best validation accuracy seen (the initial state competes too; strict
// improvement wins, so the earliest best is kept).
PretrainOutcome run_pretrain(const DifferentiableProgram& objective, ParameterSet& params,
                             Optimizer& opt, std::size_t epochs,
                             const std::function<double(const ParameterSet&)>& val_acc);

}  // namespace fairwos
