#include "fairwos/pretrain.hpp"

namespace fairwos {

PretrainOutcome run_pretrain(const DifferentiableProgram& objective, ParameterSet& params,
                             Optimizer& opt, std::size_t epochs,
                             const std::function<double(const ParameterSet&)>& val_acc) {
  PretrainOutcome out;
  out.best_val_acc = val_acc(params);
  if (epochs == 0) return out;
  ParameterSet best = params;
  for (std::size_t e = 0; e < epochs; ++e) {
    params.zero_grads();
    objective.loss_and_grad(params);
    opt.step(params);
    const double acc = val_acc(params);
    if (acc > out.best_val_acc) {
      out.best_val_acc = acc;
      best = params;
    }
  }
  params = best;
  out.trained = true;
  return out;
}

}  // namespace fairwos
