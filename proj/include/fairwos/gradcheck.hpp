#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairwos/params.hpp"

namespace fairwos {

// A scalar loss with hand-written gradients, checkable against finite
// differences. `loss` must be a pure function of the parameter values;
// `loss_and_grad` additionally fills every gradient buffer.
class DifferentiableProgram {
 public:
  virtual ~DifferentiableProgram() = default;
  virtual double loss(const ParameterSet& params) const = 0;
  virtual double loss_and_grad(ParameterSet& params) const = 0;
};

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> per_param;
  double max_rel_err = 0.0;
  bool pass(double tol) const { return max_rel_err < tol; }
};

// Central differences with step h against the analytic gradient. At most
// `max_entries` entries per matrix are probed (sampled without replacement
// when the matrix is larger). Relative error uses |a - n| / max(1, |a|, |n|).
GradCheckReport grad_check(const DifferentiableProgram& program, ParameterSet& params,
                           std::uint64_t seed, double h = 1e-5,
                           std::size_t max_entries = 64);

}  // namespace fairwos
