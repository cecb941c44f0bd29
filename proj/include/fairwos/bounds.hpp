#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairwos/fairness.hpp"
#include "fairwos/gnn.hpp"

namespace fairwos {

// Induced operator norm of the map h -> h * W on row vectors, for p in
// {1, 2, inf}. p = 2 is the spectral norm computed by a cyclic Jacobi
// eigensolver on the small Gram matrix.
double matrix_operator_norm(const Mat& w, double p);

struct PerturbationTrial {
  int node = 0;
  std::size_t column = 0;
  int sign = 1;
  double observed = 0.0;
  bool pass = false;
};

// Empirical check of the embedding perturbation bound: flip one input
// coordinate of one node by a unit amount, hold every neighbor aggregate
// fixed, re-run that node's self chain, and compare the p-norm displacement
// of its embedding against the product of the layers' self-weight operator
// norms.
struct PerturbationBoundReport {
  double bound = 0.0;
  double p = 2.0;
  std::size_t trials = 0;
  std::size_t passed = 0;
  double max_observed = 0.0;
  bool all_pass = false;
  std::vector<PerturbationTrial> samples;  // first few trials, for reporting
};

PerturbationBoundReport check_counterfactual_bound(const GnnParams& model, const Mat& x0,
                                                   const NeighborOps& nb, std::size_t trials,
                                                   double p, std::uint64_t seed);

// Empirical check of the descent guarantee for plain gradient descent with
// fixed step size: over a recorded trace,
//   min_k ||grad_k||^2 <= (loss_0 - min_k loss_k) / (M * T),
// with M = lr - L * lr^2 / 2. Requires lr < 2 / L; otherwise the report is
// marked assumption_violated instead of pass/fail.
struct ConvergenceBoundReport {
  double lr = 0.0;
  double l_estimate = 0.0;
  double m_coeff = 0.0;
  double lhs_min_grad_sq = 0.0;
  double rhs = 0.0;
  std::size_t steps = 0;
  bool assumption_violated = false;
  bool running_min_monotone = false;
  bool pass = false;
  std::string note;
};

ConvergenceBoundReport check_convergence_bound(const TrainingTrace& trace, double lr,
                                               double l_estimate);

// Largest secant curvature ||grad_{k+1} - grad_k|| / ||theta_{k+1} -
// theta_k|| observable in the trace. Zero when the trace is too short to
// pair steps.
double estimate_lipschitz(const TrainingTrace& trace);

}  // namespace fairwos
