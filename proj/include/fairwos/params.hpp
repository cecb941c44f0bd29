#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairwos/matrix.hpp"

namespace fairwos {

struct Param {
  std::string name;
  Mat value;
  Mat grad;  // same shape as value, zero-initialized
};

// Named collection of trainable matrices with paired gradient buffers.
// Order of insertion is preserved and is part of the deterministic contract:
// flattening walks parameters in insertion order.
class ParameterSet {
 public:
  Param& add(const std::string& name, Mat value);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Param>& items() { return items_; }
  const std::vector<Param>& items() const { return items_; }

  void zero_grads();
  double grad_norm() const;           // l2 over all gradient entries
  std::vector<double> flat_values() const;
  std::size_t total_size() const;

 private:
  std::vector<Param> items_;
};

// l2 distance between two flattened parameter sets of identical layout.
double param_distance(const ParameterSet& a, const ParameterSet& b);

struct OptimizerConfig {
  enum class Kind { sgd, adam };
  Kind kind = Kind::adam;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// SGD or Adam over a ParameterSet. Moment buffers are keyed by position, so
// the same optimizer instance must always see the same parameter layout.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

  // Applies one update from the gradients currently stored in `params`.
  // Throws NumericError naming the parameter if a gradient is non-finite.
  void step(ParameterSet& params);
  void reset();
  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  std::vector<Mat> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace fairwos
