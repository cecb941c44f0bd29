#include "fairwos/params.hpp"

#include <cmath>

#include "fairwos/error.hpp"

namespace fairwos {

Param& ParameterSet::add(const std::string& name, Mat value) {
  if (contains(name)) throw ValidationError("duplicate parameter name: " + name);
  ensure_finite(value, "parameter " + name);
  Param p;
  p.name = name;
  p.grad = Mat(value.rows, value.cols);
  p.value = std::move(value);
  items_.push_back(std::move(p));
  return items_.back();
}

Param& ParameterSet::at(const std::string& name) {
  for (auto& p : items_) {
    if (p.name == name) return p;
  }
  throw ValidationError("unknown parameter: " + name);
}

const Param& ParameterSet::at(const std::string& name) const {
  for (const auto& p : items_) {
    if (p.name == name) return p;
  }
  throw ValidationError("unknown parameter: " + name);
}

bool ParameterSet::contains(const std::string& name) const {
  for (const auto& p : items_) {
    if (p.name == name) return true;
  }
  return false;
}

void ParameterSet::zero_grads() {
  for (auto& p : items_) {
    std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
  }
}

double ParameterSet::grad_norm() const {
  double s = 0.0;
  for (const auto& p : items_) {
    for (double g : p.grad.data) s += g * g;
  }
  return std::sqrt(s);
}

std::vector<double> ParameterSet::flat_values() const {
  std::vector<double> out;
  out.reserve(total_size());
  for (const auto& p : items_) {
    out.insert(out.end(), p.value.data.begin(), p.value.data.end());
  }
  return out;
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.value.size();
  return n;
}

double param_distance(const ParameterSet& a, const ParameterSet& b) {
  const auto& ia = a.items();
  const auto& ib = b.items();
  if (ia.size() != ib.size()) throw ShapeError("param_distance: layouts differ");
  double s = 0.0;
  for (std::size_t i = 0; i < ia.size(); ++i) {
    if (!ia[i].value.same_shape(ib[i].value)) {
      throw ShapeError("param_distance: shape mismatch at " + ia[i].name);
    }
    for (std::size_t j = 0; j < ia[i].value.size(); ++j) {
      const double d = ia[i].value.data[j] - ib[i].value.data[j];
      s += d * d;
    }
  }
  return std::sqrt(s);
}

void Optimizer::step(ParameterSet& params) {
  auto& items = params.items();
  for (const auto& p : items) {
    for (double g : p.grad.data) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient for parameter " + p.name);
      }
    }
  }
  if (cfg_.kind == OptimizerConfig::Kind::sgd) {
    for (auto& p : items) {
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        p.value.data[i] -= cfg_.lr * p.grad.data[i];
      }
    }
    return;
  }
  if (m_.empty()) {
    m_.reserve(items.size());
    v_.reserve(items.size());
    for (const auto& p : items) {
      m_.emplace_back(p.value.rows, p.value.cols);
      v_.emplace_back(p.value.rows, p.value.cols);
    }
  }
  if (m_.size() != items.size()) throw ValidationError("optimizer: parameter layout changed");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < items.size(); ++k) {
    auto& p = items[k];
    if (!p.value.same_shape(m_[k])) {
      throw ValidationError("optimizer: shape changed for " + p.name);
    }
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.data[i];
      m_[k].data[i] = cfg_.beta1 * m_[k].data[i] + (1.0 - cfg_.beta1) * g;
      v_[k].data[i] = cfg_.beta2 * v_[k].data[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[k].data[i] / bc1;
      const double vhat = v_[k].data[i] / bc2;
      p.value.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Optimizer::reset() {
  m_.clear();
  v_.clear();
  t_ = 0;
}

}  // namespace fairwos
