#pragma once

#include <cstdint>
#include <random>

#include "fairwos/matrix.hpp"

namespace fairwos {

using Rng = std::mt19937_64;

// Distinct deterministic streams derived from one user seed. The constants
// keep unrelated stages (graph sampling, encoder init, classifier init, ...)
// from sharing draws.
enum class Stream : std::uint64_t {
  synthetic = 0x9e3779b97f4a7c15ULL,
  encoder_init = 0x2545f4914f6cdd1dULL,
  classifier_init = 0xd1342543de82ef95ULL,
  grad_check = 0x94d049bb133111ebULL,
  bound_trials = 0xbf58476d1ce4e5b9ULL,
};

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  return Rng(seed ^ static_cast<std::uint64_t>(stream));
}

inline Mat glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Mat m(rows, cols);
  for (double& v : m.data) v = dist(rng);
  return m;
}

}  // namespace fairwos
