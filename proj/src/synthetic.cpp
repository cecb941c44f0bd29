#include "fairwos/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairwos/error.hpp"
#include "fairwos/rng.hpp"

namespace fairwos {

Graph generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_nodes < 8) {
    throw ValidationError("generate_synthetic: num_nodes must be at least 8");
  }
  if (spec.num_features == 0 || spec.leak_dims > spec.num_features) {
    throw ValidationError("generate_synthetic: need 0 <= leak_dims <= num_features >= 1");
  }
  auto check_prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError(std::string("generate_synthetic: ") + name + " outside [0, 1]");
    }
  };
  check_prob(spec.intra_prob, "intra_prob");
  check_prob(spec.inter_prob, "inter_prob");
  check_prob(spec.label_bias, "label_bias");
  if (spec.leak_dims == spec.num_features) {
    throw ValidationError("generate_synthetic: at least one non-leak feature required");
  }

  Rng rng = make_rng(spec.seed, Stream::synthetic);
  const std::size_t n = spec.num_nodes;

  Graph g;
  g.num_nodes = n;
  g.has_sensitive = true;
  g.sensitive.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.sensitive[i] = i < (n + 1) / 2 ? 0 : 1;

  // Every feature is a noisy reading of one latent signal. Leak dimensions
  // read it with the best signal-to-noise but are shifted by the sensitive
  // bit; the remaining dimensions read it weakly and cleanly. The label
  // follows the signal with only a mild direct sensitive term, so a model
  // that leans on the leak dimensions inherits a large group gap while a
  // model using the clean dimensions gives most of that gap up for a small
  // accuracy price. All bias scales are keyed to label_bias so zero means no
  // sensitive channel anywhere.
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::vector<double> signal(n);
  for (std::size_t i = 0; i < n; ++i) signal[i] = unit_normal(rng);

  g.features = Mat(n, spec.num_features);
  for (std::size_t i = 0; i < n; ++i) {
    const double shift = 3.0 * spec.label_bias * (g.sensitive[i] == 1 ? 1.0 : -1.0);
    for (std::size_t f = 0; f < spec.num_features; ++f) {
      const double noise = unit_normal(rng);
      g.features(i, f) = f < spec.leak_dims ? 0.9 * signal[i] + shift + noise
                                            : 0.35 * signal[i] + noise;
    }
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  g.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double logit =
        1.6 * signal[i] + 0.15 * spec.label_bias * (g.sensitive[i] == 1 ? 1.0 : -1.0);
    const double p1 = 1.0 / (1.0 + std::exp(-logit));
    g.labels[i] = unit(rng) < p1 ? 1 : 0;
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = g.sensitive[i] == g.sensitive[j] ? spec.intra_prob : spec.inter_prob;
      if (unit(rng) < p) g.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = n / 2;
  const std::size_t n_val = n / 4;
  g.splits.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto node = static_cast<std::size_t>(order[k]);
    g.splits[node] = k < n_train ? Split::train : (k < n_train + n_val ? Split::val : Split::test);
  }

  g.validate();
  return g;
}

}  // namespace fairwos
