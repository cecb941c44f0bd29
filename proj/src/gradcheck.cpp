#include "fairwos/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairwos/rng.hpp"

namespace fairwos {

GradCheckReport grad_check(const DifferentiableProgram& program, ParameterSet& params,
                           std::uint64_t seed, double h, std::size_t max_entries) {
  program.loss_and_grad(params);
  Rng rng = make_rng(seed, Stream::grad_check);
  GradCheckReport report;
  for (auto& p : params.items()) {
    std::vector<std::size_t> idx(p.value.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (idx.size() > max_entries) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(max_entries);
    }
    GradCheckEntry entry;
    entry.param = p.name;
    for (std::size_t i : idx) {
      const double saved = p.value.data[i];
      p.value.data[i] = saved + h;
      const double up = program.loss(params);
      p.value.data[i] = saved - h;
      const double down = program.loss(params);
      p.value.data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p.grad.data[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max({1.0, std::abs(analytic), std::abs(numeric)});
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
      ++entry.checked;
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.per_param.push_back(std::move(entry));
  }
  return report;
}

}  // namespace fairwos
