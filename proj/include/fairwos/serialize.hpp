#pragma once

#include <optional>
#include <string>

#include "fairwos/fairness.hpp"

namespace fairwos {

// One JSON object per fine-tuning epoch. Optional metrics serialize as null
// when undefined, never as zero.
void save_trace_jsonl(const TrainingTrace& trace, const std::string& path);
TrainingTrace load_trace_jsonl(const std::string& path);

// Everything needed to re-run a trained model: named parameter matrices in
// row-major order, the input mode (encoder embedding or raw features), the
// attribute thresholds, and the final column weights. Guarded by an FNV-1a
// checksum over the canonical serialization; load refuses a file whose
// checksum does not match.
struct Checkpoint {
  std::string mode;  // fairwos | vanilla
  GnnMeta meta;
  std::uint64_t seed = 0;
  std::string input;  // encoder | raw
  std::optional<EncoderParams> encoder;
  GnnParams gnn;
  std::vector<double> thresholds;
  std::vector<bool> active;
  LambdaVec lambda;
};

void save_checkpoint(const ModelState& model, std::uint64_t seed, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fairwos
