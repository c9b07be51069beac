#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dina/model.hpp"
#include "dina/trainer.hpp"

namespace dina {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct StoredParameter {
  std::string name;
  ParamKind kind = ParamKind::Weight;
  Shape shape;
  std::vector<float> values;
};

/// "DINC" | u16 version | model config | per tower: name, parameter count,
/// (name, kind, rank, dims, float32 values)... | rng state | best val loss |
/// best epoch | dataset stimulus count | held-out test ids.
struct Checkpoint {
  ModelConfig config;
  std::vector<StoredParameter> image;
  std::vector<StoredParameter> neural;
  std::string rng_state;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  int dataset_stimuli = 0;  // 0 when no split was recorded
  std::vector<int> test_ids;
};

Checkpoint make_checkpoint(const DinaModel& model, const TrainResult* result = nullptr,
                           const SplitIndex* split = nullptr, int dataset_stimuli = 0);

/// Builds a model from the stored config and copies the weights in. Throws
/// FormatError when names or shapes disagree with the architecture.
DinaModel restore_model(const Checkpoint& ckpt);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dina
