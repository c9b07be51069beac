#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dina/interp_image.hpp"
#include "dina/interp_neural.hpp"
#include "dina/model.hpp"
#include "dina/synth.hpp"
#include "dina/trainer.hpp"

namespace dina {

/// Every tunable of a CLI run. Text form is INI-like:
///
///   [train]
///   max_epochs = 120   # comments run to end of line
///
/// All keys are optional. `[run] seed` feeds every seeded stage.
struct RunConfig {
  std::uint64_t seed = 7;
  int threads = 0;  // 0 = hardware concurrency
  std::string image_preset = "compact";
  ModelConfig model;
  TrainConfig train;
  SynthConfig synth;
  std::vector<int> eval_ks{1, 5, 10};
  OcclusionConfig occlusion;
  BlobConfig blobs;
  AblationConfig ablation;
  bool attention_average_first = false;
  int attention_bins = 50;

  /// Copies `seed` into the per-stage seed fields.
  void apply_seed(std::uint64_t s);
  void validate() const;
};

/// Throws ConfigError naming `origin` and the line for malformed lines,
/// unknown sections or keys, and unparsable values.
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::string& path);

/// Canonical text: every key in a fixed order. Parsing it reproduces the config.
std::string to_text(const RunConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace dina
