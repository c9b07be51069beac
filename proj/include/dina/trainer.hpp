#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dina/dataset.hpp"
#include "dina/model.hpp"
#include "dina/optim.hpp"

namespace dina {

struct TrainConfig {
  int batch_size = 128;
  double temperature = 0.01;
  double test_fraction = 0.10;
  double val_fraction = 0.10;  // of the non-test pool
  int max_epochs = 200;
  int patience = 10;           // non-improving epochs tolerated before stopping
  std::uint64_t seed = 7;
  double clip_norm = 5.0;      // joint gradient norm cap; <= 0 disables
  OptimizerSettings image_optimizer = OptimizerSettings::adamw();
  OptimizerSettings neural_optimizer = OptimizerSettings::rmsprop();

  void validate() const;
};

struct SplitIndex {
  std::vector<int> train_ids;
  std::vector<int> val_ids;
  std::vector<int> test_ids;
};

/// Seeded random partition: |test| = round(test_fraction * S), |val| =
/// round(val_fraction * (S - |test|)), the rest train.
SplitIndex make_split(int stimuli, const TrainConfig& cfg);

/// Symmetric InfoNCE over a batch: rows of `image` and `neural` [B x 1024]
/// are L2-normalized, logits are cosine / temperature, and the loss is the
/// mean of the row-wise and column-wise cross-entropies with the diagonal as
/// targets.
template <typename T>
BasicTensor<T> infonce_loss(const BasicTensor<T>& image, const BasicTensor<T>& neural, T temperature);

/// Loss of a single batch without recording a graph.
double batch_loss(const DinaModel& model, const Dataset& data, const std::vector<int>& ids, double temperature);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  double initial_batch_loss = 0.0;  // first batch, before any update
  double initial_val_loss = 0.0;
  double best_val_loss = 0.0;
  int best_epoch = 0;               // 0 = the initial weights were never beaten
  int epochs_run = 0;
  bool stopped_early = false;
  std::string rng_state;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Joint contrastive training. The image tower uses `image_optimizer`
/// (AdamW by default) and the neural tower `neural_optimizer` (RMSprop).
/// Batches are reshuffled each epoch and the short tail batch is dropped.
/// The model is left holding the best-validation weights.
TrainResult train(DinaModel& model, const Dataset& data, const SplitIndex& split, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace dina
