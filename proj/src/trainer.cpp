#include "dina/trainer.hpp"

#include <cmath>
#include <limits>

#include "dina/errors.hpp"
#include "dina/ops.hpp"
#include "dina/rng.hpp"

namespace dina {

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("train: batch_size must be at least 2");
  if (!(temperature > 0.0)) throw ConfigError("train: temperature must be positive");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("train: test_fraction must be in (0, 1)");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("train: val_fraction must be in [0, 1)");
  if (test_fraction + val_fraction >= 1.0) throw ConfigError("train: test and validation fractions sum to >= 1");
  if (max_epochs < 0 || patience < 0) throw ConfigError("train: max_epochs and patience must be nonnegative");
}

SplitIndex make_split(int stimuli, const TrainConfig& cfg) {
  cfg.validate();
  if (stimuli < 10) throw ConfigError("split: need at least 10 stimuli, got " + std::to_string(stimuli));
  const int n_test = static_cast<int>(std::lround(cfg.test_fraction * stimuli));
  const int pool = stimuli - n_test;
  const int n_val = static_cast<int>(std::lround(cfg.val_fraction * pool));
  if (n_test < 1 || pool - n_val < 1) throw ConfigError("split: fractions leave an empty partition");
  Rng rng(sub_seed(cfg.seed, 100));
  const auto perm = rng.permutation(stimuli);
  SplitIndex s;
  s.test_ids.assign(perm.begin(), perm.begin() + n_test);
  s.val_ids.assign(perm.begin() + n_test, perm.begin() + n_test + n_val);
  s.train_ids.assign(perm.begin() + n_test + n_val, perm.end());
  return s;
}

template <typename T>
BasicTensor<T> infonce_loss(const BasicTensor<T>& image, const BasicTensor<T>& neural, T temperature) {
  if (image.ndim() != 2 || image.shape() != neural.shape()) {
    throw DimensionError("infonce_loss: embeddings " + shape_string(image.shape()) + " and " +
                         shape_string(neural.shape()));
  }
  if (image.dim(0) < 2) throw ContractError("infonce_loss: batch needs at least two pairs");
  if (!(temperature > T(0))) throw ConfigError("infonce_loss: temperature must be positive");
  auto logits = scale(matmul(l2_normalize_rows(image), transpose(l2_normalize_rows(neural))), T(1) / temperature);
  return scale(add(diag_cross_entropy(logits), diag_cross_entropy(transpose(logits))), T(0.5));
}

template Tensor infonce_loss(const Tensor&, const Tensor&, float);
template TensorD infonce_loss(const TensorD&, const TensorD&, double);

namespace {

Tensor image_maps(const DinaModel& model, const Dataset& data, const std::vector<int>& ids) {
  NoGradGuard guard;
  std::vector<Tensor> rows;
  rows.reserve(ids.size());
  for (int id : ids) rows.push_back(model.image().forward(data.image(id)));
  return stack_rows(rows);
}

Tensor neural_maps(const DinaModel& model, const Dataset& data, const std::vector<int>& ids) {
  std::vector<Tensor> rows;
  rows.reserve(ids.size());
  for (int id : ids) rows.push_back(model.neural().forward(data.response(id)));
  return stack_rows(rows);
}

struct BatchOutcome {
  double loss;
  double grad_norm;
};

// One optimization step. Image maps are first computed without a graph; the
// loss gradient with respect to each map is then pushed through a fresh
// per-image graph, so only one image graph is alive at a time.
BatchOutcome train_batch(DinaModel& model, const Dataset& data, const std::vector<int>& ids,
                         const TrainConfig& cfg, OptimizerState<float>& image_opt,
                         OptimizerState<float>& neural_opt, std::vector<Tensor>& all_params) {
  Tensor img = image_maps(model, data, ids);
  img.set_requires_grad(true);
  Tensor neu = neural_maps(model, data, ids);
  Tensor loss = infonce_loss(img, neu, static_cast<float>(cfg.temperature));
  backward(loss);

  const auto g = img.grad();
  for (std::size_t b = 0; b < ids.size(); ++b) {
    Tensor map = model.image().forward(data.image(ids[b]));
    backward(map, std::span<const float>(g.data() + b * kMapSize, kMapSize));
  }
  const double norm = cfg.clip_norm > 0 ? clip_grad_norm<float>(all_params, cfg.clip_norm) : 0.0;
  image_opt.step();
  neural_opt.step();
  image_opt.zero_grad();
  neural_opt.zero_grad();
  return {loss.item(), norm};
}

}  // namespace

double batch_loss(const DinaModel& model, const Dataset& data, const std::vector<int>& ids, double temperature) {
  NoGradGuard guard;
  return infonce_loss(image_maps(model, data, ids), neural_maps(model, data, ids), static_cast<float>(temperature))
      .item();
}

TrainResult train(DinaModel& model, const Dataset& data, const SplitIndex& split, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.neurons() != model.neurons()) {
    throw DimensionError("train: dataset has " + std::to_string(data.neurons()) + " neurons, model expects " +
                         std::to_string(model.neurons()));
  }
  if (static_cast<int>(split.train_ids.size()) < cfg.batch_size) {
    throw ConfigError("train: " + std::to_string(split.train_ids.size()) + " training pairs is fewer than batch_size " +
                      std::to_string(cfg.batch_size));
  }
  if (split.val_ids.size() < 2) throw ConfigError("train: validation split needs at least two pairs");

  OptimizerState<float> image_opt(cfg.image_optimizer, model.image().params().tensors());
  OptimizerState<float> neural_opt(cfg.neural_optimizer, model.neural().params().tensors());
  std::vector<Tensor> all_params = model.image().params().tensors();
  for (auto& t : model.neural().params().tensors()) all_params.push_back(t);

  Rng rng(sub_seed(cfg.seed, 200));
  std::vector<int> order = split.train_ids;

  TrainResult result;
  result.initial_val_loss = batch_loss(model, data, split.val_ids, cfg.temperature);
  result.best_val_loss = result.initial_val_loss;
  auto best_image = model.image().params().snapshot();
  auto best_neural = model.neural().params().snapshot();

  const std::size_t batches = order.size() / static_cast<std::size_t>(cfg.batch_size);
  int stale = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<int> ids(order.begin() + static_cast<std::ptrdiff_t>(b * cfg.batch_size),
                           order.begin() + static_cast<std::ptrdiff_t>((b + 1) * cfg.batch_size));
      if (epoch == 1 && b == 0) result.initial_batch_loss = batch_loss(model, data, ids, cfg.temperature);
      total += train_batch(model, data, ids, cfg, image_opt, neural_opt, all_params).loss;
    }
    EpochRecord rec{epoch, total / static_cast<double>(batches), batch_loss(model, data, split.val_ids, cfg.temperature)};
    result.history.push_back(rec);
    result.epochs_run = epoch;
    if (on_epoch) on_epoch(rec);
    if (rec.val_loss < result.best_val_loss) {
      result.best_val_loss = rec.val_loss;
      result.best_epoch = epoch;
      best_image = model.image().params().snapshot();
      best_neural = model.neural().params().snapshot();
      stale = 0;
    } else if (++stale > cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  model.image().params().restore(best_image);
  model.neural().params().restore(best_neural);
  result.rng_state = rng.state();
  return result;
}

}  // namespace dina
