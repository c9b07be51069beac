#include "dina/model.hpp"

#include "dina/rng.hpp"

namespace dina {

DinaModel::DinaModel(const ModelConfig& config)
    : config_(config), image_(config.image, sub_seed(config.seed, 10)), neural_(config.neural, sub_seed(config.seed, 11)) {}

FeatureMap DinaModel::image_map(const StimulusImage& img, PathwayKeep keep) const {
  NoGradGuard guard;
  return to_feature_map(image_.forward(img, keep));
}

FeatureMap DinaModel::neural_map(std::span<const float> responses) const {
  NoGradGuard guard;
  return to_feature_map(neural_.forward(responses));
}

FeatureMap DinaModel::neural_map(std::span<const float> responses, const std::vector<bool>& keep_mask) const {
  NoGradGuard guard;
  return to_feature_map(neural_.masked_forward(responses, keep_mask));
}

FeatureMap to_feature_map(const Tensor& t) {
  if (t.size() != static_cast<std::size_t>(kMapSize)) {
    throw DimensionError("feature map must have 16 x 64 entries, got " + shape_string(t.shape()));
  }
  return Eigen::Map<const FeatureMap>(t.ptr(), kMapHeight, kMapWidth);
}

}  // namespace dina
