#pragma once

#include <cstdint>
#include <span>

#include "dina/image_tower.hpp"
#include "dina/neural_tower.hpp"

namespace dina {

struct ModelConfig {
  ImageTowerConfig image = ImageTowerConfig::compact();
  NeuralTowerConfig neural;
  std::uint64_t seed = 7;
};

/// Both towers of the aligned model, float precision.
class DinaModel {
 public:
  explicit DinaModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  int neurons() const { return config_.neural.neurons; }

  ImageTower<float>& image() { return image_; }
  const ImageTower<float>& image() const { return image_; }
  NeuralTower<float>& neural() { return neural_; }
  const NeuralTower<float>& neural() const { return neural_; }

  // Graph-free inference helpers.
  FeatureMap image_map(const StimulusImage& img, PathwayKeep keep = PathwayKeep::Both) const;
  FeatureMap neural_map(std::span<const float> responses) const;
  FeatureMap neural_map(std::span<const float> responses, const std::vector<bool>& keep_mask) const;

 private:
  ModelConfig config_;
  ImageTower<float> image_;
  NeuralTower<float> neural_;
};

/// Copies a [16 x 64] tensor into a FeatureMap.
FeatureMap to_feature_map(const Tensor& t);

}  // namespace dina
