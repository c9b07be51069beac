#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dina/ops.hpp"
#include "dina/params.hpp"
#include "dina/types.hpp"

namespace dina {

/// Which streams stay active during a forward pass. The masked stream is
/// zeroed in every block before co-attention.
enum class PathwayKeep { Both, LocalOnly, GlobalOnly, Neither };

struct ImageTowerConfig {
  std::array<int, 2> stage_blocks{3, 4};
  std::array<int, 2> stage_channels{64, 128};
  std::array<int, 2> heads{2, 4};
  int global_downsample = 2;  // pooling factor of the global stream
  int ffn_ratio = 2;          // per-position FFN hidden width = ratio * C
  int head_hidden = 64;       // width of the final per-position MLP
  std::array<int, 2> input_hw{kImageHeight, kImageWidth};
  std::array<int, 2> output_hw{kMapHeight, kMapWidth};

  /// Full-width architecture (64/128 channels).
  static ImageTowerConfig standard() { return {}; }

  /// Same stage layout at reduced width for desk-scale training runs.
  static ImageTowerConfig compact() {
    ImageTowerConfig c;
    c.stage_channels = {16, 32};
    c.global_downsample = 4;
    c.ffn_ratio = 1;
    c.head_hidden = 16;
    return c;
  }

  /// Throws ConfigError unless the stage stack reaches output_hw exactly.
  void validate() const;

  /// Grid of the stem output / stage-1 blocks (2x the output grid).
  std::array<int, 2> stage1_hw() const { return {output_hw[0] * 2, output_hw[1] * 2}; }
  /// Resampled input fed to the stride-2 stem (4x the output grid).
  std::array<int, 2> stem_input_hw() const { return {output_hw[0] * 4, output_hw[1] * 4}; }
};

template <typename T>
struct CoAttentionParams {
  // local queries -> global keys/values
  BasicTensor<T> local_q, local_k, local_v, local_out;
  // global queries -> local keys/values
  BasicTensor<T> global_q, global_k, global_v, global_out;
};

template <typename T>
struct DualStreamBlockParams {
  BasicTensor<T> local_kernel, local_bias;
  BasicTensor<T> global_gamma, global_beta, position, wq, wk, wv;
  CoAttentionParams<T> cross;
  BasicTensor<T> ffn_gamma, ffn_beta, ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

/// Shapes observed during one forward pass.
struct ImageForwardTrace {
  Shape stem;
  Shape stage1;
  Shape stage2;
  Shape output;
};

/// Self-attention over the tokens of a pooled grid x[d x Hg x Wg] with
/// additive positional offsets; returns the attended grid (no residual).
template <typename T>
BasicTensor<T> global_stream(const BasicTensor<T>& x, const BasicTensor<T>& position, const BasicTensor<T>& wq,
                             const BasicTensor<T>& wk, const BasicTensor<T>& wv, int heads);

template <typename T>
struct CoAttentionResult {
  BasicTensor<T> local;   // [d x H x W]
  BasicTensor<T> global;  // [d x Hg x Wg]
};

/// Bidirectional cross-attention between the local stream f_l[d x H x W] and
/// the pooled global stream f_g[d x Hg x Wg]. Local tokens are average-pooled
/// to the global grid; each direction is added residually to its stream.
template <typename T>
CoAttentionResult<T> co_attention(const BasicTensor<T>& local, const BasicTensor<T>& global,
                                  const CoAttentionParams<T>& p, int heads);

/// Dual-stream image encoder: 68x270 stimulus to a 16x64 feature map.
template <typename T>
class ImageTower {
 public:
  ImageTower(ImageTowerConfig config, std::uint64_t seed);

  /// Returns a [16 x 64] map. Records a graph when grad mode is on.
  BasicTensor<T> forward(const StimulusImage& image, PathwayKeep keep = PathwayKeep::Both,
                         ImageForwardTrace* trace = nullptr) const;
  BasicTensor<T> forward(const BasicTensor<T>& image, PathwayKeep keep = PathwayKeep::Both,
                         ImageForwardTrace* trace = nullptr) const;

  const ImageTowerConfig& config() const { return config_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

 private:
  BasicTensor<T> block_forward(const BasicTensor<T>& x, const DualStreamBlockParams<T>& p, int heads,
                               PathwayKeep keep) const;

  ImageTowerConfig config_;
  ParameterSet<T> params_;
  BasicTensor<T> input_scale_, input_shift_;
  BasicTensor<T> stem_w_, stem_b_;
  std::array<std::vector<DualStreamBlockParams<T>>, 2> stages_;
  BasicTensor<T> down_w_, down_b_;
  BasicTensor<T> head_gamma_, head_beta_, head_w1_, head_b1_, head_w2_, head_b2_;
};

extern template class ImageTower<float>;
extern template class ImageTower<double>;

}  // namespace dina
