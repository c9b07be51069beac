#include "dina/image_tower.hpp"

#include <cmath>
#include <string>

namespace dina {

void ImageTowerConfig::validate() const {
  for (int s = 0; s < 2; ++s) {
    if (stage_blocks[s] < 1) throw ConfigError("image tower: every stage needs at least one block");
    if (stage_channels[s] < 2 || stage_channels[s] % 2 != 0) {
      throw ConfigError("image tower: stage channels must be even and positive");
    }
    if (heads[s] < 1 || (stage_channels[s] / 2) % heads[s] != 0) {
      throw ConfigError("image tower: heads must divide the half-channel width C/2");
    }
  }
  if (ffn_ratio < 1 || head_hidden < 1) throw ConfigError("image tower: MLP widths must be positive");
  if (input_hw[0] != kImageHeight || input_hw[1] != kImageWidth) {
    throw ConfigError("image tower: input must be 68 x 270");
  }
  if (output_hw[0] < 1 || output_hw[1] < 1) throw ConfigError("image tower: empty output grid");
  const auto s1 = stage1_hw();
  if (global_downsample < 1 || s1[0] % global_downsample || s1[1] % global_downsample ||
      output_hw[0] % global_downsample || output_hw[1] % global_downsample) {
    throw ConfigError("image tower: global downsample factor must divide both stage grids");
  }
}

template <typename T>
BasicTensor<T> global_stream(const BasicTensor<T>& x, const BasicTensor<T>& position, const BasicTensor<T>& wq,
                             const BasicTensor<T>& wk, const BasicTensor<T>& wv, int heads) {
  if (x.ndim() != 3) throw DimensionError("global_stream: expected [d x Hg x Wg], got " + shape_string(x.shape()));
  const int d = x.dim(0), tokens = x.dim(1) * x.dim(2);
  auto grid = add(x, position);
  auto seq = transpose(reshape(grid, {d, tokens}));
  auto attended = multi_head_attention(matmul(seq, wq), matmul(seq, wk), matmul(seq, wv), heads);
  return reshape(transpose(attended), x.shape());
}

template <typename T>
CoAttentionResult<T> co_attention(const BasicTensor<T>& local, const BasicTensor<T>& global,
                                  const CoAttentionParams<T>& p, int heads) {
  if (local.ndim() != 3 || global.ndim() != 3 || local.dim(0) != global.dim(0)) {
    throw DimensionError("co_attention: streams " + shape_string(local.shape()) + " and " +
                         shape_string(global.shape()));
  }
  const int d = local.dim(0), h = local.dim(1), w = local.dim(2);
  const int hg = global.dim(1), wg = global.dim(2);
  if (h % hg != 0 || w % wg != 0 || h / hg != w / wg) {
    throw DimensionError("co_attention: global grid does not evenly divide the local grid");
  }
  const int tokens = hg * wg;
  auto pooled = avg_pool2d(local, h / hg);
  auto local_seq = transpose(reshape(pooled, {d, tokens}));
  auto global_seq = transpose(reshape(global, {d, tokens}));

  auto to_local = matmul(multi_head_attention(matmul(local_seq, p.local_q), matmul(global_seq, p.local_k),
                                              matmul(global_seq, p.local_v), heads),
                         p.local_out);
  auto to_global = matmul(multi_head_attention(matmul(global_seq, p.global_q), matmul(local_seq, p.global_k),
                                               matmul(local_seq, p.global_v), heads),
                          p.global_out);

  auto local_update = resize_bilinear(reshape(transpose(to_local), {d, hg, wg}), h, w);
  return {add(local, local_update), add(global, reshape(transpose(to_global), {d, hg, wg}))};
}

template <typename T>
ImageTower<T>::ImageTower(ImageTowerConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const int c1 = config_.stage_channels[0];
  const int c2 = config_.stage_channels[1];

  // learnable input affine, starts as (x - 0.5) * 4
  input_scale_ = params_.constant("stem.input_scale", ParamKind::Weight, {1}, T(4));
  input_shift_ = params_.constant("stem.input_shift", ParamKind::Bias, {1}, T(-0.5));
  stem_w_ = params_.normal("stem.weight", {c1, 1, 3, 3}, std::sqrt(2.0 / 9.0), rng);
  stem_b_ = params_.constant("stem.bias", ParamKind::Bias, {c1}, T(0));

  const auto s1 = config_.stage1_hw();
  const std::array<std::array<int, 2>, 2> grids{s1, config_.output_hw};
  for (int s = 0; s < 2; ++s) {
    const int c = config_.stage_channels[s];
    const int d = c / 2;
    const int hg = grids[s][0] / config_.global_downsample;
    const int wg = grids[s][1] / config_.global_downsample;
    const int hidden = c * config_.ffn_ratio;
    const double proj_std = 1.0 / std::sqrt(static_cast<double>(d));
    for (int b = 0; b < config_.stage_blocks[s]; ++b) {
      const std::string pre = "stage" + std::to_string(s + 1) + ".block" + std::to_string(b) + ".";
      DualStreamBlockParams<T> p;
      p.local_kernel = params_.normal(pre + "local.kernel", {d, 3, 3}, 0.2, rng);
      p.local_bias = params_.constant(pre + "local.bias", ParamKind::Bias, {d}, T(0));
      p.global_gamma = params_.constant(pre + "global.norm.gamma", ParamKind::Weight, {d}, T(1));
      p.global_beta = params_.constant(pre + "global.norm.beta", ParamKind::Bias, {d}, T(0));
      p.position = params_.normal(pre + "global.position", {d, hg, wg}, 0.02, rng);
      params_.entries().back().kind = ParamKind::Bias;
      p.wq = params_.normal(pre + "global.wq", {d, d}, proj_std, rng);
      p.wk = params_.normal(pre + "global.wk", {d, d}, proj_std, rng);
      p.wv = params_.normal(pre + "global.wv", {d, d}, proj_std, rng);
      p.cross.local_q = params_.normal(pre + "cross.local.wq", {d, d}, proj_std, rng);
      p.cross.local_k = params_.normal(pre + "cross.local.wk", {d, d}, proj_std, rng);
      p.cross.local_v = params_.normal(pre + "cross.local.wv", {d, d}, proj_std, rng);
      p.cross.local_out = params_.constant(pre + "cross.local.wo", ParamKind::Weight, {d, d}, T(0));
      p.cross.global_q = params_.normal(pre + "cross.global.wq", {d, d}, proj_std, rng);
      p.cross.global_k = params_.normal(pre + "cross.global.wk", {d, d}, proj_std, rng);
      p.cross.global_v = params_.normal(pre + "cross.global.wv", {d, d}, proj_std, rng);
      p.cross.global_out = params_.constant(pre + "cross.global.wo", ParamKind::Weight, {d, d}, T(0));
      p.ffn_gamma = params_.constant(pre + "ffn.norm.gamma", ParamKind::Weight, {c}, T(1));
      p.ffn_beta = params_.constant(pre + "ffn.norm.beta", ParamKind::Bias, {c}, T(0));
      p.ffn_w1 = params_.normal(pre + "ffn.w1", {hidden, c}, 1.0 / std::sqrt(static_cast<double>(c)), rng);
      p.ffn_b1 = params_.constant(pre + "ffn.b1", ParamKind::Bias, {hidden}, T(0));
      p.ffn_w2 = params_.normal(pre + "ffn.w2", {c, hidden}, 0.5 / std::sqrt(static_cast<double>(hidden)), rng);
      p.ffn_b2 = params_.constant(pre + "ffn.b2", ParamKind::Bias, {c}, T(0));
      stages_[s].push_back(p);
    }
    if (s == 0) {
      down_w_ = params_.normal("downsample.weight", {c2, c1}, 1.0 / std::sqrt(static_cast<double>(c1)), rng);
      down_b_ = params_.constant("downsample.bias", ParamKind::Bias, {c2}, T(0));
    }
  }
  const int hh = config_.head_hidden;
  head_gamma_ = params_.constant("head.norm.gamma", ParamKind::Weight, {c2}, T(1));
  head_beta_ = params_.constant("head.norm.beta", ParamKind::Bias, {c2}, T(0));
  head_w1_ = params_.normal("head.w1", {hh, c2}, 1.0 / std::sqrt(static_cast<double>(c2)), rng);
  head_b1_ = params_.constant("head.b1", ParamKind::Bias, {hh}, T(0));
  head_w2_ = params_.normal("head.w2", {1, hh}, 1.0 / std::sqrt(static_cast<double>(hh)), rng);
  head_b2_ = params_.constant("head.b2", ParamKind::Bias, {1}, T(1));
}

template <typename T>
BasicTensor<T> ImageTower<T>::block_forward(const BasicTensor<T>& x, const DualStreamBlockParams<T>& p, int heads,
                                            PathwayKeep keep) const {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2), d = c / 2;
  const int ds = config_.global_downsample;

  auto local_in = slice_rows(x, 0, d);
  auto global_in = slice_rows(x, d, c);

  // intra-scale propagation
  auto local = add(local_in, add_channel_bias(depthwise_conv3x3(local_in, p.local_kernel), p.local_bias));
  auto pooled = avg_pool2d(global_in, ds);
  auto normed = layer_norm_channels(pooled, p.global_gamma, p.global_beta);
  auto global = add(pooled, global_stream(normed, p.position, p.wq, p.wk, p.wv, heads));

  if (keep == PathwayKeep::GlobalOnly || keep == PathwayKeep::Neither) {
    local = BasicTensor<T>::zeros(local.shape());
  }
  if (keep == PathwayKeep::LocalOnly || keep == PathwayKeep::Neither) {
    global = BasicTensor<T>::zeros(global.shape());
  }

  // inter-scale co-attention
  auto crossed = co_attention(local, global, p.cross, heads);
  auto merged = concat_rows(crossed.local, resize_bilinear(crossed.global, h, w));

  auto hidden = gelu(add_channel_bias(matmul(p.ffn_w1, layer_norm_channels(merged, p.ffn_gamma, p.ffn_beta)),
                                      p.ffn_b1));
  return add(merged, add_channel_bias(matmul(p.ffn_w2, hidden), p.ffn_b2));
}

template <typename T>
BasicTensor<T> ImageTower<T>::forward(const StimulusImage& image, PathwayKeep keep, ImageForwardTrace* trace) const {
  if (image.rows() != config_.input_hw[0] || image.cols() != config_.input_hw[1]) {
    throw DimensionError("image tower: expected a 68 x 270 image, got " + std::to_string(image.rows()) + " x " +
                         std::to_string(image.cols()));
  }
  std::vector<T> data(static_cast<std::size_t>(image.size()));
  Eigen::Map<MatrixR<T>>(data.data(), image.rows(), image.cols()) = image.template cast<T>();
  return forward(BasicTensor<T>({1, static_cast<int>(image.rows()), static_cast<int>(image.cols())}, std::move(data)),
                 keep, trace);
}

template <typename T>
BasicTensor<T> ImageTower<T>::forward(const BasicTensor<T>& image, PathwayKeep keep, ImageForwardTrace* trace) const {
  if (image.size() != static_cast<std::size_t>(config_.input_hw[0]) * config_.input_hw[1]) {
    throw DimensionError("image tower: expected a 68 x 270 image, got " + shape_string(image.shape()));
  }
  const auto stem_in = config_.stem_input_hw();
  auto x = scale_rows(add_channel_bias(reshape(image, {1, kImagePixels}), input_shift_), input_scale_);
  x = resize_bilinear(reshape(x, {1, config_.input_hw[0], config_.input_hw[1]}), stem_in[0], stem_in[1]);
  x = gelu(add_channel_bias(conv3x3(x, stem_w_, 2), stem_b_));
  if (trace) trace->stem = x.shape();

  for (const auto& block : stages_[0]) x = block_forward(x, block, config_.heads[0], keep);
  if (trace) trace->stage1 = x.shape();

  x = add_channel_bias(matmul(down_w_, avg_pool2d(x, 2)), down_b_);
  for (const auto& block : stages_[1]) x = block_forward(x, block, config_.heads[1], keep);
  if (trace) trace->stage2 = x.shape();

  auto hidden = gelu(add_channel_bias(matmul(head_w1_, layer_norm_channels(x, head_gamma_, head_beta_)), head_b1_));
  auto out = reshape(add_channel_bias(matmul(head_w2_, hidden), head_b2_), {config_.output_hw[0], config_.output_hw[1]});
  if (trace) trace->output = out.shape();
  return out;
}

template BasicTensor<float> global_stream(const BasicTensor<float>&, const BasicTensor<float>&,
                                          const BasicTensor<float>&, const BasicTensor<float>&,
                                          const BasicTensor<float>&, int);
template BasicTensor<double> global_stream(const BasicTensor<double>&, const BasicTensor<double>&,
                                           const BasicTensor<double>&, const BasicTensor<double>&,
                                           const BasicTensor<double>&, int);
template CoAttentionResult<float> co_attention(const BasicTensor<float>&, const BasicTensor<float>&,
                                               const CoAttentionParams<float>&, int);
template CoAttentionResult<double> co_attention(const BasicTensor<double>&, const BasicTensor<double>&,
                                                const CoAttentionParams<double>&, int);
template class ImageTower<float>;
template class ImageTower<double>;

}  // namespace dina
