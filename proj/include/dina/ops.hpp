#pragma once

#include <vector>

#include "dina/tensor.hpp"

// Differentiable tensor operations.
//
// Feature grids use channel-first layout [C x H x W]; token sequences are
// [T x d]. A tensor of rank > 2 is viewed as [dim0 x rest] wherever an op
// documents a 2-D operand.

namespace dina {

// ---- linear algebra -------------------------------------------------------

/// a[m x k] times b viewed as [k x rest]; result has shape {m, b.shape[1:]...}.
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a);

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape);

// ---- elementwise ----------------------------------------------------------

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor);
template <typename T>
BasicTensor<T> gelu(const BasicTensor<T>& a);

/// x[R x C] + bias[C] broadcast over rows.
template <typename T>
BasicTensor<T> add_row_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias);
/// x[C x ...] + bias[C] broadcast over every position of channel c.
template <typename T>
BasicTensor<T> add_channel_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias);

/// Row i of x[N x d] scaled by r[i].
template <typename T>
BasicTensor<T> scale_rows(const BasicTensor<T>& x, const BasicTensor<T>& r);
/// out[i] = a[i,:] . b[i,:] for a, b of shape [N x d].
template <typename T>
BasicTensor<T> rowwise_dot(const BasicTensor<T>& a, const BasicTensor<T>& b);

// ---- reductions -----------------------------------------------------------

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a);
template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a);
template <typename T>
BasicTensor<T> dot(const BasicTensor<T>& a, const BasicTensor<T>& b);

// ---- slicing --------------------------------------------------------------

/// Rows [begin, end) along the first extent.
template <typename T>
BasicTensor<T> slice_rows(const BasicTensor<T>& a, int begin, int end);
template <typename T>
BasicTensor<T> concat_rows(const BasicTensor<T>& a, const BasicTensor<T>& b);
/// Columns [begin, end) of a 2-D tensor.
template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& a, int begin, int end);
template <typename T>
BasicTensor<T> concat_cols(const std::vector<BasicTensor<T>>& parts);
/// Stacks equally shaped tensors into [B x numel].
template <typename T>
BasicTensor<T> stack_rows(const std::vector<BasicTensor<T>>& rows);

// ---- normalization and attention -----------------------------------------

template <typename T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& logits);

/// Normalizes each row of x[R x C] over its C entries.
template <typename T>
BasicTensor<T> layer_norm_rows(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                               T eps = T(1e-5));
/// Normalizes each spatial position of x[C x ...] across channels.
template <typename T>
BasicTensor<T> layer_norm_channels(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                                   const BasicTensor<T>& beta, T eps = T(1e-5));

/// Divides each row by its L2 norm; zero rows raise NumericError.
template <typename T>
BasicTensor<T> l2_normalize_rows(const BasicTensor<T>& x, T min_norm = T(1e-12));

/// Mean over rows of -log softmax(row)[row index] for a square logits matrix.
template <typename T>
BasicTensor<T> diag_cross_entropy(const BasicTensor<T>& logits);

template <typename T>
struct AttentionResult {
  BasicTensor<T> out;      // [Tq x dv]
  BasicTensor<T> weights;  // [Tq x Tk], rows sum to one; constant, outside the graph
};

/// softmax(q k^T * scale) v; scale <= 0 selects 1/sqrt(d).
template <typename T>
AttentionResult<T> softmax_attention(const BasicTensor<T>& q, const BasicTensor<T>& k, const BasicTensor<T>& v,
                                     T scale = T(0));

/// Splits the model dimension into `heads` equal slices, attends per slice
/// with scale 1/sqrt(d/heads), and concatenates the head outputs.
template <typename T>
BasicTensor<T> multi_head_attention(const BasicTensor<T>& q, const BasicTensor<T>& k, const BasicTensor<T>& v,
                                    int heads);

// ---- spatial --------------------------------------------------------------

/// Per-channel 3x3 correlation with zero padding 1: x[C x H x W], k[C x 3 x 3].
template <typename T>
BasicTensor<T> depthwise_conv3x3(const BasicTensor<T>& x, const BasicTensor<T>& kernels);

/// Dense 3x3 convolution, zero padding 1: x[Cin x H x W], w[Cout x Cin x 3 x 3].
template <typename T>
BasicTensor<T> conv3x3(const BasicTensor<T>& x, const BasicTensor<T>& weights, int stride);

/// Non-overlapping average pooling by `factor`; H and W must divide evenly.
template <typename T>
BasicTensor<T> avg_pool2d(const BasicTensor<T>& x, int factor);

/// Bilinear resampling of x[C x H x W] to [C x out_h x out_w] (half-pixel centers).
template <typename T>
BasicTensor<T> resize_bilinear(const BasicTensor<T>& x, int out_h, int out_w);

}  // namespace dina
