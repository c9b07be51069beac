#pragma once

#include <Eigen/Dense>

namespace dina {

inline constexpr int kImageHeight = 68;
inline constexpr int kImageWidth = 270;
inline constexpr int kImagePixels = kImageHeight * kImageWidth;
inline constexpr int kMapHeight = 16;
inline constexpr int kMapWidth = 64;
inline constexpr int kMapSize = kMapHeight * kMapWidth;

template <typename Scalar>
using MatrixR = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixRf = MatrixR<float>;
using MatrixRd = MatrixR<double>;

/// Grayscale stimulus, 68 x 270, values in [0, 1].
using StimulusImage = MatrixRf;
/// Single-channel 16 x 64 latent map emitted by either tower.
using FeatureMap = MatrixRf;

}  // namespace dina
