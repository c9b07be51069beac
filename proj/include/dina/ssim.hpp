#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "dina/errors.hpp"

namespace dina {

/// Mean structural similarity over all valid `window` x `window` patches
/// (stride 1, no padding).
///
/// The dynamic range L is max(a, b) - min(a, b) taken jointly over both maps,
/// floored at 1e-6, with stabilizers C1 = (0.01 L)^2 and C2 = (0.03 L)^2.
/// Moments are population (1/n) moments accumulated in double.
template <typename DerivedA, typename DerivedB>
double ssim(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b, int window = 3) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("ssim: maps have different shapes");
  }
  if (window < 1 || a.rows() < window || a.cols() < window) {
    throw DimensionError("ssim: map smaller than the window");
  }
  const Eigen::MatrixXd x = a.template cast<double>();
  const Eigen::MatrixXd y = b.template cast<double>();
  const double hi = std::max(x.maxCoeff(), y.maxCoeff());
  const double lo = std::min(x.minCoeff(), y.minCoeff());
  const double range = std::max(hi - lo, 1e-6);
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  const double inv_n = 1.0 / (window * window);

  double total = 0.0;
  const Eigen::Index wr = x.rows() - window + 1, wc = x.cols() - window + 1;
  for (Eigen::Index i = 0; i < wr; ++i) {
    for (Eigen::Index j = 0; j < wc; ++j) {
      const auto px = x.block(i, j, window, window);
      const auto py = y.block(i, j, window, window);
      const double mx = px.sum() * inv_n;
      const double my = py.sum() * inv_n;
      const double vx = (px.array() - mx).square().sum() * inv_n;
      const double vy = (py.array() - my).square().sum() * inv_n;
      const double cxy = ((px.array() - mx) * (py.array() - my)).sum() * inv_n;
      total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / static_cast<double>(wr * wc);
}

/// Cosine similarity of the flattened maps; 0 when either map has zero norm.
template <typename DerivedA, typename DerivedB>
double cosine_similarity(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  const double na = a.template cast<double>().norm();
  const double nb = b.template cast<double>().norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.template cast<double>().cwiseProduct(b.template cast<double>()).sum() / (na * nb);
}

}  // namespace dina
