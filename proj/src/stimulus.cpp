#include "dina/stimulus.hpp"

#include "dina/errors.hpp"
#include "dina/pca.hpp"

namespace dina {

MatrixRf renormalize_set(const MatrixRd& images) {
  const double lo = images.minCoeff(), hi = images.maxCoeff();
  if (!(hi > lo)) return MatrixRf::Constant(images.rows(), images.cols(), 0.5f);
  return ((images.array() - lo) / (hi - lo)).cast<float>().matrix();
}

MatrixRf whiten_images(const MatrixRf& images) {
  if (images.rows() < 2) throw InsufficientDataError("whitening needs at least two images");
  const PcaBasis basis = pca_basis(images);
  const double floor = basis.variances.size() ? basis.variances(0) * 1e-10 : 0.0;
  Eigen::Index keep = 0;
  while (keep < basis.variances.size() && basis.variances(keep) > floor && basis.variances(keep) > 0.0) ++keep;
  if (keep == 0) throw DataError("whitening: image set has zero variance (all images identical)");

  const Eigen::MatrixXd centered = images.cast<double>().rowwise() - basis.mean;
  const Eigen::MatrixXd v = basis.components.leftCols(keep);
  const Eigen::VectorXd inv_sd = basis.variances.head(keep).cwiseSqrt().cwiseInverse();
  MatrixRd white = (centered * v) * inv_sd.asDiagonal() * v.transpose();
  white.rowwise() += basis.mean;
  return renormalize_set(white);
}

MatrixRf lowdim_images(const MatrixRf& images, int d) {
  if (d <= 0) throw ConfigError("lowdim_images: d must be positive");
  if (images.rows() < 2) throw InsufficientDataError("low-dimensional projection needs at least two images");
  const PcaBasis basis = pca_basis(images, d);
  const Eigen::MatrixXd centered = images.cast<double>().rowwise() - basis.mean;
  MatrixRd recon = (centered * basis.components) * basis.components.transpose();
  recon.rowwise() += basis.mean;
  return renormalize_set(recon);
}

}  // namespace dina
