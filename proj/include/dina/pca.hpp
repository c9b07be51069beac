#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "dina/errors.hpp"

namespace dina {

struct VarianceSpectrum {
  std::vector<double> fractions;  // descending, sums to 1 unless degenerate
  double total_variance = 0.0;
  bool degenerate = false;        // zero total variance; fractions all zero
};

/// Principal axes of a row-sample matrix, computed from whichever of the
/// Gram or covariance matrices is smaller. Works in double.
struct PcaBasis {
  Eigen::RowVectorXd mean;
  Eigen::VectorXd variances;   // descending, sample variance (1/(n-1)) per component
  Eigen::MatrixXd components;  // p x r, orthonormal columns matching `variances`
};

namespace detail {

template <typename Derived>
Eigen::MatrixXd centered_rows(const Eigen::MatrixBase<Derived>& rows, Eigen::RowVectorXd* mean_out) {
  Eigen::MatrixXd x = rows.template cast<double>();
  Eigen::RowVectorXd mu = x.colwise().mean();
  x.rowwise() -= mu;
  if (mean_out) *mean_out = mu;
  return x;
}

}  // namespace detail

/// Full PCA basis. `max_components` <= 0 keeps min(n, p) components.
template <typename Derived>
PcaBasis pca_basis(const Eigen::MatrixBase<Derived>& rows, Eigen::Index max_components = 0) {
  const Eigen::Index n = rows.rows(), p = rows.cols();
  if (n < 2) throw InsufficientDataError("PCA needs at least two rows");
  PcaBasis basis;
  const Eigen::MatrixXd x = detail::centered_rows(rows, &basis.mean);
  const Eigen::Index r = std::min(n, p);
  const Eigen::Index keep = max_components > 0 ? std::min(max_components, r) : r;
  Eigen::VectorXd evals;
  Eigen::MatrixXd axes;
  if (p <= n) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.selfadjointView<Eigen::Lower>());
    evals = es.eigenvalues().reverse();
    axes = es.eigenvectors().rowwise().reverse();
  } else {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram.selfadjointView<Eigen::Lower>());
    evals = es.eigenvalues().reverse();
    const Eigen::MatrixXd u = es.eigenvectors().rowwise().reverse();
    // v_i = X^T u_i / sigma_i; components with no variance get a zero column.
    axes = Eigen::MatrixXd::Zero(p, r);
    const double floor = std::max(evals(0), 0.0) * 1e-12;
    for (Eigen::Index i = 0; i < r; ++i) {
      if (evals(i) > floor && evals(i) > 0.0) axes.col(i) = x.transpose() * u.col(i) / std::sqrt(evals(i));
    }
  }
  basis.variances = evals.head(keep).cwiseMax(0.0) / static_cast<double>(n - 1);
  basis.components = axes.leftCols(keep);
  return basis;
}

/// Variance fraction per principal component, descending, length min(n, p).
template <typename Derived>
VarianceSpectrum pca_variance_spectrum(const Eigen::MatrixBase<Derived>& rows) {
  const Eigen::Index n = rows.rows(), p = rows.cols();
  if (n < 2) throw InsufficientDataError("PCA variance spectrum needs at least two rows");
  const Eigen::MatrixXd x = detail::centered_rows(rows, nullptr);
  Eigen::MatrixXd small;
  if (p <= n) {
    small = Eigen::MatrixXd::Zero(p, p);
    small.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  } else {
    small = Eigen::MatrixXd::Zero(n, n);
    small.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(small.selfadjointView<Eigen::Lower>(), Eigen::EigenvaluesOnly);
  std::vector<double> values(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  for (double& v : values) v = std::max(v, 0.0);
  std::sort(values.begin(), values.end(), std::greater<>());
  values.resize(static_cast<std::size_t>(std::min(n, p)));

  VarianceSpectrum out;
  double total = 0.0;
  for (double v : values) total += v;
  out.total_variance = total / static_cast<double>(n - 1);
  const double scale = x.cwiseAbs2().maxCoeff();
  if (!(total > 1e-24 * std::max(scale, 1e-300)) || total == 0.0) {
    out.degenerate = true;
    out.fractions.assign(values.size(), 0.0);
    return out;
  }
  out.fractions.reserve(values.size());
  for (double v : values) out.fractions.push_back(v / total);
  return out;
}

}  // namespace dina
