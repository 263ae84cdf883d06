#include "regpca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "regpca/error.hpp"

namespace regpca {

namespace {

void require_finite(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (!std::isfinite(m(i, j))) {
          std::ostringstream msg;
          msg << "non-finite entry at row " << i + 1 << ", column " << j + 1;
          throw Error(ErrorKind::invalid_input, msg.str());
        }
      }
    }
  }
}

void require_shape(const Eigen::MatrixXd& m) {
  if (m.rows() < 2 || m.cols() < 1) {
    std::ostringstream msg;
    msg << "data matrix must have at least 2 rows and 1 column, got " << m.rows() << "x"
        << m.cols();
    throw Error(ErrorKind::invalid_input, msg.str());
  }
}

}  // namespace

DataMatrix::DataMatrix(Eigen::MatrixXd values)
    : DataMatrix(std::move(values), false, Eigen::VectorXd()) {}

DataMatrix::DataMatrix(Eigen::MatrixXd values, bool centered, Eigen::VectorXd column_means)
    : values_(std::move(values)), centered_(centered), column_means_(std::move(column_means)) {
  require_shape(values_);
  require_finite(values_);
  if (column_means_.size() == 0) column_means_ = Eigen::VectorXd::Zero(values_.cols());
  if (column_means_.size() != values_.cols()) {
    throw Error(ErrorKind::shape, "column_means length does not match column count");
  }
  require_finite(column_means_);
}

DataMatrix DataMatrix::from_centered(Eigen::MatrixXd values, Eigen::VectorXd column_means) {
  DataMatrix out(std::move(values), true, std::move(column_means));
  const auto n = static_cast<double>(out.rows());
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const auto col = out.values_.col(j);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / (n - 1.0));
    if (std::abs(mean) > 1e-10 * (sd + 1.0)) {
      std::ostringstream msg;
      msg << "column " << j + 1 << " is not centered (mean " << mean << ")";
      throw Error(ErrorKind::invalid_input, msg.str());
    }
  }
  return out;
}

Eigen::MatrixXd DataMatrix::uncentered() const {
  return values_.rowwise() + column_means_.transpose();
}

DataMatrix center_columns(const DataMatrix& x) {
  const Eigen::VectorXd means = x.values().colwise().mean().transpose();
  Eigen::MatrixXd centered = x.values().rowwise() - means.transpose();
  return DataMatrix(std::move(centered), true, means);
}

SvdFactors decompose(const DataMatrix& x) {
  if (!x.centered()) {
    throw Error(ErrorKind::invalid_input, "decompose requires a centered matrix");
  }
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const Eigen::Index max_rank = std::min(n - 1, p);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x.values(), Eigen::ComputeThinU | Eigen::ComputeThinV);

  SvdFactors f;
  f.max_rank = max_rank;
  f.left_vectors = svd.matrixU().leftCols(max_rank);
  f.right_vectors = svd.matrixV().leftCols(max_rank);
  f.eigenvalues = svd.singularValues().head(max_rank).array().square().matrix();

  const double leading = max_rank > 0 ? f.eigenvalues(0) : 0.0;
  f.effective_rank = 0;
  for (Eigen::Index s = 0; s < max_rank; ++s) {
    if (!(f.eigenvalues(s) > kEigenvalueFloor * leading)) {
      f.eigenvalues(s) = 0.0;
    } else {
      ++f.effective_rank;
    }

    Eigen::Index arg = 0;
    f.right_vectors.col(s).cwiseAbs().maxCoeff(&arg);
    if (f.right_vectors(arg, s) < 0.0) {
      f.right_vectors.col(s) *= -1.0;
      f.left_vectors.col(s) *= -1.0;
    }
  }
  return f;
}

Eigen::MatrixXd reconstruct_weighted(const SvdFactors& factors, const Eigen::VectorXd& weights) {
  const Eigen::Index S = weights.size();
  if (S > factors.rank()) {
    std::ostringstream msg;
    msg << "requested " << S << " dimensions but only " << factors.rank() << " are available";
    throw Error(ErrorKind::rank, msg.str());
  }
  for (Eigen::Index s = 0; s < S; ++s) {
    const double w = weights(s);
    if (!std::isfinite(w) || w < 0.0 || w > 1.0) {
      std::ostringstream msg;
      msg << "weight " << s + 1 << " = " << w << " is outside [0, 1]";
      throw Error(ErrorKind::invalid_weight, msg.str());
    }
  }
  const Eigen::VectorXd scaled =
      weights.cwiseProduct(factors.eigenvalues.head(S).cwiseSqrt());
  return factors.left_vectors.leftCols(S) * scaled.asDiagonal() *
         factors.right_vectors.leftCols(S).transpose();
}

}  // namespace regpca
