#pragma once

#include <Eigen/Dense>

namespace regpca {

class DataMatrix;
DataMatrix center_columns(const DataMatrix& x);

/// Dense n×p observation matrix (individuals in rows) together with its
/// centering state. Construction validates finiteness and shape.
class DataMatrix {
 public:
  explicit DataMatrix(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  bool centered() const noexcept { return centered_; }
  const Eigen::VectorXd& column_means() const noexcept { return column_means_; }

  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }

  /// Values with the recorded column means added back.
  Eigen::MatrixXd uncentered() const;

  /// Wraps an already centered matrix, recording the means that were removed.
  static DataMatrix from_centered(Eigen::MatrixXd values, Eigen::VectorXd column_means);

 private:
  DataMatrix(Eigen::MatrixXd values, bool centered, Eigen::VectorXd column_means);
  friend DataMatrix center_columns(const DataMatrix& x);

  Eigen::MatrixXd values_;
  bool centered_ = false;
  Eigen::VectorXd column_means_;
};

/// Thin SVD of a centered matrix: X = U diag(sqrt(eigenvalues)) Vᵀ, where
/// eigenvalues are those of XᵀX, sorted non-increasing.
struct SvdFactors {
  Eigen::MatrixXd left_vectors;   // n×r
  Eigen::MatrixXd right_vectors;  // p×r
  Eigen::VectorXd eigenvalues;    // length r
  Eigen::Index max_rank = 0;      // min(n-1, p)
  Eigen::Index effective_rank = 0;

  Eigen::Index rank() const noexcept { return eigenvalues.size(); }
  Eigen::Index rows() const noexcept { return left_vectors.rows(); }
  Eigen::Index cols() const noexcept { return right_vectors.rows(); }
  Eigen::VectorXd singular_values() const { return eigenvalues.cwiseSqrt(); }
};

/// Eigenvalues below this fraction of the leading one are clamped to zero.
inline constexpr double kEigenvalueFloor = 1e-12;

DataMatrix center_columns(const DataMatrix& x);

/// Spectral decomposition of a centered matrix. Keeps min(n-1, p) pairs and
/// flips each pair so the largest-magnitude entry of v_s is positive.
SvdFactors decompose(const DataMatrix& x);

/// Sum over s < weights.size() of weight_s * sqrt(lambda_s) * u_s v_sᵀ.
Eigen::MatrixXd reconstruct_weighted(const SvdFactors& factors, const Eigen::VectorXd& weights);

}  // namespace regpca
