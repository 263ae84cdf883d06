#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regpca/shrinkage.hpp"

namespace regpca {

enum class ConfigurationKind { individuals, variables };

/// m points in k retained dimensions, one label per point.
struct Configuration {
  Eigen::MatrixXd points;
  ConfigurationKind kind = ConfigurationKind::individuals;
  std::vector<std::string> labels;
};

struct ProcrustesAlignment {
  Eigen::MatrixXd rotation;     // k×k, orthogonal, may reflect
  Eigen::VectorXd translation;  // length k
  double scale = 1.0;
  double residual = 0.0;        // Frobenius distance after alignment
};

struct ProcrustesOptions {
  bool allow_scaling = true;
};

struct AlignedConfiguration {
  Configuration aligned;
  ProcrustesAlignment transform;
};

/// U diag(factor_s sqrt(lambda_s)): UΛ^{1/2} for PCA, shrunk for the others.
Configuration individual_coordinates(const ShrinkageResult& result,
                                     std::vector<std::string> labels = {});

/// V diag(factor_s sqrt(lambda_s)).
Configuration variable_coordinates(const ShrinkageResult& result,
                                   std::vector<std::string> labels = {});

/// Keeps the listed 1-based axes, in the given order.
Configuration select_axes(const Configuration& config, const std::vector<int>& axes);

/// Cosines between the rows of a variable configuration.
Eigen::MatrixXd cosine_matrix(const Configuration& config);

/// Least-squares similarity transform of `config` onto `reference`:
/// aligned = scale * config * rotation + translation (row-wise).
AlignedConfiguration procrustes_align(const Configuration& config, const Configuration& reference,
                                      const ProcrustesOptions& options = {});

/// Per-point mean position, per-axis variance and bias against the reference.
struct DispersionSummary {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd variance;
  Eigen::MatrixXd bias;
  std::vector<std::string> labels;

  /// Average over points of the summed per-axis variance.
  double mean_dispersion() const;
  /// Average over points of the Euclidean length of the bias.
  double mean_abs_bias() const;
};

DispersionSummary dispersion_summary(const std::vector<Configuration>& aligned_set,
                                     const Configuration& reference);

}  // namespace regpca
