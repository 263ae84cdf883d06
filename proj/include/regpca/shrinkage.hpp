#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "regpca/linalg.hpp"

namespace regpca {

enum class Method { pca, rpca, soft_threshold, ppca };

std::string_view to_string(Method m) noexcept;
/// Accepts "pca", "rpca", "sure" / "soft_threshold", "ppca".
Method parse_method(std::string_view name);

/// Output of every estimator. `factors` holds the per-dimension multiplier
/// applied to sqrt(lambda_s); `svd` is kept so coordinates can be derived.
struct ShrinkageResult {
  Method method = Method::pca;
  Eigen::Index rank = 0;
  double sigma2_hat = 0.0;
  Eigen::VectorXd factors;
  std::optional<Eigen::VectorXd> prior_variances;
  Eigen::MatrixXd fitted;
  std::optional<double> threshold;
  SvdFactors svd;

  /// Shrunk singular values factor_s * sqrt(lambda_s).
  Eigen::VectorXd shrunk_singular_values() const;
};

/// Maximum-likelihood pPCA fit with the conditional-expectation scores.
struct PpcaModel {
  Eigen::MatrixXd loadings;  // p×S
  Eigen::MatrixXd scores;    // n×S
  Eigen::MatrixXd rotation;  // S×S
  double sigma2 = 0.0;
};

/// Residual variance: sum of trailing eigenvalues over
/// np - p - nS - pS + S^2 + S degrees of freedom.
double estimate_noise_variance(const SvdFactors& factors, Eigen::Index rank, Eigen::Index n,
                               Eigen::Index p);

/// np / min(n-1, p), the scale linking sigma^2 to eigenvalues of XᵀX.
double noise_eigenvalue_scale(Eigen::Index n, Eigen::Index p);

/// phi_s = clamp(1 - c sigma^2 / lambda_s, 0, 1), c = np / min(n-1, p).
Eigen::VectorXd rpca_shrinkage_factors(const Eigen::VectorXd& eigenvalues, Eigen::Index n,
                                       Eigen::Index p, double sigma2);

struct BayesShrinkage {
  Eigen::VectorXd factors;
  Eigen::VectorXd prior_variances;
};

/// Empirical-Bayes route: tau_s^2 = lambda_s/np - sigma^2/min(n-1,p) and
/// Phi_s = tau_s^2 / (tau_s^2 + sigma^2/min(n-1,p)).
BayesShrinkage bayes_shrinkage_factors(const Eigen::VectorXd& eigenvalues, Eigen::Index n,
                                       Eigen::Index p, double sigma2);

ShrinkageResult fit_pca(const DataMatrix& x, Eigen::Index rank);
ShrinkageResult fit_pca(const SvdFactors& svd, Eigen::Index rank);

ShrinkageResult fit_rpca(const DataMatrix& x, Eigen::Index rank,
                         std::optional<double> sigma2_override = std::nullopt);
ShrinkageResult fit_rpca(const SvdFactors& svd, Eigen::Index rank,
                         std::optional<double> sigma2_override = std::nullopt);

/// Reconstruction from the Bayes factors, recorded with their prior variances.
ShrinkageResult fit_rpca_bayes(const SvdFactors& svd, Eigen::Index rank,
                               std::optional<double> sigma2_override = std::nullopt);

ShrinkageResult fit_soft_threshold(const DataMatrix& x, double lambda);
ShrinkageResult fit_soft_threshold(const SvdFactors& svd, double lambda);

/// `sigma2` is on the eigenvalue scale: pass (np/min(n-1,p)) * sigma_hat^2
/// to reproduce fit_rpca.
std::pair<PpcaModel, ShrinkageResult> fit_ppca(const DataMatrix& x, Eigen::Index rank,
                                               double sigma2);

// Soft-thresholding risk (SURE) for a real n×p matrix with iid N(0, sigma2)
// noise. `singular_values` holds all min(n, p) values, in any order.
double sure_risk(const Eigen::VectorXd& singular_values, Eigen::Index n, Eigen::Index p,
                 double sigma2, double lambda);

/// Observed singular values (including zeros up to min(n, p)) plus midpoints.
std::vector<double> default_sure_grid(const Eigen::VectorXd& singular_values);

/// Grid value minimising sure_risk; the default grid is default_sure_grid.
double select_sure_threshold(const DataMatrix& x, double sigma2,
                             std::optional<std::vector<double>> grid = std::nullopt);
double select_sure_threshold(const SvdFactors& svd, double sigma2,
                             std::optional<std::vector<double>> grid = std::nullopt);

}  // namespace regpca
