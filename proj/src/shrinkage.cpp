#include "regpca/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "regpca/error.hpp"

namespace regpca {

namespace {

void require_rank(const SvdFactors& svd, Eigen::Index rank) {
  if (rank < 0 || rank > svd.max_rank) {
    std::ostringstream msg;
    msg << "rank " << rank << " outside [0, " << svd.max_rank << "] (min(n-1, p))";
    throw Error(ErrorKind::rank, msg.str());
  }
}

void require_sigma2(double sigma2) {
  if (!std::isfinite(sigma2) || sigma2 < 0.0) {
    std::ostringstream msg;
    msg << "noise variance must be finite and non-negative, got " << sigma2;
    throw Error(ErrorKind::invalid_input, msg.str());
  }
}

void require_positive_eigenvalues(const Eigen::VectorXd& eigenvalues) {
  for (Eigen::Index s = 0; s < eigenvalues.size(); ++s) {
    if (!(eigenvalues(s) > 0.0)) {
      std::ostringstream msg;
      msg << "eigenvalue " << s + 1 << " is zero; shrinkage is undefined for that dimension";
      throw Error(ErrorKind::zero_eigenvalue, msg.str());
    }
  }
}

Eigen::Index min_dim(Eigen::Index n, Eigen::Index p) { return std::min(n - 1, p); }

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::pca: return "pca";
    case Method::rpca: return "rpca";
    case Method::soft_threshold: return "sure";
    case Method::ppca: return "ppca";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "pca") return Method::pca;
  if (name == "rpca") return Method::rpca;
  if (name == "sure" || name == "soft_threshold") return Method::soft_threshold;
  if (name == "ppca") return Method::ppca;
  throw Error(ErrorKind::usage, "unknown method '" + std::string(name) +
                                    "' (expected pca, rpca, sure or ppca)");
}

Eigen::VectorXd ShrinkageResult::shrunk_singular_values() const {
  return factors.cwiseProduct(svd.eigenvalues.head(rank).cwiseSqrt());
}

double noise_eigenvalue_scale(Eigen::Index n, Eigen::Index p) {
  return static_cast<double>(n) * static_cast<double>(p) / static_cast<double>(min_dim(n, p));
}

double estimate_noise_variance(const SvdFactors& factors, Eigen::Index rank, Eigen::Index n,
                               Eigen::Index p) {
  const Eigen::Index m = min_dim(n, p);
  if (rank < 0 || rank > m) {
    std::ostringstream msg;
    msg << "rank " << rank << " outside [0, " << m << "]";
    throw Error(ErrorKind::rank, msg.str());
  }
  const double S = static_cast<double>(rank);
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);
  const double dof = nd * pd - pd - nd * S - pd * S + S * S + S;
  if (!(dof > 0.0)) {
    std::ostringstream msg;
    msg << "non-positive residual degrees of freedom np - p - nS - pS + S^2 + S = " << dof
        << " (n=" << n << ", p=" << p << ", S=" << rank << ")";
    throw Error(ErrorKind::degrees_of_freedom, msg.str());
  }
  const Eigen::Index upto = std::min(m, factors.rank());
  double tail = 0.0;
  for (Eigen::Index s = rank; s < upto; ++s) tail += factors.eigenvalues(s);
  return std::max(tail, 0.0) / dof;
}

Eigen::VectorXd rpca_shrinkage_factors(const Eigen::VectorXd& eigenvalues, Eigen::Index n,
                                       Eigen::Index p, double sigma2) {
  require_sigma2(sigma2);
  require_positive_eigenvalues(eigenvalues);
  const double noise = noise_eigenvalue_scale(n, p) * sigma2;
  Eigen::VectorXd phi(eigenvalues.size());
  for (Eigen::Index s = 0; s < eigenvalues.size(); ++s) {
    phi(s) = std::clamp(1.0 - noise / eigenvalues(s), 0.0, 1.0);
  }
  return phi;
}

BayesShrinkage bayes_shrinkage_factors(const Eigen::VectorXd& eigenvalues, Eigen::Index n,
                                       Eigen::Index p, double sigma2) {
  require_sigma2(sigma2);
  require_positive_eigenvalues(eigenvalues);
  const double np = static_cast<double>(n) * static_cast<double>(p);
  const double per_cell_noise = sigma2 / static_cast<double>(min_dim(n, p));

  BayesShrinkage out;
  out.factors.resize(eigenvalues.size());
  out.prior_variances.resize(eigenvalues.size());
  for (Eigen::Index s = 0; s < eigenvalues.size(); ++s) {
    const double tau2 = std::max(eigenvalues(s) / np - per_cell_noise, 0.0);
    out.prior_variances(s) = tau2;
    out.factors(s) = tau2 > 0.0 ? tau2 / (tau2 + per_cell_noise) : 0.0;
  }
  return out;
}

ShrinkageResult fit_pca(const SvdFactors& svd, Eigen::Index rank) {
  require_rank(svd, rank);
  ShrinkageResult r;
  r.method = Method::pca;
  r.rank = rank;
  r.factors = Eigen::VectorXd::Ones(rank);
  // At full rank the residual has no degrees of freedom and nothing is left
  // to estimate; report zero.
  r.sigma2_hat = rank < svd.max_rank
                     ? estimate_noise_variance(svd, rank, svd.rows(), svd.cols())
                     : 0.0;
  r.fitted = reconstruct_weighted(svd, r.factors);
  r.svd = svd;
  return r;
}

ShrinkageResult fit_pca(const DataMatrix& x, Eigen::Index rank) {
  return fit_pca(decompose(x), rank);
}

ShrinkageResult fit_rpca(const SvdFactors& svd, Eigen::Index rank,
                         std::optional<double> sigma2_override) {
  require_rank(svd, rank);
  ShrinkageResult r;
  r.method = Method::rpca;
  r.rank = rank;
  if (sigma2_override) {
    require_sigma2(*sigma2_override);
    r.sigma2_hat = *sigma2_override;
  } else {
    r.sigma2_hat = estimate_noise_variance(svd, rank, svd.rows(), svd.cols());
  }
  r.factors = rpca_shrinkage_factors(svd.eigenvalues.head(rank), svd.rows(), svd.cols(),
                                     r.sigma2_hat);
  r.fitted = reconstruct_weighted(svd, r.factors);
  r.svd = svd;
  return r;
}

ShrinkageResult fit_rpca(const DataMatrix& x, Eigen::Index rank,
                         std::optional<double> sigma2_override) {
  return fit_rpca(decompose(x), rank, sigma2_override);
}

ShrinkageResult fit_rpca_bayes(const SvdFactors& svd, Eigen::Index rank,
                               std::optional<double> sigma2_override) {
  require_rank(svd, rank);
  ShrinkageResult r;
  r.method = Method::rpca;
  r.rank = rank;
  r.sigma2_hat = sigma2_override ? *sigma2_override
                                 : estimate_noise_variance(svd, rank, svd.rows(), svd.cols());
  auto bayes =
      bayes_shrinkage_factors(svd.eigenvalues.head(rank), svd.rows(), svd.cols(), r.sigma2_hat);
  r.factors = std::move(bayes.factors);
  r.prior_variances = std::move(bayes.prior_variances);
  r.fitted = reconstruct_weighted(svd, r.factors);
  r.svd = svd;
  return r;
}

ShrinkageResult fit_soft_threshold(const SvdFactors& svd, double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    std::ostringstream msg;
    msg << "threshold must be finite and non-negative, got " << lambda;
    throw Error(ErrorKind::invalid_threshold, msg.str());
  }
  const Eigen::VectorXd sv = svd.singular_values();
  Eigen::Index survivors = 0;
  while (survivors < sv.size() && sv(survivors) > lambda) ++survivors;

  ShrinkageResult r;
  r.method = Method::soft_threshold;
  r.rank = survivors;
  r.threshold = lambda;
  r.factors.resize(survivors);
  for (Eigen::Index s = 0; s < survivors; ++s) r.factors(s) = (sv(s) - lambda) / sv(s);
  r.fitted = reconstruct_weighted(svd, r.factors);
  r.svd = svd;
  return r;
}

ShrinkageResult fit_soft_threshold(const DataMatrix& x, double lambda) {
  return fit_soft_threshold(decompose(x), lambda);
}

std::pair<PpcaModel, ShrinkageResult> fit_ppca(const DataMatrix& x, Eigen::Index rank,
                                               double sigma2) {
  require_sigma2(sigma2);
  SvdFactors svd = decompose(x);
  require_rank(svd, rank);
  for (Eigen::Index s = 0; s < rank; ++s) {
    if (!(svd.eigenvalues(s) > sigma2)) {
      std::ostringstream msg;
      msg << "eigenvalue " << s + 1 << " (" << svd.eigenvalues(s)
          << ") does not exceed sigma^2 = " << sigma2 << "; loading would be non-positive";
      throw Error(ErrorKind::non_positive_loading, msg.str());
    }
  }

  const Eigen::VectorXd lambda = svd.eigenvalues.head(rank);
  PpcaModel model;
  model.sigma2 = sigma2;
  model.rotation = Eigen::MatrixXd::Identity(rank, rank);
  model.loadings = svd.right_vectors.leftCols(rank) *
                   (lambda.array() - sigma2).sqrt().matrix().asDiagonal() * model.rotation;

  const Eigen::MatrixXd precision =
      model.loadings.transpose() * model.loadings +
      sigma2 * Eigen::MatrixXd::Identity(rank, rank);
  // Z = X B (BᵀB + sigma^2 I)^-1, solved from the right via the symmetric system.
  model.scores =
      precision.ldlt().solve((x.values() * model.loadings).transpose()).transpose();

  ShrinkageResult r;
  r.method = Method::ppca;
  r.rank = rank;
  r.sigma2_hat = sigma2 / noise_eigenvalue_scale(x.rows(), x.cols());
  r.factors = ((lambda.array() - sigma2) / lambda.array()).matrix();
  r.fitted = model.scores * model.loadings.transpose();
  r.svd = std::move(svd);
  return {std::move(model), std::move(r)};
}

}  // namespace regpca
