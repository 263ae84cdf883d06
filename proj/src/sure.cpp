#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "regpca/error.hpp"
#include "regpca/shrinkage.hpp"

namespace regpca {

namespace {

// All min(n, p) singular values of a centered matrix; the trailing value
// dropped by decompose() is zero when n <= p.
Eigen::VectorXd full_singular_values(const SvdFactors& svd) {
  const Eigen::Index m = std::min(svd.rows(), svd.cols());
  Eigen::VectorXd sv = Eigen::VectorXd::Zero(m);
  sv.head(svd.rank()) = svd.singular_values();
  return sv;
}

}  // namespace

double sure_risk(const Eigen::VectorXd& singular_values, Eigen::Index n, Eigen::Index p,
                 double sigma2, double lambda) {
  const Eigen::Index m = singular_values.size();
  const double aspect = static_cast<double>(std::abs(n - p));
  auto shrunk = [lambda](double s) { return s * std::max(s - lambda, 0.0); };

  double fit = 0.0;
  double divergence = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double si = singular_values(i);
    fit += std::min(lambda * lambda, si * si);
    if (si > lambda) divergence += 1.0 + aspect * (1.0 - lambda / si);
  }

  // Pairwise term sum_{i != j} f(s_i) / (s_i^2 - s_j^2), grouped by pairs so
  // coincident values take their finite limit f'(s) / (2 s).
  double cross = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double si = singular_values(i);
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double sj = singular_values(j);
      const double gap = si * si - sj * sj;
      const double scale = std::max(si * si, sj * sj);
      if (std::abs(gap) > 1e-12 * scale && scale > 0.0) {
        cross += (shrunk(si) - shrunk(sj)) / gap;
      } else if (si > lambda && si > 0.0) {
        cross += (2.0 * si - lambda) / (2.0 * si);
      }
    }
  }
  divergence += 2.0 * cross;

  const double np = static_cast<double>(n) * static_cast<double>(p);
  return -np * sigma2 + fit + 2.0 * sigma2 * divergence;
}

std::vector<double> default_sure_grid(const Eigen::VectorXd& singular_values) {
  std::vector<double> sv(singular_values.data(), singular_values.data() + singular_values.size());
  std::sort(sv.begin(), sv.end(), std::greater<>());
  std::vector<double> grid;
  grid.reserve(2 * sv.size());
  for (std::size_t i = 0; i < sv.size(); ++i) {
    grid.push_back(sv[i]);
    if (i + 1 < sv.size()) grid.push_back(0.5 * (sv[i] + sv[i + 1]));
  }
  return grid;
}

double select_sure_threshold(const DataMatrix& x, double sigma2,
                             std::optional<std::vector<double>> grid) {
  return select_sure_threshold(decompose(x), sigma2, std::move(grid));
}

double select_sure_threshold(const SvdFactors& svd, double sigma2,
                             std::optional<std::vector<double>> grid) {
  if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) {
    std::ostringstream msg;
    msg << "SURE threshold selection needs a positive noise variance, got " << sigma2;
    throw Error(ErrorKind::invalid_input, msg.str());
  }
  const Eigen::VectorXd sv = full_singular_values(svd);
  const std::vector<double> candidates = grid ? std::move(*grid) : default_sure_grid(sv);
  if (candidates.empty()) throw Error(ErrorKind::invalid_grid, "SURE grid is empty");

  double best_lambda = candidates.front();
  double best_risk = std::numeric_limits<double>::infinity();
  for (double lambda : candidates) {
    if (!std::isfinite(lambda) || lambda < 0.0) {
      std::ostringstream msg;
      msg << "SURE grid value " << lambda << " is not a valid threshold";
      throw Error(ErrorKind::invalid_grid, msg.str());
    }
    const double risk = sure_risk(sv, svd.rows(), svd.cols(), sigma2, lambda);
    if (risk < best_risk) {
      best_risk = risk;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

}  // namespace regpca
