#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "oracles.hpp"
#include "regpca/error.hpp"
#include "regpca/shrinkage.hpp"

namespace regpca {
namespace {

using testing::centered;
using testing::random_matrix;

// Soft-thresholded reconstruction computed with a separate SVD routine.
Eigen::MatrixXd soft_threshold_oracle(const Eigen::MatrixXd& x, double lambda,
                                      Eigen::VectorXd* singular_values) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  *singular_values = svd.singularValues();
  const Eigen::VectorXd shrunk = (svd.singularValues().array() - lambda).max(0.0).matrix();
  return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

// The estimate is unbiased for the Frobenius risk E||fit - truth||^2: compare
// its Monte Carlo mean to the empirical loss against a known signal.
TEST(SureRisk, UnbiasedAgainstMonteCarloLoss) {
  const Eigen::Index n = 12;
  const Eigen::Index p = 7;
  const double sigma = 0.5;
  Eigen::VectorXd signal_sv(2);
  signal_sv << 6.0, 3.0;
  const Eigen::MatrixXd truth = testing::matrix_with_spectrum(n, p, signal_sv, 99);

  std::mt19937_64 rng(123);
  std::normal_distribution<double> normal(0.0, sigma);
  for (double lambda : {0.5, 1.5, 2.5}) {
    const int reps = 4000;
    std::vector<double> diff(reps);
    for (int k = 0; k < reps; ++k) {
      Eigen::MatrixXd x = truth;
      for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) x(i, j) += normal(rng);
      Eigen::VectorXd sv;
      const Eigen::MatrixXd fit = soft_threshold_oracle(x, lambda, &sv);
      const double loss = (fit - truth).squaredNorm();
      diff[k] = sure_risk(sv, n, p, sigma * sigma, lambda) - loss;
    }
    double mean = 0.0;
    for (double d : diff) mean += d;
    mean /= reps;
    double var = 0.0;
    for (double d : diff) var += (d - mean) * (d - mean);
    const double se = std::sqrt(var / (reps - 1) / reps);
    EXPECT_LT(std::abs(mean), 4.0 * se + 1e-9) << "lambda " << lambda << " se " << se;
  }
}

TEST(SureRisk, ZeroThresholdIsNoiseVariance) {
  // At lambda = 0 the fit is X itself, risk n p sigma^2 for distinct values.
  const Eigen::MatrixXd x = random_matrix(9, 5, 2);
  Eigen::VectorXd sv;
  soft_threshold_oracle(x, 0.0, &sv);
  EXPECT_NEAR(sure_risk(sv, 9, 5, 0.7, 0.0), 9 * 5 * 0.7, 1e-9);
}

TEST(SureRisk, TiedValuesStayFinite) {
  Eigen::VectorXd sv(3);
  sv << 2.0, 2.0, 1.0;
  EXPECT_TRUE(std::isfinite(sure_risk(sv, 6, 3, 0.1, 0.5)));
  Eigen::VectorXd nudged(3);
  nudged << 2.0 + 1e-7, 2.0, 1.0;
  EXPECT_NEAR(sure_risk(sv, 6, 3, 0.1, 0.5), sure_risk(nudged, 6, 3, 0.1, 0.5), 1e-5);
}

TEST(SelectSure, PureNoiseShrinksHeavily) {
  const DataMatrix x = center_columns(DataMatrix(random_matrix(40, 20, 5) * 3.0));
  const SvdFactors f = decompose(x);
  const Eigen::VectorXd values = f.singular_values();
  std::vector<double> sv(values.data(), values.data() + values.size());
  std::sort(sv.begin(), sv.end());
  const double median = 0.5 * (sv[sv.size() / 2 - 1] + sv[sv.size() / 2]);
  EXPECT_GE(select_sure_threshold(x, 9.0), median);
}

TEST(SelectSure, NearNoiselessKeepsSignal) {
  Eigen::VectorXd sv(3);
  sv << 5.0, 2.0, 0.7;
  const DataMatrix x =
      center_columns(DataMatrix(testing::matrix_with_spectrum(20, 8, sv, 31)));
  EXPECT_LT(select_sure_threshold(x, 1e-10), 0.7);
}

TEST(SelectSure, PicksRiskMinimiserOfGrid) {
  const DataMatrix x = center_columns(DataMatrix(random_matrix(15, 6, 77)));
  const SvdFactors f = decompose(x);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(6);
  full.head(f.rank()) = f.singular_values();
  const std::vector<double> grid = default_sure_grid(full);
  const double chosen = select_sure_threshold(x, 0.5);
  const double chosen_risk = sure_risk(full, 15, 6, 0.5, chosen);
  for (double g : grid) EXPECT_LE(chosen_risk, sure_risk(full, 15, 6, 0.5, g));
}

TEST(SelectSure, GridEdgeCases) {
  const DataMatrix x = center_columns(DataMatrix(random_matrix(8, 4, 3)));
  EXPECT_EQ(select_sure_threshold(x, 1.0, std::vector<double>{0.42}), 0.42);
  try {
    select_sure_threshold(x, 1.0, std::vector<double>{});
    FAIL() << "expected invalid-grid error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_grid);
  }
  try {
    select_sure_threshold(x, 0.0);
    FAIL() << "expected rejection of zero variance";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
}

TEST(DefaultGrid, ValuesAndMidpoints) {
  Eigen::VectorXd sv(3);
  sv << 1.0, 4.0, 2.0;
  const std::vector<double> grid = default_sure_grid(sv);
  EXPECT_EQ(grid, (std::vector<double>{4.0, 3.0, 2.0, 1.5, 1.0}));
}

}  // namespace
}  // namespace regpca
