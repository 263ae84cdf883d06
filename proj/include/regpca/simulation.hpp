#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "regpca/linalg.hpp"
#include "regpca/shrinkage.hpp"

namespace regpca {

using Rng = std::mt19937_64;

enum class Generator {
  replication,       // orthonormal vectors replicated across columns
  gaussian_factors,  // (1/sqrt(S)) A Bᵀ with Gaussian factors
};

std::string_view to_string(Generator g) noexcept;
Generator parse_generator(std::string_view name);

struct SimulationConfig {
  Eigen::Index n = 100;
  Eigen::Index p = 20;
  Eigen::Index rank = 2;
  double snr = 1.0;
  double eigenvalue_ratio = 1.0;
  int replicates = 100;
  std::uint64_t seed = 1;
  Generator generator = Generator::replication;

  /// Throws configuration errors for out-of-range fields.
  void validate() const;
};

/// Ground truth X̃ with its spectral structure and the noise variance in use.
struct SignalModel {
  Eigen::MatrixXd signal;
  Eigen::VectorXd true_eigenvalues;
  Eigen::MatrixXd left_factors;
  Eigen::MatrixXd right_factors;
  double noise_sigma2 = 0.0;
};

/// Column counts per dimension for the replication generator. The first
/// dimension takes round(p * ratio / (ratio + S - 1)) columns and the rest
/// split evenly; an uneven split is a configuration error that lists the
/// ratios p admits exactly.
std::vector<Eigen::Index> replication_counts(Eigen::Index p, Eigen::Index rank, double ratio);

/// Ratios d1/d2 realisable exactly with p columns and S dimensions.
std::vector<double> feasible_ratios(Eigen::Index p, Eigen::Index rank);

/// Independent stream for one replicate; the same (seed, index) always
/// yields the same sequence.
Rng replicate_rng(std::uint64_t seed, std::uint64_t index);

SignalModel generate_signal(const SimulationConfig& config, Rng& rng);

/// sigma = RMS(signal entries) / snr.
double noise_sigma_for_snr(const SignalModel& signal, double snr);

DataMatrix add_noise(const SignalModel& signal, double sigma, Rng& rng);

/// Per-entry mean squared difference.
double mse(const Eigen::MatrixXd& fitted, const Eigen::MatrixXd& truth);

enum class SigmaPolicy {
  true_variance,  // SURE uses the generating sigma^2
  estimated,      // SURE uses sigma_hat^2 at rank_input
};

struct MethodStats {
  Method method = Method::pca;
  double mean = 0.0;
  double sd = 0.0;          // standard deviation across replicates
  double sd_of_mean = 0.0;  // sd / sqrt(count)
  int count = 0;
};

struct ReplicateFailure {
  int replicate = 0;
  std::string message;
};

struct MseReport {
  SimulationConfig config;
  std::vector<Method> methods;
  Eigen::Index rank_input = 0;
  SigmaPolicy sigma_policy = SigmaPolicy::true_variance;
  std::vector<MethodStats> stats;
  /// raw[m][k] is the MSE of methods[m] on the k-th successful replicate.
  std::vector<std::vector<double>> raw;
  std::vector<int> replicate_index;
  std::vector<double> signal_power;  // mean square of X̃ per successful replicate
  std::vector<ReplicateFailure> failures;

  bool flagged() const noexcept { return !failures.empty(); }
  const MethodStats& stats_for(Method m) const;
  const std::vector<double>& raw_for(Method m) const;
};

struct BenchmarkOptions {
  std::vector<Method> methods{Method::pca, Method::rpca, Method::soft_threshold};
  std::optional<Eigen::Index> rank_input;  // defaults to config.rank
  SigmaPolicy sigma_policy = SigmaPolicy::true_variance;
  unsigned threads = 1;
};

/// Monte Carlo comparison: each replicate draws a signal and noise from its
/// own stream, fits every method on the centered data and scores the fit
/// against the signal. Results do not depend on the thread count.
MseReport run_benchmark(const SimulationConfig& config, const BenchmarkOptions& options);

/// Default worker count: REGPCA_THREADS when set, else 1.
unsigned default_thread_count();

}  // namespace regpca
