#include "regpca/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <thread>

#include "regpca/error.hpp"

namespace regpca {

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

void center_in_place(Eigen::MatrixXd& m) {
  const Eigen::RowVectorXd means = m.colwise().mean();
  m.rowwise() -= means;
}

SignalModel replication_signal(const SimulationConfig& config, Rng& rng) {
  const auto counts = replication_counts(config.p, config.rank, config.eigenvalue_ratio);
  Eigen::MatrixXd draw = gaussian_matrix(config.n, config.rank, rng);
  center_in_place(draw);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(draw, Eigen::ComputeThinU);

  SignalModel model;
  model.left_factors = svd.matrixU().leftCols(config.rank);
  model.signal.resize(config.n, config.p);
  model.right_factors = Eigen::MatrixXd::Zero(config.p, config.rank);
  model.true_eigenvalues.resize(config.rank);
  Eigen::Index column = 0;
  for (Eigen::Index s = 0; s < config.rank; ++s) {
    const Eigen::Index c = counts[static_cast<std::size_t>(s)];
    model.true_eigenvalues(s) = static_cast<double>(c);
    const double weight = 1.0 / std::sqrt(static_cast<double>(c));
    for (Eigen::Index k = 0; k < c; ++k, ++column) {
      model.signal.col(column) = model.left_factors.col(s);
      model.right_factors(column, s) = weight;
    }
  }
  return model;
}

SignalModel gaussian_factor_signal(const SimulationConfig& config, Rng& rng) {
  Eigen::MatrixXd a = gaussian_matrix(config.n, config.rank, rng);
  center_in_place(a);
  const Eigen::MatrixXd b = gaussian_matrix(config.p, config.rank, rng);

  SignalModel model;
  model.signal = a * b.transpose() / std::sqrt(static_cast<double>(config.rank));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(model.signal, Eigen::ComputeThinU | Eigen::ComputeThinV);
  model.left_factors = svd.matrixU().leftCols(config.rank);
  model.right_factors = svd.matrixV().leftCols(config.rank);
  model.true_eigenvalues = svd.singularValues().head(config.rank).array().square().matrix();
  return model;
}

struct ReplicateOutcome {
  bool ok = false;
  std::vector<double> errors;
  double signal_power = 0.0;
  std::string failure;
};

ReplicateOutcome run_replicate(const SimulationConfig& config, const BenchmarkOptions& options,
                               Eigen::Index rank_input, int index) {
  ReplicateOutcome out;
  try {
    Rng rng = replicate_rng(config.seed, static_cast<std::uint64_t>(index));
    SignalModel model = generate_signal(config, rng);
    const double sigma = noise_sigma_for_snr(model, config.snr);
    model.noise_sigma2 = sigma * sigma;
    const DataMatrix centered = center_columns(add_noise(model, sigma, rng));
    const SvdFactors svd = decompose(centered);
    const Eigen::Index n = centered.rows();
    const Eigen::Index p = centered.cols();

    out.signal_power = model.signal.squaredNorm() / static_cast<double>(n * p);
    for (Method method : options.methods) {
      Eigen::MatrixXd fitted;
      switch (method) {
        case Method::pca:
          fitted = fit_pca(svd, rank_input).fitted;
          break;
        case Method::rpca:
          fitted = fit_rpca(svd, rank_input).fitted;
          break;
        case Method::soft_threshold: {
          const double sigma2 = options.sigma_policy == SigmaPolicy::true_variance
                                    ? model.noise_sigma2
                                    : estimate_noise_variance(svd, rank_input, n, p);
          fitted = fit_soft_threshold(svd, select_sure_threshold(svd, sigma2)).fitted;
          break;
        }
        case Method::ppca: {
          const double sigma2 =
              noise_eigenvalue_scale(n, p) * estimate_noise_variance(svd, rank_input, n, p);
          fitted = fit_ppca(centered, rank_input, sigma2).second.fitted;
          break;
        }
      }
      out.errors.push_back(mse(fitted, model.signal));
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

MethodStats summarize(Method method, const std::vector<double>& values) {
  MethodStats s;
  s.method = method;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  s.sd_of_mean = s.sd / std::sqrt(static_cast<double>(values.size()));
  return s;
}

}  // namespace

std::string_view to_string(Generator g) noexcept {
  switch (g) {
    case Generator::replication: return "replication";
    case Generator::gaussian_factors: return "gaussian_factors";
  }
  return "unknown";
}

Generator parse_generator(std::string_view name) {
  if (name == "replication") return Generator::replication;
  if (name == "gaussian_factors" || name == "gaussian") return Generator::gaussian_factors;
  throw Error(ErrorKind::usage, "unknown generator '" + std::string(name) +
                                    "' (expected replication or gaussian_factors)");
}

void SimulationConfig::validate() const {
  std::ostringstream msg;
  if (n < 2) {
    msg << "n must be at least 2, got " << n;
  } else if (p < 1) {
    msg << "p must be at least 1, got " << p;
  } else if (rank < 1 || rank > std::min(n - 1, p)) {
    msg << "rank must lie in [1, min(n-1, p)] = [1, " << std::min(n - 1, p) << "], got " << rank;
  } else if (!std::isfinite(snr) || !(snr > 0.0)) {
    msg << "snr must be positive, got " << snr;
  } else if (!std::isfinite(eigenvalue_ratio) || eigenvalue_ratio < 1.0) {
    msg << "eigenvalue ratio must be at least 1, got " << eigenvalue_ratio;
  } else if (replicates < 1) {
    msg << "replicates must be at least 1, got " << replicates;
  } else {
    return;
  }
  throw Error(ErrorKind::configuration, msg.str());
}

std::vector<double> feasible_ratios(Eigen::Index p, Eigen::Index rank) {
  std::vector<double> out;
  if (rank < 2) return out;
  for (Eigen::Index c = 1; (rank - 1) * c < p; ++c) {
    const Eigen::Index first = p - (rank - 1) * c;
    if (first < c) break;
    out.push_back(static_cast<double>(first) / static_cast<double>(c));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Eigen::Index> replication_counts(Eigen::Index p, Eigen::Index rank, double ratio) {
  if (rank < 1 || rank > p) {
    std::ostringstream msg;
    msg << "replication needs 1 <= S <= p, got S=" << rank << ", p=" << p;
    throw Error(ErrorKind::configuration, msg.str());
  }
  if (rank == 1) return {p};

  const double share = ratio / (ratio + static_cast<double>(rank - 1));
  const auto first = static_cast<Eigen::Index>(std::llround(static_cast<double>(p) * share));
  const Eigen::Index rest = p - first;
  if (first < 1 || rest < rank - 1 || rest % (rank - 1) != 0) {
    std::ostringstream msg;
    msg << "cannot split p=" << p << " columns into S=" << rank << " dimensions with d1/d2="
        << ratio << " (first dimension would take " << first << ", leaving " << rest
        << " for " << rank - 1 << "); feasible ratios:";
    for (double r : feasible_ratios(p, rank)) msg << ' ' << r;
    throw Error(ErrorKind::configuration, msg.str());
  }
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(rank), rest / (rank - 1));
  counts.front() = first;
  return counts;
}

Rng replicate_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

SignalModel generate_signal(const SimulationConfig& config, Rng& rng) {
  config.validate();
  return config.generator == Generator::replication ? replication_signal(config, rng)
                                                    : gaussian_factor_signal(config, rng);
}

double noise_sigma_for_snr(const SignalModel& signal, double snr) {
  if (!std::isfinite(snr) || !(snr > 0.0)) {
    std::ostringstream msg;
    msg << "snr must be positive, got " << snr;
    throw Error(ErrorKind::invalid_input, msg.str());
  }
  const double mean_square =
      signal.signal.size() > 0 ? signal.signal.squaredNorm() / static_cast<double>(signal.signal.size())
                               : 0.0;
  if (!(mean_square > 0.0)) throw Error(ErrorKind::invalid_signal, "signal is identically zero");
  return std::sqrt(mean_square) / snr;
}

DataMatrix add_noise(const SignalModel& signal, double sigma, Rng& rng) {
  if (!std::isfinite(sigma) || sigma < 0.0) {
    std::ostringstream msg;
    msg << "noise standard deviation must be non-negative, got " << sigma;
    throw Error(ErrorKind::invalid_input, msg.str());
  }
  Eigen::MatrixXd noise = gaussian_matrix(signal.signal.rows(), signal.signal.cols(), rng);
  return DataMatrix(signal.signal + sigma * noise);
}

double mse(const Eigen::MatrixXd& fitted, const Eigen::MatrixXd& truth) {
  if (fitted.rows() != truth.rows() || fitted.cols() != truth.cols()) {
    std::ostringstream msg;
    msg << "shape mismatch: fitted is " << fitted.rows() << "x" << fitted.cols()
        << ", truth is " << truth.rows() << "x" << truth.cols();
    throw Error(ErrorKind::shape, msg.str());
  }
  if (fitted.size() == 0) return 0.0;
  return (fitted - truth).squaredNorm() / static_cast<double>(fitted.size());
}

const MethodStats& MseReport::stats_for(Method m) const {
  for (const auto& s : stats)
    if (s.method == m) return s;
  throw Error(ErrorKind::usage, "method " + std::string(to_string(m)) + " not in report");
}

const std::vector<double>& MseReport::raw_for(Method m) const {
  for (std::size_t i = 0; i < methods.size(); ++i)
    if (methods[i] == m) return raw[i];
  throw Error(ErrorKind::usage, "method " + std::string(to_string(m)) + " not in report");
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("REGPCA_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

MseReport run_benchmark(const SimulationConfig& config, const BenchmarkOptions& options) {
  config.validate();
  if (options.methods.empty()) throw Error(ErrorKind::usage, "no methods requested");
  const Eigen::Index rank_input = options.rank_input.value_or(config.rank);
  if (rank_input < 0 || rank_input > std::min(config.n - 1, config.p)) {
    std::ostringstream msg;
    msg << "rank input " << rank_input << " outside [0, " << std::min(config.n - 1, config.p)
        << "]";
    throw Error(ErrorKind::configuration, msg.str());
  }
  if (config.generator == Generator::replication) {
    // Surface split errors once instead of failing every replicate.
    replication_counts(config.p, config.rank, config.eigenvalue_ratio);
  }

  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(config.replicates));
  const unsigned workers =
      std::max(1u, std::min(options.threads, static_cast<unsigned>(config.replicates)));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < config.replicates; i = next++) {
      outcomes[static_cast<std::size_t>(i)] = run_replicate(config, options, rank_input, i);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  MseReport report;
  report.config = config;
  report.methods = options.methods;
  report.rank_input = rank_input;
  report.sigma_policy = options.sigma_policy;
  report.raw.assign(options.methods.size(), {});
  for (int i = 0; i < config.replicates; ++i) {
    const auto& o = outcomes[static_cast<std::size_t>(i)];
    if (!o.ok) {
      report.failures.push_back({i, o.failure});
      continue;
    }
    report.replicate_index.push_back(i);
    report.signal_power.push_back(o.signal_power);
    for (std::size_t m = 0; m < options.methods.size(); ++m) report.raw[m].push_back(o.errors[m]);
  }
  for (std::size_t m = 0; m < options.methods.size(); ++m) {
    report.stats.push_back(summarize(options.methods[m], report.raw[m]));
  }
  return report;
}

}  // namespace regpca
