#include "regpca/analysis.hpp"

#include <cmath>
#include <sstream>

#include "regpca/error.hpp"

namespace regpca {

namespace {

std::vector<std::string> default_labels(Eigen::Index m, std::vector<std::string> labels) {
  if (labels.empty()) {
    labels.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) labels.push_back(std::to_string(i + 1));
  }
  if (static_cast<Eigen::Index>(labels.size()) != m) {
    std::ostringstream msg;
    msg << "expected " << m << " labels, got " << labels.size();
    throw Error(ErrorKind::shape, msg.str());
  }
  return labels;
}

Configuration coordinates(const ShrinkageResult& result, const Eigen::MatrixXd& vectors,
                          ConfigurationKind kind, std::vector<std::string> labels) {
  if (result.rank < 1) {
    throw Error(ErrorKind::empty_configuration, "result has rank 0; no coordinates to draw");
  }
  Configuration c;
  c.kind = kind;
  c.points = vectors.leftCols(result.rank) * result.shrunk_singular_values().asDiagonal();
  c.labels = default_labels(c.points.rows(), std::move(labels));
  return c;
}

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream msg;
    msg << "configuration shape " << a.rows() << "x" << a.cols() << " does not match "
        << b.rows() << "x" << b.cols();
    throw Error(ErrorKind::shape, msg.str());
  }
}

}  // namespace

Configuration individual_coordinates(const ShrinkageResult& result,
                                     std::vector<std::string> labels) {
  return coordinates(result, result.svd.left_vectors, ConfigurationKind::individuals,
                     std::move(labels));
}

Configuration variable_coordinates(const ShrinkageResult& result,
                                   std::vector<std::string> labels) {
  return coordinates(result, result.svd.right_vectors, ConfigurationKind::variables,
                     std::move(labels));
}

Configuration select_axes(const Configuration& config, const std::vector<int>& axes) {
  if (axes.empty()) throw Error(ErrorKind::usage, "no axes selected");
  Configuration out;
  out.kind = config.kind;
  out.labels = config.labels;
  out.points.resize(config.points.rows(), static_cast<Eigen::Index>(axes.size()));
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const int axis = axes[k];
    if (axis < 1 || axis > config.points.cols()) {
      std::ostringstream msg;
      msg << "axis " << axis << " not available; configuration has " << config.points.cols()
          << " dimensions";
      throw Error(ErrorKind::rank, msg.str());
    }
    out.points.col(static_cast<Eigen::Index>(k)) = config.points.col(axis - 1);
  }
  return out;
}

Eigen::MatrixXd cosine_matrix(const Configuration& config) {
  const Eigen::VectorXd norms = config.points.rowwise().norm();
  Eigen::MatrixXd gram = config.points * config.points.transpose();
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = 0; j < gram.cols(); ++j) {
      const double d = norms(i) * norms(j);
      gram(i, j) = d > 0.0 ? gram(i, j) / d : 0.0;
    }
  }
  return gram;
}

AlignedConfiguration procrustes_align(const Configuration& config, const Configuration& reference,
                                      const ProcrustesOptions& options) {
  require_same_shape(config.points, reference.points);
  const Eigen::Index k = config.points.cols();

  const Eigen::RowVectorXd config_mean = config.points.colwise().mean();
  const Eigen::RowVectorXd reference_mean = reference.points.colwise().mean();
  const Eigen::MatrixXd x = config.points.rowwise() - config_mean;
  const Eigen::MatrixXd y = reference.points.rowwise() - reference_mean;
  if (!(y.norm() > 0.0)) {
    throw Error(ErrorKind::degenerate_reference, "reference configuration has zero spread");
  }

  ProcrustesAlignment t;
  const double x_norm2 = x.squaredNorm();
  if (x_norm2 > 0.0) {
    // Orthogonal Procrustes: maximise tr(Rᵀ XᵀY) over orthogonal R.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x.transpose() * y,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    t.rotation = svd.matrixU() * svd.matrixV().transpose();
    t.scale = options.allow_scaling ? svd.singularValues().sum() / x_norm2 : 1.0;
  } else {
    t.rotation = Eigen::MatrixXd::Identity(k, k);
    t.scale = 1.0;
  }
  t.translation = (reference_mean - t.scale * config_mean * t.rotation).transpose();

  AlignedConfiguration out;
  out.aligned.kind = config.kind;
  out.aligned.labels = config.labels;
  out.aligned.points = (t.scale * config.points * t.rotation).rowwise() + t.translation.transpose();
  t.residual = (out.aligned.points - reference.points).norm();
  out.transform = std::move(t);
  return out;
}

double DispersionSummary::mean_dispersion() const {
  return variance.rows() > 0 ? variance.rowwise().sum().mean() : 0.0;
}

double DispersionSummary::mean_abs_bias() const {
  return bias.rows() > 0 ? bias.rowwise().norm().mean() : 0.0;
}

DispersionSummary dispersion_summary(const std::vector<Configuration>& aligned_set,
                                     const Configuration& reference) {
  if (aligned_set.empty()) throw Error(ErrorKind::shape, "no configurations to summarise");
  for (const auto& c : aligned_set) require_same_shape(c.points, reference.points);

  const double count = static_cast<double>(aligned_set.size());
  DispersionSummary s;
  s.labels = reference.labels;
  s.mean = Eigen::MatrixXd::Zero(reference.points.rows(), reference.points.cols());
  for (const auto& c : aligned_set) s.mean += c.points;
  s.mean /= count;
  s.variance = Eigen::MatrixXd::Zero(s.mean.rows(), s.mean.cols());
  for (const auto& c : aligned_set) s.variance += (c.points - s.mean).cwiseAbs2();
  s.variance /= count;
  s.bias = s.mean - reference.points;
  return s;
}

}  // namespace regpca
