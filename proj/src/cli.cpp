#include "regpca/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "regpca/analysis.hpp"
#include "regpca/error.hpp"
#include "regpca/io.hpp"
#include "regpca/shrinkage.hpp"
#include "regpca/simulation.hpp"

namespace regpca {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct InputOptions {
  std::string input;
  bool header = false;
  bool row_labels = false;
  std::string delimiter = ",";
};

struct FitOptions {
  std::string method = "rpca";
  std::optional<int> rank;
  std::optional<double> sigma2;
  bool estimate_sigma = false;
  std::optional<double> lambda;
  bool standardize = false;
};

struct DenoiseOptions {
  InputOptions in;
  FitOptions fit;
  std::string output;
  std::string report;
  bool plain_pgm = false;
};

struct SimulateOptions {
  int n = 100;
  int p = 20;
  int rank = 2;
  double snr = 1.0;
  double ratio = 1.0;
  int replicates = 100;
  std::uint64_t seed = 1;
  std::string generator = "replication";
  std::vector<std::string> methods{"pca", "rpca", "sure"};
  std::optional<int> rank_input;
  std::string sigma_policy = "true";
  unsigned threads = 1;
  std::string output;
  bool standard_grid = false;
};

struct CoordsOptions {
  InputOptions in;
  FitOptions fit;
  std::string axes;
  std::string reference;
  bool no_scaling = false;
  std::string output;
};

char parse_delimiter(const std::string& d) {
  if (d == "tab" || d == "\\t" || d == "\t") return '\t';
  if (d.size() == 1) return d.front();
  throw Error(ErrorKind::usage, "delimiter must be a single character or 'tab', got '" + d + "'");
}

io::CsvOptions csv_options(const InputOptions& in) {
  return io::CsvOptions{in.header, in.row_labels, parse_delimiter(in.delimiter)};
}

// What was read, in analysis form, plus what is needed to write results back.
struct LoadedInput {
  enum class Kind { table, stack, image } kind = Kind::table;
  io::LabeledMatrix table;
  io::ImageStack stack;
};

LoadedInput load_input(const InputOptions& in) {
  LoadedInput loaded;
  const fs::path path(in.input);
  if (fs::is_directory(path)) {
    loaded.kind = LoadedInput::Kind::stack;
    loaded.stack = io::read_pgm_stack(path);
    loaded.table.values = loaded.stack.frames;
    loaded.table.row_labels = loaded.stack.names;
  } else if (path.extension() == ".pgm") {
    loaded.kind = LoadedInput::Kind::image;
    const auto img = io::read_pgm(path);
    loaded.stack.maxval = img.maxval;
    loaded.table.values = img.pixels;
  } else {
    loaded.table = io::read_matrix_csv(path, csv_options(in));
  }
  return loaded;
}

std::vector<std::pair<std::string, std::string>> checksums_for(const std::string& input) {
  std::vector<std::pair<std::string, std::string>> out;
  const fs::path path(input);
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.emplace_back(f.filename().string(), io::sha256_file(f));
  } else {
    out.emplace_back(path.filename().string(), io::sha256_file(path));
  }
  return out;
}

// Centered (and optionally unit-variance) working copy with the means and
// scales needed to map fits back to the data space.
struct Prepared {
  DataMatrix centered;
  Eigen::VectorXd scales;
};

Prepared prepare(const Eigen::MatrixXd& raw, bool standardize) {
  DataMatrix centered = center_columns(DataMatrix(raw));
  Eigen::VectorXd scales = Eigen::VectorXd::Ones(raw.cols());
  if (!standardize) return {std::move(centered), std::move(scales)};

  const double n = static_cast<double>(raw.rows());
  Eigen::MatrixXd values = centered.values();
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const double sd = std::sqrt(values.col(j).squaredNorm() / (n - 1.0));
    if (sd > 0.0) {
      scales(j) = sd;
      values.col(j) /= sd;
    }
  }
  return {DataMatrix::from_centered(std::move(values), centered.column_means()),
          std::move(scales)};
}

Eigen::MatrixXd to_data_space(const Eigen::MatrixXd& fitted, const Prepared& prep) {
  return (fitted * prep.scales.asDiagonal()).rowwise() +
         prep.centered.column_means().transpose();
}

// Noise variance on the data scale: explicit value or the residual estimate.
double resolve_sigma2(const FitOptions& fit, const SvdFactors& svd, const char* method) {
  if (fit.sigma2) return *fit.sigma2;
  if (fit.estimate_sigma) {
    if (!fit.rank) {
      throw Error(ErrorKind::usage,
                  std::string("--estimate-sigma needs --rank for method ") + method);
    }
    return estimate_noise_variance(svd, *fit.rank, svd.rows(), svd.cols());
  }
  throw Error(ErrorKind::usage,
              std::string("method ") + method + " needs --sigma2 or --estimate-sigma");
}

ShrinkageResult run_fit(const FitOptions& fit, const DataMatrix& centered) {
  const Method method = parse_method(fit.method);
  const SvdFactors svd = decompose(centered);
  auto need_rank = [&]() -> Eigen::Index {
    if (!fit.rank) {
      throw Error(ErrorKind::usage, "method " + fit.method + " needs --rank");
    }
    return *fit.rank;
  };

  switch (method) {
    case Method::pca:
      return fit_pca(svd, need_rank());
    case Method::rpca:
      return fit_rpca(svd, need_rank(), fit.sigma2);
    case Method::ppca: {
      const Eigen::Index rank = need_rank();
      const double sigma2 = fit.sigma2 ? *fit.sigma2
                                       : estimate_noise_variance(svd, rank, svd.rows(), svd.cols());
      // pPCA compares sigma^2 against eigenvalues of XᵀX, so it is rescaled
      // by np / min(n-1, p) to match the rPCA shrinkage.
      const double scaled = noise_eigenvalue_scale(svd.rows(), svd.cols()) * sigma2;
      auto [model, result] = fit_ppca(centered, rank, scaled);
      return result;
    }
    case Method::soft_threshold: {
      const double sigma2 = fit.lambda && !fit.sigma2 && !fit.estimate_sigma
                                ? 0.0
                                : resolve_sigma2(fit, svd, "sure");
      const double lambda = fit.lambda ? *fit.lambda : select_sure_threshold(svd, sigma2);
      ShrinkageResult r = fit_soft_threshold(svd, lambda);
      r.sigma2_hat = sigma2;
      return r;
    }
  }
  throw Error(ErrorKind::usage, "unknown method");
}

ordered_json fit_parameters(const FitOptions& fit) {
  ordered_json j;
  j["method"] = fit.method;
  j["rank"] = fit.rank ? ordered_json(*fit.rank) : ordered_json(nullptr);
  j["sigma2"] = fit.sigma2 ? ordered_json(*fit.sigma2) : ordered_json(nullptr);
  j["estimate_sigma"] = fit.estimate_sigma;
  j["lambda"] = fit.lambda ? ordered_json(*fit.lambda) : ordered_json(nullptr);
  j["standardize"] = fit.standardize;
  return j;
}

ordered_json input_parameters(const InputOptions& in) {
  return {{"input", in.input},
          {"header", in.header},
          {"row_labels", in.row_labels},
          {"delimiter", std::string(1, parse_delimiter(in.delimiter))}};
}

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

io::RunManifest start_manifest(const std::string& command, const std::vector<std::string>& args) {
  io::RunManifest m;
  m.command = command;
  m.arguments = args;
  m.tool_version = kToolVersion;
  m.started_at = io::utc_timestamp();
  return m;
}

void write_manifest(const fs::path& path, io::RunManifest& manifest) {
  manifest.finished_at = io::utc_timestamp();
  io::write_text(path, manifest.to_json().dump(2) + "\n");
}

fs::path sidecar(const std::string& path) {
  fs::path p(path);
  if (p.has_filename() == false) p = p.parent_path();
  p += ".manifest.json";
  return p;
}

int cmd_denoise(const DenoiseOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  io::RunManifest manifest = start_manifest("denoise", args);
  manifest.parameters = input_parameters(o.in);
  manifest.parameters["fit"] = fit_parameters(o.fit);
  manifest.parameters["plain_pgm"] = o.plain_pgm;
  manifest.input_checksums = checksums_for(o.in.input);

  const LoadedInput loaded = load_input(o.in);
  const Prepared prep = prepare(loaded.table.values, o.fit.standardize);
  const ShrinkageResult result = run_fit(o.fit, prep.centered);
  const Eigen::MatrixXd denoised = to_data_space(result.fitted, prep);

  const fs::path output(o.output);
  switch (loaded.kind) {
    case LoadedInput::Kind::stack: {
      io::ImageStack stack = loaded.stack;
      stack.frames = denoised;
      io::write_pgm_stack(output, stack, !o.plain_pgm);
      break;
    }
    case LoadedInput::Kind::image:
      io::write_pgm(output, denoised, loaded.stack.maxval, !o.plain_pgm);
      break;
    case LoadedInput::Kind::table:
      io::write_matrix_csv(output, denoised, csv_options(o.in), loaded.table.row_labels,
                           loaded.table.column_labels);
      break;
  }

  ordered_json report;
  report["method"] = std::string(to_string(result.method));
  report["rank"] = result.rank;
  report["sigma2_hat"] = result.sigma2_hat;
  report["factors"] = to_vector(result.factors);
  report["eigenvalues"] = to_vector(result.svd.eigenvalues);
  report["frobenius_residual"] = (prep.centered.values() - result.fitted).norm();
  if (result.threshold) report["threshold"] = *result.threshold;
  if (result.prior_variances) report["prior_variances"] = to_vector(*result.prior_variances);
  report["manifest"] = manifest.reproducible_json();
  if (!o.report.empty()) io::write_text(o.report, report.dump(2) + "\n");

  write_manifest(sidecar(o.output), manifest);
  out << "denoised " << prep.centered.rows() << "x" << prep.centered.cols() << " with "
      << to_string(result.method) << " (rank " << result.rank << ") -> " << o.output << "\n";
  return 0;
}

struct GridRow {
  SimulationConfig config;
  std::optional<MseReport> report;
  std::string skipped;
};

std::vector<SimulationConfig> standard_grid(int replicates, std::uint64_t seed) {
  std::vector<SimulationConfig> grid;
  const std::pair<int, int> shapes[] = {{100, 20}, {50, 50}, {20, 100}};
  for (auto [n, p] : shapes)
    for (int s : {2, 4})
      for (double snr : {4.0, 1.0, 0.8})
        for (double ratio : {4.0, 1.0}) {
          SimulationConfig c;
          c.n = n;
          c.p = p;
          c.rank = s;
          c.snr = snr;
          c.eigenvalue_ratio = ratio;
          c.replicates = replicates;
          c.seed = seed;
          grid.push_back(c);
        }
  return grid;
}

int cmd_simulate(const SimulateOptions& o, const std::vector<std::string>& args,
                 std::ostream& out, std::ostream& err) {
  io::RunManifest manifest = start_manifest("simulate", args);
  BenchmarkOptions bench;
  bench.methods.clear();
  for (const auto& m : o.methods) bench.methods.push_back(parse_method(m));
  if (o.rank_input) bench.rank_input = *o.rank_input;
  if (o.sigma_policy == "true") {
    bench.sigma_policy = SigmaPolicy::true_variance;
  } else if (o.sigma_policy == "estimated") {
    bench.sigma_policy = SigmaPolicy::estimated;
  } else {
    throw Error(ErrorKind::usage, "--sigma-policy must be 'true' or 'estimated'");
  }
  bench.threads = o.threads;

  std::vector<SimulationConfig> configs;
  if (o.standard_grid) {
    configs = standard_grid(o.replicates, o.seed);
  } else {
    SimulationConfig c;
    c.n = o.n;
    c.p = o.p;
    c.rank = o.rank;
    c.snr = o.snr;
    c.eigenvalue_ratio = o.ratio;
    c.replicates = o.replicates;
    c.seed = o.seed;
    c.generator = parse_generator(o.generator);
    configs.push_back(c);
  }

  ordered_json params;
  params["standard_grid"] = o.standard_grid;
  if (!o.standard_grid) {
    params["n"] = o.n;
    params["p"] = o.p;
    params["rank"] = o.rank;
    params["snr"] = o.snr;
    params["ratio"] = o.ratio;
    params["generator"] = o.generator;
  }
  params["replicates"] = o.replicates;
  params["seed"] = o.seed;
  params["methods"] = o.methods;
  params["rank_input"] = o.rank_input ? ordered_json(*o.rank_input) : ordered_json(nullptr);
  params["sigma_policy"] = o.sigma_policy;
  manifest.parameters = params;

  std::string tsv;
  ordered_json reports = ordered_json::array();
  std::size_t failed = 0;
  for (const auto& config : configs) {
    MseReport report;
    try {
      report = run_benchmark(config, bench);
    } catch (const Error& e) {
      if (!o.standard_grid) throw;
      err << "skipping n=" << config.n << " p=" << config.p << " S=" << config.rank
          << " ratio=" << config.eigenvalue_ratio << ": " << e.what() << "\n";
      reports.push_back({{"config", {{"n", config.n},
                                     {"p", config.p},
                                     {"rank", config.rank},
                                     {"snr", config.snr},
                                     {"eigenvalue_ratio", config.eigenvalue_ratio}}},
                         {"skipped", e.what()}});
      continue;
    }
    const std::string rows = io::mse_report_tsv(report);
    tsv += tsv.empty() ? rows : rows.substr(rows.find('\n') + 1);
    failed += report.failures.size();
    reports.push_back(io::mse_report_json(report));
  }

  ordered_json doc;
  doc["reports"] = std::move(reports);
  doc["failed_replicates"] = failed;
  doc["manifest"] = manifest.reproducible_json();

  io::write_text(o.output + ".tsv", tsv);
  io::write_text(o.output + ".json", doc.dump(2) + "\n");
  write_manifest(o.output + ".manifest.json", manifest);

  out << tsv;
  if (failed > 0) {
    err << failed << " replicate(s) failed; see " << o.output << ".json\n";
    return 4;
  }
  return 0;
}

std::vector<int> parse_axes(const std::string& spec, Eigen::Index available) {
  std::vector<int> axes;
  if (spec.empty()) {
    for (Eigen::Index k = 1; k <= available; ++k) axes.push_back(static_cast<int>(k));
    return axes;
  }
  std::stringstream ss(spec);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      std::size_t used = 0;
      const int axis = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      axes.push_back(axis);
    } catch (const std::exception&) {
      throw Error(ErrorKind::usage, "invalid --axes entry '" + tok + "'");
    }
  }
  return axes;
}

std::vector<std::string> numbered(Eigen::Index m) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < m; ++i) out.push_back(std::to_string(i + 1));
  return out;
}

int cmd_coords(const CoordsOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  io::RunManifest manifest = start_manifest("coords", args);
  manifest.parameters = input_parameters(o.in);
  manifest.parameters["fit"] = fit_parameters(o.fit);
  manifest.parameters["axes"] = o.axes;
  manifest.parameters["reference"] = o.reference;
  manifest.parameters["scaling"] = !o.no_scaling;
  manifest.input_checksums = checksums_for(o.in.input);
  if (!o.reference.empty()) {
    for (auto& entry : checksums_for(o.reference)) manifest.input_checksums.push_back(entry);
  }

  const LoadedInput loaded = load_input(o.in);
  const Prepared prep = prepare(loaded.table.values, o.fit.standardize);
  const ShrinkageResult result = run_fit(o.fit, prep.centered);

  auto row_labels = loaded.table.row_labels.empty() ? numbered(prep.centered.rows())
                                                    : loaded.table.row_labels;
  auto col_labels = loaded.table.column_labels.empty() ? numbered(prep.centered.cols())
                                                       : loaded.table.column_labels;
  const auto axes = parse_axes(o.axes, result.rank);
  const Configuration individuals =
      select_axes(individual_coordinates(result, std::move(row_labels)), axes);
  const Configuration variables =
      select_axes(variable_coordinates(result, std::move(col_labels)), axes);

  io::write_configuration_tsv(o.output + "_individuals.tsv", individuals);
  io::write_configuration_tsv(o.output + "_variables.tsv", variables);

  Configuration cosines;
  cosines.kind = ConfigurationKind::variables;
  cosines.points = cosine_matrix(variables);
  cosines.labels = variables.labels;
  io::write_configuration_tsv(o.output + "_variable_cosines.tsv", cosines);

  if (!o.reference.empty()) {
    const Configuration reference = io::read_configuration_tsv(o.reference);
    const auto aligned =
        procrustes_align(individuals, reference, ProcrustesOptions{!o.no_scaling});
    io::write_configuration_tsv(o.output + "_aligned.tsv", aligned.aligned);

    const auto& t = aligned.transform;
    ordered_json rotation = ordered_json::array();
    for (Eigen::Index i = 0; i < t.rotation.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(t.rotation.cols()));
      for (Eigen::Index j = 0; j < t.rotation.cols(); ++j)
        row[static_cast<std::size_t>(j)] = t.rotation(i, j);
      rotation.push_back(row);
    }
    ordered_json transform;
    transform["rotation"] = std::move(rotation);
    transform["translation"] = to_vector(t.translation);
    transform["scale"] = t.scale;
    transform["residual"] = t.residual;
    transform["manifest"] = manifest.reproducible_json();
    io::write_text(o.output + "_transform.json", transform.dump(2) + "\n");
  }

  write_manifest(o.output + ".manifest.json", manifest);
  out << "wrote " << individuals.points.cols() << "-axis coordinates to " << o.output
      << "_{individuals,variables}.tsv\n";
  return 0;
}

void add_input_options(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("--input,-i", in.input, "CSV file, PGM image or PGM stack directory")
      ->required();
  cmd->add_flag("--header", in.header, "First CSV line holds column names");
  cmd->add_flag("--row-labels", in.row_labels, "First CSV column holds row labels");
  cmd->add_option("--delimiter", in.delimiter, "CSV delimiter (single character or 'tab')");
}

void add_fit_options(CLI::App* cmd, FitOptions& fit) {
  cmd->add_option("--method,-m", fit.method, "pca, rpca, sure or ppca")
      ->check(CLI::IsMember({"pca", "rpca", "sure", "ppca"}));
  cmd->add_option("--rank,-S", fit.rank, "Number of retained dimensions")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--sigma2", fit.sigma2, "Noise variance on the data scale")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--estimate-sigma", fit.estimate_sigma,
                "Use the residual variance estimate at --rank (sure, ppca)");
  cmd->add_option("--lambda", fit.lambda, "Fixed soft threshold for sure")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--standardize", fit.standardize, "Scale columns to unit variance first");
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             int depth);

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             int depth) {
  CLI::App app{"Low-rank matrix denoising by regularised PCA", "regpca"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  DenoiseOptions denoise;
  auto* denoise_cmd = app.add_subcommand("denoise", "Denoise a matrix or image stack");
  add_input_options(denoise_cmd, denoise.in);
  add_fit_options(denoise_cmd, denoise.fit);
  denoise_cmd->add_option("--output,-o", denoise.output, "Output CSV, PGM or stack directory")
      ->required();
  denoise_cmd->add_option("--report", denoise.report, "JSON report path");
  denoise_cmd->add_flag("--plain-pgm", denoise.plain_pgm, "Write P2 instead of P5");

  SimulateOptions sim;
  sim.threads = default_thread_count();
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo MSE comparison");
  sim_cmd->add_option("--n", sim.n, "Individuals");
  sim_cmd->add_option("--p", sim.p, "Variables");
  sim_cmd->add_option("--rank", sim.rank, "Signal rank S");
  sim_cmd->add_option("--snr", sim.snr, "RMS(signal) / sigma");
  sim_cmd->add_option("--ratio", sim.ratio, "d1/d2 for the replication generator");
  sim_cmd->add_option("--replicates", sim.replicates, "Monte Carlo replicates");
  sim_cmd->add_option("--seed", sim.seed, "Base seed");
  sim_cmd->add_option("--generator", sim.generator, "replication or gaussian_factors");
  sim_cmd->add_option("--methods", sim.methods, "Comma-separated methods")->delimiter(',');
  sim_cmd->add_option("--rank-input", sim.rank_input, "Rank given to PCA/rPCA (default S)");
  sim_cmd->add_option("--sigma-policy", sim.sigma_policy, "SURE noise variance: true|estimated");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (default $REGPCA_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--output,-o", sim.output, "Output prefix for .tsv/.json")->required();
  sim_cmd->add_flag("--standard-grid", sim.standard_grid,
                    "Run the full 36-configuration grid (500 replicates unless set)");

  CoordsOptions coords;
  auto* coords_cmd = app.add_subcommand("coords", "Individual and variable coordinates");
  add_input_options(coords_cmd, coords.in);
  add_fit_options(coords_cmd, coords.fit);
  coords_cmd->add_option("--axes", coords.axes, "1-based axes, e.g. 1,3");
  coords_cmd->add_option("--reference", coords.reference,
                         "Reference individual coordinates (TSV) for Procrustes alignment");
  coords_cmd->add_flag("--no-scaling", coords.no_scaling, "Procrustes without isotropic scale");
  coords_cmd->add_option("--output,-o", coords.output, "Output prefix")->required();

  std::string manifest_path;
  auto* rerun_cmd = app.add_subcommand("rerun", "Repeat the command recorded in a manifest");
  rerun_cmd->add_option("manifest", manifest_path, "Manifest JSON")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  if (*denoise_cmd) return cmd_denoise(denoise, args, out);
  if (*sim_cmd) {
    if (sim.standard_grid && sim_cmd->count("--replicates") == 0) sim.replicates = 500;
    return cmd_simulate(sim, args, out, err);
  }
  if (*coords_cmd) return cmd_coords(coords, args, out);
  if (*rerun_cmd) {
    if (depth > 0) throw Error(ErrorKind::usage, "a manifest cannot rerun another rerun");
    const auto manifest = io::RunManifest::from_json(
        ordered_json::parse(io::read_text(manifest_path), nullptr, true));
    return dispatch(manifest.arguments, out, err, depth + 1);
  }
  return 2;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err, 0);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error (format): " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error (io): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace regpca
