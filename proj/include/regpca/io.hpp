#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "regpca/analysis.hpp"
#include "regpca/linalg.hpp"
#include "regpca/simulation.hpp"

namespace regpca::io {

inline constexpr int kPrintDigits = 12;

/// Formats a double with 12 significant digits.
std::string format_number(double value);

struct CsvOptions {
  bool header = false;
  bool row_labels = false;
  char delimiter = ',';
};

struct LabeledMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
};

/// RFC-4180-style reader: quoted fields, doubled quotes, CRLF tolerated.
LabeledMatrix read_matrix_csv(const std::filesystem::path& path, const CsvOptions& options = {});
LabeledMatrix parse_matrix_csv(const std::string& text, const CsvOptions& options = {});

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& values,
                      const CsvOptions& options = {},
                      const std::vector<std::string>& row_labels = {},
                      const std::vector<std::string>& column_labels = {});

struct PgmImage {
  Eigen::MatrixXd pixels;  // height×width
  int maxval = 255;
};

/// Reads plain (P2) or binary (P5) PGM, 8- or 16-bit.
PgmImage read_pgm(const std::filesystem::path& path);

/// Rounds and clamps to [0, maxval] before writing.
void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& pixels, int maxval = 255,
               bool binary = true);

/// Frames flattened row-major, one frame per row of `frames`.
struct ImageStack {
  Eigen::MatrixXd frames;  // T×(height*width)
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  int maxval = 255;
  std::vector<std::string> names;
};

inline constexpr const char* kStackIndex = "index.txt";

/// A stack directory holds numbered frames plus index.txt listing them in
/// frame order. Without an index the .pgm files are taken in name order.
ImageStack read_pgm_stack(const std::filesystem::path& directory);
void write_pgm_stack(const std::filesystem::path& directory, const ImageStack& stack,
                     bool binary = true);

/// Header: label, axis_1 ... axis_k.
void write_configuration_tsv(const std::filesystem::path& path, const Configuration& config);
Configuration read_configuration_tsv(const std::filesystem::path& path,
                                     ConfigurationKind kind = ConfigurationKind::individuals);

void write_dispersion_tsv(const std::filesystem::path& path, const DispersionSummary& summary);

/// One row per method: config echo, mean, sd, sd of mean, count, failures.
std::string mse_report_tsv(const MseReport& report);
nlohmann::ordered_json mse_report_json(const MseReport& report);

std::string sha256_file(const std::filesystem::path& path);

/// Parameters and input checksums of one CLI invocation.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;  // argv after the program name
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::vector<std::pair<std::string, std::string>> input_checksums;
  std::string tool_version;
  std::string started_at;
  std::string finished_at;

  /// Command, parameters, checksums and version. Raw arguments and
  /// timestamps are left out so embedded copies stay byte-identical across
  /// runs, output locations and thread counts.
  nlohmann::ordered_json reproducible_json() const;
  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::ordered_json& j);
};

std::string utc_timestamp();

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace regpca::io
