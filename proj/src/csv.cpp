#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "regpca/error.hpp"
#include "regpca/io.hpp"

namespace regpca::io {

namespace {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

std::vector<Record> split_records(const std::string& text, char delimiter) {
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line = line;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 && current.fields.front().empty();
    if (!blank) records.push_back(std::move(current));
    current = Record{};
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      end_record();
      current.line = ++line;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) {
    throw Error(ErrorKind::parse, "unterminated quoted field starting before line " +
                                      std::to_string(line));
  }
  if (!field.empty() || !current.fields.empty()) end_record();
  return records;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

double parse_cell(const std::string& raw, std::size_t line, std::size_t column) {
  const std::string cell = trim(raw);
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    std::ostringstream msg;
    msg << "non-numeric cell '" << raw << "' at line " << line << ", column " << column;
    throw Error(ErrorKind::parse, msg.str());
  }
  return value;
}

std::string quote_if_needed(const std::string& s, char delimiter) {
  if (s.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", kPrintDigits, value);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LabeledMatrix parse_matrix_csv(const std::string& text, const CsvOptions& options) {
  auto records = split_records(text, options.delimiter);
  LabeledMatrix out;
  std::size_t first_body = 0;
  if (options.header) {
    if (records.empty()) throw Error(ErrorKind::parse, "missing header line");
    auto& header = records.front().fields;
    const std::size_t skip = options.row_labels && !header.empty() ? 1 : 0;
    for (std::size_t j = skip; j < header.size(); ++j) out.column_labels.push_back(trim(header[j]));
    first_body = 1;
  }
  if (records.size() <= first_body) throw Error(ErrorKind::parse, "no data rows");

  const std::size_t label_cols = options.row_labels ? 1 : 0;
  const std::size_t width = records[first_body].fields.size();
  if (width <= label_cols) {
    throw Error(ErrorKind::parse, "line " + std::to_string(records[first_body].line) +
                                      " has no numeric fields");
  }
  const std::size_t p = width - label_cols;
  if (options.header && out.column_labels.size() != p) {
    std::ostringstream msg;
    msg << "header has " << out.column_labels.size() << " column names but line "
        << records[first_body].line << " has " << p << " values";
    throw Error(ErrorKind::parse, msg.str());
  }

  const std::size_t n = records.size() - first_body;
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    const Record& rec = records[first_body + i];
    if (rec.fields.size() != width) {
      std::ostringstream msg;
      msg << "line " << rec.line << " has " << rec.fields.size() << " fields, expected "
          << width;
      throw Error(ErrorKind::parse, msg.str());
    }
    if (options.row_labels) out.row_labels.push_back(trim(rec.fields.front()));
    for (std::size_t j = 0; j < p; ++j) {
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          parse_cell(rec.fields[label_cols + j], rec.line, label_cols + j + 1);
    }
  }
  return out;
}

LabeledMatrix read_matrix_csv(const std::filesystem::path& path, const CsvOptions& options) {
  try {
    return parse_matrix_csv(read_text(path), options);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::parse) throw;
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& values,
                      const CsvOptions& options, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& column_labels) {
  const bool labels = options.row_labels && !row_labels.empty();
  std::string text;
  const char d = options.delimiter;
  if (options.header && !column_labels.empty()) {
    if (labels) text += d;
    for (std::size_t j = 0; j < column_labels.size(); ++j) {
      if (j) text += d;
      text += quote_if_needed(column_labels[j], d);
    }
    text += '\n';
  }
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    if (labels) {
      text += quote_if_needed(row_labels[static_cast<std::size_t>(i)], d);
      text += d;
    }
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) text += d;
      text += format_number(values(i, j));
    }
    text += '\n';
  }
  write_text(path, text);
}

void write_configuration_tsv(const std::filesystem::path& path, const Configuration& config) {
  std::string text = "label";
  for (Eigen::Index k = 0; k < config.points.cols(); ++k) text += "\taxis_" + std::to_string(k + 1);
  text += '\n';
  for (Eigen::Index i = 0; i < config.points.rows(); ++i) {
    text += config.labels.empty() ? std::to_string(i + 1)
                                  : config.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < config.points.cols(); ++k) {
      text += '\t';
      text += format_number(config.points(i, k));
    }
    text += '\n';
  }
  write_text(path, text);
}

Configuration read_configuration_tsv(const std::filesystem::path& path, ConfigurationKind kind) {
  auto m = read_matrix_csv(path, CsvOptions{.header = true, .row_labels = true, .delimiter = '\t'});
  Configuration c;
  c.kind = kind;
  c.points = std::move(m.values);
  c.labels = std::move(m.row_labels);
  return c;
}

void write_dispersion_tsv(const std::filesystem::path& path, const DispersionSummary& s) {
  const Eigen::Index k = s.mean.cols();
  std::string text = "label";
  for (const char* prefix : {"mean_", "var_", "bias_"})
    for (Eigen::Index a = 0; a < k; ++a) text += std::string("\t") + prefix + std::to_string(a + 1);
  text += '\n';
  for (Eigen::Index i = 0; i < s.mean.rows(); ++i) {
    text += s.labels.empty() ? std::to_string(i + 1) : s.labels[static_cast<std::size_t>(i)];
    for (const Eigen::MatrixXd* m : {&s.mean, &s.variance, &s.bias})
      for (Eigen::Index a = 0; a < k; ++a) text += "\t" + format_number((*m)(i, a));
    text += '\n';
  }
  write_text(path, text);
}

std::string mse_report_tsv(const MseReport& report) {
  std::ostringstream out;
  out << "n\tp\trank\tsnr\tratio\tgenerator\trank_input\tsigma_policy\tmethod\tmean_mse\tsd_mse"
         "\tsd_mean\treplicates\tfailed\n";
  const auto& c = report.config;
  for (const auto& s : report.stats) {
    out << c.n << '\t' << c.p << '\t' << c.rank << '\t' << format_number(c.snr) << '\t'
        << format_number(c.eigenvalue_ratio) << '\t' << to_string(c.generator) << '\t'
        << report.rank_input << '\t'
        << (report.sigma_policy == SigmaPolicy::true_variance ? "true" : "estimated") << '\t'
        << to_string(s.method) << '\t' << format_number(s.mean) << '\t' << format_number(s.sd)
        << '\t' << format_number(s.sd_of_mean) << '\t' << s.count << '\t'
        << report.failures.size() << '\n';
  }
  return out.str();
}

nlohmann::ordered_json mse_report_json(const MseReport& report) {
  using nlohmann::ordered_json;
  const auto& c = report.config;
  ordered_json j;
  j["config"] = {{"n", c.n},
                 {"p", c.p},
                 {"rank", c.rank},
                 {"snr", c.snr},
                 {"eigenvalue_ratio", c.eigenvalue_ratio},
                 {"replicates", c.replicates},
                 {"seed", c.seed},
                 {"generator", std::string(to_string(c.generator))}};
  j["rank_input"] = report.rank_input;
  j["sigma_policy"] =
      report.sigma_policy == SigmaPolicy::true_variance ? "true" : "estimated";
  j["flagged"] = report.flagged();

  double power = 0.0;
  for (double v : report.signal_power) power += v;
  j["mean_signal_power"] =
      report.signal_power.empty() ? 0.0 : power / static_cast<double>(report.signal_power.size());

  ordered_json methods = ordered_json::array();
  for (std::size_t m = 0; m < report.stats.size(); ++m) {
    const auto& s = report.stats[m];
    methods.push_back({{"method", std::string(to_string(s.method))},
                       {"mean_mse", s.mean},
                       {"sd_mse", s.sd},
                       {"sd_of_mean", s.sd_of_mean},
                       {"replicates", s.count},
                       {"raw", report.raw[m]}});
  }
  j["methods"] = std::move(methods);
  j["replicate_index"] = report.replicate_index;
  ordered_json failures = ordered_json::array();
  for (const auto& f : report.failures)
    failures.push_back({{"replicate", f.replicate}, {"message", f.message}});
  j["failures"] = std::move(failures);
  return j;
}

}  // namespace regpca::io
