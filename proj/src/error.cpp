#include "regpca/error.hpp"

namespace regpca {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::rank: return "rank";
    case ErrorKind::invalid_weight: return "invalid-weight";
    case ErrorKind::degrees_of_freedom: return "degrees-of-freedom";
    case ErrorKind::zero_eigenvalue: return "zero-eigenvalue";
    case ErrorKind::invalid_threshold: return "invalid-threshold";
    case ErrorKind::invalid_grid: return "invalid-grid";
    case ErrorKind::non_positive_loading: return "non-positive-loading";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::invalid_signal: return "invalid-signal";
    case ErrorKind::shape: return "shape";
    case ErrorKind::empty_configuration: return "empty-configuration";
    case ErrorKind::degenerate_reference: return "degenerate-reference";
    case ErrorKind::parse: return "parse";
    case ErrorKind::format: return "format";
    case ErrorKind::usage: return "usage";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::configuration:
      return 2;
    case ErrorKind::invalid_input:
    case ErrorKind::shape:
    case ErrorKind::parse:
    case ErrorKind::format:
    case ErrorKind::io:
      return 3;
    default:
      return 4;
  }
}

}  // namespace regpca
