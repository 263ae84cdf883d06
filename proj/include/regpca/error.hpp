#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace regpca {

enum class ErrorKind {
  invalid_input,
  rank,
  invalid_weight,
  degrees_of_freedom,
  zero_eigenvalue,
  invalid_threshold,
  invalid_grid,
  non_positive_loading,
  configuration,
  invalid_signal,
  shape,
  empty_configuration,
  degenerate_reference,
  parse,
  format,
  usage,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so the CLI can map it
// to an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Exit codes: 2 usage, 3 data, 4 numeric/estimator.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace regpca
