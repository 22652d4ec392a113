#pragma once

#include <stdexcept>
#include <string>

namespace alo {

enum class ErrorKind {
  invalid_argument,
  singular_point,
  infeasible_dual,
  unsupported,
  not_converged,
  rank_deficient,
  degenerate_spectrum,
  singular_system,
  budget_exceeded,
  parse_error,
  io_error,
};

const char* to_string(ErrorKind kind);

/// Library-wide exception. `kind()` lets callers branch without parsing text.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace alo
