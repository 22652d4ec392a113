#include "alo/error.hpp"

namespace alo {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::singular_point: return "singular point";
    case ErrorKind::infeasible_dual: return "infeasible dual point";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::not_converged: return "not converged";
    case ErrorKind::rank_deficient: return "rank deficient";
    case ErrorKind::degenerate_spectrum: return "degenerate spectrum";
    case ErrorKind::singular_system: return "singular system";
    case ErrorKind::budget_exceeded: return "budget exceeded";
    case ErrorKind::parse_error: return "parse error";
    case ErrorKind::io_error: return "io error";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace alo
