#include "stratreg/error.hpp"

#include <utility>

namespace stratreg {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::singular_matrix: return "singular_matrix";
    case ErrorCode::solver_not_converged: return "solver_not_converged";
    case ErrorCode::closed_form_unavailable: return "closed_form_unavailable";
    case ErrorCode::no_equilibrium: return "no_equilibrium";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::sweep_failed: return "sweep_failed";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

SolverError::SolverError(const std::string& message, Eigen::VectorXd last_iterate,
                         double gradient_norm, int iterations)
    : Error(ErrorCode::solver_not_converged, message),
      last_iterate_(std::move(last_iterate)),
      gradient_norm_(gradient_norm),
      iterations_(iterations) {}

}  // namespace stratreg
