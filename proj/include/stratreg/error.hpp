#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace stratreg {

enum class ErrorCode {
    dimension_mismatch,
    invalid_argument,
    singular_matrix,
    solver_not_converged,
    closed_form_unavailable,
    no_equilibrium,
    parse_error,
    io_error,
    sweep_failed,
};

const char* to_string(ErrorCode code);

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised when the convex solver exhausts its iteration budget.
class SolverError : public Error {
public:
    SolverError(const std::string& message, Eigen::VectorXd last_iterate, double gradient_norm,
                int iterations);

    const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
    double gradient_norm() const noexcept { return gradient_norm_; }
    int iterations() const noexcept { return iterations_; }

private:
    Eigen::VectorXd last_iterate_;
    double gradient_norm_;
    int iterations_;
};

}  // namespace stratreg
