#pragma once

#include "stratreg/dataset.hpp"

#include <Eigen/Core>
#include <Eigen/QR>

#include <string>
#include <vector>

namespace stratreg {

enum class Regularizer { none, ridge, smoothed_absolute };

const char* to_string(Regularizer r);
Regularizer regularizer_from_string(const std::string& name);

/// Parameters of the (p,R)-regression loss
///   sum_i |y_i - beta.x_i|^p + lambda * R(beta)
/// R is lambda*||beta||^2 for ridge and lambda*sum_j sqrt(beta_j^2 + mu^2) for the
/// smoothed absolute value. The intercept coefficient is regularized too.
struct RegressionConfig {
    double p = 2.0;
    Regularizer regularizer = Regularizer::none;
    double lambda = 0.0;
    double smoothing = 1e-6;
    double gradient_tolerance = 1e-10;
    int max_solver_iterations = 500;

    void validate() const;
    bool unregularized() const { return regularizer == Regularizer::none || lambda == 0.0; }
};

/// Per-point data term phi(e) of the loss, e = response - outcome.
class ResidualPenalty {
public:
    static ResidualPenalty power(double p);
    static ResidualPenalty smoothed_absolute(double mu);

    double value(double e) const;
    double slope(double e) const;
    /// Second derivative, clamped to keep Newton steps finite near e = 0 when p < 2.
    double curvature(double e) const;
    /// phi'(e)/e: curvature of the symmetric quadratic through phi's tangent at e.
    double secant(double e) const;

private:
    enum class Kind { power, smoothed_absolute };
    ResidualPenalty(Kind kind, double parameter) : kind_(kind), parameter_(parameter) {}

    Kind kind_;
    double parameter_;
};

struct Hyperplane {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd outcomes;
    Eigen::VectorXd residuals;
    int solver_iterations = 0;
    double gradient_norm = 0.0;
};

Hyperplane make_hyperplane(const Eigen::MatrixXd& features, const Eigen::VectorXd& responses,
                           Eigen::VectorXd coefficients);

/// Minimizer of the regression loss for a fixed design matrix.
///
/// The least-squares factorization of the design is computed once, so repeated
/// fits over different response vectors (best-response searches, sweeps) only
/// pay for the Newton iterations. Instances are immutable after construction and
/// safe to share across threads.
class Regressor {
public:
    Regressor(Eigen::MatrixXd features, const RegressionConfig& config);
    Regressor(Eigen::MatrixXd features, ResidualPenalty penalty, const RegressionConfig& config);

    const Eigen::MatrixXd& features() const { return features_; }
    const RegressionConfig& config() const { return config_; }
    bool full_rank() const { return decomposition_.rank() == features_.cols(); }

    double loss(const Eigen::VectorXd& responses, const Eigen::VectorXd& beta) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& responses, const Eigen::VectorXd& beta) const;

    /// Minimum-norm least-squares coefficients (the OLS solution when full rank).
    Eigen::VectorXd least_squares(const Eigen::VectorXd& responses) const;

    /// Fits starting from the least-squares solution.
    Hyperplane solve(const Eigen::VectorXd& responses) const;
    /// Fits starting from a caller-supplied iterate.
    Hyperplane solve(const Eigen::VectorXd& responses, Eigen::VectorXd warm_start) const;

private:
    double objective(const Eigen::VectorXd& residuals, const Eigen::VectorXd& beta) const;
    Eigen::VectorXd objective_gradient(const Eigen::VectorXd& residuals,
                                       const Eigen::VectorXd& beta) const;
    Eigen::MatrixXd objective_hessian(const Eigen::VectorXd& residuals,
                                      const Eigen::VectorXd& beta,
                                      const std::vector<bool>& use_secant) const;
    double rounding_floor(const Eigen::VectorXd& responses, const Eigen::VectorXd& residuals,
                          const Eigen::VectorXd& beta) const;
    double loss_noise(const Eigen::VectorXd& responses, const Eigen::VectorXd& residuals,
                      const Eigen::VectorXd& beta, double value) const;

    Eigen::MatrixXd features_;
    ResidualPenalty penalty_;
    RegressionConfig config_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> decomposition_;
};

/// sum_i |reports_i - beta.x_i|^p + lambda R(beta); `reports` is the full n-vector.
double loss_value(const Dataset& dataset, const Eigen::VectorXd& reports,
                  const RegressionConfig& config, const Eigen::VectorXd& beta);

Eigen::VectorXd loss_gradient(const Dataset& dataset, const Eigen::VectorXd& reports,
                              const RegressionConfig& config, const Eigen::VectorXd& beta);

/// Unique minimizer of the loss. Throws SolverError on non-convergence.
Hyperplane fit(const Dataset& dataset, const Eigen::VectorXd& reports,
               const RegressionConfig& config);

/// Closed-form least squares. Throws Error(singular_matrix) when X^T X is singular.
Hyperplane ols_fit(const Dataset& dataset, const Eigen::VectorXd& reports);

/// X (X^T X)^{-1} X^T. Throws Error(singular_matrix) when X^T X is singular.
Eigen::MatrixXd hat_matrix(const Dataset& dataset);
Eigen::MatrixXd hat_matrix(const Eigen::MatrixXd& features);

/// Least absolute deviations through the smoothed loss sum_i sqrt(e_i^2 + mu^2),
/// solved by continuation in mu down to `smoothing`.
Hyperplane fit_smoothed_lad(const Eigen::MatrixXd& features, const Eigen::VectorXd& reports,
                            double smoothing = 1e-7);

}  // namespace stratreg
