#include "stratreg/regression.hpp"

#include "stratreg/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace stratreg {

namespace {

constexpr double kMaxCurvature = 1e8;
constexpr double kMaxCondition = 1e12;
constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;
constexpr double kEps = std::numeric_limits<double>::epsilon();

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_dimensions(const Eigen::MatrixXd& x, const Eigen::VectorXd& responses,
                      const Eigen::VectorXd* beta) {
    if (responses.size() != x.rows()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "expected " + std::to_string(x.rows()) + " responses, got " +
                        std::to_string(responses.size()));
    }
    if (beta != nullptr && beta->size() != x.cols()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "expected " + std::to_string(x.cols()) + " coefficients, got " +
                        std::to_string(beta->size()));
    }
}

}  // namespace

const char* to_string(Regularizer r) {
    switch (r) {
    case Regularizer::none: return "none";
    case Regularizer::ridge: return "ridge";
    case Regularizer::smoothed_absolute: return "smooth-l1";
    }
    return "none";
}

Regularizer regularizer_from_string(const std::string& name) {
    if (name == "none") return Regularizer::none;
    if (name == "ridge") return Regularizer::ridge;
    if (name == "smooth-l1" || name == "smoothed-absolute") return Regularizer::smoothed_absolute;
    throw Error(ErrorCode::invalid_argument, "unknown regularizer '" + name + "'");
}

void RegressionConfig::validate() const {
    if (!(p > 1.0) || !std::isfinite(p)) {
        throw Error(ErrorCode::invalid_argument, "p must be a finite real > 1");
    }
    if (!(lambda >= 0.0)) throw Error(ErrorCode::invalid_argument, "lambda must be >= 0");
    if (regularizer == Regularizer::smoothed_absolute && !(smoothing > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "smoothing radius must be > 0");
    }
    if (!(gradient_tolerance > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "gradient tolerance must be > 0");
    }
    if (max_solver_iterations < 1) {
        throw Error(ErrorCode::invalid_argument, "max solver iterations must be positive");
    }
}

// ---------------------------------------------------------------------------
// ResidualPenalty

ResidualPenalty ResidualPenalty::power(double p) { return {Kind::power, p}; }

ResidualPenalty ResidualPenalty::smoothed_absolute(double mu) {
    return {Kind::smoothed_absolute, mu};
}

double ResidualPenalty::value(double e) const {
    if (kind_ == Kind::power) return std::pow(std::abs(e), parameter_);
    return std::hypot(e, parameter_);
}

double ResidualPenalty::slope(double e) const {
    if (kind_ == Kind::power) {
        if (e == 0.0) return 0.0;
        return parameter_ * std::pow(std::abs(e), parameter_ - 1.0) * sign(e);
    }
    return e / std::hypot(e, parameter_);
}

double ResidualPenalty::secant(double e) const {
    if (e == 0.0) return curvature(0.0);
    return std::min(slope(e) / e, kMaxCurvature);
}

double ResidualPenalty::curvature(double e) const {
    if (kind_ == Kind::power) {
        const double p = parameter_;
        if (p == 2.0) return 2.0;
        if (e == 0.0) return p < 2.0 ? kMaxCurvature : 0.0;
        return std::min(p * (p - 1.0) * std::pow(std::abs(e), p - 2.0), kMaxCurvature);
    }
    const double r = std::hypot(e, parameter_);
    return std::min(parameter_ * parameter_ / (r * r * r), kMaxCurvature);
}

// ---------------------------------------------------------------------------
// Regressor

Hyperplane make_hyperplane(const Eigen::MatrixXd& features, const Eigen::VectorXd& responses,
                           Eigen::VectorXd coefficients) {
    Hyperplane h;
    h.outcomes = features * coefficients;
    h.residuals = (responses - h.outcomes).cwiseAbs();
    h.coefficients = std::move(coefficients);
    return h;
}

Regressor::Regressor(Eigen::MatrixXd features, const RegressionConfig& config)
    : Regressor(std::move(features), ResidualPenalty::power(config.p), config) {}

Regressor::Regressor(Eigen::MatrixXd features, ResidualPenalty penalty,
                     const RegressionConfig& config)
    : features_(std::move(features)), penalty_(penalty), config_(config) {
    config_.validate();
    if (features_.rows() < 1 || features_.cols() < 1) {
        throw Error(ErrorCode::invalid_argument, "design matrix must be non-empty");
    }
    decomposition_.compute(features_);
}

double Regressor::objective(const Eigen::VectorXd& residuals, const Eigen::VectorXd& beta) const {
    double total = 0.0;
    for (Index i = 0; i < residuals.size(); ++i) total += penalty_.value(residuals[i]);
    if (config_.lambda > 0.0) {
        if (config_.regularizer == Regularizer::ridge) {
            total += config_.lambda * beta.squaredNorm();
        } else if (config_.regularizer == Regularizer::smoothed_absolute) {
            double r = 0.0;
            for (Index j = 0; j < beta.size(); ++j) r += std::hypot(beta[j], config_.smoothing);
            total += config_.lambda * r;
        }
    }
    return total;
}

Eigen::VectorXd Regressor::objective_gradient(const Eigen::VectorXd& residuals,
                                              const Eigen::VectorXd& beta) const {
    Eigen::VectorXd slopes(residuals.size());
    for (Index i = 0; i < residuals.size(); ++i) slopes[i] = penalty_.slope(residuals[i]);
    // d e_i / d beta = -x_i
    Eigen::VectorXd g = -(features_.transpose() * slopes);
    if (config_.lambda > 0.0) {
        if (config_.regularizer == Regularizer::ridge) {
            g += 2.0 * config_.lambda * beta;
        } else if (config_.regularizer == Regularizer::smoothed_absolute) {
            for (Index j = 0; j < beta.size(); ++j) {
                g[j] += config_.lambda * beta[j] / std::hypot(beta[j], config_.smoothing);
            }
        }
    }
    return g;
}

Eigen::MatrixXd Regressor::objective_hessian(const Eigen::VectorXd& residuals,
                                             const Eigen::VectorXd& beta,
                                             const std::vector<bool>& use_secant) const {
    Eigen::VectorXd w(residuals.size());
    for (Index i = 0; i < residuals.size(); ++i) {
        w[i] = penalty_.curvature(residuals[i]);
        if (use_secant[static_cast<std::size_t>(i)]) w[i] = std::max(w[i], penalty_.secant(residuals[i]));
    }
    Eigen::MatrixXd h = features_.transpose() * w.asDiagonal() * features_;
    if (config_.lambda > 0.0) {
        if (config_.regularizer == Regularizer::ridge) {
            h.diagonal().array() += 2.0 * config_.lambda;
        } else if (config_.regularizer == Regularizer::smoothed_absolute) {
            const double mu = config_.smoothing;
            for (Index j = 0; j < beta.size(); ++j) {
                const double r = std::hypot(beta[j], mu);
                h(j, j) += config_.lambda * mu * mu / (r * r * r);
            }
        }
    }
    return h;
}

// Size of the gradient that is indistinguishable from zero in double precision:
// each residual carries a rounding uncertainty delta_i, and the data term's
// slope can move by phi'(|e|+delta) - phi'(|e|-delta) inside that band. For
// p close to 1 (or tight smoothing) this band dominates any fixed tolerance.
double Regressor::rounding_floor(const Eigen::VectorXd& responses,
                                 const Eigen::VectorXd& residuals,
                                 const Eigen::VectorXd& beta) const {
    const Index n = features_.rows();
    const Index d = features_.cols();
    Eigen::VectorXd spread = Eigen::VectorXd::Zero(d);
    for (Index i = 0; i < n; ++i) {
        const double scale =
            std::abs(responses[i]) + (features_.row(i).cwiseAbs() * beta.cwiseAbs()).value();
        const double delta = 4.0 * kEps * std::max(scale, 1.0);
        const double e = std::abs(residuals[i]);
        const double band = penalty_.slope(e + delta) - penalty_.slope(e - delta);
        const double summation = static_cast<double>(n) * kEps * std::abs(penalty_.slope(e));
        spread += (band + summation) * features_.row(i).cwiseAbs().transpose();
    }
    return spread.norm();
}

// Uncertainty of the objective value from the same residual rounding band.
double Regressor::loss_noise(const Eigen::VectorXd& responses, const Eigen::VectorXd& residuals,
                             const Eigen::VectorXd& beta, double value) const {
    const Index n = features_.rows();
    double noise = static_cast<double>(n + 8) * kEps * std::abs(value);
    for (Index i = 0; i < n; ++i) {
        const double scale =
            std::abs(responses[i]) + (features_.row(i).cwiseAbs() * beta.cwiseAbs()).value();
        noise += 4.0 * kEps * std::max(scale, 1.0) * std::abs(penalty_.slope(residuals[i]));
    }
    return noise;
}

double Regressor::loss(const Eigen::VectorXd& responses, const Eigen::VectorXd& beta) const {
    check_dimensions(features_, responses, &beta);
    return objective(responses - features_ * beta, beta);
}

Eigen::VectorXd Regressor::gradient(const Eigen::VectorXd& responses,
                                    const Eigen::VectorXd& beta) const {
    check_dimensions(features_, responses, &beta);
    return objective_gradient(responses - features_ * beta, beta);
}

Eigen::VectorXd Regressor::least_squares(const Eigen::VectorXd& responses) const {
    check_dimensions(features_, responses, nullptr);
    return decomposition_.solve(responses);
}

Hyperplane Regressor::solve(const Eigen::VectorXd& responses) const {
    return solve(responses, least_squares(responses));
}

Hyperplane Regressor::solve(const Eigen::VectorXd& responses, Eigen::VectorXd beta) const {
    check_dimensions(features_, responses, &beta);
    const double tol = config_.gradient_tolerance;

    Eigen::VectorXd residuals = responses - features_ * beta;
    double value = objective(residuals, beta);
    Eigen::VectorXd g = objective_gradient(residuals, beta);
    double gnorm = g.norm();

    // Points whose residual moved by more than half its size on the last step:
    // their local quadratic model is unreliable (typically a residual heading to
    // zero with p < 2), so they get the secant curvature phi'(e)/e instead.
    std::vector<bool> use_secant(static_cast<std::size_t>(residuals.size()), false);

    int iteration = 0;
    for (;; ++iteration) {
        if (gnorm <= tol || gnorm <= rounding_floor(responses, residuals, beta)) {
            Hyperplane h = make_hyperplane(features_, responses, std::move(beta));
            h.solver_iterations = iteration;
            h.gradient_norm = gnorm;
            return h;
        }
        if (iteration >= config_.max_solver_iterations) break;

        const Eigen::MatrixXd hess = objective_hessian(residuals, beta, use_secant);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
        const Eigen::VectorXd& lambdas = eig.eigenvalues();
        const double hi = lambdas.maxCoeff();
        const double lo = lambdas.minCoeff();

        Eigen::VectorXd direction;
        double step = 1.0;
        if (hi > 0.0 && lo > hi / kMaxCondition) {
            direction = -(eig.eigenvectors() *
                          ((eig.eigenvectors().transpose() * g).array() / lambdas.array()).matrix());
        } else {
            // Ill-conditioned curvature: steepest descent scaled by the largest eigenvalue.
            direction = -g;
            step = hi > 0.0 ? 1.0 / hi : 1.0;
        }

        const double predicted = g.dot(direction);
        const double noise = loss_noise(responses, residuals, beta, value);
        bool accepted = false;
        for (int k = 0; k < kMaxBacktracks; ++k, step *= 0.5) {
            Eigen::VectorXd candidate = beta + step * direction;
            Eigen::VectorXd cand_residuals = responses - features_ * candidate;
            const double cand_value = objective(cand_residuals, candidate);
            bool take = cand_value <= value + kArmijo * step * predicted;
            Eigen::VectorXd cand_g;
            if (!take && cand_value <= value + noise) {
                // The loss cannot resolve the decrease; fall back to the gradient norm.
                cand_g = objective_gradient(cand_residuals, candidate);
                take = cand_g.norm() < gnorm;
            }
            if (take) {
                for (Index i = 0; i < residuals.size(); ++i) {
                    use_secant[static_cast<std::size_t>(i)] =
                        std::abs(cand_residuals[i] - residuals[i]) > 0.5 * std::abs(cand_residuals[i]);
                }
                beta = std::move(candidate);
                residuals = std::move(cand_residuals);
                value = cand_value;
                g = cand_g.size() > 0 ? std::move(cand_g) : objective_gradient(residuals, beta);
                gnorm = g.norm();
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }

    throw SolverError("regression solver stopped after " + std::to_string(iteration) +
                          " iterations with gradient norm " + std::to_string(gnorm),
                      std::move(beta), gnorm, iteration);
}

// ---------------------------------------------------------------------------
// Free functions

double loss_value(const Dataset& dataset, const Eigen::VectorXd& reports,
                  const RegressionConfig& config, const Eigen::VectorXd& beta) {
    config.validate();
    check_dimensions(dataset.features, reports, &beta);
    const ResidualPenalty phi = ResidualPenalty::power(config.p);
    double total = 0.0;
    for (Index i = 0; i < dataset.n(); ++i) {
        total += phi.value(reports[i] - dataset.features.row(i).dot(beta));
    }
    if (config.lambda > 0.0) {
        if (config.regularizer == Regularizer::ridge) {
            total += config.lambda * beta.squaredNorm();
        } else if (config.regularizer == Regularizer::smoothed_absolute) {
            for (Index j = 0; j < beta.size(); ++j) {
                total += config.lambda * std::hypot(beta[j], config.smoothing);
            }
        }
    }
    return total;
}

Eigen::VectorXd loss_gradient(const Dataset& dataset, const Eigen::VectorXd& reports,
                              const RegressionConfig& config, const Eigen::VectorXd& beta) {
    return Regressor(dataset.features, config).gradient(reports, beta);
}

Hyperplane fit(const Dataset& dataset, const Eigen::VectorXd& reports,
               const RegressionConfig& config) {
    return Regressor(dataset.features, config).solve(reports);
}

Hyperplane ols_fit(const Dataset& dataset, const Eigen::VectorXd& reports) {
    RegressionConfig ols;
    ols.p = 2.0;
    const Regressor regressor(dataset.features, ols);
    if (!regressor.full_rank()) {
        throw Error(ErrorCode::singular_matrix, "X^T X is singular; OLS is not unique");
    }
    return make_hyperplane(dataset.features, reports, regressor.least_squares(reports));
}

Eigen::MatrixXd hat_matrix(const Eigen::MatrixXd& features) {
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(features);
    if (qr.rank() < features.cols()) {
        throw Error(ErrorCode::singular_matrix, "X^T X is singular; hat matrix undefined");
    }
    // H = Q1 Q1^T with Q1 the thin orthonormal factor spanning col(X).
    const Eigen::MatrixXd q1 =
        qr.householderQ() * Eigen::MatrixXd::Identity(features.rows(), features.cols());
    return q1 * q1.transpose();
}

Eigen::MatrixXd hat_matrix(const Dataset& dataset) { return hat_matrix(dataset.features); }

Hyperplane fit_smoothed_lad(const Eigen::MatrixXd& features, const Eigen::VectorXd& reports,
                            double smoothing) {
    if (!(smoothing > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "smoothing must be > 0");
    }
    RegressionConfig tolerances;
    Eigen::VectorXd beta =
        Regressor(features, ResidualPenalty::smoothed_absolute(1.0), tolerances).least_squares(
            reports);
    Hyperplane result;
    for (double mu = std::max(smoothing, 1e-1);; mu = std::max(mu * 0.1, smoothing)) {
        const Regressor stage(features, ResidualPenalty::smoothed_absolute(mu), tolerances);
        result = stage.solve(reports, beta);
        beta = result.coefficients;
        if (mu == smoothing) break;
    }
    return result;
}

}  // namespace stratreg
