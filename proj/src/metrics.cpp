#include "stratreg/error.hpp"
#include "stratreg/experiments.hpp"

#include <cmath>
#include <limits>

namespace stratreg {

namespace {

constexpr double kLadSmoothing = 1e-7;
constexpr double kZeroResidual = 1e-10;

double residual_power_sum(const Eigen::VectorXd& y, const Eigen::VectorXd& outcomes, double q) {
    double total = 0.0;
    for (Index i = 0; i < y.size(); ++i) total += std::pow(std::abs(y[i] - outcomes[i]), q);
    return total;
}

}  // namespace

Hyperplane honest_q_fit(const Dataset& dataset, double q) {
    if (!(q >= 1.0) || !std::isfinite(q)) {
        throw Error(ErrorCode::invalid_argument, "q must be a finite real >= 1");
    }
    if (q == 1.0) return fit_smoothed_lad(dataset.features, dataset.true_responses, kLadSmoothing);
    RegressionConfig config;
    if (q == 2.0) {
        try {
            return ols_fit(dataset, dataset.true_responses);
        } catch (const Error& e) {
            // rank-deficient design: outcomes are still the unique projection
            if (e.code() != ErrorCode::singular_matrix) throw;
        }
    }
    config.p = q;
    return fit(dataset, dataset.true_responses, config);
}

PpoaValue ppoa_q(const Dataset& dataset, const Hyperplane& equilibrium, double q) {
    if (equilibrium.outcomes.size() != dataset.n()) {
        throw Error(ErrorCode::dimension_mismatch, "equilibrium outcomes do not match the dataset");
    }
    const Eigen::VectorXd& y = dataset.true_responses;
    const double numerator = residual_power_sum(y, equilibrium.outcomes, q);
    const double denominator = residual_power_sum(y, honest_q_fit(dataset, q).outcomes, q);

    // Residuals below kZeroResidual per point count as an exact fit.
    const double zero = static_cast<double>(dataset.n()) * std::pow(kZeroResidual, q);
    if (denominator <= zero) {
        if (numerator <= zero) return {1.0, false};
        return {std::numeric_limits<double>::infinity(), true};
    }
    return {numerator / denominator, false};
}

UnboundedInstance unbounded_instance(double epsilon, double p) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "epsilon must lie in (0,1)");
    }
    Eigen::MatrixXd raw(4, 1);
    raw << 0.0, (1.0 - epsilon) / 2.0, (1.0 + epsilon) / 2.0, 1.0;
    const Eigen::MatrixXd features = with_intercept(raw);
    Eigen::VectorXd reports(4);
    reports << 0.0, 1.0, 0.0, 1.0;

    RegressionConfig config;
    config.p = p;
    const Hyperplane h = Regressor(features, config).solve(reports);

    Eigen::VectorXd truth = reports;
    truth[1] = h.outcomes[1];
    truth[2] = h.outcomes[2];
    GameInstance game = make_game(make_dataset(features, truth, {1, 2}), config);

    Eigen::VectorXd equilibrium(2);
    equilibrium << 1.0, 0.0;
    return {std::move(game), {std::move(equilibrium)}};
}

}  // namespace stratreg
