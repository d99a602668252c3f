#include "stratreg/outcome_map.hpp"

#include "stratreg/error.hpp"

#include <string>

namespace stratreg {

OutcomeMap::OutcomeMap(const Dataset& dataset, const RegressionConfig& config)
    : regressor_(dataset.features, config),
      base_(dataset.true_responses),
      strategic_(dataset.strategic_set),
      merged_(dataset.true_responses) {}

Hyperplane OutcomeMap::solve_merged() {
    ++fits_;
    if (warm_) {
        try {
            Hyperplane h = regressor_.solve(merged_, *warm_);
            warm_ = h.coefficients;
            return h;
        } catch (const SolverError&) {
            // retry from the least-squares start below
        }
    }
    Hyperplane h = regressor_.solve(merged_);
    warm_ = h.coefficients;
    return h;
}

Hyperplane OutcomeMap::evaluate(const Eigen::VectorXd& reports) {
    if (reports.size() != m()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "expected " + std::to_string(m()) + " reports, got " +
                        std::to_string(reports.size()));
    }
    for (Index k = 0; k < m(); ++k) merged_[row(k)] = reports[k];
    return solve_merged();
}

Hyperplane OutcomeMap::evaluate_with(const Eigen::VectorXd& reports, Index k, double value) {
    if (reports.size() != m()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "expected " + std::to_string(m()) + " reports, got " +
                        std::to_string(reports.size()));
    }
    for (Index j = 0; j < m(); ++j) merged_[row(j)] = reports[j];
    merged_[row(k)] = value;
    return solve_merged();
}

}  // namespace stratreg
