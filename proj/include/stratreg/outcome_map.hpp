#pragma once

#include "stratreg/dataset.hpp"
#include "stratreg/regression.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace stratreg {

/// The map f from strategic reports to regression outcomes for one game.
///
/// Holds a Regressor for the game's design and warm-starts every fit from the
/// previous coefficients, which makes the long chains of nearby fits in
/// best-response searches cheap. Not thread-safe: use one instance per thread.
class OutcomeMap {
public:
    OutcomeMap(const Dataset& dataset, const RegressionConfig& config);

    Index m() const { return static_cast<Index>(strategic_.size()); }
    /// Dataset row of the k-th strategic agent.
    Index row(Index k) const { return strategic_[static_cast<std::size_t>(k)]; }
    const Regressor& regressor() const { return regressor_; }

    Hyperplane evaluate(const Eigen::VectorXd& reports);
    /// evaluate() with the k-th strategic report replaced by `value`.
    Hyperplane evaluate_with(const Eigen::VectorXd& reports, Index k, double value);

    int fits() const { return fits_; }

private:
    Hyperplane solve_merged();

    Regressor regressor_;
    Eigen::VectorXd base_;
    std::vector<Index> strategic_;
    Eigen::VectorXd merged_;
    std::optional<Eigen::VectorXd> warm_;
    int fits_ = 0;
};

}  // namespace stratreg
