#pragma once

#include "stratreg/dataset.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace stratreg {

/// Game in which outcomes are a fixed linear function of the reports.
class LinearMapGame {
public:
    /// Throws Error(invalid_argument) unless `map` is square with a positive diagonal
    /// and `peaks` lie in [0,1].
    LinearMapGame(Eigen::MatrixXd map, Eigen::VectorXd peaks);

    const Eigen::MatrixXd& map() const { return map_; }
    const Eigen::VectorXd& peaks() const { return peaks_; }
    Index m() const { return peaks_.size(); }

private:
    Eigen::MatrixXd map_;
    Eigen::VectorXd peaks_;
};

Eigen::VectorXd linear_outcome(const LinearMapGame& game, const Eigen::VectorXd& reports);

/// clip((peak_k - sum_{j != k} H_kj r_j) / H_kk, 0, 1)
double linear_best_response(const LinearMapGame& game, const Eigen::VectorXd& reports, Index agent);

struct LinearEquilibrium {
    Eigen::VectorXd reports;
    Eigen::VectorXd outcomes;
    double violation = 0.0;
};

struct LinearSearchDiagnostics {
    Index seeds = 0;
    Index unconverged = 0;
    Index rejected = 0;
};

inline constexpr Index kMaxLinearSearchAgents = 3;

/// Runs best-response iteration from every point of a grid over [0,1]^m and
/// returns the distinct fixed points that pass the PNE check.
std::vector<LinearEquilibrium> find_all_pne_linear(const LinearMapGame& game,
                                                   double grid_resolution = 0.05,
                                                   LinearSearchDiagnostics* diagnostics = nullptr);

}  // namespace stratreg
