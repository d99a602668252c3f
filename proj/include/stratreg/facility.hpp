#pragma once

#include "stratreg/dataset.hpp"
#include "stratreg/game.hpp"
#include "stratreg/regression.hpp"

#include <Eigen/Core>

#include <vector>

namespace stratreg {

/// One-dimensional facility location: every agent has the feature vector [1],
/// so the regression outcome is a single point shared by everybody.
struct FacilityInstance {
    Eigen::VectorXd peaks;
    std::vector<Index> strategic_set;
    double p = 2.0;

    Index n() const { return peaks.size(); }
    void validate() const;
};

/// Instance with every agent strategic.
FacilityInstance make_facility(Eigen::VectorXd peaks, double p);

/// The n+1 phantom values k^{1/(p-1)} / ((n-k)^{1/(p-1)} + k^{1/(p-1)}), k = 0..n.
Eigen::VectorXd phantoms(Index n, double p);

/// Median of values and phantoms pooled together (their total length must be odd).
double generalized_median(const Eigen::VectorXd& values, const Eigen::VectorXd& phantoms);

/// Unique PNE outcome. Only available with every agent strategic and no
/// regularizer; anything else throws Error(closed_form_unavailable).
double pne_outcome_1d(const FacilityInstance& instance,
                      Regularizer regularizer = Regularizer::none);

/// A report profile realizing the 1D PNE outcome: agents below it report 0,
/// agents above report 1, and agents sitting on it share one interior report.
Eigen::VectorXd pne_reports_1d(const FacilityInstance& instance);

struct ThetaInstance {
    FacilityInstance instance;
    double analytic_ppoa = 0.0;
};

/// One peak at the (n-1)-th phantom, the rest at 1. Its PPoA is exactly n.
ThetaInstance theta_n_instance(Index n, double p);

/// Equivalent regression game on all-ones features.
GameInstance to_game(const FacilityInstance& instance);

}  // namespace stratreg
