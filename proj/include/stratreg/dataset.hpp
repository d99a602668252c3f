#pragma once

#include <Eigen/Core>

#include <vector>

namespace stratreg {

using Index = Eigen::Index;

/// Training data held by the agents.
///
/// Row i of `features` is the public explanatory vector x_i; its last entry is
/// the constant 1. `true_responses` holds the private y_i in [0,1].
/// `strategic_set` lists (0-based, strictly increasing) the agents who may
/// misreport; everyone else always reports honestly.
struct Dataset {
    Eigen::MatrixXd features;
    Eigen::VectorXd true_responses;
    std::vector<Index> strategic_set;

    Index n() const { return features.rows(); }
    Index d() const { return features.cols(); }
    Index m() const { return static_cast<Index>(strategic_set.size()); }

    std::vector<Index> honest_set() const;

    /// Throws Error(invalid_argument / dimension_mismatch) on any broken invariant.
    void validate() const;
};

/// Builds and validates a dataset; the strategic set is sorted and deduplicated.
Dataset make_dataset(Eigen::MatrixXd features, Eigen::VectorXd true_responses,
                     std::vector<Index> strategic_set);

/// Same as make_dataset with every agent strategic.
Dataset make_all_strategic(Eigen::MatrixXd features, Eigen::VectorXd true_responses);

/// Appends the constant-1 column to raw explanatory variables.
Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& raw);

/// Full n-vector of submitted responses: strategic agents' reports spliced into
/// the honest agents' true responses.
Eigen::VectorXd merge_reports(const Dataset& dataset, const Eigen::VectorXd& strategic_reports);

}  // namespace stratreg
