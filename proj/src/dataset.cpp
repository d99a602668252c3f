#include "stratreg/dataset.hpp"

#include "stratreg/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stratreg {

std::vector<Index> Dataset::honest_set() const {
    std::vector<Index> honest;
    honest.reserve(static_cast<std::size_t>(n() - m()));
    std::size_t s = 0;
    for (Index i = 0; i < n(); ++i) {
        if (s < strategic_set.size() && strategic_set[s] == i) {
            ++s;
            continue;
        }
        honest.push_back(i);
    }
    return honest;
}

void Dataset::validate() const {
    if (n() < 1 || d() < 1) {
        throw Error(ErrorCode::invalid_argument, "dataset needs n >= 1 and d >= 1");
    }
    if (true_responses.size() != n()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "dataset has " + std::to_string(n()) + " rows but " +
                        std::to_string(true_responses.size()) + " responses");
    }
    for (Index i = 0; i < n(); ++i) {
        const double y = true_responses[i];
        if (!(y >= 0.0 && y <= 1.0)) {
            throw Error(ErrorCode::invalid_argument,
                        "true response " + std::to_string(i) + " outside [0,1]");
        }
        if (features(i, d() - 1) != 1.0) {
            throw Error(ErrorCode::invalid_argument,
                        "last feature column must be the constant 1 (row " + std::to_string(i) +
                            ")");
        }
        for (Index j = 0; j < d(); ++j) {
            if (!std::isfinite(features(i, j))) {
                throw Error(ErrorCode::invalid_argument, "non-finite feature value");
            }
        }
    }
    for (std::size_t k = 0; k < strategic_set.size(); ++k) {
        const Index i = strategic_set[k];
        if (i < 0 || i >= n()) {
            throw Error(ErrorCode::invalid_argument,
                        "strategic agent " + std::to_string(i) + " out of range");
        }
        if (k > 0 && strategic_set[k - 1] >= i) {
            throw Error(ErrorCode::invalid_argument, "strategic set must be strictly increasing");
        }
    }
}

Dataset make_dataset(Eigen::MatrixXd features, Eigen::VectorXd true_responses,
                     std::vector<Index> strategic_set) {
    std::sort(strategic_set.begin(), strategic_set.end());
    strategic_set.erase(std::unique(strategic_set.begin(), strategic_set.end()),
                        strategic_set.end());
    Dataset data{std::move(features), std::move(true_responses), std::move(strategic_set)};
    data.validate();
    return data;
}

Dataset make_all_strategic(Eigen::MatrixXd features, Eigen::VectorXd true_responses) {
    std::vector<Index> all(static_cast<std::size_t>(features.rows()));
    for (Index i = 0; i < features.rows(); ++i) all[static_cast<std::size_t>(i)] = i;
    return make_dataset(std::move(features), std::move(true_responses), std::move(all));
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& raw) {
    Eigen::MatrixXd x(raw.rows(), raw.cols() + 1);
    x.leftCols(raw.cols()) = raw;
    x.col(raw.cols()).setOnes();
    return x;
}

Eigen::VectorXd merge_reports(const Dataset& dataset, const Eigen::VectorXd& strategic_reports) {
    if (strategic_reports.size() != dataset.m()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "expected " + std::to_string(dataset.m()) + " strategic reports, got " +
                        std::to_string(strategic_reports.size()));
    }
    Eigen::VectorXd merged = dataset.true_responses;
    for (Index k = 0; k < dataset.m(); ++k) {
        merged[dataset.strategic_set[static_cast<std::size_t>(k)]] = strategic_reports[k];
    }
    return merged;
}

}  // namespace stratreg
