#include "stratreg/facility.hpp"

#include "stratreg/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace stratreg {

namespace {

constexpr double kMinExponentGap = 1e-6;

void check_p(double p) {
    if (!(p >= 1.0 + kMinExponentGap) || !std::isfinite(p)) {
        throw Error(ErrorCode::invalid_argument,
                    "p must be finite and at least 1 + 1e-6, got " + std::to_string(p));
    }
}

}  // namespace

void FacilityInstance::validate() const {
    check_p(p);
    if (peaks.size() < 1) throw Error(ErrorCode::invalid_argument, "no agents");
    for (Index i = 0; i < peaks.size(); ++i) {
        if (!(peaks[i] >= 0.0 && peaks[i] <= 1.0)) {
            throw Error(ErrorCode::invalid_argument,
                        "peak " + std::to_string(i) + " is outside [0,1]");
        }
    }
    for (std::size_t j = 0; j < strategic_set.size(); ++j) {
        if (strategic_set[j] < 0 || strategic_set[j] >= n() ||
            (j > 0 && strategic_set[j] <= strategic_set[j - 1])) {
            throw Error(ErrorCode::invalid_argument,
                        "strategic set must be strictly increasing indices below n");
        }
    }
}

FacilityInstance make_facility(Eigen::VectorXd peaks, double p) {
    FacilityInstance f;
    f.strategic_set.resize(static_cast<std::size_t>(peaks.size()));
    for (Index i = 0; i < peaks.size(); ++i) f.strategic_set[static_cast<std::size_t>(i)] = i;
    f.peaks = std::move(peaks);
    f.p = p;
    f.validate();
    return f;
}

Eigen::VectorXd phantoms(Index n, double p) {
    check_p(p);
    if (n < 1) throw Error(ErrorCode::invalid_argument, "n must be positive");
    const double e = 1.0 / (p - 1.0);
    Eigen::VectorXd alpha(n + 1);
    alpha[0] = 0.0;
    alpha[n] = 1.0;
    // k^e / ((n-k)^e + k^e) written as 1 / (1 + ((n-k)/k)^e), which saturates instead of overflowing
    for (Index k = 1; k < n; ++k) {
        const double ratio = static_cast<double>(n - k) / static_cast<double>(k);
        alpha[k] = 1.0 / (1.0 + std::pow(ratio, e));
    }
    return alpha;
}

double generalized_median(const Eigen::VectorXd& values, const Eigen::VectorXd& phantoms) {
    const Index total = values.size() + phantoms.size();
    if (total % 2 == 0) {
        throw Error(ErrorCode::invalid_argument, "generalized median needs an odd number of entries");
    }
    std::vector<double> pool(values.data(), values.data() + values.size());
    pool.insert(pool.end(), phantoms.data(), phantoms.data() + phantoms.size());
    auto mid = pool.begin() + total / 2;
    std::nth_element(pool.begin(), mid, pool.end());
    return *mid;
}

double pne_outcome_1d(const FacilityInstance& instance, Regularizer regularizer) {
    instance.validate();
    if (static_cast<Index>(instance.strategic_set.size()) != instance.n()) {
        throw Error(ErrorCode::closed_form_unavailable,
                    "closed form needs every agent strategic");
    }
    if (regularizer != Regularizer::none) {
        throw Error(ErrorCode::closed_form_unavailable, "closed form needs an unregularized fit");
    }
    return generalized_median(instance.peaks, phantoms(instance.n(), instance.p));
}

Eigen::VectorXd pne_reports_1d(const FacilityInstance& instance) {
    const double c = pne_outcome_1d(instance);
    const double q = instance.p - 1.0;
    Eigen::VectorXd reports(instance.n());
    Index below = 0, above = 0, on = 0;
    for (Index i = 0; i < instance.n(); ++i) {
        if (instance.peaks[i] < c) {
            reports[i] = 0.0;
            ++below;
        } else if (instance.peaks[i] > c) {
            reports[i] = 1.0;
            ++above;
        } else {
            ++on;
        }
    }
    if (on == 0) return reports;
    // First-order condition of the 1D fit: sum_i sign(r_i - c) |r_i - c|^(p-1) = 0.
    const double pull = static_cast<double>(below) * std::pow(c, q) -
                        static_cast<double>(above) * std::pow(1.0 - c, q);
    const double shift = std::pow(std::abs(pull) / static_cast<double>(on), 1.0 / q);
    const double shared = std::clamp(pull >= 0.0 ? c + shift : c - shift, 0.0, 1.0);
    for (Index i = 0; i < instance.n(); ++i) {
        if (instance.peaks[i] == c) reports[i] = shared;
    }
    return reports;
}

ThetaInstance theta_n_instance(Index n, double p) {
    if (n < 2) throw Error(ErrorCode::invalid_argument, "theta_n instance needs n >= 2");
    const Eigen::VectorXd alpha = phantoms(n, p);
    Eigen::VectorXd peaks = Eigen::VectorXd::Ones(n);
    peaks[0] = alpha[n - 1];
    return {make_facility(std::move(peaks), p), static_cast<double>(n)};
}

GameInstance to_game(const FacilityInstance& instance) {
    instance.validate();
    Dataset data = make_dataset(Eigen::MatrixXd::Ones(instance.n(), 1), instance.peaks,
                                instance.strategic_set);
    RegressionConfig config;
    config.p = instance.p;
    return make_game(std::move(data), config);
}

}  // namespace stratreg
