#include "stratreg/error.hpp"
#include "stratreg/experiments.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace stratreg {

namespace {

constexpr int kMaxAttempts = 10;

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
    return mix(mix(seed) ^ mix(trial + 0x632be59bd9b4e019ULL));
}

Eigen::VectorXd min_max_normalize(const Eigen::VectorXd& values) {
    if (values.size() == 0) throw Error(ErrorCode::invalid_argument, "nothing to normalize");
    const double lo = values.minCoeff();
    const double hi = values.maxCoeff();
    if (!(hi > lo)) {
        throw Error(ErrorCode::invalid_argument, "cannot normalize a constant vector");
    }
    Eigen::VectorXd out = (values.array() - lo) / (hi - lo);
    // pin the extremes exactly; rounding may leave them a few ulps outside [0,1]
    for (Index i = 0; i < out.size(); ++i) {
        if (values[i] == lo) out[i] = 0.0;
        else if (values[i] == hi) out[i] = 1.0;
        else out[i] = std::min(1.0, std::max(0.0, out[i]));
    }
    return out;
}

Dataset generate_synthetic(Index n, Index d, double noise_sd, std::uint64_t seed) {
    if (n < 1 || d < 1) throw Error(ErrorCode::invalid_argument, "need n >= 1 and d >= 1");
    if (!(noise_sd >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise_sd must be >= 0");

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        std::mt19937_64 rng(attempt == 0 ? seed : mix(seed + static_cast<std::uint64_t>(attempt)));
        std::uniform_real_distribution<double> uniform(-1.0, 1.0);
        std::normal_distribution<double> normal(0.0, 1.0);

        Eigen::VectorXd beta(d + 1);
        for (Index j = 0; j <= d; ++j) beta[j] = uniform(rng);
        Eigen::MatrixXd x(n, d + 1);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < d; ++j) x(i, j) = normal(rng);
            x(i, d) = 1.0;
        }
        Eigen::VectorXd y = x * beta;
        for (Index i = 0; i < n; ++i) y[i] += noise_sd * normal(rng);

        if (!(y.maxCoeff() > y.minCoeff())) continue;
        return make_dataset(std::move(x), min_max_normalize(y), {});
    }
    throw Error(ErrorCode::invalid_argument,
                "synthetic responses stayed constant after " + std::to_string(kMaxAttempts) +
                    " attempts");
}

}  // namespace stratreg
