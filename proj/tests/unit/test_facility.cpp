#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../support/instances.hpp"
#include "stratreg/error.hpp"
#include "stratreg/experiments.hpp"
#include "stratreg/facility.hpp"
#include "stratreg/game.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace stratreg;
using testsupport::Rng;

namespace {

double sorted_middle(std::vector<double> pool) {
    std::sort(pool.begin(), pool.end());
    return pool[pool.size() / 2];
}

std::vector<double> concat(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    std::vector<double> out(a.data(), a.data() + a.size());
    out.insert(out.end(), b.data(), b.data() + b.size());
    return out;
}

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("phantoms for the quadratic loss are evenly spaced") {
    const Eigen::VectorXd a = phantoms(4, 2.0);
    REQUIRE(a.size() == 5);
    for (Index k = 0; k <= 4; ++k) CHECK(a[k] == doctest::Approx(k / 4.0).epsilon(1e-15));
}

TEST_CASE("phantom endpoints and symmetry") {
    for (double p : {1.1, 1.5, 2.0, 3.0, 10.0}) {
        for (Index n : {1, 2, 7, 100}) {
            const Eigen::VectorXd a = phantoms(n, p);
            CHECK(a[0] == 0.0);
            CHECK(a[n] == 1.0);
        }
    }
    CHECK(phantoms(2, 3.0)[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("phantoms are monotone") {
    for (double p : {1.1, 1.5, 2.0, 3.0, 10.0}) {
        for (Index n = 1; n <= 100; ++n) {
            const Eigen::VectorXd a = phantoms(n, p);
            for (Index k = 0; k < n; ++k) CHECK(a[k] <= a[k + 1]);
        }
    }
}

TEST_CASE("phantoms reject losses too close to absolute value") {
    CHECK(code_of([] { phantoms(3, 1.0 + 1e-7); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { phantoms(0, 2.0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("generalized median examples") {
    Eigen::VectorXd peaks(2), ph(3);
    peaks << 0.4, 0.5;
    ph << 0.0, 0.5, 1.0;
    CHECK(generalized_median(peaks, ph) == 0.5);
    const Eigen::VectorXd same = Eigen::VectorXd::Constant(5, 0.3);
    Eigen::VectorXd ph2(6);
    ph2 << 0.0, 0.1, 0.3, 0.6, 0.9, 1.0;
    CHECK(generalized_median(same, ph2) == 0.3);
    CHECK_THROWS_AS(generalized_median(same, Eigen::VectorXd::Zero(5)), Error);
}

TEST_CASE("generalized median matches the sort oracle") {
    Rng rng(51);
    for (int trial = 0; trial < 500; ++trial) {
        const Index n = rng.integer(1, 30);
        const double p = rng.uniform(1.1, 6.0);
        const Eigen::VectorXd peaks = testsupport::random_unit_vector(rng, n);
        const Eigen::VectorXd ph = phantoms(n, p);
        CHECK(generalized_median(peaks, ph) == sorted_middle(concat(peaks, ph)));
    }
}

TEST_CASE("closed-form outcome examples") {
    Eigen::VectorXd peaks(2);
    peaks << 0.4, 0.5;
    CHECK(pne_outcome_1d(make_facility(peaks, 2.0)) == 0.5);
    for (double p : {1.5, 2.0, 4.0}) {
        CHECK(pne_outcome_1d(make_facility(Eigen::VectorXd::Constant(6, 0.5), p)) == 0.5);
    }
}

TEST_CASE("closed form needs every agent strategic and no regularizer") {
    Eigen::VectorXd peaks(3);
    peaks << 0.1, 0.5, 0.9;
    FacilityInstance partial = make_facility(peaks, 2.0);
    partial.strategic_set = {0, 2};
    CHECK(code_of([&] { pne_outcome_1d(partial); }) == ErrorCode::closed_form_unavailable);
    CHECK(code_of([&] { pne_outcome_1d(make_facility(peaks, 2.0), Regularizer::ridge); }) ==
          ErrorCode::closed_form_unavailable);
}

TEST_CASE("facility validation") {
    Eigen::VectorXd bad(2);
    bad << 0.5, 1.5;
    CHECK(code_of([&] { make_facility(bad, 2.0).validate(); }) == ErrorCode::invalid_argument);
    Eigen::VectorXd ok(2);
    ok << 0.5, 0.5;
    CHECK(code_of([&] { make_facility(ok, 1.0).validate(); }) == ErrorCode::invalid_argument);
}

TEST_CASE("constructed reports realize the closed-form outcome as an equilibrium") {
    Rng rng(52);
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = rng.integer(1, 20);
        const double p = rng.pick(std::vector<double>{1.5, 2.0, 3.0, 5.0});
        const FacilityInstance f = make_facility(testsupport::random_unit_vector(rng, n), p);
        const Eigen::VectorXd r = pne_reports_1d(f);
        const GameInstance g = to_game(f);
        const Hyperplane h = outcome(g, ReportProfile{r});
        CHECK(h.coefficients[0] == doctest::Approx(pne_outcome_1d(f)).epsilon(1e-9));
        CHECK(is_pne(g, ReportProfile{r}).is_pne);
    }
}

TEST_CASE("closed form agrees with best-response dynamics") {
    Rng rng(53);
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = rng.integer(1, 20);
        const double p = rng.pick(std::vector<double>{1.5, 2.0, 3.0});
        const FacilityInstance f = make_facility(testsupport::random_unit_vector(rng, n), p);
        const GameInstance g = to_game(f);
        const EquilibriumResult r = best_response_dynamics(g, honest_profile(g));
        CHECK(r.converged);
        CHECK(std::abs(r.hyperplane.coefficients[0] - pne_outcome_1d(f)) <= 1e-5);
    }
}

TEST_CASE("five-agent cubic loss: closed form equals dynamics") {
    Rng rng(54);
    const FacilityInstance f = make_facility(testsupport::random_unit_vector(rng, 5), 3.0);
    const GameInstance g = to_game(f);
    const EquilibriumResult r = best_response_dynamics(g, honest_profile(g));
    CHECK(std::abs(r.hyperplane.coefficients[0] - pne_outcome_1d(f)) <= 1e-5);
}

TEST_CASE("lower-bound instance peaks") {
    const ThetaInstance t10 = theta_n_instance(10, 2.0);
    CHECK(t10.analytic_ppoa == 10.0);
    const Eigen::VectorXd& y = t10.instance.peaks;
    CHECK(std::count(y.data(), y.data() + y.size(), 1.0) == 9);
    CHECK(y.minCoeff() == doctest::Approx(0.9).epsilon(1e-15));

    const ThetaInstance t2 = theta_n_instance(2, 2.0);
    CHECK(t2.instance.peaks.minCoeff() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t2.instance.peaks.maxCoeff() == 1.0);
    CHECK(t2.analytic_ppoa == 2.0);
    CHECK_THROWS_AS(theta_n_instance(1, 2.0), Error);
}

TEST_CASE("lower-bound instance has price n end to end") {
    for (Index n : {5, 10, 50}) {
        for (double p : {2.0, 3.0}) {
            const ThetaInstance t = theta_n_instance(n, p);
            const GameInstance g = to_game(t.instance);
            const EquilibriumResult r = best_response_dynamics(g, honest_profile(g));
            const PpoaValue v = ppoa_q(g.dataset, r.hyperplane, 2.0);
            CHECK(std::abs(v.value - static_cast<double>(n)) <= 1e-3 * n);
        }
    }
}

TEST_CASE("price on random facility instances stays below twice n") {
    Rng rng(55);
    for (int trial = 0; trial < 500; ++trial) {
        const Index n = rng.integer(2, 30);
        const double p = rng.pick(std::vector<double>{1.5, 2.0, 3.0});
        const FacilityInstance f = make_facility(testsupport::random_unit_vector(rng, n), p);
        const GameInstance g = to_game(f);
        Eigen::VectorXd beta(1);
        beta << pne_outcome_1d(f);
        const Hyperplane h = make_hyperplane(g.dataset.features, g.dataset.true_responses, beta);
        const PpoaValue v = ppoa_q(g.dataset, h, 2.0);
        CHECK_FALSE(v.unbounded);
        CHECK(v.value <= 2.0 * n);
    }
}
