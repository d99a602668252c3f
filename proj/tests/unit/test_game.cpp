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

// Own outcome of strategic agent k when it reports t, by a cold fit on the merged vector.
double own_outcome(const GameInstance& g, const Eigen::VectorXd& reports, Index k, double t) {
    Eigen::VectorXd r = reports;
    r[k] = t;
    const Index row = g.dataset.strategic_set[static_cast<std::size_t>(k)];
    return fit(g.dataset, merge_reports(g.dataset, r), g.config).outcomes[row];
}

// Best response by scanning a uniform grid of reports.
double grid_best_response(const GameInstance& g, const Eigen::VectorXd& reports, Index k,
                          Index points) {
    double best_t = 0.0, best_gap = INFINITY;
    for (Index i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(points - 1);
        const double gap = std::abs(own_outcome(g, reports, k, t) - g.peaks[k]);
        if (gap < best_gap) {
            best_gap = gap;
            best_t = t;
        }
    }
    return best_t;
}

// The equilibrium conditions as three separate clauses.
bool clause_form(const Eigen::VectorXd& peaks, const Eigen::VectorXd& reports,
                 const Eigen::VectorXd& outcomes, double tau) {
    for (Index k = 0; k < peaks.size(); ++k) {
        if (outcomes[k] < peaks[k] - tau) {
            if (!(reports[k] >= 1.0 - tau)) return false;
        } else if (outcomes[k] > peaks[k] + tau) {
            if (!(reports[k] <= tau)) return false;
        } else if (!(std::abs(outcomes[k] - peaks[k]) <= tau)) {
            return false;
        }
    }
    return true;
}

GameInstance example1() {
    Eigen::VectorXd peaks(2);
    peaks << 0.4, 0.5;
    return to_game(make_facility(peaks, 2.0));
}

GameInstance collinear_game(double p) {
    Eigen::MatrixXd raw(5, 1);
    raw << 0.0, 0.25, 0.5, 0.75, 1.0;
    Eigen::VectorXd y = 0.2 + 0.6 * raw.col(0).array();
    RegressionConfig c;
    c.p = p;
    return make_game(make_dataset(with_intercept(raw), y, {0, 2, 3}), c);
}

}  // namespace

TEST_CASE("outcome with no strategic agents is the honest fit") {
    Rng rng(31);
    const GameInstance g = testsupport::random_game(rng, 8, 3, 0, 1.7);
    const Hyperplane a = outcome(g, ReportProfile{Eigen::VectorXd(0)});
    const Hyperplane b = fit(g.dataset, g.dataset.true_responses, g.config);
    CHECK((a.coefficients - b.coefficients).norm() == 0.0);
}

TEST_CASE("outcome of the two-agent facility equilibrium reports") {
    Eigen::VectorXd r(2);
    r << 0.0, 1.0;
    const Hyperplane h = outcome(example1(), ReportProfile{r});
    CHECK(h.outcomes[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(h.outcomes[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("outcome equals a direct fit on the merged responses") {
    Rng rng(32);
    for (int trial = 0; trial < 10; ++trial) {
        const GameInstance g = testsupport::random_game(rng, 9, 3, 4, 2.5);
        const Eigen::VectorXd r = testsupport::random_reports(rng, 4);
        Eigen::VectorXd merged = g.dataset.true_responses;
        for (Index k = 0; k < 4; ++k) merged[g.dataset.strategic_set[static_cast<std::size_t>(k)]] = r[k];
        CHECK((outcome(g, ReportProfile{r}).outcomes - fit(g.dataset, merged, g.config).outcomes)
                  .norm() <= 1e-12);
    }
}

TEST_CASE("profiles outside [0,1] are rejected") {
    Eigen::VectorXd r(2);
    r << -0.1, 0.5;
    CHECK_THROWS_AS(outcome(example1(), ReportProfile{r}), Error);
    CHECK_THROWS_AS(outcome(example1(), ReportProfile{Eigen::VectorXd::Zero(3)}), Error);
}

TEST_CASE("best response clips to zero in the two-agent average") {
    Eigen::VectorXd r(2);
    r << 0.4, 1.0;
    CHECK(best_response(example1(), ReportProfile{r}, 0) == 0.0);
}

TEST_CASE("best responses at the four-agent equilibrium keep the current reports") {
    for (double eps : {0.5, 0.1, 0.05}) {
        const UnboundedInstance u = unbounded_instance(eps, 2.0);
        for (Index k = 0; k < 2; ++k) {
            CHECK(best_response(u.game, u.equilibrium, k) ==
                  doctest::Approx(u.equilibrium.reports[k]).epsilon(1e-9));
        }
    }
}

TEST_CASE("best response matches a million-point grid scan") {
    Rng rng(33);
    const GameInstance g = testsupport::random_game(rng, 6, 2, 2, 2.0);
    const Eigen::VectorXd r = testsupport::random_reports(rng, 2);
    for (Index k = 0; k < 2; ++k) {
        const double br = best_response(g, ReportProfile{r}, k);
        CHECK(std::abs(br - grid_best_response(g, r, k, 1000001)) <= 2e-6);
    }
}

TEST_CASE("best response meets the outcome tolerance for non-quadratic losses") {
    Rng rng(34);
    for (double p : {1.3, 1.5, 3.0, 5.0}) {
        const GameInstance g = testsupport::random_game(rng, 8, 3, 3, p);
        const Eigen::VectorXd r = testsupport::random_reports(rng, 3);
        for (Index k = 0; k < 3; ++k) {
            const double br = best_response(g, ReportProfile{r}, k);
            const double reached = own_outcome(g, r, k, br);
            if (br > 0.0 && br < 1.0) {
                CHECK(std::abs(reached - g.peaks[k]) <= 1e-9 + 1e-12);
            } else if (br == 0.0) {
                CHECK(reached >= g.peaks[k] - 1e-12);
            } else {
                CHECK(reached <= g.peaks[k] + 1e-12);
            }
        }
    }
}

TEST_CASE("own outcome is strictly increasing in own report") {
    Rng rng(35);
    for (double p : {1.5, 2.0, 3.0}) {
        const GameInstance g = testsupport::random_game(rng, 7, 2, 3, p);
        const Eigen::VectorXd r = testsupport::random_reports(rng, 3);
        for (Index k = 0; k < 3; ++k) {
            double prev = -INFINITY;
            for (int i = 0; i < 50; ++i) {
                const double f = own_outcome(g, r, k, i / 49.0);
                CHECK(f - prev > 1e-12);
                prev = f;
            }
        }
    }
}

TEST_CASE("equilibrium check agrees with the clause form") {
    Rng rng(36);
    for (int trial = 0; trial < 2000; ++trial) {
        const Index m = 1 + trial % 4;
        Eigen::VectorXd peaks(m), reports(m), outcomes(m);
        for (Index k = 0; k < m; ++k) {
            peaks[k] = rng.uniform();
            // put mass on the boundary and on exact happiness
            const double pick = rng.uniform();
            reports[k] = pick < 0.3 ? 0.0 : (pick < 0.6 ? 1.0 : rng.uniform());
            outcomes[k] = rng.uniform() < 0.3 ? peaks[k] + rng.uniform(-2e-6, 2e-6)
                                              : rng.uniform(-0.2, 1.2);
        }
        const double tau = 1e-6;
        CHECK(pne_conditions(peaks, reports, outcomes, tau).is_pne ==
              clause_form(peaks, reports, outcomes, tau));
    }
}

TEST_CASE("honest reports are not an equilibrium of the continuous facility game") {
    const GameInstance g = example1();
    const PneCheck check = is_pne(g, honest_profile(g));
    CHECK_FALSE(check.is_pne);
    CHECK(check.violation == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("dynamics from an equilibrium makes no updates") {
    const UnboundedInstance u = unbounded_instance(0.1, 2.0);
    const EquilibriumResult r = best_response_dynamics(u.game, u.equilibrium);
    CHECK(r.iterations == 0);
    CHECK(r.converged);
    CHECK(r.pne_violation <= kDefaultPneTolerance);
}

TEST_CASE("dynamics on the four-agent instance never reaches the equilibrium reports") {
    const UnboundedInstance u = unbounded_instance(0.1, 2.0);
    DynamicsOptions options;
    options.max_iterations = 10000;
    bool interior = true;
    const EquilibriumResult r =
        best_response_dynamics(u.game, honest_profile(u.game), options,
                               [&](int, const Eigen::VectorXd& reports) {
                                   interior = interior && reports[0] < 1.0 && reports[1] > 0.0;
                               });
    CHECK(interior);
    CHECK(r.reports.reports[0] < 1.0);
    CHECK(r.reports.reports[1] > 0.0);
    CHECK(r.iterations > 0);
}

TEST_CASE("dynamics stops at the iteration limit without throwing") {
    const UnboundedInstance u = unbounded_instance(0.1, 2.0);
    DynamicsOptions options;
    options.max_iterations = 7;
    const EquilibriumResult r = best_response_dynamics(u.game, honest_profile(u.game), options);
    CHECK(r.iterations == 7);
    CHECK_FALSE(r.converged);
    CHECK(r.pne_violation > kDefaultPneTolerance);
    CHECK(r.max_report_change > 0.0);
}

TEST_CASE("dynamics matches the enumeration outcome on random instances") {
    Rng rng(37);
    for (int trial = 0; trial < 3; ++trial) {
        const GameInstance g = testsupport::random_game(rng, 20, 3, 5, 2.0);
        const std::vector<EquilibriumResult> all = find_pne_enumeration(g);
        REQUIRE_FALSE(all.empty());
        for (Schedule s : {Schedule::round_robin, Schedule::largest_violation_first}) {
            DynamicsOptions options;
            options.schedule = s;
            const EquilibriumResult r = best_response_dynamics(g, honest_profile(g), options);
            CHECK(r.converged);
            CHECK((r.hyperplane.outcomes - all.front().hyperplane.outcomes).lpNorm<Eigen::Infinity>() <=
                  1e-4);
        }
    }
}

TEST_CASE("enumeration on collinear data leaves every agent at its peak") {
    for (double p : {1.5, 2.0, 3.0}) {
        const GameInstance g = collinear_game(p);
        const std::vector<EquilibriumResult> all = find_pne_enumeration(g);
        REQUIRE_FALSE(all.empty());
        for (const EquilibriumResult& r : all) {
            CHECK(r.pne_violation <= 1e-8);
            for (Index k = 0; k < g.m(); ++k) {
                CHECK(r.hyperplane.outcomes[g.dataset.strategic_set[static_cast<std::size_t>(k)]] ==
                      doctest::Approx(g.peaks[k]).epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("enumeration finds the four-agent equilibrium profile") {
    for (double eps : {0.5, 0.1}) {
        const UnboundedInstance u = unbounded_instance(eps, 2.0);
        const std::vector<EquilibriumResult> all = find_pne_enumeration(u.game);
        const bool found = std::any_of(all.begin(), all.end(), [&](const EquilibriumResult& r) {
            return (r.reports.reports - u.equilibrium.reports).norm() <= 1e-9;
        });
        CHECK(found);
    }
}

TEST_CASE("enumeration: every instance has an equilibrium and a single outcome") {
    Rng rng(38);
    for (int trial = 0; trial < 30; ++trial) {
        const Index n = rng.integer(3, 6);
        const Index m = rng.integer(1, std::min<Index>(3, n));
        const double p = rng.pick(std::vector<double>{1.5, 2.0, 3.0});
        const GameInstance g = testsupport::random_game(rng, n, 2, m, p);
        const std::vector<EquilibriumResult> all = find_pne_enumeration(g);
        REQUIRE_FALSE(all.empty());
        for (const EquilibriumResult& r : all) {
            CHECK((r.hyperplane.coefficients - all.front().hyperplane.coefficients)
                      .lpNorm<Eigen::Infinity>() <= 1e-4);
        }
    }
}

TEST_CASE("enumeration refuses more than twelve strategic agents") {
    Rng rng(39);
    const GameInstance g = testsupport::random_game(rng, 14, 2, 13, 2.0);
    CHECK_THROWS_AS(find_pne_enumeration(g), Error);
}

TEST_CASE("strategyproof outcome on facility data is the generalized median") {
    Rng rng(40);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = rng.integer(1, 9);
        const double p = rng.pick(std::vector<double>{1.5, 2.0, 3.0});
        const Eigen::VectorXd peaks = testsupport::random_unit_vector(rng, n);
        // sort-based median over peaks and the phantoms written out directly
        std::vector<double> pool(peaks.data(), peaks.data() + n);
        for (Index k = 0; k <= n; ++k) {
            const double a = std::pow(static_cast<double>(k), 1.0 / (p - 1.0));
            const double b = std::pow(static_cast<double>(n - k), 1.0 / (p - 1.0));
            pool.push_back(a / (a + b));
        }
        std::sort(pool.begin(), pool.end());
        const EquilibriumResult r = strategyproof_equilibrium(to_game(make_facility(peaks, p)));
        CHECK(r.method == EquilibriumMethod::closed_form);
        CHECK(r.hyperplane.coefficients[0] == doctest::Approx(pool[static_cast<std::size_t>(n)]).epsilon(1e-12));
        CHECK(r.pne_violation <= 1e-9);
    }
}

TEST_CASE("strategyproof outcome on collinear peaks interpolates them") {
    const GameInstance g = collinear_game(2.0);
    const Hyperplane h = strategyproof_outcome(g);
    CHECK(h.coefficients[0] == doctest::Approx(0.6).epsilon(1e-8));
    CHECK(h.coefficients[1] == doctest::Approx(0.2).epsilon(1e-8));
}

TEST_CASE("misreporting a peak never helps under the strategyproof outcome") {
    Rng rng(41);
    for (int trial = 0; trial < 4; ++trial) {
        const GameInstance g = testsupport::random_game(rng, 5, 2, 2, rng.pick(std::vector<double>{1.5, 2.0, 3.0}));
        const Hyperplane truthful = strategyproof_outcome(g);
        for (Index k = 0; k < g.m(); ++k) {
            const Index row = g.dataset.strategic_set[static_cast<std::size_t>(k)];
            const double honest_gap = std::abs(truthful.outcomes[row] - g.peaks[k]);
            for (int s = 0; s < 5; ++s) {
                Eigen::VectorXd declared = g.peaks;
                declared[k] = rng.uniform();
                const Hyperplane h = strategyproof_outcome(make_game(g.dataset, g.config, declared));
                CHECK(std::abs(h.outcomes[row] - g.peaks[k]) >= honest_gap - 1e-6);
            }
        }
    }
}
