#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../support/instances.hpp"
#include "stratreg/error.hpp"
#include "stratreg/game.hpp"
#include "stratreg/linear_map.hpp"
#include "stratreg/regression.hpp"

#include <algorithm>
#include <vector>

using namespace stratreg;
using testsupport::Rng;

namespace {

Eigen::MatrixXd counterexample_map() {
    Eigen::MatrixXd h(2, 2);
    h << 0.8, -1.0, -1.2, 1.0;
    return h;
}

bool contains(const std::vector<LinearEquilibrium>& all, const Eigen::VectorXd& reports) {
    return std::any_of(all.begin(), all.end(), [&](const LinearEquilibrium& e) {
        return (e.reports - reports).lpNorm<Eigen::Infinity>() <= 1e-6;
    });
}

Eigen::Vector2d vec2(double a, double b) { return Eigen::Vector2d(a, b); }

}  // namespace

TEST_CASE("identity map returns the reports") {
    const LinearMapGame g(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(0.1, 0.2, 0.3));
    const Eigen::Vector3d r(0.7, 0.0, 1.0);
    CHECK(linear_outcome(g, r) == r);
    for (Index k = 0; k < 3; ++k) CHECK(linear_best_response(g, r, k) == g.peaks()[k]);
}

TEST_CASE("counterexample map outcomes") {
    const LinearMapGame g(counterexample_map(), vec2(0.0, 0.0));
    const Eigen::VectorXd out = linear_outcome(g, vec2(1.0, 1.0));
    CHECK(out[0] == doctest::Approx(-0.2).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(-0.2).epsilon(1e-15));
    for (Index k = 0; k < 2; ++k) CHECK(linear_best_response(g, vec2(0.0, 0.0), k) == 0.0);
}

TEST_CASE("average map best response clips like the facility game") {
    const LinearMapGame g(Eigen::MatrixXd::Constant(2, 2, 0.5), vec2(0.4, 0.5));
    CHECK(linear_best_response(g, vec2(0.3, 1.0), 0) == 0.0);
}

TEST_CASE("hat matrix map equals the least-squares fit") {
    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        const Dataset data = testsupport::random_dataset(rng, 7, 3, 7);
        const Eigen::VectorXd y = testsupport::random_unit_vector(rng, 7);
        const LinearMapGame g(hat_matrix(data), data.true_responses);
        CHECK((linear_outcome(g, y) - ols_fit(data, y).outcomes).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
}

TEST_CASE("maps without a positive diagonal are rejected") {
    Eigen::MatrixXd h = counterexample_map();
    h(1, 1) = 0.0;
    CHECK_THROWS_AS(LinearMapGame(h, vec2(0.0, 0.0)), Error);
    CHECK_THROWS_AS(LinearMapGame(Eigen::MatrixXd::Identity(2, 3), vec2(0.0, 0.0)), Error);
    CHECK_THROWS_AS(LinearMapGame(Eigen::MatrixXd::Identity(2, 2), vec2(0.0, 1.5)), Error);
    CHECK_THROWS_AS(LinearMapGame(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector3d::Zero()), Error);
}

TEST_CASE("identity map has the honest profile as its only equilibrium") {
    const LinearMapGame g(Eigen::MatrixXd::Identity(2, 2), vec2(0.3, 0.7));
    const std::vector<LinearEquilibrium> all = find_all_pne_linear(g);
    REQUIRE(all.size() == 1);
    CHECK((all[0].reports - vec2(0.3, 0.7)).norm() <= 1e-12);
}

TEST_CASE("counterexample map has two equilibria with different outcomes") {
    const LinearMapGame g(counterexample_map(), vec2(0.0, 0.0));
    const std::vector<LinearEquilibrium> all = find_all_pne_linear(g);
    CHECK(contains(all, vec2(0.0, 0.0)));
    CHECK(contains(all, vec2(1.0, 1.0)));
    for (const LinearEquilibrium& e : all) CHECK(e.violation <= 1e-9);
}

TEST_CASE("hat matrix games have a single equilibrium outcome") {
    Rng rng(62);
    for (int trial = 0; trial < 20; ++trial) {
        const Index m = rng.integer(2, 3);
        const Dataset data = testsupport::random_dataset(rng, 4, 2, 4);
        // restrict the hat matrix to the first m agents, the rest fixed at zero report
        const Eigen::MatrixXd h = hat_matrix(data).topLeftCorner(m, m);
        const LinearMapGame g(h, data.true_responses.head(m));
        const std::vector<LinearEquilibrium> all = find_all_pne_linear(g);
        REQUIRE_FALSE(all.empty());
        for (const LinearEquilibrium& e : all) {
            CHECK((e.outcomes - all.front().outcomes).lpNorm<Eigen::Infinity>() <= 1e-4);
            CHECK(e.violation <= 1e-9);
        }
    }
}

TEST_CASE("search refuses more than three agents") {
    const LinearMapGame g(Eigen::MatrixXd::Identity(4, 4), Eigen::Vector4d::Constant(0.5));
    CHECK_THROWS_AS(find_all_pne_linear(g), Error);
}
