#include "stratreg/game.hpp"

#include "stratreg/error.hpp"
#include "stratreg/facility.hpp"
#include "stratreg/outcome_map.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>
#include <utility>

namespace stratreg {

namespace {

constexpr double kDamping = 0.5;
constexpr double kInteriorChange = 1e-9;
constexpr int kInteriorIterations = 1000;
constexpr double kCycleRadius = 1e-10;
constexpr int kRootIterations = 200;

struct Response {
    double report;
    Hyperplane hyperplane;
};

void check_profile(const GameInstance& game, const Eigen::VectorXd& reports) {
    if (reports.size() != game.m()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "expected " + std::to_string(game.m()) + " reports, got " +
                        std::to_string(reports.size()));
    }
    for (Index k = 0; k < reports.size(); ++k) {
        if (!(reports[k] >= 0.0 && reports[k] <= 1.0)) {
            throw Error(ErrorCode::invalid_argument,
                        "report " + std::to_string(k) + " is outside [0,1]");
        }
    }
}

// Root of the strictly increasing own-outcome map t -> f_k(t) at the peak.
// Illinois-modified regula falsi, with a bisection step whenever the bracket
// fails to halve; for p = 2 the map is affine and the first secant step is exact.
Response solve_best_response(OutcomeMap& map, const Eigen::VectorXd& reports, Index k,
                             double peak, double tol) {
    const Index row = map.row(k);
    Hyperplane low = map.evaluate_with(reports, k, 0.0);
    const double a = low.outcomes[row];
    if (peak <= a) return {0.0, std::move(low)};
    Hyperplane high = map.evaluate_with(reports, k, 1.0);
    const double b = high.outcomes[row];
    if (peak >= b) return {1.0, std::move(high)};

    double t0 = 0.0, g0 = a - peak;
    double t1 = 1.0, g1 = b - peak;
    int side = 0;
    double best_t = std::abs(g0) < std::abs(g1) ? t0 : t1;
    double best_g = std::min(std::abs(g0), std::abs(g1));
    Hyperplane best = std::abs(g0) < std::abs(g1) ? std::move(low) : std::move(high);
    double width = t1 - t0;

    for (int it = 0; it < kRootIterations; ++it) {
        double t = t0 - g0 * (t1 - t0) / (g1 - g0);
        if (!(t > t0 && t < t1) || (it % 3 == 2 && t1 - t0 > 0.5 * width)) {
            t = 0.5 * (t0 + t1);
            width = t1 - t0;
        }
        Hyperplane h = map.evaluate_with(reports, k, t);
        const double g = h.outcomes[row] - peak;
        if (std::abs(g) < best_g) {
            best_g = std::abs(g);
            best_t = t;
            best = std::move(h);
        }
        if (best_g <= tol || t1 - t0 <= 4.0 * std::numeric_limits<double>::epsilon()) break;
        if (g < 0.0) {
            t0 = t;
            g0 = g;
            if (side == -1) g1 *= 0.5;
            side = -1;
        } else {
            t1 = t;
            g1 = g;
            if (side == 1) g0 *= 0.5;
            side = 1;
        }
    }
    return {best_t, std::move(best)};
}

Eigen::VectorXd strategic_outcomes(const GameInstance& game, const Hyperplane& h) {
    Eigen::VectorXd out(game.m());
    for (Index k = 0; k < game.m(); ++k) {
        out[k] = h.outcomes[game.dataset.strategic_set[static_cast<std::size_t>(k)]];
    }
    return out;
}

Eigen::VectorXd violations(const GameInstance& game, const Eigen::VectorXd& reports,
                           const Hyperplane& h) {
    Eigen::VectorXd v(game.m());
    for (Index k = 0; k < game.m(); ++k) {
        v[k] = agent_violation(game.peaks[k], reports[k],
                               h.outcomes[game.dataset.strategic_set[static_cast<std::size_t>(k)]]);
    }
    return v;
}

double max_or_zero(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.maxCoeff(); }

}  // namespace

void GameInstance::validate() const {
    dataset.validate();
    config.validate();
    if (peaks.size() != dataset.m()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "expected " + std::to_string(dataset.m()) + " peaks, got " +
                        std::to_string(peaks.size()));
    }
    for (Index k = 0; k < peaks.size(); ++k) {
        if (!(peaks[k] >= 0.0 && peaks[k] <= 1.0)) {
            throw Error(ErrorCode::invalid_argument,
                        "peak " + std::to_string(k) + " is outside [0,1]");
        }
    }
}

GameInstance make_game(Dataset dataset, RegressionConfig config) {
    Eigen::VectorXd peaks(dataset.m());
    for (Index k = 0; k < dataset.m(); ++k) {
        peaks[k] = dataset.true_responses[dataset.strategic_set[static_cast<std::size_t>(k)]];
    }
    return make_game(std::move(dataset), config, std::move(peaks));
}

GameInstance make_game(Dataset dataset, RegressionConfig config, Eigen::VectorXd peaks) {
    GameInstance game{std::move(dataset), config, std::move(peaks)};
    game.validate();
    return game;
}

Eigen::VectorXd true_values(const GameInstance& game) {
    return merge_reports(game.dataset, game.peaks);
}

ReportProfile honest_profile(const GameInstance& game) { return {game.peaks}; }

const char* to_string(EquilibriumMethod method) {
    switch (method) {
    case EquilibriumMethod::dynamics: return "dynamics";
    case EquilibriumMethod::enumeration: return "enumeration";
    case EquilibriumMethod::closed_form: return "closed-form";
    }
    return "dynamics";
}

const char* to_string(Schedule schedule) {
    switch (schedule) {
    case Schedule::round_robin: return "round-robin";
    case Schedule::largest_violation_first: return "largest-violation-first";
    }
    return "round-robin";
}

double agent_violation(double peak, double report, double outcome) {
    if (outcome < peak) return std::max(0.0, std::min(peak - outcome, 1.0 - report));
    if (outcome > peak) return std::max(0.0, std::min(outcome - peak, report));
    return 0.0;
}

PneCheck pne_conditions(const Eigen::VectorXd& peaks, const Eigen::VectorXd& reports,
                        const Eigen::VectorXd& outcomes, double tolerance) {
    if (reports.size() != peaks.size() || outcomes.size() != peaks.size()) {
        throw Error(ErrorCode::dimension_mismatch, "peaks, reports and outcomes differ in length");
    }
    PneCheck check;
    for (Index k = 0; k < peaks.size(); ++k) {
        check.violation =
            std::max(check.violation, agent_violation(peaks[k], reports[k], outcomes[k]));
    }
    check.is_pne = check.violation <= tolerance;
    return check;
}

Hyperplane outcome(const GameInstance& game, const ReportProfile& reports) {
    check_profile(game, reports.reports);
    return fit(game.dataset, merge_reports(game.dataset, reports.reports), game.config);
}

double best_response(const GameInstance& game, const ReportProfile& reports, Index agent,
                     double br_tolerance) {
    check_profile(game, reports.reports);
    if (agent < 0 || agent >= game.m()) {
        throw Error(ErrorCode::invalid_argument,
                    "agent " + std::to_string(agent) + " is not in the strategic set");
    }
    OutcomeMap map(game.dataset, game.config);
    return solve_best_response(map, reports.reports, agent, game.peaks[agent], br_tolerance)
        .report;
}

PneCheck is_pne(const GameInstance& game, const ReportProfile& reports, double pne_tolerance) {
    const Hyperplane h = outcome(game, reports);
    return pne_conditions(game.peaks, reports.reports, strategic_outcomes(game, h),
                          pne_tolerance);
}

EquilibriumResult best_response_dynamics(const GameInstance& game, const ReportProfile& initial,
                                         const DynamicsOptions& options) {
    return best_response_dynamics(game, initial, options, nullptr);
}

EquilibriumResult best_response_dynamics(const GameInstance& game, const ReportProfile& initial,
                                         const DynamicsOptions& options,
                                         const DynamicsObserver& observer) {
    check_profile(game, initial.reports);
    const Index m = game.m();
    OutcomeMap map(game.dataset, game.config);

    EquilibriumResult result;
    result.method = EquilibriumMethod::dynamics;
    Eigen::VectorXd reports = initial.reports;
    Hyperplane h = map.evaluate(reports);
    Eigen::VectorXd viol = violations(game, reports, h);

    const std::size_t window = static_cast<std::size_t>(std::max<Index>(m, 1));
    std::deque<double> recent_changes;
    std::deque<Eigen::VectorXd> history{reports};
    const std::size_t history_size = 4 * window + 4;
    Index cursor = 0;
    bool cycled = false;

    while (max_or_zero(viol) > options.pne_tolerance &&
           result.iterations < options.max_iterations) {
        Index k = 0;
        if (options.schedule == Schedule::largest_violation_first) {
            viol.maxCoeff(&k);
        } else {
            for (Index step = 0; step < m; ++step) {
                const Index candidate = (cursor + step) % m;
                if (viol[candidate] > options.pne_tolerance) {
                    k = candidate;
                    break;
                }
            }
            cursor = (k + 1) % m;
        }

        Response br = solve_best_response(map, reports, k, game.peaks[k], options.br_tolerance);
        recent_changes.push_back(std::abs(br.report - reports[k]));
        if (recent_changes.size() > window) recent_changes.pop_front();
        reports[k] = br.report;
        h = std::move(br.hyperplane);
        viol = violations(game, reports, h);
        ++result.iterations;
        if (observer) observer(result.iterations, reports);

        for (const Eigen::VectorXd& past : history) {
            if ((past - reports).lpNorm<Eigen::Infinity>() <= kCycleRadius) {
                cycled = true;
                break;
            }
        }
        if (cycled) break;
        history.push_back(reports);
        if (history.size() > history_size) history.pop_front();
    }

    result.pne_violation = max_or_zero(viol);
    result.converged = !cycled && result.pne_violation <= options.pne_tolerance;
    result.max_report_change =
        recent_changes.empty() ? 0.0
                               : *std::max_element(recent_changes.begin(), recent_changes.end());
    result.reports = {std::move(reports)};
    result.hyperplane = std::move(h);
    return result;
}

std::vector<EquilibriumResult> find_pne_enumeration(const GameInstance& game,
                                                    double pne_tolerance,
                                                    EnumerationDiagnostics* diagnostics) {
    game.validate();
    const Index m = game.m();
    if (m > kMaxEnumerationAgents) {
        throw Error(ErrorCode::invalid_argument,
                    "enumeration is limited to " + std::to_string(kMaxEnumerationAgents) +
                        " strategic agents, got " + std::to_string(m));
    }
    EnumerationDiagnostics local;
    EnumerationDiagnostics& diag = diagnostics != nullptr ? *diagnostics : local;

    Index patterns = 1;
    for (Index k = 0; k < m; ++k) patterns *= 3;

    OutcomeMap map(game.dataset, game.config);
    std::vector<EquilibriumResult> accepted;
    std::vector<Index> interior;
    Eigen::VectorXd reports(m);
    Eigen::VectorXd next(m);

    for (Index code = 0; code < patterns; ++code) {
        ++diag.patterns;
        interior.clear();
        Index rest = code;
        for (Index k = 0; k < m; ++k, rest /= 3) {
            switch (rest % 3) {
            case 0: reports[k] = 0.0; break;
            case 1:
                reports[k] = game.peaks[k];
                interior.push_back(k);
                break;
            default: reports[k] = 1.0; break;
            }
        }

        int sweeps = 0;
        bool settled = interior.empty();
        try {
            while (!settled && sweeps < kInteriorIterations) {
                ++sweeps;
                next = reports;
                const Hyperplane current = map.evaluate(reports);
                for (const Index k : interior) {
                    if (std::abs(current.outcomes[map.row(k)] - game.peaks[k]) <=
                        kDefaultBestResponseTolerance)
                        continue;
                    const double br =
                        solve_best_response(map, reports, k, game.peaks[k],
                                            kDefaultBestResponseTolerance)
                            .report;
                    next[k] = (1.0 - kDamping) * reports[k] + kDamping * br;
                }
                const double change = (next - reports).lpNorm<Eigen::Infinity>();
                reports = next;
                settled = change < kInteriorChange;
            }
        } catch (const Error& e) {
            ++diag.skipped;
            diag.messages.push_back("pattern " + std::to_string(code) + ": " + e.what());
            continue;
        }
        if (!settled) {
            ++diag.skipped;
            diag.messages.push_back("pattern " + std::to_string(code) +
                                    ": interior reports did not settle");
            continue;
        }

        Hyperplane h = map.evaluate(reports);
        const PneCheck check =
            pne_conditions(game.peaks, reports, strategic_outcomes(game, h), pne_tolerance);
        if (!check.is_pne) {
            ++diag.rejected;
            continue;
        }
        EquilibriumResult r;
        r.reports = {reports};
        r.hyperplane = std::move(h);
        r.method = EquilibriumMethod::enumeration;
        r.iterations = sweeps;
        r.converged = true;
        r.pne_violation = check.violation;
        accepted.push_back(std::move(r));
    }
    return accepted;
}

EquilibriumResult strategyproof_equilibrium(const GameInstance& game) {
    game.validate();
    const Dataset& data = game.dataset;

    if (data.d() == 1 && data.m() == data.n() && game.config.unregularized()) {
        FacilityInstance facility{game.peaks, data.strategic_set, game.config.p};
        EquilibriumResult r;
        r.method = EquilibriumMethod::closed_form;
        r.reports = {pne_reports_1d(facility)};
        Eigen::VectorXd beta(1);
        beta[0] = pne_outcome_1d(facility);
        r.hyperplane =
            make_hyperplane(data.features, merge_reports(data, r.reports.reports), beta);
        r.converged = true;
        r.pne_violation = max_or_zero(violations(game, r.reports.reports, r.hyperplane));
        return r;
    }

    std::string failures;
    if (game.m() <= kMaxEnumerationAgents) {
        EnumerationDiagnostics diag;
        std::vector<EquilibriumResult> found = find_pne_enumeration(game, kDefaultPneTolerance, &diag);
        if (!found.empty()) {
            auto best = std::min_element(found.begin(), found.end(),
                                         [](const EquilibriumResult& x, const EquilibriumResult& y) {
                                             return x.pne_violation < y.pne_violation;
                                         });
            return std::move(*best);
        }
        failures = "enumeration accepted none of " + std::to_string(diag.patterns) + " patterns; ";
    }

    EquilibriumResult r = best_response_dynamics(game, honest_profile(game));
    if (r.converged) return r;
    throw Error(ErrorCode::no_equilibrium,
                failures + "dynamics stopped after " + std::to_string(r.iterations) +
                    " updates with violation " + std::to_string(r.pne_violation));
}

Hyperplane strategyproof_outcome(const GameInstance& game) {
    return strategyproof_equilibrium(game).hyperplane;
}

}  // namespace stratreg
