#include "stratreg/linear_map.hpp"

#include "stratreg/error.hpp"
#include "stratreg/game.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace stratreg {

namespace {

constexpr double kFixedPointChange = 1e-12;
constexpr int kMaxSweeps = 10000;
constexpr double kDuplicateRadius = 1e-6;
constexpr double kFixedPointTolerance = 1e-9;

}  // namespace

LinearMapGame::LinearMapGame(Eigen::MatrixXd map, Eigen::VectorXd peaks)
    : map_(std::move(map)), peaks_(std::move(peaks)) {
    if (map_.rows() != map_.cols()) {
        throw Error(ErrorCode::invalid_argument, "linear map must be square");
    }
    if (map_.rows() != peaks_.size()) {
        throw Error(ErrorCode::dimension_mismatch, "map and peaks differ in size");
    }
    for (Index k = 0; k < m(); ++k) {
        if (!(map_(k, k) > 0.0)) {
            throw Error(ErrorCode::invalid_argument,
                        "diagonal entry " + std::to_string(k) + " of the map must be positive");
        }
        if (!(peaks_[k] >= 0.0 && peaks_[k] <= 1.0)) {
            throw Error(ErrorCode::invalid_argument,
                        "peak " + std::to_string(k) + " is outside [0,1]");
        }
    }
}

Eigen::VectorXd linear_outcome(const LinearMapGame& game, const Eigen::VectorXd& reports) {
    if (reports.size() != game.m()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "expected " + std::to_string(game.m()) + " reports, got " +
                        std::to_string(reports.size()));
    }
    return game.map() * reports;
}

double linear_best_response(const LinearMapGame& game, const Eigen::VectorXd& reports,
                            Index agent) {
    if (reports.size() != game.m()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "expected " + std::to_string(game.m()) + " reports, got " +
                        std::to_string(reports.size()));
    }
    if (agent < 0 || agent >= game.m()) {
        throw Error(ErrorCode::invalid_argument, "agent index out of range");
    }
    const double own = game.map()(agent, agent);
    const double others = game.map().row(agent).dot(reports) - own * reports[agent];
    return std::clamp((game.peaks()[agent] - others) / own, 0.0, 1.0);
}

std::vector<LinearEquilibrium> find_all_pne_linear(const LinearMapGame& game,
                                                   double grid_resolution,
                                                   LinearSearchDiagnostics* diagnostics) {
    const Index m = game.m();
    if (m > kMaxLinearSearchAgents) {
        throw Error(ErrorCode::invalid_argument,
                    "grid search is limited to " + std::to_string(kMaxLinearSearchAgents) +
                        " agents");
    }
    if (!(grid_resolution > 0.0 && grid_resolution <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "grid resolution must lie in (0,1]");
    }
    LinearSearchDiagnostics local;
    LinearSearchDiagnostics& diag = diagnostics != nullptr ? *diagnostics : local;

    const Index steps = static_cast<Index>(std::llround(1.0 / grid_resolution));
    Index seeds = 1;
    for (Index k = 0; k < m; ++k) seeds *= steps + 1;

    std::vector<LinearEquilibrium> found;
    Eigen::VectorXd reports(m);
    for (Index code = 0; code < seeds; ++code) {
        ++diag.seeds;
        Index rest = code;
        for (Index k = 0; k < m; ++k, rest /= steps + 1) {
            reports[k] = std::min(1.0, static_cast<double>(rest % (steps + 1)) / static_cast<double>(steps));
        }

        bool settled = false;
        for (int sweep = 0; sweep < kMaxSweeps && !settled; ++sweep) {
            double change = 0.0;
            for (Index k = 0; k < m; ++k) {
                const double br = linear_best_response(game, reports, k);
                change = std::max(change, std::abs(br - reports[k]));
                reports[k] = br;
            }
            settled = change < kFixedPointChange;
        }
        if (!settled) {
            ++diag.unconverged;
            continue;
        }

        const bool known = std::any_of(found.begin(), found.end(), [&](const LinearEquilibrium& e) {
            return (e.reports - reports).lpNorm<Eigen::Infinity>() < kDuplicateRadius;
        });
        if (known) continue;

        Eigen::VectorXd outcomes = linear_outcome(game, reports);
        const PneCheck check = pne_conditions(game.peaks(), reports, outcomes, kFixedPointTolerance);
        if (!check.is_pne) {
            ++diag.rejected;
            continue;
        }
        found.push_back({reports, std::move(outcomes), check.violation});
    }
    return found;
}

}  // namespace stratreg
