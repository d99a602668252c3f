#pragma once

#include "stratreg/dataset.hpp"
#include "stratreg/regression.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace stratreg {

inline constexpr double kDefaultBestResponseTolerance = 1e-9;
inline constexpr double kDefaultPneTolerance = 1e-6;

/// A regression game. Agents' preferences enter only through their peaks.
struct GameInstance {
    Dataset dataset;
    RegressionConfig config;
    /// Peak of each strategic agent, in strategic-set order.
    Eigen::VectorXd peaks;

    Index m() const { return dataset.m(); }
    void validate() const;
};

/// Game whose peaks are the dataset's true responses of the strategic agents.
GameInstance make_game(Dataset dataset, RegressionConfig config);
GameInstance make_game(Dataset dataset, RegressionConfig config, Eigen::VectorXd peaks);

/// Peaks of strategic agents spliced into the honest agents' responses.
Eigen::VectorXd true_values(const GameInstance& game);

struct ReportProfile {
    Eigen::VectorXd reports;
};

/// Every strategic agent reports its peak.
ReportProfile honest_profile(const GameInstance& game);

enum class EquilibriumMethod { dynamics, enumeration, closed_form };
enum class Schedule { round_robin, largest_violation_first };

const char* to_string(EquilibriumMethod method);
const char* to_string(Schedule schedule);

struct EquilibriumResult {
    ReportProfile reports;
    Hyperplane hyperplane;
    EquilibriumMethod method = EquilibriumMethod::dynamics;
    int iterations = 0;
    bool converged = false;
    double max_report_change = 0.0;
    double pne_violation = 0.0;
};

/// Outcome of a PNE check: `violation` is the largest amount by which any agent
/// is both unhappy and not saturated in the direction it wants to move.
struct PneCheck {
    bool is_pne = false;
    double violation = 0.0;
};

/// Violation of one agent: min(peak - outcome, 1 - report) when the outcome is
/// below the peak, min(outcome - peak, report) when above, and 0 otherwise.
double agent_violation(double peak, double report, double outcome);

/// Equilibrium conditions given reports and the strategic agents' outcomes.
PneCheck pne_conditions(const Eigen::VectorXd& peaks, const Eigen::VectorXd& reports,
                        const Eigen::VectorXd& outcomes, double tolerance);

/// Fit on the merged responses (reports for strategic agents, truth for honest ones).
Hyperplane outcome(const GameInstance& game, const ReportProfile& reports);

/// Unique best response of the k-th strategic agent (k indexes the strategic set).
double best_response(const GameInstance& game, const ReportProfile& reports, Index agent,
                     double br_tolerance = kDefaultBestResponseTolerance);

PneCheck is_pne(const GameInstance& game, const ReportProfile& reports,
                double pne_tolerance = kDefaultPneTolerance);

struct DynamicsOptions {
    Schedule schedule = Schedule::round_robin;
    int max_iterations = 100000;
    double pne_tolerance = kDefaultPneTolerance;
    double br_tolerance = kDefaultBestResponseTolerance;
};

/// Iterated single-agent best responses. `iterations` counts report updates;
/// agents already at a best response are skipped. Non-convergence is reported
/// through `converged`, never thrown.
EquilibriumResult best_response_dynamics(const GameInstance& game, const ReportProfile& initial,
                                         const DynamicsOptions& options = {});

/// Called after every report update with the update count and the new profile.
using DynamicsObserver = std::function<void(int iteration, const Eigen::VectorXd& reports)>;

EquilibriumResult best_response_dynamics(const GameInstance& game, const ReportProfile& initial,
                                         const DynamicsOptions& options,
                                         const DynamicsObserver& observer);

struct EnumerationDiagnostics {
    Index patterns = 0;
    Index skipped = 0;   ///< interior sub-solve did not converge
    Index rejected = 0;  ///< sub-solve converged but failed the PNE check
    std::vector<std::string> messages;
};

inline constexpr Index kMaxEnumerationAgents = 12;

/// Tries every LOW/INTERIOR/HIGH pattern of the strategic agents and returns
/// every profile that passes the PNE check.
std::vector<EquilibriumResult> find_pne_enumeration(const GameInstance& game,
                                                    double pne_tolerance = kDefaultPneTolerance,
                                                    EnumerationDiagnostics* diagnostics = nullptr);

/// The unique PNE outcome, read as a mechanism on the declared peaks.
/// Closed form in 1D, otherwise enumeration (m <= 12), otherwise dynamics.
EquilibriumResult strategyproof_equilibrium(const GameInstance& game);
Hyperplane strategyproof_outcome(const GameInstance& game);

}  // namespace stratreg
