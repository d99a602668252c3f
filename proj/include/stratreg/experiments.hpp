#pragma once

#include "stratreg/dataset.hpp"
#include "stratreg/game.hpp"
#include "stratreg/regression.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace stratreg {

// ---------------------------------------------------------------------------
// Data

/// Synthetic instance: x = (N(0,1)^d, 1), y = beta*.x + N(0, noise_sd^2) with
/// beta* uniform on [-1,1]^(d+1), then y min-max normalized to [0,1].
/// The result has d+1 feature columns and no strategic agents.
Dataset generate_synthetic(Index n, Index d, double noise_sd, std::uint64_t seed);

struct CsvIngest {
    Dataset dataset;
    Index dropped_rows = 0;
};

/// Reads a comma-separated file with a header row. Rows with an empty cell in a
/// selected column are dropped; the target is min-max normalized to [0,1].
/// An empty `feature_columns` selects every column except the target; an empty
/// `target_column` selects the last column.
CsvIngest ingest_csv(const std::string& path, const std::vector<std::string>& feature_columns,
                     const std::string& target_column);

/// Min-max normalization to [0,1]. Throws Error(invalid_argument) when all
/// entries are equal.
Eigen::VectorXd min_max_normalize(const Eigen::VectorXd& values);

// ---------------------------------------------------------------------------
// Metrics

struct PpoaValue {
    double value = 1.0;
    /// The honest optimum has zero cost while the equilibrium does not.
    bool unbounded = false;
};

/// Honest l_q fit without regularization (OLS for q = 2, smoothed LAD for q = 1).
Hyperplane honest_q_fit(const Dataset& dataset, double q);

/// sum |y - yhat_eq|^q over sum |y - yhat_qopt|^q on the true responses.
PpoaValue ppoa_q(const Dataset& dataset, const Hyperplane& equilibrium, double q);

struct UnboundedInstance {
    GameInstance game;
    ReportProfile equilibrium;
};

/// Four agents at x = 0, (1-eps)/2, (1+eps)/2, 1 whose peaks are chosen so that
/// the reports (0,1,0,1) form an equilibrium. Agents 1 and 2 are strategic.
UnboundedInstance unbounded_instance(double epsilon, double p);

// ---------------------------------------------------------------------------
// Sweeps

enum class SweptParameter { n, d, p, alpha, q };

const char* to_string(SweptParameter parameter);
SweptParameter swept_parameter_from_string(const std::string& name);

struct SweepDefaults {
    Index n = 100;
    Index d = 6;
    double p = 2.0;
    double alpha = 1.0;
    double q = 2.0;
};

struct SweepConfig {
    SweptParameter swept_parameter = SweptParameter::p;
    std::vector<double> values;
    SweepDefaults defaults;
    int trials = 1000;
    std::uint64_t seed = 0;
    double noise_sd = 0.5;
    Regularizer regularizer = Regularizer::none;
    double lambda = 0.0;
    int max_iterations = 100000;
    double pne_tolerance = kDefaultPneTolerance;
    /// Worker count; 0 means STRATREG_THREADS or the hardware concurrency.
    int threads = 0;

    void validate() const;
};

SweepConfig sweep_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SweepConfig& config);

struct SweepRow {
    double swept_value = 0.0;
    double mean_ppoa = 0.0;
    double ci_half_width = 0.0;
    double mean_iterations = 0.0;
    double lad_ppoa = 0.0;
    double converged_fraction = 0.0;
    int completed_trials = 0;
    int failed_trials = 0;
    int unbounded_trials = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<std::string> failures;
};

/// Parameters of one trial; exposed for tests.
struct TrialSpec {
    Index n = 0;
    Index d = 0;
    double p = 2.0;
    double alpha = 1.0;
    double q = 2.0;
    double noise_sd = 0.5;
    Regularizer regularizer = Regularizer::none;
    double lambda = 0.0;
    int max_iterations = 100000;
    double pne_tolerance = kDefaultPneTolerance;
    std::uint64_t seed = 0;
};

struct TrialOutcome {
    double ppoa = 1.0;
    double lad_ppoa = 1.0;
    int iterations = 0;
    bool converged = false;
    bool unbounded = false;
};

TrialOutcome run_trial(const TrialSpec& spec);

/// Seed of trial `trial`; independent of the swept value so every column of a
/// sweep sees the same random instances.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial);

/// Worker count: `requested` if positive, else STRATREG_THREADS, else hardware.
int worker_count(int requested);

/// Throws Error(sweep_failed) when more than 5% of any row's trials fail.
SweepResult run_sweep(const SweepConfig& config);

/// Writes the result CSV with every value printed to 17 significant digits.
void write_sweep_csv(const SweepResult& result, const std::string& path);
std::string sweep_csv(const SweepResult& result);

/// Library version string recorded in run manifests.
const char* version();

}  // namespace stratreg
