#include "stratreg/error.hpp"
#include "stratreg/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#ifndef STRATREG_VERSION
#define STRATREG_VERSION "unknown"
#endif

namespace stratreg {

namespace {

constexpr double kFailureBudget = 0.05;
constexpr double kZ95 = 1.96;

// Pairwise summation over a fixed order: the total never depends on which
// worker produced which term.
double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
}

double ci_half_width(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
    const double var = pairwise_sum(sq.data(), sq.size()) / static_cast<double>(v.size() - 1);
    return kZ95 * std::sqrt(var / static_cast<double>(v.size()));
}

Index as_count(double value, const char* what) {
    if (!(value >= 1.0) || value != std::floor(value)) {
        throw Error(ErrorCode::invalid_argument,
                    std::string(what) + " must be a positive integer");
    }
    return static_cast<Index>(value);
}

TrialSpec spec_for(const SweepConfig& config, double value, int trial) {
    TrialSpec spec;
    spec.n = config.defaults.n;
    spec.d = config.defaults.d;
    spec.p = config.defaults.p;
    spec.alpha = config.defaults.alpha;
    spec.q = config.defaults.q;
    switch (config.swept_parameter) {
    case SweptParameter::n: spec.n = as_count(value, "n"); break;
    case SweptParameter::d: spec.d = as_count(value, "d"); break;
    case SweptParameter::p: spec.p = value; break;
    case SweptParameter::alpha: spec.alpha = value; break;
    case SweptParameter::q: spec.q = value; break;
    }
    spec.noise_sd = config.noise_sd;
    spec.regularizer = config.regularizer;
    spec.lambda = config.lambda;
    spec.max_iterations = config.max_iterations;
    spec.pne_tolerance = config.pne_tolerance;
    spec.seed = trial_seed(config.seed, static_cast<std::uint64_t>(trial));
    return spec;
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& known,
                    const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
            throw Error(ErrorCode::parse_error, "unknown key '" + it.key() + "' in " + where);
        }
    }
}

}  // namespace

const char* version() { return STRATREG_VERSION; }

const char* to_string(SweptParameter parameter) {
    switch (parameter) {
    case SweptParameter::n: return "n";
    case SweptParameter::d: return "d";
    case SweptParameter::p: return "p";
    case SweptParameter::alpha: return "alpha";
    case SweptParameter::q: return "q";
    }
    return "p";
}

SweptParameter swept_parameter_from_string(const std::string& name) {
    if (name == "n") return SweptParameter::n;
    if (name == "d") return SweptParameter::d;
    if (name == "p") return SweptParameter::p;
    if (name == "alpha") return SweptParameter::alpha;
    if (name == "q") return SweptParameter::q;
    throw Error(ErrorCode::parse_error, "unknown swept parameter '" + name + "'");
}

void SweepConfig::validate() const {
    if (values.empty()) throw Error(ErrorCode::invalid_argument, "sweep has no values");
    if (trials < 1) throw Error(ErrorCode::invalid_argument, "trials must be >= 1");
    if (defaults.n < 1 || defaults.d < 1) {
        throw Error(ErrorCode::invalid_argument, "default n and d must be >= 1");
    }
    if (!(noise_sd >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise_sd must be >= 0");
    if (max_iterations < 0) throw Error(ErrorCode::invalid_argument, "max_iterations must be >= 0");
    if (!(pne_tolerance > 0.0)) throw Error(ErrorCode::invalid_argument, "pne_tolerance must be > 0");
    for (const double v : values) {
        const TrialSpec spec = spec_for(*this, v, 0);
        if (!(spec.alpha >= 0.0 && spec.alpha <= 1.0)) {
            throw Error(ErrorCode::invalid_argument, "alpha must lie in [0,1]");
        }
        if (!(spec.p > 1.0)) throw Error(ErrorCode::invalid_argument, "p must be > 1");
        if (!(spec.q >= 1.0)) throw Error(ErrorCode::invalid_argument, "q must be >= 1");
    }
    RegressionConfig rc;
    rc.regularizer = regularizer;
    rc.lambda = lambda;
    rc.validate();
}

SweepConfig sweep_config_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw Error(ErrorCode::parse_error, "sweep config must be an object");
        reject_unknown(j,
                       {"swept_parameter", "values", "defaults", "trials", "seed", "noise_sd",
                        "regularizer", "lambda", "max_iterations", "pne_tolerance", "threads"},
                       "sweep config");
        SweepConfig c;
        c.swept_parameter = swept_parameter_from_string(j.at("swept_parameter").get<std::string>());
        c.values = j.at("values").get<std::vector<double>>();
        if (j.contains("defaults")) {
            const nlohmann::json& d = j.at("defaults");
            reject_unknown(d, {"n", "d", "p", "alpha", "q"}, "defaults");
            c.defaults.n = get_or<Index>(d, "n", c.defaults.n);
            c.defaults.d = get_or<Index>(d, "d", c.defaults.d);
            c.defaults.p = get_or<double>(d, "p", c.defaults.p);
            c.defaults.alpha = get_or<double>(d, "alpha", c.defaults.alpha);
            c.defaults.q = get_or<double>(d, "q", c.defaults.q);
        }
        c.trials = get_or<int>(j, "trials", c.trials);
        c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
        c.noise_sd = get_or<double>(j, "noise_sd", c.noise_sd);
        if (j.contains("regularizer")) {
            try {
                c.regularizer = regularizer_from_string(j.at("regularizer").get<std::string>());
            } catch (const Error& e) {
                throw Error(ErrorCode::parse_error, e.what());
            }
        }
        c.lambda = get_or<double>(j, "lambda", c.lambda);
        c.max_iterations = get_or<int>(j, "max_iterations", c.max_iterations);
        c.pne_tolerance = get_or<double>(j, "pne_tolerance", c.pne_tolerance);
        c.threads = get_or<int>(j, "threads", c.threads);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("sweep config: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::parse_error) throw;
        throw Error(ErrorCode::parse_error, std::string("sweep config: ") + e.what());
    }
}

nlohmann::json to_json(const SweepConfig& c) {
    return {
        {"swept_parameter", to_string(c.swept_parameter)},
        {"values", c.values},
        {"defaults",
         {{"n", c.defaults.n},
          {"d", c.defaults.d},
          {"p", c.defaults.p},
          {"alpha", c.defaults.alpha},
          {"q", c.defaults.q}}},
        {"trials", c.trials},
        {"seed", c.seed},
        {"noise_sd", c.noise_sd},
        {"regularizer", to_string(c.regularizer)},
        {"lambda", c.lambda},
        {"max_iterations", c.max_iterations},
        {"pne_tolerance", c.pne_tolerance},
        {"threads", c.threads},
    };
}

int worker_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("STRATREG_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

TrialOutcome run_trial(const TrialSpec& spec) {
    Dataset data = generate_synthetic(spec.n, spec.d, spec.noise_sd, spec.seed);

    std::mt19937_64 rng(spec.seed ^ 0xa0761d6478bd642fULL);
    const Index m = std::min<Index>(
        data.n(), static_cast<Index>(std::ceil(spec.alpha * static_cast<double>(data.n()) - 1e-9)));
    std::vector<Index> agents(static_cast<std::size_t>(data.n()));
    std::iota(agents.begin(), agents.end(), Index{0});
    std::shuffle(agents.begin(), agents.end(), rng);
    agents.resize(static_cast<std::size_t>(std::max<Index>(m, 0)));

    RegressionConfig config;
    config.p = spec.p;
    config.regularizer = spec.regularizer;
    config.lambda = spec.lambda;
    const GameInstance game =
        make_game(make_dataset(data.features, data.true_responses, std::move(agents)), config);

    DynamicsOptions options;
    options.max_iterations = spec.max_iterations;
    options.pne_tolerance = spec.pne_tolerance;
    EquilibriumResult eq = best_response_dynamics(game, honest_profile(game), options);

    TrialOutcome out;
    out.iterations = eq.iterations;
    out.converged = eq.converged;
    if (!eq.converged && game.m() <= kMaxEnumerationAgents) {
        std::vector<EquilibriumResult> found = find_pne_enumeration(game, spec.pne_tolerance);
        if (!found.empty()) {
            eq = std::move(found.front());
            out.converged = true;
        }
    }

    const PpoaValue ppoa = ppoa_q(game.dataset, eq.hyperplane, spec.q);
    const PpoaValue lad = ppoa_q(game.dataset, honest_q_fit(game.dataset, 1.0), spec.q);
    out.ppoa = ppoa.value;
    out.lad_ppoa = lad.value;
    out.unbounded = ppoa.unbounded || lad.unbounded;
    return out;
}

SweepResult run_sweep(const SweepConfig& config) {
    config.validate();
    const std::size_t trials = static_cast<std::size_t>(config.trials);
    const std::size_t jobs = config.values.size() * trials;

    std::vector<std::optional<TrialOutcome>> outcomes(jobs);
    std::vector<std::string> errors(jobs);
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t job = next++; job < jobs; job = next++) {
            const std::size_t v = job / trials;
            const int t = static_cast<int>(job % trials);
            try {
                outcomes[job] = run_trial(spec_for(config, config.values[v], t));
            } catch (const std::exception& e) {
                errors[job] = e.what();
            }
        }
    };
    const int workers = std::max(1, std::min<int>(worker_count(config.threads),
                                                  static_cast<int>(jobs)));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (std::thread& t : pool) t.join();

    SweepResult result;
    for (std::size_t v = 0; v < config.values.size(); ++v) {
        SweepRow row;
        row.swept_value = config.values[v];
        std::vector<double> ppoa, lad, iterations;
        int converged = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            const std::size_t job = v * trials + t;
            if (!outcomes[job]) {
                ++row.failed_trials;
                result.failures.push_back(std::string(to_string(config.swept_parameter)) + "=" +
                                          std::to_string(config.values[v]) + " trial " +
                                          std::to_string(t) + ": " + errors[job]);
                continue;
            }
            const TrialOutcome& o = *outcomes[job];
            ++row.completed_trials;
            if (o.converged) ++converged;
            iterations.push_back(static_cast<double>(o.iterations));
            if (o.unbounded) {
                ++row.unbounded_trials;
                continue;
            }
            ppoa.push_back(o.ppoa);
            lad.push_back(o.lad_ppoa);
        }
        if (static_cast<double>(row.failed_trials) > kFailureBudget * static_cast<double>(trials)) {
            throw Error(ErrorCode::sweep_failed,
                        std::to_string(row.failed_trials) + " of " + std::to_string(trials) +
                            " trials failed at " + to_string(config.swept_parameter) + "=" +
                            std::to_string(row.swept_value) + "; first: " +
                            result.failures.front());
        }
        row.mean_ppoa = mean_of(ppoa);
        row.ci_half_width = ci_half_width(ppoa, row.mean_ppoa);
        row.mean_iterations = mean_of(iterations);
        row.lad_ppoa = mean_of(lad);
        row.converged_fraction =
            row.completed_trials > 0
                ? static_cast<double>(converged) / static_cast<double>(row.completed_trials)
                : 0.0;
        result.rows.push_back(row);
    }
    return result;
}

std::string sweep_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "swept_value,mean_ppoa,ci_half_width,mean_iterations,lad_ppoa,converged_fraction\n";
    char buf[64];
    for (const SweepRow& r : result.rows) {
        const double cells[] = {r.swept_value,     r.mean_ppoa, r.ci_half_width,
                                r.mean_iterations, r.lad_ppoa,  r.converged_fraction};
        for (std::size_t i = 0; i < 6; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", cells[i]);
            out << buf << (i + 1 < 6 ? "," : "\n");
        }
    }
    return out.str();
}

void write_sweep_csv(const SweepResult& result, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
    f << sweep_csv(result);
    if (!f) throw Error(ErrorCode::io_error, "failed writing '" + path + "'");
}

}  // namespace stratreg
