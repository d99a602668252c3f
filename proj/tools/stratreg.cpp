// stratreg: command-line front end for the strategic regression library.

#include "stratreg/error.hpp"
#include "stratreg/experiments.hpp"
#include "stratreg/facility.hpp"
#include "stratreg/game.hpp"
#include "stratreg/linear_map.hpp"
#include "stratreg/regression.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::json;
using namespace stratreg;

namespace {

enum Exit { ok = 0, parse_failure = 1, solver_failure = 2, no_equilibrium = 3, sweep_failure = 4 };

int exit_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::solver_not_converged:
    case ErrorCode::singular_matrix: return solver_failure;
    case ErrorCode::no_equilibrium: return no_equilibrium;
    case ErrorCode::sweep_failed: return sweep_failure;
    default: return parse_failure;
    }
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Shared output policy: with --json, stdout carries only the JSON document and
// every human-readable line goes to stderr.
struct Output {
    bool json_only = false;

    std::ostream& human() const { return json_only ? std::cerr : std::cout; }

    void emit(const json& doc, const std::string& path) const {
        if (!path.empty()) {
            std::ofstream f(path);
            if (!f) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
            f << doc.dump(2) << "\n";
            if (!f) throw Error(ErrorCode::io_error, "failed writing '" + path + "'");
            if (!json_only) return;
        }
        std::cout << doc.dump(2) << "\n";
    }
};

struct FitOptions {
    std::string data;
    std::string target;
    std::vector<std::string> features;
    double p = 2.0;
    std::string regularizer = "none";
    double lambda = 0.0;
    double tolerance = 1e-10;
    int max_iter = 500;
};

RegressionConfig make_config(const FitOptions& o) {
    RegressionConfig c;
    c.p = o.p;
    c.regularizer = regularizer_from_string(o.regularizer);
    c.lambda = o.lambda;
    c.gradient_tolerance = o.tolerance;
    c.max_solver_iterations = o.max_iter;
    c.validate();
    return c;
}

void add_fit_options(CLI::App* cmd, FitOptions& o, bool with_solver_limits) {
    cmd->add_option("--data", o.data, "CSV file with a header row")->required();
    cmd->add_option("--target", o.target, "response column (default: last column)");
    cmd->add_option("--features", o.features, "feature columns (default: all but the target)")
        ->delimiter(',');
    cmd->add_option("--p", o.p, "residual exponent, > 1")->capture_default_str();
    cmd->add_option("--regularizer", o.regularizer, "none, ridge or smooth-l1")
        ->capture_default_str();
    cmd->add_option("--lambda", o.lambda, "regularization weight")->capture_default_str();
    if (with_solver_limits) {
        cmd->add_option("--tolerance", o.tolerance, "gradient-norm tolerance")
            ->capture_default_str();
        cmd->add_option("--max-iter", o.max_iter, "solver iteration limit")->capture_default_str();
    }
}

std::vector<double> read_numbers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
    std::vector<double> values;
    std::string token;
    while (in >> token) {
        std::stringstream parts(token);
        std::string cell;
        while (std::getline(parts, cell, ',')) {
            if (cell.empty()) continue;
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw Error(ErrorCode::parse_error, "bad number '" + cell + "' in '" + path + "'");
            }
        }
    }
    return values;
}

json equilibrium_json(const GameInstance& game, const EquilibriumResult& r) {
    return {
        {"method", to_string(r.method)},
        {"converged", r.converged},
        {"iterations", r.iterations},
        {"max_report_change", r.max_report_change},
        {"pne_violation", r.pne_violation},
        {"strategic_set", game.dataset.strategic_set},
        {"peaks", to_json(game.peaks)},
        {"reports", to_json(r.reports.reports)},
        {"coefficients", to_json(r.hyperplane.coefficients)},
        {"outcomes", to_json(r.hyperplane.outcomes)},
    };
}

// ---------------------------------------------------------------------------

int run_fit(const FitOptions& o, const std::string& output, const Output& out) {
    const RegressionConfig config = make_config(o);
    const CsvIngest in = ingest_csv(o.data, o.features, o.target);
    const Dataset& data = in.dataset;
    const Hyperplane h = fit(data, data.true_responses, config);
    const json doc = {
        {"n", data.n()},
        {"d", data.d()},
        {"dropped_rows", in.dropped_rows},
        {"p", config.p},
        {"regularizer", to_string(config.regularizer)},
        {"lambda", config.lambda},
        {"coefficients", to_json(h.coefficients)},
        {"outcomes", to_json(h.outcomes)},
        {"residuals", to_json(h.residuals)},
        {"loss", loss_value(data, data.true_responses, config, h.coefficients)},
        {"solver_iterations", h.solver_iterations},
        {"gradient_norm", h.gradient_norm},
    };
    out.human() << "fit: n=" << data.n() << " d=" << data.d() << " loss=" << doc["loss"].get<double>()
                << "\n";
    out.emit(doc, output);
    return ok;
}

struct EquilibriumOptions {
    std::string peaks;
    std::vector<Index> strategic;
    std::string method = "auto";
    std::string schedule = "round-robin";
    double tolerance = kDefaultPneTolerance;
    int max_iter = 100000;
};

int run_equilibrium(const FitOptions& f, const EquilibriumOptions& o, const std::string& output,
                    const Output& out) {
    RegressionConfig config = make_config(f);
    const CsvIngest in = ingest_csv(f.data, f.features, f.target);
    std::vector<Index> strategic = o.strategic;
    if (strategic.empty()) {
        for (Index i = 0; i < in.dataset.n(); ++i) strategic.push_back(i);
    }
    Dataset data = make_dataset(in.dataset.features, in.dataset.true_responses, strategic);
    GameInstance game = [&] {
        if (o.peaks.empty()) return make_game(data, config);
        const std::vector<double> peaks = read_numbers(o.peaks);
        return make_game(data, config,
                         Eigen::Map<const Eigen::VectorXd>(peaks.data(),
                                                           static_cast<Index>(peaks.size())));
    }();

    DynamicsOptions dyn;
    dyn.max_iterations = o.max_iter;
    dyn.pne_tolerance = o.tolerance;
    if (o.schedule == "round-robin") {
        dyn.schedule = Schedule::round_robin;
    } else if (o.schedule == "largest-violation-first") {
        dyn.schedule = Schedule::largest_violation_first;
    } else {
        throw Error(ErrorCode::parse_error, "unknown schedule '" + o.schedule + "'");
    }

    EquilibriumResult result;
    bool found = true;
    if (o.method == "dynamics") {
        result = best_response_dynamics(game, honest_profile(game), dyn);
        found = result.converged;
    } else if (o.method == "enumeration") {
        EnumerationDiagnostics diag;
        std::vector<EquilibriumResult> all = find_pne_enumeration(game, o.tolerance, &diag);
        if (all.empty()) {
            found = false;
            result.method = EquilibriumMethod::enumeration;
            result.reports = honest_profile(game);
            result.hyperplane = outcome(game, result.reports);
            result.pne_violation = is_pne(game, result.reports, o.tolerance).violation;
        } else {
            result = all.front();
        }
    } else if (o.method == "auto") {
        try {
            result = strategyproof_equilibrium(game);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::no_equilibrium) throw;
            out.human() << "auto: " << e.what() << "\n";
            result = best_response_dynamics(game, honest_profile(game), dyn);
            found = false;
        }
    } else {
        throw Error(ErrorCode::parse_error, "unknown method '" + o.method +
                                                "' (expected auto, dynamics or enumeration)");
    }

    json doc = equilibrium_json(game, result);
    doc["p"] = config.p;
    doc["pne_tolerance"] = o.tolerance;
    out.human() << "equilibrium: method=" << to_string(result.method)
                << " converged=" << (found ? "yes" : "no") << " iterations=" << result.iterations
                << " violation=" << result.pne_violation << "\n";
    out.emit(doc, output);
    return found ? ok : no_equilibrium;
}

// ---------------------------------------------------------------------------
// Demos

const std::vector<std::string> kDemos = {"example1", "example2", "theorem2", "theorem10", "prop9"};

struct DemoOptions {
    std::string name;
    double p = 2.0;
    double epsilon = 0.1;
    Index n = 10;
    int max_iter = 10000;
};

json demo_example1(std::ostream& human) {
    Eigen::VectorXd peaks(2);
    peaks << 0.4, 0.5;
    const FacilityInstance facility = make_facility(peaks, 2.0);
    const GameInstance game = to_game(facility);
    const EquilibriumResult eq = strategyproof_equilibrium(game);
    const PneCheck honest = is_pne(game, honest_profile(game));
    human << "example1: equilibrium reports (" << eq.reports.reports[0] << ", "
          << eq.reports.reports[1] << "), outcome " << eq.hyperplane.coefficients[0] << "\n"
          << "example1: honest reports (0.4, 0.5) are " << (honest.is_pne ? "" : "not ")
          << "an equilibrium of the continuous game (violation " << honest.violation << ")\n";
    return {{"demo", "example1"},
            {"equilibrium_reports", to_json(eq.reports.reports)},
            {"equilibrium_outcome", eq.hyperplane.coefficients[0]},
            {"honest_is_pne", honest.is_pne},
            {"honest_violation", honest.violation}};
}

json demo_example2(std::ostream& human) {
    Eigen::MatrixXd map(2, 2);
    map << 0.8, -1.0, -1.2, 1.0;
    const LinearMapGame game(map, Eigen::VectorXd::Zero(2));
    json found = json::array();
    for (const LinearEquilibrium& e : find_all_pne_linear(game)) {
        human << "example2: reports (" << e.reports[0] << ", " << e.reports[1] << ") -> outcome ("
              << e.outcomes[0] << ", " << e.outcomes[1] << ")\n";
        found.push_back({{"reports", to_json(e.reports)}, {"outcomes", to_json(e.outcomes)}});
    }
    return {{"demo", "example2"}, {"equilibria", found}};
}

json demo_theorem2(const DemoOptions& o, std::ostream& human) {
    const ThetaInstance theta = theta_n_instance(o.n, o.p);
    const GameInstance game = to_game(theta.instance);
    const EquilibriumResult eq = best_response_dynamics(game, honest_profile(game));
    const PpoaValue ppoa = ppoa_q(game.dataset, eq.hyperplane, 2.0);
    human << "theorem2: n=" << o.n << " p=" << o.p << " measured PPoA " << ppoa.value
          << ", analytic " << theta.analytic_ppoa << "\n";
    return {{"demo", "theorem2"},
            {"n", o.n},
            {"p", o.p},
            {"peaks", to_json(theta.instance.peaks)},
            {"equilibrium_outcome", eq.hyperplane.coefficients[0]},
            {"measured_ppoa", ppoa.value},
            {"analytic_ppoa", theta.analytic_ppoa},
            {"converged", eq.converged}};
}

json demo_theorem10(const DemoOptions& o, std::ostream& human) {
    const UnboundedInstance u = unbounded_instance(o.epsilon, o.p);
    const Hyperplane h = outcome(u.game, u.equilibrium);
    const PneCheck check = is_pne(u.game, u.equilibrium);
    const PpoaValue ppoa = ppoa_q(u.game.dataset, h, 2.0);
    json doc = {{"demo", "theorem10"},
                {"epsilon", o.epsilon},
                {"p", o.p},
                {"peaks", to_json(u.game.peaks)},
                {"equilibrium_reports", to_json(u.equilibrium.reports)},
                {"is_pne", check.is_pne},
                {"coefficients", to_json(h.coefficients)},
                {"measured_ppoa", ppoa.value},
                {"unbounded", ppoa.unbounded}};
    human << "theorem10: eps=" << o.epsilon << " p=" << o.p << " measured PPoA " << ppoa.value;
    if (o.p == 2.0) {
        doc["analytic_ppoa"] = 1.0 + 1.0 / (o.epsilon * o.epsilon);
        human << ", analytic " << doc["analytic_ppoa"].get<double>();
    }
    human << "\n";
    return doc;
}

json demo_prop9(const DemoOptions& o, std::ostream& human) {
    const UnboundedInstance u = unbounded_instance(o.epsilon, o.p);
    DynamicsOptions dyn;
    dyn.max_iterations = o.max_iter;
    bool interior = true;
    const EquilibriumResult r =
        best_response_dynamics(u.game, honest_profile(u.game), dyn,
                               [&](int, const Eigen::VectorXd& reports) {
                                   interior = interior && reports[0] < 1.0 && reports[1] > 0.0;
                               });
    human << "prop9: " << r.iterations << " updates, Lemma 5 check "
          << (r.converged ? "passed" : "not passed") << " at tolerance "
          << dyn.pne_tolerance << " (violation " << r.pne_violation << ")\n"
          << "prop9: reports " << (interior ? "stayed" : "did not stay")
          << " strictly inside (agent 1 < 1, agent 2 > 0); exact equilibrium reports (1, 0) "
          << (interior ? "never reached" : "reached") << "\n";
    return {{"demo", "prop9"},
            {"epsilon", o.epsilon},
            {"p", o.p},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"pne_violation", r.pne_violation},
            {"reports", to_json(r.reports.reports)},
            {"interior_throughout", interior}};
}

int run_demo(const DemoOptions& o, const Output& out) {
    json doc;
    if (o.name == "example1") doc = demo_example1(out.human());
    else if (o.name == "example2") doc = demo_example2(out.human());
    else if (o.name == "theorem2") doc = demo_theorem2(o, out.human());
    else if (o.name == "theorem10") doc = demo_theorem10(o, out.human());
    else if (o.name == "prop9") doc = demo_prop9(o, out.human());
    else {
        std::string names;
        for (const std::string& n : kDemos) names += (names.empty() ? "" : ", ") + n;
        std::cerr << "unknown demo '" << o.name << "'; valid names: " << names << "\n";
        return parse_failure;
    }
    out.emit(doc, "");
    return ok;
}

// ---------------------------------------------------------------------------

int run_sweep_command(const std::string& config_path, const std::string& output_dir, int threads,
                      const std::optional<std::uint64_t>& seed, const Output& out) {
    const auto started = std::chrono::steady_clock::now();
    const std::string started_at = utc_now();
    std::ifstream in(config_path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + config_path + "'");
    json raw;
    try {
        raw = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("sweep config: ") + e.what());
    }
    SweepConfig config = sweep_config_from_json(raw);
    if (threads > 0) config.threads = threads;
    if (seed) config.seed = *seed;

    const SweepResult result = run_sweep(config);
    for (const std::string& f : result.failures) out.human() << "trial failure: " << f << "\n";

    std::filesystem::create_directories(output_dir);
    const std::string csv_path = (std::filesystem::path(output_dir) / "sweep.csv").string();
    const std::string manifest_path =
        (std::filesystem::path(output_dir) / "manifest.json").string();
    write_sweep_csv(result, csv_path);

    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    json rows = json::array();
    for (const SweepRow& r : result.rows) {
        rows.push_back({{"swept_value", r.swept_value},
                        {"completed_trials", r.completed_trials},
                        {"failed_trials", r.failed_trials},
                        {"unbounded_trials", r.unbounded_trials}});
    }
    const json manifest = {
        {"command", "sweep"},
        {"parameters", to_json(config)},
        {"seed", config.seed},
        {"outputs", {csv_path, manifest_path}},
        {"duration_ms", elapsed.count()},
        {"started_at", started_at},
        {"finished_at", utc_now()},
        {"version", version()},
        {"rows", rows},
    };
    std::ofstream m(manifest_path);
    if (!m) throw Error(ErrorCode::io_error, "cannot write '" + manifest_path + "'");
    m << manifest.dump(2) << "\n";
    if (!m) throw Error(ErrorCode::io_error, "failed writing '" + manifest_path + "'");

    out.human() << "sweep: wrote " << csv_path << " and " << manifest_path << "\n";
    if (out.json_only) std::cout << manifest.dump(2) << "\n";
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Strategic (p,R)-regression: fits, equilibria, demos and sweeps"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);
    Output out;
    app.add_flag("--json", out.json_only, "print only JSON on stdout; human text goes to stderr");

    FitOptions fit_opts;
    std::string fit_output;
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit the regression on a CSV file");
    fit_cmd->fallthrough();
    add_fit_options(fit_cmd, fit_opts, true);
    fit_cmd->add_option("--output", fit_output, "write the JSON result to this file");

    FitOptions eq_fit;
    EquilibriumOptions eq_opts;
    std::string eq_output;
    CLI::App* eq_cmd = app.add_subcommand("equilibrium", "find the equilibrium of a CSV dataset");
    eq_cmd->fallthrough();
    add_fit_options(eq_cmd, eq_fit, false);
    eq_cmd->add_option("--peaks", eq_opts.peaks,
                       "file of strategic agents' peaks (default: their responses)");
    eq_cmd->add_option("--strategic", eq_opts.strategic,
                       "0-based strategic row indices (default: all rows)")
        ->delimiter(',');
    eq_cmd->add_option("--method", eq_opts.method, "auto, dynamics or enumeration")
        ->capture_default_str();
    eq_cmd->add_option("--schedule", eq_opts.schedule, "round-robin or largest-violation-first")
        ->capture_default_str();
    eq_cmd->add_option("--tolerance", eq_opts.tolerance, "equilibrium check tolerance")
        ->capture_default_str();
    eq_cmd->add_option("--max-iter", eq_opts.max_iter, "best-response update limit")
        ->capture_default_str();
    eq_cmd->add_option("--output", eq_output, "write the JSON result to this file");

    DemoOptions demo_opts;
    CLI::App* demo_cmd = app.add_subcommand("demo", "run one of the built-in instances");
    demo_cmd->fallthrough();
    demo_cmd->add_option("name", demo_opts.name, "example1, example2, theorem2, theorem10, prop9")
        ->required();
    demo_cmd->add_option("--p", demo_opts.p, "residual exponent")->capture_default_str();
    demo_cmd->add_option("--epsilon", demo_opts.epsilon, "gap of the four-agent instance")
        ->capture_default_str();
    demo_cmd->add_option("--n", demo_opts.n, "agents in the theorem2 instance")
        ->capture_default_str();
    demo_cmd->add_option("--max-iter", demo_opts.max_iter, "best-response update limit (prop9)")
        ->capture_default_str();

    std::string sweep_config;
    std::string sweep_output = ".";
    int sweep_threads = 0;
    std::optional<std::uint64_t> sweep_seed;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep from a JSON config");
    sweep_cmd->fallthrough();
    sweep_cmd->add_option("--config", sweep_config, "sweep configuration JSON")->required();
    sweep_cmd->add_option("--output", sweep_output, "output directory")->capture_default_str();
    sweep_cmd->add_option("--threads", sweep_threads, "worker threads (default: STRATREG_THREADS)");
    sweep_cmd->add_option("--seed", sweep_seed, "override the config's seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return parse_failure;
    }

    try {
        if (*fit_cmd) return run_fit(fit_opts, fit_output, out);
        if (*eq_cmd) return run_equilibrium(eq_fit, eq_opts, eq_output, out);
        if (*demo_cmd) return run_demo(demo_opts, out);
        if (*sweep_cmd) return run_sweep_command(sweep_config, sweep_output, sweep_threads, sweep_seed, out);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return parse_failure;
    }
    return parse_failure;
}
