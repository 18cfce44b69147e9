#pragma once

// Command-line front end: `tflr fit | simulate | bench`.
// Exit codes: 0 ok, 1 unexpected failure, 2 bad input, 3 fit did not converge.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tflr/tflr.hpp"

namespace tflr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNotConverged = 3;

using nlohmann::json;

namespace detail {

struct SolverFlags {
    double eps = 1e-8;
    double delta = 1e-8;
    double eta = 1e-10;
    int max_iter = 10000;
    std::string init = "cls";

    void add_to(CLI::App& app) {
        app.add_option("--eps", eps, "Convergence tolerance")->capture_default_str();
        app.add_option("--delta", delta, "Floor on fitted values inside the KLD")->capture_default_str();
        app.add_option("--eta", eta, "Clamp on fitted means before weighting (CIRLS)")->capture_default_str();
        app.add_option("--max-iter", max_iter, "Iteration cap")->capture_default_str();
        app.add_option("--init", init, "Starting coefficients")
            ->check(CLI::IsMember({"uniform", "cls"}))
            ->capture_default_str();
    }

    SolverConfig config() const {
        SolverConfig c;
        c.eps_converge = eps;
        c.delta_guard = delta;
        c.eta_clamp = eta;
        c.max_iter = max_iter;
        c.init = init == "uniform" ? InitKind::uniform : InitKind::cls;
        c.validate();
        return c;
    }
};

inline json config_json(const SolverConfig& c) {
    return json{{"eps", c.eps_converge},
                {"delta", c.delta_guard},
                {"eta", c.eta_clamp},
                {"max_iter", c.max_iter},
                {"init", std::string(to_string(c.init))}};
}

inline json matrix_json(const MatrixXd& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<std::string> names_or_default(const CompositionMatrix& m, const std::string& prefix) {
    return m.names().empty() ? csv::default_names(prefix, m.cols()) : m.names();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::ParseError, path.string() + ": cannot write");
    out << text;
}

inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::ostream& out) {
    if (flag) return *flag;
    std::random_device rd;
    const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    out << "seed: " << seed << '\n';
    return seed;
}

inline ScenarioKind parse_kind(const std::string& s) {
    return s == "dependent" ? ScenarioKind::dependent : ScenarioKind::independent;
}

inline bool is_input_error(Errc code) {
    switch (code) {
        case Errc::NegativeEntry:
        case Errc::RowSumViolation:
        case Errc::TooFewComponents:
        case Errc::ZeroRowSum:
        case Errc::EmptyMatrix:
        case Errc::DimensionMismatch:
        case Errc::InvalidConfig:
        case Errc::InvalidAlpha:
        case Errc::InvalidSpec:
        case Errc::InvalidGrid:
        case Errc::ParseError:
            return true;
        default:
            return false;
    }
}

// fit ------------------------------------------------------------------------

struct FitArgs {
    std::string x_path, y_path, method = "cirls", out_path, new_x_path, fitted_out;
    SolverFlags solver;
};

inline std::filesystem::path fitted_path(const FitArgs& a) {
    if (!a.fitted_out.empty()) return a.fitted_out;
    std::filesystem::path p(a.out_path);
    return p.parent_path() / (p.stem().string() + "_fitted.csv");
}

inline int cmd_fit(const FitArgs& a, std::ostream& out) {
    const SolverConfig config = a.solver.config();
    const CompositionMatrix x = csv::read_composition_file(a.x_path);
    const CompositionMatrix y = csv::read_composition_file(a.y_path);
    if (x.rows() != y.rows()) {
        throw Error(Errc::DimensionMismatch, a.x_path + " has " + std::to_string(x.rows()) + " rows, " + a.y_path +
                                                 " has " + std::to_string(y.rows()));
    }
    std::optional<CompositionMatrix> new_x;
    if (!a.new_x_path.empty()) {
        new_x = csv::read_composition_file(a.new_x_path);
        if (new_x->cols() != x.cols()) {
            throw Error(Errc::DimensionMismatch, a.new_x_path + " must have " + std::to_string(x.cols()) + " columns");
        }
    }

    FitResult result = a.method == "em"      ? fit_em(x, y, config)
                       : a.method == "cls"   ? fit_cls_result(x, y, config.delta_guard)
                                             : fit_cirls(x, y, config);

    json doc{{"method", result.method},
             {"B", matrix_json(result.B.values())},
             {"predictors", names_or_default(x, "x")},
             {"responses", names_or_default(y, "y")},
             {"kld", result.kld},
             {"iterations", result.iterations},
             {"elapsed_s", result.elapsed_s},
             {"converged", result.converged},
             {"stop_reason", std::string(to_string(result.stop))},
             {"config", config_json(config)}};
    write_text(a.out_path, doc.dump(2) + "\n");

    if (new_x) {
        std::ostringstream csv_out;
        csv::write_table(csv_out, names_or_default(y, "y"), fitted(*new_x, result.B).values);
        write_text(fitted_path(a), csv_out.str());
    }
    out << result.method << ": kld " << csv::format_double(result.kld) << ", " << result.iterations
        << " iterations, " << (result.converged ? "converged" : "NOT converged") << '\n';
    return result.converged ? kExitOk : kExitNotConverged;
}

// simulate -------------------------------------------------------------------

struct SimulateArgs {
    Index n = 1000, dp = 5, dr = 3;
    std::string kind = "independent";
    double phi = 50.0;
    std::vector<double> alpha_x;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
};

inline json spec_json(const ScenarioSpec& spec) {
    const VectorXd a = spec.predictor_alpha();
    return json{{"n", spec.n},
                {"dp", spec.n_predictors},
                {"dr", spec.n_responses},
                {"kind", std::string(to_string(spec.kind))},
                {"alpha_x", std::vector<double>(a.data(), a.data() + a.size())},
                {"phi", spec.phi},
                {"seed", spec.seed}};
}

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    ScenarioSpec spec;
    spec.n = a.n;
    spec.n_predictors = a.dp;
    spec.n_responses = a.dr;
    spec.kind = parse_kind(a.kind);
    spec.phi = a.phi;
    if (!a.alpha_x.empty()) spec.alpha_x = Eigen::Map<const VectorXd>(a.alpha_x.data(), a.alpha_x.size());
    spec.validate();
    spec.seed = resolve_seed(a.seed, out);

    const Scenario data = generate(spec);
    const std::filesystem::path dir(a.out_dir);
    std::filesystem::create_directories(dir);
    const auto x_names = csv::default_names("x", spec.n_predictors);
    const auto y_names = csv::default_names("y", spec.n_responses);

    std::ostringstream xs, ys;
    csv::write_table(xs, x_names, data.X.values());
    csv::write_table(ys, y_names, data.Y.values());
    write_text(dir / "X.csv", xs.str());
    write_text(dir / "Y.csv", ys.str());

    json meta{{"spec", spec_json(spec)},
              {"generator", "Dirichlet via normalised gamma draws, mt19937_64 per substream"},
              {"files", {"X.csv", "Y.csv"}}};
    if (data.B_true) {
        std::ostringstream bs;
        csv::write_table(bs, y_names, data.B_true->values());
        write_text(dir / "B_true.csv", bs.str());
        meta["files"].push_back("B_true.csv");
        meta["B_true"] = matrix_json(data.B_true->values());
    }
    write_text(dir / "meta.json", meta.dump(2) + "\n");
    out << "wrote " << spec.n << " observations to " << dir.string() << '\n';
    return kExitOk;
}

// bench ----------------------------------------------------------------------

struct BenchArgs {
    std::vector<long long> sizes;
    int replicates = 20;
    std::string kind = "independent";
    Index dp = 5, dr = 3;
    double phi = 50.0;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    SolverFlags solver;
};

// Records whose (n, replicate) has both solvers.
inline std::vector<BenchRecord> complete_pairs(const std::vector<BenchRecord>& records) {
    std::map<std::tuple<Index, int, std::uint64_t>, int> count;
    for (const auto& r : records) ++count[{r.n, r.replicate, r.seed}];
    std::vector<BenchRecord> out;
    for (const auto& r : records) {
        if (count[{r.n, r.replicate, r.seed}] == 2) out.push_back(r);
    }
    return out;
}

inline int cmd_bench(const BenchArgs& a, std::ostream& out) {
    BenchGrid grid;
    for (long long s : a.sizes) grid.sizes.push_back(static_cast<Index>(s));
    grid.n_predictors = a.dp;
    grid.n_responses = a.dr;
    grid.kind = parse_kind(a.kind);
    grid.phi = a.phi;
    grid.replicates = a.replicates;
    grid.validate();
    const SolverConfig config = a.solver.config();
    grid.base_seed = resolve_seed(a.seed, out);

    const BenchRun run = run_grid(grid, config);
    const std::filesystem::path dir(a.out_dir);
    std::filesystem::create_directories(dir);

    std::ostringstream rec;
    rec << "n,solver,replicate,seed,elapsed_s,kld,iterations\n";
    for (const auto& r : run.records) {
        rec << r.n << ',' << to_string(r.solver) << ',' << r.replicate << ',' << r.seed << ','
            << csv::format_double(r.elapsed_s) << ',' << csv::format_double(r.kld) << ',' << r.iterations << '\n';
    }
    write_text(dir / "records.csv", rec.str());

    const auto paired = complete_pairs(run.records);
    json summary;
    summary["grid"] = json{{"sizes", a.sizes},       {"replicates", grid.replicates},
                           {"dp", grid.n_predictors}, {"dr", grid.n_responses},
                           {"kind", a.kind},          {"phi", grid.phi},
                           {"seed", grid.base_seed}};
    summary["config"] = config_json(config);
    summary["clock"] = json{{"name", "std::chrono::steady_clock"}, {"resolution_s", clock_resolution_s()}};

    std::ostringstream fig;
    fig << "n,speedup\n";
    json speedups = json::array();
    if (!paired.empty()) {
        for (const auto& [n, s] : speedup(paired)) {
            speedups.push_back(json{{"n", n}, {"speedup", s}});
            fig << n << ',' << csv::format_double(s) << '\n';
        }
    }
    summary["speedup"] = speedups;
    write_text(dir / "speedup.csv", fig.str());

    std::map<Index, double> max_gap;
    std::map<std::tuple<Index, int>, std::pair<double, double>> klds;
    for (const auto& r : paired) {
        auto& slot = klds[{r.n, r.replicate}];
        (r.solver == Solver::em ? slot.first : slot.second) = r.kld;
    }
    for (const auto& [key, v] : klds) {
        double& g = max_gap[std::get<0>(key)];
        g = std::max(g, std::abs(v.first - v.second));
    }
    json gaps = json::array();
    for (const auto& [n, g] : max_gap) gaps.push_back(json{{"n", n}, {"max_abs_kld_difference", g}});
    summary["kld_discrepancy"] = gaps;

    json scaling = json::object();
    for (Solver s : {Solver::em, Solver::cirls}) {
        try {
            const ScalingFit f = fit_scaling(paired, s);
            scaling[std::string(to_string(s))] =
                json{{"alpha", f.alpha}, {"beta", f.beta}, {"r_squared", f.r_squared}, {"sizes", f.sizes}};
            summary["beta_" + std::string(to_string(s))] = f.beta;
        } catch (const Error& e) {
            if (e.code() != Errc::InsufficientSizes) throw;
            summary["scaling_note"] = std::string("scaling fit omitted: ") + e.what();
        }
    }
    summary["scaling"] = scaling;

    json failures = json::array();
    for (const auto& f : run.failures) {
        failures.push_back(json{{"n", f.n},
                                {"solver", std::string(to_string(f.solver))},
                                {"replicate", f.replicate},
                                {"seed", f.seed},
                                {"error", f.message}});
    }
    summary["failures"] = failures;
    write_text(dir / "summary.json", summary.dump(2) + "\n");

    out << "bench: " << run.records.size() << " records, " << run.failures.size() << " failures -> " << dir.string()
        << '\n';
    return kExitOk;
}

}  // namespace detail

/// Runs the CLI on `args` (program name excluded).
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Transformation-free linear regression for compositional data", "tflr"};
    app.require_subcommand(1);

    detail::FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "Fit B from CSV compositions");
    fit->add_option("--x", fit_args.x_path, "Predictor composition CSV")->required();
    fit->add_option("--y", fit_args.y_path, "Response composition CSV")->required();
    fit->add_option("--method", fit_args.method, "Estimator")
        ->check(CLI::IsMember({"em", "cirls", "cls"}))
        ->capture_default_str();
    fit->add_option("--out", fit_args.out_path, "Output JSON path")->required();
    fit->add_option("--new-x", fit_args.new_x_path, "Predictor CSV to produce fitted values for");
    fit->add_option("--fitted-out", fit_args.fitted_out, "Where to write fitted values (default <out>_fitted.csv)");
    fit_args.solver.add_to(*fit);

    detail::SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "Generate Dirichlet scenario data");
    sim->add_option("--n", sim_args.n, "Sample size")->capture_default_str();
    sim->add_option("--dp", sim_args.dp, "Predictor components")->capture_default_str();
    sim->add_option("--dr", sim_args.dr, "Response components")->capture_default_str();
    sim->add_option("--kind", sim_args.kind)
        ->check(CLI::IsMember({"independent", "dependent"}))
        ->capture_default_str();
    sim->add_option("--phi", sim_args.phi, "Response concentration (dependent kind)")->capture_default_str();
    sim->add_option("--alpha-x", sim_args.alpha_x, "Predictor concentrations")->delimiter(',');
    sim->add_option("--seed", sim_args.seed, "Random seed (generated and printed when absent)");
    sim->add_option("--out", sim_args.out_dir, "Output directory")->required();

    detail::BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "Time EM against CIRLS over a sample-size grid");
    bench->add_option("--sizes", bench_args.sizes, "Sample sizes, increasing")->delimiter(',')->required();
    bench->add_option("--replicates", bench_args.replicates)->capture_default_str();
    bench->add_option("--kind", bench_args.kind)
        ->check(CLI::IsMember({"independent", "dependent"}))
        ->capture_default_str();
    bench->add_option("--dp", bench_args.dp)->capture_default_str();
    bench->add_option("--dr", bench_args.dr)->capture_default_str();
    bench->add_option("--phi", bench_args.phi)->capture_default_str();
    bench->add_option("--seed", bench_args.seed, "Base seed (generated and printed when absent)");
    bench->add_option("--out", bench_args.out_dir, "Output directory")->required();
    bench_args.solver.add_to(*bench);

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kExitInput;
    }

    try {
        if (fit->parsed()) return detail::cmd_fit(fit_args, out);
        if (sim->parsed()) return detail::cmd_simulate(sim_args, out);
        return detail::cmd_bench(bench_args, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return detail::is_input_error(e.code()) ? kExitInput : kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace tflr::cli
