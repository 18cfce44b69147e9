// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "tflr/tflr.hpp"

using namespace tflr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Pair {
    double em = 0.0;
    double cirls = 0.0;
    Index n = 0;
};

std::vector<Pair> paired_kld(const BenchRun& run) {
    std::vector<Pair> out;
    for (const auto& r : run.records) {
        if (r.solver != Solver::em) continue;
        for (const auto& c : run.records) {
            if (c.solver == Solver::cirls && c.n == r.n && c.replicate == r.replicate && c.seed == r.seed) {
                out.push_back({r.kld, c.kld, r.n});
            }
        }
    }
    return out;
}

BenchGrid grid_of(std::vector<Index> sizes, ScenarioKind kind, int reps, Index dp, Index dr, std::uint64_t seed) {
    BenchGrid g;
    g.sizes = std::move(sizes);
    g.kind = kind;
    g.replicates = reps;
    g.n_predictors = dp;
    g.n_responses = dr;
    g.base_seed = seed;
    return g;
}

Outcome discrepancy(ScenarioKind kind, double bound, bool check_direction) {
    const auto run = run_grid(grid_of({1000}, kind, 20, 5, 3, kind == ScenarioKind::independent ? 101 : 202),
                              SolverConfig{});
    const auto pairs = paired_kld(run);
    double worst = 0.0;
    int within = 0, higher = 0;
    for (const auto& p : pairs) {
        const double gap = std::abs(p.em - p.cirls);
        worst = std::max(worst, gap);
        within += gap <= bound;
        higher += p.cirls >= p.em - 1e-6;
    }
    const bool complete = pairs.size() == 20 && run.failures.empty();
    bool pass = complete && within == 20;
    std::string detail = fmt("%d/20 pairs with |dKLD| <= %g, max |dKLD| = %.3e (%.3e per observation)", within,
                             bound, worst, worst / 1000.0);
    if (check_direction) {
        pass = pass && higher >= 18;
        detail += fmt(", cirls >= em - 1e-6 in %d/20", higher);
    }
    if (!complete) detail += fmt(", %zu failed fits", run.failures.size());
    return {pass, detail};
}

Outcome criterion_speedup() {
    const auto run = run_grid(grid_of({10000}, ScenarioKind::dependent, 10, 10, 5, 303), SolverConfig{});
    const auto s = speedup(run.records);
    const double v = s.empty() ? 0.0 : s.front().second;
    return {run.failures.empty() && v >= 2.0, fmt("mean em/cirls time ratio %.2f over 10 pairs", v)};
}

Outcome criterion_scaling() {
    bool pass = true;
    std::string detail;
    for (ScenarioKind kind : {ScenarioKind::independent, ScenarioKind::dependent}) {
        const auto run =
            run_grid(grid_of({1000, 2000, 5000, 10000, 20000}, kind, 100, 5, 3, 404), SolverConfig{});
        pass = pass && run.failures.empty();
        for (Solver s : {Solver::em, Solver::cirls}) {
            const auto f = fit_scaling(run.records, s);
            pass = pass && f.beta > 0.0 && f.beta <= 1.3 && f.r_squared >= 0.9;
            detail += fmt("%s/%s beta %.3f R2 %.3f; ", std::string(to_string(kind)).c_str(),
                          std::string(to_string(s)).c_str(), f.beta, f.r_squared);
        }
    }
    return {pass, detail};
}

Outcome criterion_em_monotone() {
    std::mt19937_64 rng(505);
    double worst = -std::numeric_limits<double>::infinity();
    int steps = 0;
    for (int t = 0; t < 50; ++t) {
        ScenarioSpec spec;
        spec.n = 20 + static_cast<Index>(rng() % 481);
        spec.n_predictors = 2 + static_cast<Index>(rng() % 6);
        spec.n_responses = 2 + static_cast<Index>(rng() % 6);
        spec.kind = t % 2 ? ScenarioKind::dependent : ScenarioKind::independent;
        spec.seed = rng();
        const auto data = generate(spec);
        SolverConfig cfg;
        cfg.record_trace = true;
        if (t % 3 == 0) cfg.init = InitKind::uniform;
        const auto fit = fit_em(data.X, data.Y, cfg);
        for (std::size_t i = 1; i < fit.trace.size(); ++i) {
            worst = std::max(worst, fit.trace[i] - fit.trace[i - 1]);
            ++steps;
        }
    }
    return {worst <= 1e-12, fmt("max KLD increase %.3e over %d EM steps in 50 fits", worst, steps)};
}

Outcome criterion_qp_oracle() {
    std::mt19937_64 rng(606);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    double worst_gap = 0.0, worst_kkt = 0.0;
    for (int t = 0; t < 200; ++t) {
        const Index m = 2 + t % 2;
        MatrixXd q(m, m);
        for (Index i = 0; i < q.size(); ++i) q(i) = g(rng);
        QpProblem p;
        p.hessian = q.transpose() * q + 0.05 * MatrixXd::Identity(m, m);
        p.linear.resize(m);
        for (Index i = 0; i < m; ++i) p.linear(i) = u(rng);
        p.constraints = simplex_constraints(m);
        const auto sol = solve_qp(p);
        worst_gap = std::max(worst_gap, std::abs(sol.objective - oracle::grid_min_simplex_qp(p.hessian, p.linear, 1e-3)));
        const auto k = oracle::check_kkt(p, sol.beta);
        worst_kkt = std::max({worst_kkt, k.max_violation, k.stationarity, -k.min_inequality_mult});
    }
    return {worst_gap <= 2e-3 && worst_kkt <= 1e-7,
            fmt("max |obj - grid| %.3e, max KKT residual %.3e over 200 QPs", worst_gap, worst_kkt)};
}

Outcome criterion_solver_oracle() {
    std::mt19937_64 rng(707);
    double worst_em = 0.0, worst_cirls = 0.0;
    for (int t = 0; t < 40; ++t) {
        const Index n = 1 + t % 5;
        const MatrixXd x = oracle::random_simplex_rows(n, 2, rng);
        const MatrixXd y = oracle::random_simplex_rows(n, 2, rng);
        const double grid = oracle::grid_min_kld_2x2(x, y, 1e-8, 1e-3);
        const auto cx = validate_composition(x);
        const auto cy = validate_composition(y);
        worst_em = std::max(worst_em, std::abs(fit_em(cx, cy).kld - grid));
        worst_cirls = std::max(worst_cirls, std::abs(fit_cirls(cx, cy).kld - grid));
    }
    return {worst_em <= 2e-3 && worst_cirls <= 2e-3,
            fmt("max |KLD - grid|: em %.3e, cirls %.3e over 40 problems", worst_em, worst_cirls)};
}

bool simplex_ok(const CoefficientMatrix& b) {
    return b.values().allFinite() && b.values().minCoeff() >= -1e-9 &&
           (b.values().rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9;
}

Outcome criterion_feasibility() {
    std::mt19937_64 rng(808);
    int bad = 0, fits = 0;
    for (int t = 0; t < 100; ++t) {
        const Index n = 5 + static_cast<Index>(rng() % 200);
        const Index p = 2 + static_cast<Index>(rng() % 5);
        const Index r = 2 + static_cast<Index>(rng() % 5);
        MatrixXd x = oracle::random_simplex_rows(n, p, rng);
        MatrixXd y = oracle::random_simplex_rows(n, r, rng);
        if (t % 4 == 1) x.col(static_cast<Index>(rng() % p)).setZero();  // dead predictor row
        if (t % 4 == 2) y.col(static_cast<Index>(rng() % r)).setZero();  // fitted zeros hit the delta guard
        if (t % 4 == 3) {                                                  // vertices push mu to 0 and 1 (eta clamp)
            for (Index i = 0; i < n; i += 2) {
                x.row(i).setZero();
                x(i, i % p) = 1.0;
                y.row(i).setZero();
                y(i, i % r) = 1.0;
            }
        }
        const auto cx = closure(x);
        const auto cy = closure(y);
        for (int s = 0; s < 3; ++s) {
            ++fits;
            try {
                const FitResult f = s == 0 ? fit_em(cx, cy) : s == 1 ? fit_cirls(cx, cy) : fit_cls_result(cx, cy);
                if (!simplex_ok(f.B) || !std::isfinite(f.kld)) ++bad;
            } catch (const std::exception&) {
                ++bad;
            }
        }
    }
    return {bad == 0, fmt("%d/%d fits returned an invalid B or non-finite KLD", bad, fits)};
}

Outcome criterion_reduction() {
    std::mt19937_64 rng(909);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const Index n = 10 + 20 * t, p = 2 + t % 5, r = 2 + t % 4;
        const auto x = validate_composition(oracle::random_simplex_rows(n, p, rng));
        const auto y = validate_composition(oracle::random_simplex_rows(n, r, rng));
        const auto step = cirls_step(x, y, WeightMatrix::ones(n, r));
        const auto cls = fit_cls(x, y);
        worst = std::max(worst, (fitted(x, step).values - fitted(x, cls).values).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-8, fmt("max fitted difference %.3e over 20 problems", worst)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome criterion_determinism() {
    const fs::path root = fs::temp_directory_path() / "tflr_acceptance_det";
    fs::remove_all(root);
    std::ostringstream sink;
    bool same = true;
    for (const char* kind : {"independent", "dependent"}) {
        for (const char* run : {"a", "b"}) {
            cli::run({"simulate", "--n", "500", "--kind", kind, "--seed", "1234", "--out",
                      (root / kind / run).string()},
                     sink, sink);
        }
        for (const char* file : {"X.csv", "Y.csv", "meta.json"}) {
            const auto a = slurp(root / kind / "a" / file);
            same = same && !a.empty() && a == slurp(root / kind / "b" / file);
        }
    }
    const auto x = csv::read_composition_file((root / "dependent" / "a" / "X.csv").string());
    const auto y = csv::read_composition_file((root / "dependent" / "a" / "Y.csv").string());
    for (int s = 0; s < 3; ++s) {
        const auto fit = [&] { return s == 0 ? fit_em(x, y) : s == 1 ? fit_cirls(x, y) : fit_cls_result(x, y); };
        const FitResult a = fit(), b = fit();
        same = same && a.B.values() == b.B.values() && a.kld == b.kld && a.iterations == b.iterations;
    }
    fs::remove_all(root);
    return {same, same ? "simulate bytes and em/cirls/cls fits identical across runs" : "outputs differ"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> check;
    };
    const std::vector<Criterion> criteria = {
        {"C1 KLD discrepancy, independent data",
         [] { return discrepancy(ScenarioKind::independent, 1e-5, false); }},
        {"C2 KLD discrepancy and direction, dependent data",
         [] { return discrepancy(ScenarioKind::dependent, 1e-3, true); }},
        {"C3 speed-up direction", criterion_speedup},
        {"C4 scalability exponents", criterion_scaling},
        {"C5 EM monotonicity", criterion_em_monotone},
        {"C6 QP oracle equivalence", criterion_qp_oracle},
        {"C7 EM/CIRLS oracle equivalence", criterion_solver_oracle},
        {"C8 feasibility suite", criterion_feasibility},
        {"C9 reduction identity", criterion_reduction},
        {"C10 determinism", criterion_determinism},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !o.pass;
        std::printf("%s  %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
