#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "tflr/cirls.hpp"
#include "tflr/datagen.hpp"
#include "tflr/em.hpp"

namespace tflr {

enum class Solver { em, cirls };

inline std::string_view to_string(Solver s) noexcept { return s == Solver::em ? "em" : "cirls"; }

struct BenchGrid {
    std::vector<Index> sizes;
    Index n_predictors = 5;
    Index n_responses = 3;
    ScenarioKind kind = ScenarioKind::independent;
    double phi = 50.0;
    int replicates = 20;
    std::uint64_t base_seed = 0;

    void validate() const {
        if (sizes.empty()) throw Error(Errc::InvalidGrid, "no sample sizes");
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            if (sizes[i] < 2) throw Error(Errc::InvalidGrid, "sample sizes must be >= 2");
            if (i > 0 && sizes[i] <= sizes[i - 1]) throw Error(Errc::InvalidGrid, "sizes must be strictly increasing");
        }
        if (replicates < 1) throw Error(Errc::InvalidGrid, "replicates must be >= 1");
        if (n_predictors < 2 || n_responses < 2) throw Error(Errc::InvalidGrid, "D_p and D_r must be >= 2");
        if (!(phi > 0.0)) throw Error(Errc::InvalidGrid, "phi must be positive");
    }
};

struct BenchRecord {
    Index n = 0;
    Solver solver = Solver::em;
    double elapsed_s = 0.0;
    double kld = 0.0;
    int iterations = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    bool converged = false;
};

struct BenchFailure {
    Index n = 0;
    Solver solver = Solver::em;
    int replicate = 0;
    std::uint64_t seed = 0;
    std::string message;
};

struct BenchRun {
    std::vector<BenchRecord> records;
    std::vector<BenchFailure> failures;
};

/// Power law t = exp(alpha) * n^beta fitted on the log scale.
struct ScalingFit {
    double alpha = 0.0;
    double beta = 0.0;
    double r_squared = 0.0;
    std::size_t sizes = 0;
};

/// Tick of the clock used for every timing, in seconds.
inline double clock_resolution_s() {
    using period = std::chrono::steady_clock::period;
    return static_cast<double>(period::num) / static_cast<double>(period::den);
}

/// Seed of grid cell (size, replicate); both solvers share it.
inline std::uint64_t cell_seed(std::uint64_t base_seed, Index n, int replicate) {
    return derive_seed(derive_seed(base_seed, static_cast<std::uint64_t>(n)), static_cast<std::uint64_t>(replicate));
}

namespace detail {

inline FitResult run_solver(Solver solver, const Scenario& data, const SolverConfig& config) {
    return solver == Solver::em ? fit_em(data.X, data.Y, config) : fit_cirls(data.X, data.Y, config);
}

}  // namespace detail

/// Times both solvers on the same simulated data for every (size, replicate).
/// Cells run sequentially; a failing fit is recorded and the grid continues.
inline BenchRun run_grid(const BenchGrid& grid, const SolverConfig& config) {
    grid.validate();
    config.validate();

    auto spec_for = [&](Index n, std::uint64_t seed) {
        ScenarioSpec spec;
        spec.n = n;
        spec.n_predictors = grid.n_predictors;
        spec.n_responses = grid.n_responses;
        spec.kind = grid.kind;
        spec.phi = grid.phi;
        spec.seed = seed;
        return spec;
    };

    // warm-up, discarded
    {
        const Scenario warm = generate(spec_for(grid.sizes.front(), derive_seed(grid.base_seed, ~0ULL)));
        for (Solver s : {Solver::em, Solver::cirls}) {
            try {
                (void)detail::run_solver(s, warm, config);
            } catch (const Error&) {
            }
        }
    }

    BenchRun run;
    for (Index n : grid.sizes) {
        for (int rep = 0; rep < grid.replicates; ++rep) {
            const std::uint64_t seed = cell_seed(grid.base_seed, n, rep);
            const Scenario data = generate(spec_for(n, seed));
            for (Solver s : {Solver::em, Solver::cirls}) {
                try {
                    const auto start = std::chrono::steady_clock::now();
                    const FitResult fit = detail::run_solver(s, data, config);
                    const double elapsed =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                    run.records.push_back(BenchRecord{n, s, std::max(elapsed, clock_resolution_s()), fit.kld,
                                                      std::max(fit.iterations, 1), rep, seed, fit.converged});
                } catch (const Error& e) {
                    run.failures.push_back(BenchFailure{n, s, rep, seed, e.what()});
                }
            }
        }
    }
    return run;
}

/// Mean over replicates of elapsed_em / elapsed_cirls, per sample size.
inline std::vector<std::pair<Index, double>> speedup(const std::vector<BenchRecord>& records) {
    struct Pair {
        const BenchRecord* em = nullptr;
        const BenchRecord* cirls = nullptr;
    };
    std::map<std::tuple<Index, int, std::uint64_t>, Pair> cells;
    for (const auto& r : records) {
        auto& cell = cells[{r.n, r.replicate, r.seed}];
        (r.solver == Solver::em ? cell.em : cell.cirls) = &r;
    }
    std::map<Index, std::pair<double, int>> sums;
    for (const auto& [key, cell] : cells) {
        if (!cell.em || !cell.cirls) {
            throw Error(Errc::UnpairedRecords, "n = " + std::to_string(std::get<0>(key)) + ", replicate " +
                                                   std::to_string(std::get<1>(key)) + " lacks a partner");
        }
        auto& acc = sums[std::get<0>(key)];
        acc.first += cell.em->elapsed_s / cell.cirls->elapsed_s;
        acc.second += 1;
    }
    std::vector<std::pair<Index, double>> out;
    for (const auto& [n, acc] : sums) out.emplace_back(n, acc.first / acc.second);
    return out;
}

/// Least squares of log(mean time) on log(n) over the sizes present for `solver`.
inline ScalingFit fit_scaling(const std::vector<BenchRecord>& records, Solver solver) {
    std::map<Index, std::pair<double, int>> per_size;
    for (const auto& r : records) {
        if (r.solver != solver) continue;
        auto& acc = per_size[r.n];
        acc.first += r.elapsed_s;
        acc.second += 1;
    }
    if (per_size.size() < 3) {
        throw Error(Errc::InsufficientSizes, "need at least 3 distinct sizes, have " + std::to_string(per_size.size()));
    }
    std::vector<double> lx, ly;
    for (const auto& [n, acc] : per_size) {
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(acc.first / acc.second));
    }
    const double k = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    ScalingFit fit;
    fit.beta = sxy / sxx;
    fit.alpha = my - fit.beta * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double e = ly[i] - fit.alpha - fit.beta * lx[i];
        ss_res += e * e;
    }
    // a flat series is fitted exactly by beta = 0
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    fit.sizes = per_size.size();
    return fit;
}

}  // namespace tflr
