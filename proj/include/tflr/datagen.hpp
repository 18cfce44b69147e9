#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "tflr/composition.hpp"
#include "tflr/objective.hpp"

namespace tflr {

enum class ScenarioKind { independent, dependent };

inline std::string_view to_string(ScenarioKind kind) noexcept {
    return kind == ScenarioKind::independent ? "independent" : "dependent";
}

struct ScenarioSpec {
    Index n = 1000;
    Index n_predictors = 5;
    Index n_responses = 3;
    ScenarioKind kind = ScenarioKind::independent;
    VectorXd alpha_x;  // empty means all ones
    double phi = 50.0;
    std::uint64_t seed = 0;

    VectorXd predictor_alpha() const {
        return alpha_x.size() == 0 ? VectorXd::Ones(n_predictors) : alpha_x;
    }

    void validate() const {
        if (n < 1) throw Error(Errc::InvalidSpec, "n must be >= 1");
        if (n_predictors < 2) throw Error(Errc::InvalidSpec, "D_p must be >= 2");
        if (n_responses < 2) throw Error(Errc::InvalidSpec, "D_r must be >= 2");
        if (!(phi > 0.0) || !std::isfinite(phi)) throw Error(Errc::InvalidSpec, "phi must be positive");
        if (alpha_x.size() != 0) {
            if (alpha_x.size() != n_predictors) throw Error(Errc::InvalidSpec, "alpha_x needs D_p entries");
            if (!(alpha_x.array() > 0.0).all() || !alpha_x.allFinite()) {
                throw Error(Errc::InvalidSpec, "alpha_x entries must be positive");
            }
        }
    }
};

struct Scenario {
    CompositionMatrix X;
    CompositionMatrix Y;
    std::optional<CoefficientMatrix> B_true;
};

/// Derives an independent seed for a named substream (splitmix64 finaliser).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace detail {

// One Dirichlet(alpha) draw by normalised gammas. Zero concentrations give
// structural zeros; gammas below 1e-300 are flushed before normalising.
template <class Rng>
Eigen::RowVectorXd dirichlet_row(const VectorXd& alpha, Rng& rng) {
    const Index d = alpha.size();
    Eigen::RowVectorXd out(d);
    for (int attempt = 0; attempt < 64; ++attempt) {
        double sum = 0.0;
        for (Index k = 0; k < d; ++k) {
            double g = 0.0;
            if (alpha(k) > 0.0) {
                std::gamma_distribution<double> gamma(alpha(k), 1.0);
                g = gamma(rng);
                if (!(g >= 1e-300)) g = 0.0;
            }
            out(k) = g;
            sum += g;
        }
        if (sum > 0.0) {
            out /= sum;
            double resum = 0.0;
            for (Index k = 0; k < d; ++k) {
                if (out(k) < 1e-300) out(k) = 0.0;
                resum += out(k);
            }
            out /= resum;
            return out;
        }
    }
    // every concentration is tiny: put the mass where the mean is largest
    Index top = 0;
    alpha.maxCoeff(&top);
    out.setZero();
    out(top) = 1.0;
    return out;
}

}  // namespace detail

/// n independent Dirichlet(alpha) rows, reproducible from `seed`.
inline CompositionMatrix sample_dirichlet(const VectorXd& alpha, Index n, std::uint64_t seed) {
    if (alpha.size() < 2) throw Error(Errc::InvalidAlpha, "need at least 2 concentration values");
    if (!(alpha.array() > 0.0).all() || !alpha.allFinite()) {
        throw Error(Errc::InvalidAlpha, "concentrations must be positive and finite");
    }
    if (n < 1) throw Error(Errc::InvalidAlpha, "n must be >= 1");
    std::mt19937_64 rng(seed);
    MatrixXd values(n, alpha.size());
    for (Index i = 0; i < n; ++i) values.row(i) = detail::dirichlet_row(alpha, rng);
    return validate_composition(std::move(values));
}

/// Simulated (X, Y). Independent: both Dirichlet(1, ..., 1). Dependent:
/// X ~ Dirichlet(alpha_x), rows of B_true ~ Dirichlet(1, ..., 1) and
/// Y_i ~ Dirichlet(phi * x_i B_true), so E[Y | X] = X B_true.
inline Scenario generate(const ScenarioSpec& spec) {
    spec.validate();
    CompositionMatrix x = sample_dirichlet(spec.predictor_alpha(), spec.n, derive_seed(spec.seed, 0));
    if (spec.kind == ScenarioKind::independent) {
        CompositionMatrix y = sample_dirichlet(VectorXd::Ones(spec.n_responses), spec.n, derive_seed(spec.seed, 1));
        return Scenario{std::move(x), std::move(y), std::nullopt};
    }

    const CompositionMatrix rows = sample_dirichlet(VectorXd::Ones(spec.n_responses), spec.n_predictors,
                                                    derive_seed(spec.seed, 2));
    CoefficientMatrix b_true = CoefficientMatrix::renormalized(rows.values());
    const MatrixXd mean = x.values() * b_true.values();
    std::mt19937_64 rng(derive_seed(spec.seed, 1));
    MatrixXd y(spec.n, spec.n_responses);
    for (Index i = 0; i < spec.n; ++i) {
        const VectorXd alpha = spec.phi * mean.row(i).transpose();
        y.row(i) = detail::dirichlet_row(alpha, rng);
    }
    return Scenario{std::move(x), validate_composition(std::move(y)), std::move(b_true)};
}

}  // namespace tflr
