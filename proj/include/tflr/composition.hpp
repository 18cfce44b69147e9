#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tflr/error.hpp"

namespace tflr {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Row-sum tolerance for measured input (CSV, user supplied matrices).
inline constexpr double kIngestTolerance = 1e-8;
/// Row-sum tolerance that solver-produced matrices are held to.
inline constexpr double kComputedTolerance = 1e-10;

namespace detail {

inline std::string row_context(Index row) { return "row " + std::to_string(row + 1); }

// Shared check for anything that must have simplex rows.
inline void check_simplex_rows(const MatrixXd& values, double tol) {
    for (Index i = 0; i < values.rows(); ++i) {
        double sum = 0.0;
        for (Index k = 0; k < values.cols(); ++k) {
            const double v = values(i, k);
            if (!std::isfinite(v)) {
                throw Error(Errc::NonFinite, row_context(i) + ", column " + std::to_string(k + 1));
            }
            if (v < -tol) {
                throw Error(Errc::NegativeEntry, row_context(i) + ", column " + std::to_string(k + 1) +
                                                     " has value " + std::to_string(v));
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) {
            throw Error(Errc::RowSumViolation, row_context(i) + " sums to " + std::to_string(sum));
        }
    }
}

}  // namespace detail

/// An n x D matrix whose rows lie on the standard simplex.
/// Instances only come out of validate_composition or closure, so holding
/// one is proof that the invariants were checked.
class CompositionMatrix {
public:
    Index rows() const noexcept { return values_.rows(); }
    Index cols() const noexcept { return values_.cols(); }
    const MatrixXd& values() const noexcept { return values_; }
    double operator()(Index i, Index k) const { return values_(i, k); }
    const std::vector<std::string>& names() const noexcept { return names_; }

    bool operator==(const CompositionMatrix& other) const {
        return values_ == other.values_ && names_ == other.names_;
    }

private:
    CompositionMatrix(MatrixXd values, std::vector<std::string> names)
        : values_(std::move(values)), names_(std::move(names)) {}

    friend CompositionMatrix validate_composition(MatrixXd values, double tol,
                                                  std::vector<std::string> names);

    MatrixXd values_;
    std::vector<std::string> names_;
};

/// Checks that `values` is a valid composition matrix and wraps it unchanged.
/// Entries in [-tol, 0) are tolerated as rounding; nothing is rescaled.
inline CompositionMatrix validate_composition(MatrixXd values, double tol = kIngestTolerance,
                                              std::vector<std::string> names = {}) {
    if (!(tol > 0.0)) throw Error(Errc::InvalidConfig, "tolerance must be positive");
    if (values.rows() < 1 || values.cols() < 1) throw Error(Errc::EmptyMatrix, "matrix has no entries");
    if (values.cols() < 2) {
        throw Error(Errc::TooFewComponents, "need at least 2 components, got " + std::to_string(values.cols()));
    }
    if (!names.empty() && static_cast<Index>(names.size()) != values.cols()) {
        throw Error(Errc::DimensionMismatch, "got " + std::to_string(names.size()) + " names for " +
                                                 std::to_string(values.cols()) + " columns");
    }
    detail::check_simplex_rows(values, tol);
    return CompositionMatrix(std::move(values), std::move(names));
}

/// Divides each row of a non-negative matrix by its sum.
inline CompositionMatrix closure(MatrixXd values, std::vector<std::string> names = {}) {
    if (values.rows() < 1 || values.cols() < 1) throw Error(Errc::EmptyMatrix, "matrix has no entries");
    for (Index i = 0; i < values.rows(); ++i) {
        double sum = 0.0;
        for (Index k = 0; k < values.cols(); ++k) {
            if (!std::isfinite(values(i, k))) throw Error(Errc::NonFinite, detail::row_context(i));
            if (values(i, k) < 0.0) {
                throw Error(Errc::NegativeEntry, detail::row_context(i) + ", column " + std::to_string(k + 1));
            }
            sum += values(i, k);
        }
        if (!(sum > 0.0)) throw Error(Errc::ZeroRowSum, detail::row_context(i));
        values.row(i) /= sum;
    }
    return validate_composition(std::move(values), kIngestTolerance, std::move(names));
}

/// The D_p x D_r regression coefficient matrix; every row is on the simplex.
class CoefficientMatrix {
public:
    /// Validates user-supplied coefficients (tolerance as for ingestion).
    static CoefficientMatrix from_values(MatrixXd values, double tol = kIngestTolerance) {
        if (values.rows() < 1 || values.cols() < 2) {
            throw Error(Errc::TooFewComponents, "coefficient matrix must be at least 1 x 2");
        }
        detail::check_simplex_rows(values, tol);
        if ((values.array() > 1.0 + tol).any()) {
            throw Error(Errc::RowSumViolation, "coefficient entry exceeds 1");
        }
        return CoefficientMatrix(std::move(values));
    }

    /// Cleans a solver iterate: negatives (QP round-off) are cut to zero and
    /// rows are re-closed, so the result meets kComputedTolerance.
    static CoefficientMatrix renormalized(MatrixXd values) {
        for (Index j = 0; j < values.rows(); ++j) {
            double sum = 0.0;
            for (Index k = 0; k < values.cols(); ++k) {
                double& v = values(j, k);
                if (!std::isfinite(v)) throw Error(Errc::NonFinite, "coefficient row " + std::to_string(j + 1));
                if (v < 0.0) v = 0.0;
                sum += v;
            }
            if (!(sum > 0.0)) throw Error(Errc::ZeroRowSum, "coefficient row " + std::to_string(j + 1));
            values.row(j) /= sum;
        }
        return CoefficientMatrix(std::move(values));
    }

    Index rows() const noexcept { return values_.rows(); }
    Index cols() const noexcept { return values_.cols(); }
    const MatrixXd& values() const noexcept { return values_; }
    double operator()(Index j, Index k) const { return values_(j, k); }

    bool operator==(const CoefficientMatrix& other) const { return values_ == other.values_; }

private:
    explicit CoefficientMatrix(MatrixXd values) : values_(std::move(values)) {}
    friend CoefficientMatrix uniform_coefficients(Index, Index);

    MatrixXd values_;
};

/// Every entry 1/D_r, the feasible analogue of the EM's "flat" start.
inline CoefficientMatrix uniform_coefficients(Index n_predictors, Index n_responses) {
    if (n_predictors < 1 || n_responses < 2) {
        throw Error(Errc::TooFewComponents, "uniform coefficients need D_p >= 1 and D_r >= 2");
    }
    return CoefficientMatrix(
        MatrixXd::Constant(n_predictors, n_responses, 1.0 / static_cast<double>(n_responses)));
}

enum class InitKind { uniform, cls, given };

struct SolverConfig {
    double eps_converge = 1e-8;
    double delta_guard = 1e-8;  // floor on fitted values inside logs and ratios
    double eta_clamp = 1e-10;   // CIRLS clamps fitted means to [eta, 1 - eta]
    int max_iter = 10000;
    InitKind init = InitKind::cls;
    std::optional<CoefficientMatrix> init_B;  // used when init == given
    bool record_trace = false;

    void validate() const {
        if (!(eps_converge > 0.0)) throw Error(Errc::InvalidConfig, "eps_converge must be positive");
        if (!(delta_guard > 0.0)) throw Error(Errc::InvalidConfig, "delta_guard must be positive");
        if (!(eta_clamp > 0.0 && eta_clamp < 0.5)) throw Error(Errc::InvalidConfig, "eta_clamp must be in (0, 0.5)");
        if (max_iter < 1) throw Error(Errc::InvalidConfig, "max_iter must be >= 1");
        if (init == InitKind::given && !init_B) {
            throw Error(Errc::InvalidConfig, "init = given requires a coefficient matrix");
        }
    }
};

inline std::string_view to_string(InitKind kind) noexcept {
    switch (kind) {
        case InitKind::uniform: return "uniform";
        case InitKind::cls: return "cls";
        case InitKind::given: return "given";
    }
    return "unknown";
}

}  // namespace tflr
