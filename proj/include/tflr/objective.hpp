#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "tflr/composition.hpp"

namespace tflr {

/// Fitted responses X·B. Rows are convex combinations of simplex rows.
struct FittedMatrix {
    MatrixXd values;

    FittedMatrix() = default;
    explicit FittedMatrix(MatrixXd v) : values(std::move(v)) {}

    Index rows() const noexcept { return values.rows(); }
    Index cols() const noexcept { return values.cols(); }
};

namespace detail {

inline void require_same_shape(const MatrixXd& a, const MatrixXd& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(Errc::DimensionMismatch,
                    std::string(what) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

// sum_ik y log(y / max(m, delta)); y == 0 terms are skipped.
inline double kld_raw(const MatrixXd& y, const MatrixXd& m, double delta) {
    double total = 0.0;
    for (Index k = 0; k < y.cols(); ++k) {
        for (Index i = 0; i < y.rows(); ++i) {
            const double yv = y(i, k);
            if (yv == 0.0) continue;
            total += yv * std::log(yv / std::max(m(i, k), delta));
        }
    }
    return total;
}

inline double working_loglik_raw(const MatrixXd& y, const MatrixXd& m, double delta) {
    double total = 0.0;
    for (Index k = 0; k < y.cols(); ++k) {
        for (Index i = 0; i < y.rows(); ++i) {
            const double yv = y(i, k);
            if (yv == 0.0) continue;
            total += yv * std::log(std::max(m(i, k), delta));
        }
    }
    return total;
}

}  // namespace detail

inline FittedMatrix fitted(const MatrixXd& x, const CoefficientMatrix& b) {
    if (x.cols() != b.rows()) {
        throw Error(Errc::DimensionMismatch, "X has " + std::to_string(x.cols()) + " columns but B has " +
                                                 std::to_string(b.rows()) + " rows");
    }
    return FittedMatrix(x * b.values());
}

inline FittedMatrix fitted(const CompositionMatrix& x, const CoefficientMatrix& b) {
    return fitted(x.values(), b);
}

/// Kullback-Leibler divergence from observed to fitted compositions, summed
/// over observations. Fitted entries are floored at `delta`.
inline double kld(const CompositionMatrix& y, const FittedMatrix& m, double delta = 1e-8) {
    detail::require_same_shape(y.values(), m.values, "kld");
    return detail::kld_raw(y.values(), m.values, delta);
}

/// The part of the objective that depends on the fit: sum y log max(m, delta).
inline double working_loglik(const CompositionMatrix& y, const FittedMatrix& m, double delta = 1e-8) {
    detail::require_same_shape(y.values(), m.values, "working_loglik");
    return detail::working_loglik_raw(y.values(), m.values, delta);
}

}  // namespace tflr
