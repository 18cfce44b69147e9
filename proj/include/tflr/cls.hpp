#pragma once

#include "tflr/composition.hpp"
#include "tflr/fit_result.hpp"
#include "tflr/objective.hpp"
#include "tflr/weighted_qp.hpp"

namespace tflr {

/// Least-squares fit of B under simplex rows: min ||Y - XB||_F^2.
/// Solved as one QP whose hessian blocks are all X'X.
inline CoefficientMatrix fit_cls(const CompositionMatrix& x, const CompositionMatrix& y) {
    detail::require_paired(x, y);
    QpProblem qp = assemble_qp(x, y, WeightMatrix::ones(x.rows(), y.cols()));
    const QpSolution sol = detail::solve_with_ridge_retry(qp);
    return CoefficientMatrix::renormalized(detail::unstack_coefficients(sol.beta, x.cols(), y.cols()));
}

/// fit_cls packaged as a FitResult so the CLI can treat it like the
/// iterative estimators.
inline FitResult fit_cls_result(const CompositionMatrix& x, const CompositionMatrix& y, double delta = 1e-8) {
    detail::Stopwatch clock;
    CoefficientMatrix b = fit_cls(x, y);
    const double elapsed = clock.seconds();
    const double objective = kld(y, fitted(x, b), delta);
    return FitResult{"cls", std::move(b), objective, 1, elapsed, true, StopReason::closed_form, {}};
}

namespace detail {

inline CoefficientMatrix initial_coefficients(const CompositionMatrix& x, const CompositionMatrix& y,
                                              const SolverConfig& config) {
    switch (config.init) {
        case InitKind::uniform: return uniform_coefficients(x.cols(), y.cols());
        case InitKind::cls: return fit_cls(x, y);
        case InitKind::given:
            if (config.init_B->rows() != x.cols() || config.init_B->cols() != y.cols()) {
                throw Error(Errc::DimensionMismatch, "initial B has the wrong shape");
            }
            return *config.init_B;
    }
    throw Error(Errc::InvalidConfig, "unknown initialisation");
}

}  // namespace detail

}  // namespace tflr
