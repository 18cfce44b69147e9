#pragma once

#include <cmath>
#include <string>

#include "tflr/cls.hpp"
#include "tflr/composition.hpp"
#include "tflr/fit_result.hpp"
#include "tflr/objective.hpp"
#include "tflr/weighted_qp.hpp"

namespace tflr {

/// A single reweighting step: solve the weighted simplex-constrained least
/// squares problem for the given weights and return the new coefficients.
inline CoefficientMatrix cirls_step(const CompositionMatrix& x, const CompositionMatrix& y, const WeightMatrix& w) {
    QpProblem qp = assemble_qp(x, y, w);
    const QpSolution sol = detail::solve_with_ridge_retry(qp);
    return CoefficientMatrix::renormalized(detail::unstack_coefficients(sol.beta, x.cols(), y.cols()));
}

/// Constrained IRLS estimate of B (identity link, binomial-variance weights).
///
/// Each iteration reweights from the current fit, re-solves the QP and stops
/// once the KLD moves by less than eps_converge. The KLD path is not
/// monotone, so the best iterate is returned when the last one is worse by
/// more than eps_converge.
inline FitResult fit_cirls(const CompositionMatrix& x, const CompositionMatrix& y, const SolverConfig& config = {}) {
    config.validate();
    detail::require_paired(x, y);
    detail::Stopwatch clock;

    const double delta = config.delta_guard;
    const double eps = config.eps_converge;
    const Index p = x.cols();
    const Index r = y.cols();

    CoefficientMatrix b = detail::initial_coefficients(x, y, config);
    MatrixXd m = x.values() * b.values();
    double objective = detail::kld_raw(y.values(), m, delta);

    FitResult result{"cirls", b, objective, 0, 0.0, false, StopReason::iteration_limit, {}};
    if (config.record_trace) result.trace.push_back(objective);
    CoefficientMatrix best = b;
    double best_objective = objective;

    // hessian storage and constraints are built once; only the blocks change
    QpProblem qp = assemble_qp(x, y, compute_weights(m, config.eta_clamp));
    for (int iter = 1; iter <= config.max_iter; ++iter) {
        if (iter > 1) update_qp(qp, x.values(), y.values(), compute_weights(m, config.eta_clamp).values);
        const QpSolution sol = detail::solve_with_ridge_retry(qp);
        b = CoefficientMatrix::renormalized(detail::unstack_coefficients(sol.beta, p, r));
        m.noalias() = x.values() * b.values();
        const double next_objective = detail::kld_raw(y.values(), m, delta);
        if (!std::isfinite(next_objective)) {
            throw Error(Errc::NonFinite, "CIRLS iteration " + std::to_string(iter));
        }
        const double change = std::abs(objective - next_objective);
        objective = next_objective;
        result.iterations = iter;
        if (config.record_trace) result.trace.push_back(objective);
        if (objective < best_objective) {
            best = b;
            best_objective = objective;
        }
        if (change < eps) {
            result.converged = true;
            result.stop = StopReason::objective_change;
            break;
        }
    }

    result.B = objective > best_objective + eps ? std::move(best) : std::move(b);
    result.kld = kld(y, fitted(x, result.B), delta);
    result.elapsed_s = clock.seconds();
    return result;
}

}  // namespace tflr
