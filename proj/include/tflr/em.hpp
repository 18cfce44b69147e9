#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tflr/cls.hpp"
#include "tflr/composition.hpp"
#include "tflr/fit_result.hpp"
#include "tflr/objective.hpp"

namespace tflr {

/// z(i, j, k): the share of response mass y(i, k) attributed to predictor
/// component j. Summing over j recovers y(i, k).
class LatentAllocation {
public:
    LatentAllocation(Index n, Index n_predictors, Index n_responses)
        : n_(n), p_(n_predictors), r_(n_responses),
          values_(static_cast<std::size_t>(n * n_predictors * n_responses), 0.0) {}

    Index observations() const noexcept { return n_; }
    Index predictors() const noexcept { return p_; }
    Index responses() const noexcept { return r_; }

    double& operator()(Index i, Index j, Index k) { return values_[offset(i, j, k)]; }
    double operator()(Index i, Index j, Index k) const { return values_[offset(i, j, k)]; }

private:
    std::size_t offset(Index i, Index j, Index k) const {
        return static_cast<std::size_t>((i * p_ + j) * r_ + k);
    }

    Index n_, p_, r_;
    std::vector<double> values_;
};

/// Expected allocations given the current coefficients. The denominator
/// (the fitted value) is floored at `delta`.
inline LatentAllocation e_step(const CompositionMatrix& x, const CompositionMatrix& y, const CoefficientMatrix& b,
                               double delta) {
    detail::require_paired(x, y);
    if (b.rows() != x.cols() || b.cols() != y.cols()) {
        throw Error(Errc::DimensionMismatch, "B must be D_p x D_r");
    }
    const Index n = x.rows();
    const Index p = x.cols();
    const Index r = y.cols();
    const MatrixXd m = x.values() * b.values();
    LatentAllocation z(n, p, r);
    for (Index i = 0; i < n; ++i) {
        for (Index k = 0; k < r; ++k) {
            const double yv = y(i, k);
            if (yv == 0.0) continue;
            const double scale = yv / std::max(m(i, k), delta);
            for (Index j = 0; j < p; ++j) z(i, j, k) = x(i, j) * b(j, k) * scale;
        }
    }
    return z;
}

/// Row-normalises the allocation totals. A predictor row that receives no
/// mass at all is reset to uniform and its index appended to `dead_rows`.
inline CoefficientMatrix m_step(const LatentAllocation& z, std::vector<Index>* dead_rows = nullptr) {
    const Index p = z.predictors();
    const Index r = z.responses();
    MatrixXd totals = MatrixXd::Zero(p, r);
    for (Index i = 0; i < z.observations(); ++i) {
        for (Index j = 0; j < p; ++j) {
            for (Index k = 0; k < r; ++k) totals(j, k) += z(i, j, k);
        }
    }
    for (Index j = 0; j < p; ++j) {
        const double sum = totals.row(j).sum();
        if (sum > 0.0) {
            totals.row(j) /= sum;
        } else {
            totals.row(j).setConstant(1.0 / static_cast<double>(r));
            if (dead_rows) dead_rows->push_back(j);
        }
    }
    return CoefficientMatrix::renormalized(std::move(totals));
}

namespace detail {

// The multiplicative update can never revive an entry that starts at zero,
// and the least-squares start often sits on a face of the simplex. Blend it
// slightly toward uniform so every entry is at least tau / D_r.
inline MatrixXd lift_off_boundary(MatrixXd b, double tau = 1e-3) {
    const double floor = tau / static_cast<double>(b.cols());
    if (b.minCoeff() >= floor) return b;
    return ((1.0 - tau) * b.array() + floor).matrix();
}

// One E-step followed by the M-step without materialising z:
// sum_i z(i, j, k) = B(j, k) * sum_i x(i, j) y(i, k) / max(m(i, k), delta).
inline MatrixXd em_update(const MatrixXd& x, const MatrixXd& y, const MatrixXd& b, const MatrixXd& m, double delta,
                          MatrixXd& ratio) {
    const Index r = y.cols();
    for (Index k = 0; k < r; ++k) {
        for (Index i = 0; i < y.rows(); ++i) {
            const double yv = y(i, k);
            ratio(i, k) = yv == 0.0 ? 0.0 : yv / std::max(m(i, k), delta);
        }
    }
    MatrixXd next = b.cwiseProduct(x.transpose() * ratio);
    for (Index j = 0; j < next.rows(); ++j) {
        const double sum = next.row(j).sum();
        if (sum > 0.0) {
            next.row(j) /= sum;
        } else {
            next.row(j).setConstant(1.0 / static_cast<double>(r));
        }
    }
    return next;
}

}  // namespace detail

/// EM estimate of B. Stops when either the L1 change in B or the decrease in
/// KLD drops below eps_converge, whichever happens first.
inline FitResult fit_em(const CompositionMatrix& x, const CompositionMatrix& y, const SolverConfig& config = {}) {
    config.validate();
    detail::require_paired(x, y);
    detail::Stopwatch clock;

    const double delta = config.delta_guard;
    const double eps = config.eps_converge;
    MatrixXd b = detail::initial_coefficients(x, y, config).values();
    if (config.init == InitKind::cls) b = detail::lift_off_boundary(std::move(b));
    MatrixXd m = x.values() * b;
    MatrixXd ratio(y.rows(), y.cols());
    double objective = detail::kld_raw(y.values(), m, delta);

    FitResult result{"em", CoefficientMatrix::renormalized(b), objective, 0, 0.0, false, StopReason::iteration_limit, {}};
    if (config.record_trace) result.trace.push_back(objective);

    for (int iter = 1; iter <= config.max_iter; ++iter) {
        MatrixXd next = detail::em_update(x.values(), y.values(), b, m, delta, ratio);
        m.noalias() = x.values() * next;
        const double next_objective = detail::kld_raw(y.values(), m, delta);
        if (!next.allFinite() || !std::isfinite(next_objective)) {
            throw Error(Errc::NonFinite, "EM iteration " + std::to_string(iter));
        }
        const double change = (next - b).lpNorm<1>();
        const double decrease = objective - next_objective;
        b = std::move(next);
        objective = next_objective;
        result.iterations = iter;
        if (config.record_trace) result.trace.push_back(objective);

        if (change < eps) {
            result.converged = true;
            result.stop = StopReason::coefficient_change;
            break;
        }
        if (decrease < eps) {
            result.converged = true;
            result.stop = StopReason::objective_change;
            break;
        }
    }

    result.B = CoefficientMatrix::renormalized(std::move(b));
    result.kld = kld(y, fitted(x, result.B), delta);
    result.elapsed_s = clock.seconds();
    return result;
}

}  // namespace tflr
