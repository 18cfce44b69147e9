#pragma once

#include <algorithm>
#include <string>

#include "tflr/composition.hpp"
#include "tflr/objective.hpp"
#include "tflr/qp.hpp"

namespace tflr {

/// n x D_r inverse-variance weights 1 / (mu (1 - mu)).
struct WeightMatrix {
    MatrixXd values;

    WeightMatrix() = default;
    explicit WeightMatrix(MatrixXd v) : values(std::move(v)) {}

    static WeightMatrix ones(Index n, Index n_responses) {
        return WeightMatrix(MatrixXd::Ones(n, n_responses));
    }
};

/// Clamps each fitted mean to [eta, 1 - eta] before inverting, so every
/// weight lies in [4, 1 / (eta (1 - eta))].
inline WeightMatrix compute_weights(const MatrixXd& fitted_values, double eta) {
    if (!(eta > 0.0 && eta < 0.5)) throw Error(Errc::InvalidConfig, "eta must be in (0, 0.5)");
    return WeightMatrix(fitted_values.unaryExpr([eta](double mu) {
        const double c = std::clamp(mu, eta, 1.0 - eta);
        return 1.0 / (c * (1.0 - c));
    }));
}

inline WeightMatrix compute_weights(const FittedMatrix& m, double eta) { return compute_weights(m.values, eta); }

/// Rewrites the hessian blocks and linear term of an already assembled
/// problem: block k is X' diag(W_k) X and the linear term is vec(X' (W o Y)).
inline void update_qp(QpProblem& qp, const MatrixXd& x, const MatrixXd& y, const MatrixXd& w) {
    const Index n = x.rows();
    const Index p = x.cols();
    const Index r = y.cols();
    if (y.rows() != n || w.rows() != n || w.cols() != r) {
        throw Error(Errc::DimensionMismatch, "X, Y and W must share rows and Y, W columns");
    }
    if (qp.dim() != p * r || qp.block_size != p) {
        throw Error(Errc::DimensionMismatch, "QP was assembled for a different shape");
    }
    MatrixXd xw(n, p);
    const MatrixXd wy = w.cwiseProduct(y);
    for (Index k = 0; k < r; ++k) {
        xw = x.array().colwise() * w.col(k).array();
        qp.hessian.block(k * p, k * p, p, p).noalias() = x.transpose() * xw;
        qp.linear.segment(k * p, p).noalias() = x.transpose() * wy.col(k);
    }
}

/// Weighted least-squares problem for vec(B) under simplex rows, hessian
/// block diagonal with one D_p x D_p block per response component.
inline QpProblem assemble_qp(const CompositionMatrix& x, const CompositionMatrix& y, const WeightMatrix& w) {
    if (x.rows() != y.rows()) throw Error(Errc::DimensionMismatch, "X and Y row counts differ");
    const Index p = x.cols();
    const Index r = y.cols();
    QpProblem qp;
    qp.hessian = MatrixXd::Zero(p * r, p * r);
    qp.linear = VectorXd::Zero(p * r);
    qp.constraints = coupled_simplex_constraints(p, r);
    qp.block_size = p;
    update_qp(qp, x.values(), y.values(), w.values);
    return qp;
}

namespace detail {

inline MatrixXd unstack_coefficients(const VectorXd& beta, Index n_predictors, Index n_responses) {
    return Eigen::Map<const MatrixXd>(beta.data(), n_predictors, n_responses);
}

// Solves, and on a Cholesky failure retries once with a ridge of
// 1e-10 * trace / m added to the diagonal.
inline QpSolution solve_with_ridge_retry(QpProblem& qp) {
    try {
        return solve_qp(qp);
    } catch (const Error& e) {
        if (e.code() != Errc::NotPositiveDefinite) throw;
    }
    const double ridge = 1e-10 * qp.hessian.trace() / static_cast<double>(qp.dim());
    const VectorXd saved = qp.hessian.diagonal();
    qp.hessian.diagonal().array() += std::max(ridge, 1e-300);
    QpSolution sol;
    try {
        sol = solve_qp(qp);
    } catch (...) {
        qp.hessian.diagonal() = saved;
        throw;
    }
    qp.hessian.diagonal() = saved;
    sol.ridged = true;
    return sol;
}

}  // namespace detail

}  // namespace tflr
