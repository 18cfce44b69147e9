#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "tflr/error.hpp"

namespace tflr {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Linear constraints A·beta >= b; the first n_eq rows are equalities.
struct ConstraintSet {
    MatrixXd A;
    VectorXd b;
    Index n_eq = 0;
};

/// min 0.5 beta' H beta - c' beta  s.t.  A beta >= b (first n_eq rows held with equality).
///
/// When `block_size` is positive the Hessian is taken to be block diagonal
/// with square blocks of that size and is factored block by block; the
/// off-diagonal blocks are never read.
struct QpProblem {
    MatrixXd hessian;
    VectorXd linear;
    ConstraintSet constraints;
    Index block_size = 0;

    Index dim() const noexcept { return hessian.rows(); }

    void validate() const {
        const Index m = hessian.rows();
        if (m < 1 || hessian.cols() != m) throw Error(Errc::DimensionMismatch, "hessian must be square and non-empty");
        if (linear.size() != m) throw Error(Errc::DimensionMismatch, "linear term length differs from hessian");
        if (constraints.A.cols() != m || constraints.A.rows() != constraints.b.size()) {
            throw Error(Errc::DimensionMismatch, "constraint matrix and bounds disagree with problem size");
        }
        if (constraints.n_eq < 0 || constraints.n_eq > constraints.A.rows()) {
            throw Error(Errc::DimensionMismatch, "n_eq exceeds the number of constraints");
        }
        if (block_size < 0 || (block_size > 0 && m % block_size != 0)) {
            throw Error(Errc::DimensionMismatch, "block size does not divide the problem size");
        }
        if (!hessian.allFinite() || !linear.allFinite() || !constraints.A.allFinite() || !constraints.b.allFinite()) {
            throw Error(Errc::NonFinite, "QP data contains NaN or Inf");
        }
        const double scale = std::max(1.0, hessian.cwiseAbs().maxCoeff());
        for (Index blk = 0; blk < m; blk += (block_size > 0 ? block_size : m)) {
            const Index size = block_size > 0 ? block_size : m;
            const auto h = hessian.block(blk, blk, size, size);
            if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
                throw Error(Errc::DimensionMismatch, "hessian is not symmetric");
            }
        }
    }
};

struct QpSolution {
    VectorXd beta;
    double objective = 0.0;
    std::vector<Index> active_set;  // indices into the constraint rows, equalities first
    VectorXd multipliers;           // one per constraint row, zero when inactive
    int iterations = 0;
    bool ridged = false;            // a cycling restart added a ridge to the hessian
};

/// One equality (sum to one) followed by m non-negativity rows. The upper
/// bounds beta <= 1 follow from these and are left out.
inline ConstraintSet simplex_constraints(Index m) {
    if (m < 1) throw Error(Errc::DimensionMismatch, "simplex needs at least one coordinate");
    ConstraintSet cs;
    cs.A.resize(m + 1, m);
    cs.A.row(0).setOnes();
    cs.A.bottomRows(m).setIdentity();
    cs.b = VectorXd::Zero(m + 1);
    cs.b(0) = 1.0;
    cs.n_eq = 1;
    return cs;
}

/// Constraints on vec(B) for a D_p x D_r coefficient matrix stacked column by
/// column (coordinate k * D_p + j holds B(j, k)): one unit-sum row per
/// predictor, then non-negativity of every coordinate.
inline ConstraintSet coupled_simplex_constraints(Index n_predictors, Index n_responses) {
    if (n_predictors < 1 || n_responses < 2) {
        throw Error(Errc::DimensionMismatch, "need D_p >= 1 and D_r >= 2");
    }
    const Index m = n_predictors * n_responses;
    ConstraintSet cs;
    cs.A = MatrixXd::Zero(n_predictors + m, m);
    for (Index j = 0; j < n_predictors; ++j) {
        for (Index k = 0; k < n_responses; ++k) cs.A(j, k * n_predictors + j) = 1.0;
    }
    cs.A.bottomRows(m).setIdentity();
    cs.b = VectorXd::Zero(n_predictors + m);
    cs.b.head(n_predictors).setOnes();
    cs.n_eq = n_predictors;
    return cs;
}

namespace detail {

struct SparseRow {
    std::vector<Index> index;
    std::vector<double> value;

    double dot(const VectorXd& v) const {
        double s = 0.0;
        for (std::size_t t = 0; t < index.size(); ++t) s += value[t] * v(index[t]);
        return s;
    }
};

inline std::vector<SparseRow> sparse_rows(const MatrixXd& a) {
    std::vector<SparseRow> rows(static_cast<std::size_t>(a.rows()));
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            if (a(i, j) != 0.0) {
                rows[i].index.push_back(j);
                rows[i].value.push_back(a(i, j));
            }
        }
    }
    return rows;
}

// J = L^{-T} where H = L L^T, so that J J^T = H^{-1}. Block diagonal input
// gives a block diagonal J.
inline MatrixXd inverse_cholesky_factor(const MatrixXd& h, Index block_size, double ridge) {
    const Index m = h.rows();
    const Index size = block_size > 0 ? block_size : m;
    MatrixXd j = MatrixXd::Zero(m, m);
    for (Index blk = 0; blk < m; blk += size) {
        MatrixXd block = h.block(blk, blk, size, size);
        block.diagonal().array() += ridge;
        Eigen::LLT<MatrixXd> llt(block);
        if (llt.info() != Eigen::Success) {
            throw Error(Errc::NotPositiveDefinite, "Cholesky failed on block at " + std::to_string(blk));
        }
        const VectorXd diag = MatrixXd(llt.matrixL()).diagonal();
        const double lo = diag.minCoeff();
        const double hi = diag.maxCoeff();
        if (!(lo > 0.0) || lo * lo < 1e-14 * hi * hi) {
            throw Error(Errc::NotPositiveDefinite, "hessian is numerically singular");
        }
        j.block(blk, blk, size, size) =
            llt.matrixU().solve(MatrixXd::Identity(size, size));
    }
    return j;
}

struct ActiveSetOutcome {
    QpSolution solution;
    bool cycled = false;
};

// Goldfarb-Idnani dual method. Starts at the unconstrained minimiser and adds
// violated constraints one at a time, dropping constraints whose multiplier
// would turn negative. The hessian must already be scaled to unit mean diagonal.
inline ActiveSetOutcome dual_active_set(const MatrixXd& h, const VectorXd& c, const ConstraintSet& cs,
                                        Index block_size, double ridge) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const Index m = h.rows();
    const Index n_con = cs.A.rows();
    const Index n_eq = cs.n_eq;
    const auto rows = sparse_rows(cs.A);

    MatrixXd J = inverse_cholesky_factor(h, block_size, ridge);
    MatrixXd R = MatrixXd::Zero(m, m);
    VectorXd x = J * (J.transpose() * c);
    VectorXd dv(m), z(m), r(m);
    VectorXd u = VectorXd::Zero(m + 1);
    std::vector<Index> active(static_cast<std::size_t>(m + 1), 0);
    Index iq = 0;
    double r_norm = 1.0;

    auto compute_d = [&](Index con) {
        dv.setZero();
        const auto& row = rows[con];
        for (std::size_t t = 0; t < row.index.size(); ++t) dv += row.value[t] * J.row(row.index[t]).transpose();
    };
    auto update_z = [&] { z.noalias() = J.rightCols(m - iq) * dv.tail(m - iq); };
    auto update_r = [&] {
        for (Index i = iq - 1; i >= 0; --i) {
            double sum = dv(i);
            for (Index k = i + 1; k < iq; ++k) sum -= R(i, k) * r(k);
            r(i) = sum / R(i, i);
        }
    };
    // Whether the candidate normal has a component outside the span of the
    // active normals (in the J metric).
    auto has_free_direction = [&] { return dv.tail(m - iq).norm() > 1e-10 * dv.norm(); };

    auto add_constraint = [&]() -> bool {
        for (Index j = m - 1; j >= iq + 1; --j) {
            double cc = dv(j - 1);
            double ss = dv(j);
            const double hyp = std::hypot(cc, ss);
            if (hyp == 0.0) continue;
            dv(j) = 0.0;
            ss /= hyp;
            cc /= hyp;
            if (cc < 0.0) {
                cc = -cc;
                ss = -ss;
                dv(j - 1) = -hyp;
            } else {
                dv(j - 1) = hyp;
            }
            const double xny = ss / (1.0 + cc);
            for (Index k = 0; k < m; ++k) {
                const double t1 = J(k, j - 1);
                const double t2 = J(k, j);
                J(k, j - 1) = t1 * cc + t2 * ss;
                J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
            }
        }
        ++iq;
        R.col(iq - 1).head(iq) = dv.head(iq);
        if (std::abs(dv(iq - 1)) <= eps * r_norm) return false;
        r_norm = std::max(r_norm, std::abs(dv(iq - 1)));
        return true;
    };

    auto delete_constraint = [&](Index con) {
        Index qq = -1;
        for (Index i = n_eq; i < iq; ++i) {
            if (active[i] == con) {
                qq = i;
                break;
            }
        }
        if (qq < 0) return;
        for (Index i = qq; i < iq - 1; ++i) {
            active[i] = active[i + 1];
            u(i) = u(i + 1);
            R.col(i) = R.col(i + 1);
        }
        active[iq - 1] = active[iq];
        u(iq - 1) = u(iq);
        active[iq] = 0;
        u(iq) = 0.0;
        R.col(iq - 1).head(iq).setZero();
        --iq;
        for (Index j = qq; j < iq; ++j) {
            double cc = R(j, j);
            double ss = R(j + 1, j);
            const double hyp = std::hypot(cc, ss);
            if (hyp == 0.0) continue;
            cc /= hyp;
            ss /= hyp;
            R(j + 1, j) = 0.0;
            if (cc < 0.0) {
                R(j, j) = -hyp;
                cc = -cc;
                ss = -ss;
            } else {
                R(j, j) = hyp;
            }
            const double xny = ss / (1.0 + cc);
            for (Index k = j + 1; k < iq; ++k) {
                const double t1 = R(j, k);
                const double t2 = R(j + 1, k);
                R(j, k) = t1 * cc + t2 * ss;
                R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
            }
            for (Index k = 0; k < m; ++k) {
                const double t1 = J(k, j);
                const double t2 = J(k, j + 1);
                J(k, j) = t1 * cc + t2 * ss;
                J(k, j + 1) = xny * (J(k, j) + t1) - t2;
            }
        }
    };

    for (Index i = 0; i < n_eq; ++i) {
        compute_d(i);
        update_z();
        update_r();
        double step = 0.0;
        if (has_free_direction()) step = (cs.b(i) - rows[i].dot(x)) / rows[i].dot(z);
        x += step * z;
        u(iq) = step;
        u.head(iq) -= step * r.head(iq);
        active[iq] = i;
        if (!add_constraint()) {
            throw Error(Errc::Infeasible, "equality constraints are linearly dependent");
        }
    }

    ActiveSetOutcome out;
    std::vector<Index> eligible(static_cast<std::size_t>(n_con));
    std::vector<char> excluded(static_cast<std::size_t>(n_con), 0);
    std::set<std::vector<Index>> seen_sets;
    VectorXd slack = VectorXd::Zero(n_con);
    const int max_iter = static_cast<int>(50 * n_con);
    int iter = 0;

    auto violation_tol = [&](Index con) {
        return 1e-12 * std::max(1.0, std::abs(cs.b(con)) + x.lpNorm<Eigen::Infinity>());
    };

    for (;;) {  // pick a new violated constraint from a primal-dual consistent state
        if (++iter > max_iter) throw Error(Errc::IterationLimit, "QP exceeded " + std::to_string(max_iter) + " iterations");

        std::vector<Index> key(active.begin() + n_eq, active.begin() + iq);
        std::sort(key.begin(), key.end());
        if (!seen_sets.insert(std::move(key)).second) {
            out.cycled = true;
            return out;
        }

        std::fill(eligible.begin(), eligible.end(), 1);
        for (Index i = n_eq; i < iq; ++i) eligible[active[i]] = 0;
        for (Index i = n_eq; i < n_con; ++i) slack(i) = rows[i].dot(x) - cs.b(i);

        // snapshot for the degenerate add path
        const MatrixXd J_old = J;
        const MatrixXd R_old = R;
        const VectorXd x_old = x;
        const VectorXd u_old = u;
        const std::vector<Index> active_old = active;
        const Index iq_old = iq;
        const double r_norm_old = r_norm;

        bool added = false;
        while (!added) {
            Index ip = -1;
            double worst = 0.0;
            for (Index i = n_eq; i < n_con; ++i) {
                if (!eligible[i] || excluded[i]) continue;
                if (slack(i) < -violation_tol(i) && slack(i) < worst) {
                    worst = slack(i);
                    ip = i;
                }
            }
            if (ip < 0) {
                QpSolution& sol = out.solution;
                sol.beta = x;
                sol.iterations = iter;
                sol.multipliers = VectorXd::Zero(n_con);
                sol.active_set.assign(active.begin(), active.begin() + iq);
                for (Index i = 0; i < iq; ++i) sol.multipliers(active[i]) = u(i);
                return out;
            }

            u(iq) = 0.0;
            active[iq] = ip;
            for (;;) {
                if (++iter > max_iter) {
                    throw Error(Errc::IterationLimit, "QP exceeded " + std::to_string(max_iter) + " iterations");
                }
                compute_d(ip);
                update_z();
                update_r();

                double t1 = inf;  // largest dual step keeping active multipliers >= 0
                Index drop = -1;
                for (Index k = n_eq; k < iq; ++k) {
                    if (r(k) > 0.0 && u(k) / r(k) < t1) {
                        t1 = u(k) / r(k);
                        drop = active[k];
                    }
                }
                double t2 = inf;  // step that makes constraint ip binding
                if (has_free_direction()) t2 = -slack(ip) / rows[ip].dot(z);
                const double t = std::min(t1, t2);
                if (!(t < inf)) throw Error(Errc::Infeasible, "QP constraints admit no feasible point");

                if (!(t2 < inf)) {
                    u.head(iq) -= t * r.head(iq);
                    u(iq) += t;
                    delete_constraint(drop);
                    eligible[drop] = 1;
                    continue;
                }

                x += t * z;
                u.head(iq) -= t * r.head(iq);
                u(iq) += t;

                if (t == t2) {
                    if (!add_constraint()) {
                        J = J_old;
                        R = R_old;
                        x = x_old;
                        u = u_old;
                        active = active_old;
                        iq = iq_old;
                        r_norm = r_norm_old;
                        excluded[ip] = 1;
                        std::fill(eligible.begin(), eligible.end(), 1);
                        for (Index i = n_eq; i < iq; ++i) eligible[active[i]] = 0;
                        for (Index i = n_eq; i < n_con; ++i) slack(i) = rows[i].dot(x) - cs.b(i);
                        break;
                    }
                    added = true;
                    break;
                }
                eligible[drop] = 1;
                delete_constraint(drop);
                slack(ip) = rows[ip].dot(x) - cs.b(ip);
            }
        }
        // a constraint was added; excluded constraints get another chance
        std::fill(excluded.begin(), excluded.end(), 0);
    }
}

}  // namespace detail

/// Solves a strictly convex QP with the dual active-set method.
///
/// The hessian is rescaled to unit mean diagonal internally; beta does not
/// depend on that scale. If the working set ever repeats, the solve restarts
/// once with a ridge of 1e-10 * trace(H) / m on the diagonal.
inline QpSolution solve_qp(const QpProblem& problem) {
    problem.validate();
    const Index m = problem.dim();
    const double scale = problem.hessian.trace() / static_cast<double>(m);
    if (!(scale > 0.0)) throw Error(Errc::NotPositiveDefinite, "hessian trace is not positive");
    const MatrixXd h = problem.hessian / scale;
    const VectorXd c = problem.linear / scale;

    auto outcome = detail::dual_active_set(h, c, problem.constraints, problem.block_size, 0.0);
    bool ridged = false;
    if (outcome.cycled) {
        outcome = detail::dual_active_set(h, c, problem.constraints, problem.block_size, 1e-10);
        ridged = true;
        if (outcome.cycled) throw Error(Errc::IterationLimit, "working set cycled after ridge restart");
    }
    QpSolution sol = std::move(outcome.solution);
    sol.ridged = ridged;
    sol.multipliers *= scale;
    sol.objective = 0.5 * sol.beta.dot(problem.hessian * sol.beta) - problem.linear.dot(sol.beta);
    return sol;
}

}  // namespace tflr
