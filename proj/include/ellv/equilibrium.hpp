#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ellv/errors.hpp"
#include "ellv/random_interactions.hpp"
#include "ellv/spectral.hpp"

namespace ellv {

/// Survivor statistics of an abundance vector: fraction of positive
/// components and plain first/second moments over ALL components.
struct SurvivorStats {
    double phi = 0.0;
    double mean_x = 0.0;
    double mean_x2 = 0.0;
};

inline SurvivorStats survivor_stats(const Vector& x, double threshold = 1e-8) {
    if (!x.allFinite()) throw ParameterError("survivor_stats: x must be finite");
    SurvivorStats s;
    const double n = static_cast<double>(x.size());
    s.phi = static_cast<double>((x.array() > threshold).count()) / n;
    s.mean_x = x.mean();
    s.mean_x2 = x.squaredNorm() / n;
    return s;
}

/// Result of an equilibrium computation. `lin_residual` applies to the
/// feasible (linear) branch, `lcp_residual` to the saturated (LCP) branch;
/// the inapplicable one is NaN.
struct EquilibriumSolution {
    Vector x;
    bool feasible = false;
    double lin_residual = std::numeric_limits<double>::quiet_NaN();
    double lcp_residual = std::numeric_limits<double>::quiet_NaN();
    SurvivorStats stats;
};

/// Solves (I - B) x = 1 and flags feasibility (min_k x_k > 0, exact sign).
/// Rejects numerically singular systems at rcond < 1e-12.
inline EquilibriumSolution solve_feasible(const Matrix& b) {
    if (b.rows() != b.cols()) throw ShapeError("solve_feasible: matrix must be square");
    const Eigen::Index n = b.rows();
    Matrix m = Matrix::Identity(n, n) - b;
    Eigen::PartialPivLU<Matrix> lu(m);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-12))
        throw SingularityError("solve_feasible: I - B numerically singular (rcond=" +
                                   fmt_g17(rcond) + ")",
                               rcond);
    const Vector ones = Vector::Ones(n);
    Vector x = lu.solve(ones);
    // one step of iterative refinement tightens the residual to O(eps)
    x += lu.solve(ones - m * x);

    EquilibriumSolution sol;
    sol.lin_residual = (ones - m * x).lpNorm<Eigen::Infinity>();
    const double bound = 1e-10 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
    if (!(sol.lin_residual <= bound))
        throw SingularityError("solve_feasible: residual " + fmt_g17(sol.lin_residual) +
                                   " exceeds tolerance (rcond=" + fmt_g17(rcond) + ")",
                               rcond);
    sol.feasible = (x.array() > 0.0).all();
    sol.stats = survivor_stats(x);
    sol.x = std::move(x);
    return sol;
}

inline EquilibriumSolution solve_feasible(const InteractionMatrix& im) {
    return solve_feasible(im.b);
}

enum class LcpMethod { lemke, pgs };

struct LcpOptions {
    LcpMethod method = LcpMethod::lemke;
    double tol = 1e-10;          ///< complementarity tolerance of the result
    int max_pivots = 0;          ///< Lemke pivot cap; 0 -> 10n + 200
    int pgs_max_iter = 100000;   ///< projected Gauss-Seidel sweep cap
    double pgs_omega = 1.0;      ///< PGS relaxation, in (0,1]
    bool check_pd = true;        ///< verify the uniqueness certificate first
    double survivor_threshold = 1e-8;
};

namespace detail {

/// max violation of { x >= 0, w >= 0, x_k w_k = 0 }.
inline double lcp_residual(const Vector& x, const Vector& w) {
    double r = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        r = std::max(r, -x(k));
        r = std::max(r, -w(k));
        r = std::max(r, std::min(std::abs(x(k)), std::abs(w(k))));
    }
    return r;
}

/// Lemke's complementary pivoting for w = M z + q, w,z >= 0, z^T w = 0,
/// with covering vector d = 1. For M with positive definite symmetric part
/// (our use) the method terminates with a solution; a secondary ray would
/// indicate the precondition failed.
inline Vector lemke(const Matrix& m, const Vector& q, int max_pivots) {
    const Eigen::Index n = m.rows();
    if ((q.array() >= 0.0).all()) return Vector::Zero(n);
    if (max_pivots <= 0) max_pivots = static_cast<int>(10 * n + 200);

    // columns: [0,n) w, [n,2n) z, 2n artificial z0, 2n+1 rhs
    const Eigen::Index z0_col = 2 * n;
    const Eigen::Index rhs = 2 * n + 1;
    Matrix t(n, 2 * n + 2);
    t.leftCols(n) = Matrix::Identity(n, n);
    t.middleCols(n, n) = -m;
    t.col(z0_col) = -Vector::Ones(n);
    t.col(rhs) = q;

    std::vector<Eigen::Index> basis(n);
    std::iota(basis.begin(), basis.end(), Eigen::Index{0});

    auto pivot = [&t](Eigen::Index row, Eigen::Index col) {
        t.row(row) /= t(row, col);
        Vector column = t.col(col);
        column(row) = 0.0;
        t.noalias() -= column * t.row(row);
        t.col(col).setZero();
        t(row, col) = 1.0;
    };

    // bring z0 in against the most negative q
    Eigen::Index r;
    q.minCoeff(&r);
    pivot(r, z0_col);
    basis[r] = z0_col;
    Eigen::Index entering = n + r;  // complement of the departed w_r

    const double piv_eps = 1e-11;
    for (int it = 0; it < max_pivots; ++it) {
        // ratio test; prefer driving z0 out, then Bland-style least index
        Eigen::Index leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double a = t(i, entering);
            if (a <= piv_eps) continue;
            const double ratio = t(i, rhs) / a;
            if (leave < 0) {
                best = ratio;
                leave = i;
                continue;
            }
            const double slack = 1e-9 * (1.0 + std::abs(best));
            if (ratio < best - slack) {
                best = ratio;
                leave = i;
            } else if (ratio <= best + slack) {
                if (basis[i] == z0_col ||
                    (basis[leave] != z0_col && basis[i] < basis[leave])) {
                    best = std::min(best, ratio);
                    leave = i;
                }
            }
        }
        if (leave < 0)
            throw ConvergenceError("lemke: secondary ray encountered (matrix outside "
                                   "the guaranteed class?)",
                                   std::numeric_limits<double>::quiet_NaN());
        const Eigen::Index departed = basis[leave];
        pivot(leave, entering);
        basis[leave] = entering;
        if (departed == z0_col) {
            Vector z = Vector::Zero(n);
            for (Eigen::Index i = 0; i < n; ++i)
                if (basis[i] >= n && basis[i] < 2 * n)
                    z(basis[i] - n) = std::max(0.0, t(i, rhs));
            return z;
        }
        entering = departed < n ? departed + n : departed - n;
    }

    // report how bad the current basic point is
    Vector z = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        if (basis[i] >= n && basis[i] < 2 * n) z(basis[i] - n) = std::max(0.0, t(i, rhs));
    const Vector w = m * z + q;
    throw ConvergenceError("lemke: pivot cap exceeded", lcp_residual(z, w));
}

/// Projected Gauss-Seidel sweeps x_k <- max(0, x_k + omega (1 - x_k + (Bx)_k)).
inline Vector pgs(const Matrix& b, double omega, int max_iter, double tol) {
    const Eigen::Index n = b.rows();
    Vector x = Vector::Ones(n);
    const Matrix m = Matrix::Identity(n, n) - b;
    for (int sweep = 0; sweep < max_iter; ++sweep) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const double g = 1.0 - x(k) + b.row(k).dot(x);
            x(k) = std::max(0.0, x(k) + omega * g);
        }
        if (sweep % 8 == 7 || sweep + 1 == max_iter) {
            const Vector w = m * x - Vector::Ones(n);
            if (lcp_residual(x, w) <= tol) return x;
        }
    }
    const Vector w = m * x - Vector::Ones(n);
    throw ConvergenceError("pgs: sweep cap exceeded", lcp_residual(x, w));
}

/// Active-set polish: exact solve on the tentative support, dropping
/// negative survivors and re-admitting violated extinct species until the
/// complementarity conditions hold. Survivor values come from a direct
/// linear solve, so the final residual is at rounding level.
inline std::pair<Vector, Vector> polish_support(const Matrix& b, std::vector<bool> support,
                                                int max_outer = 200) {
    const Eigen::Index n = b.rows();
    const Matrix m = Matrix::Identity(n, n) - b;
    for (int outer = 0; outer < max_outer; ++outer) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index k = 0; k < n; ++k)
            if (support[static_cast<std::size_t>(k)]) idx.push_back(k);

        Vector x = Vector::Zero(n);
        if (!idx.empty()) {
            const Eigen::Index s = static_cast<Eigen::Index>(idx.size());
            Matrix ms(s, s);
            for (Eigen::Index i = 0; i < s; ++i)
                for (Eigen::Index j = 0; j < s; ++j) ms(i, j) = m(idx[i], idx[j]);
            Eigen::PartialPivLU<Matrix> lu(ms);
            if (!(lu.rcond() > 1e-13))
                throw SingularityError("solve_lcp: restricted system numerically singular",
                                       lu.rcond());
            const Vector ones = Vector::Ones(s);
            Vector xs = lu.solve(ones);
            xs += lu.solve(ones - ms * xs);
            for (Eigen::Index i = 0; i < s; ++i) x(idx[i]) = xs(i);
        }
        const Vector w = m * x - Vector::Ones(n);

        bool changed = false;
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto sk = static_cast<std::size_t>(k);
            if (support[sk] && x(k) <= 0.0) {
                support[sk] = false;
                changed = true;
            }
        }
        if (!changed) {
            for (Eigen::Index k = 0; k < n; ++k) {
                const auto sk = static_cast<std::size_t>(k);
                if (!support[sk] && w(k) < -1e-12) {
                    support[sk] = true;
                    changed = true;
                }
            }
        }
        if (!changed) return {x, w};
    }
    throw ConvergenceError("solve_lcp: support polish did not settle",
                           std::numeric_limits<double>::quiet_NaN());
}

} // namespace detail

/// Saturated equilibrium: x >= 0 with w = (I-B)x - 1 >= 0 and x_k w_k = 0
/// componentwise. Requires the positive-definiteness certificate (unique
/// solution); refuses otherwise rather than returning one of possibly many.
inline EquilibriumSolution solve_lcp(const Matrix& b, const LcpOptions& opts = {}) {
    if (b.rows() != b.cols()) throw ShapeError("solve_lcp: matrix must be square");
    const Eigen::Index n = b.rows();

    if (opts.check_pd) {
        const StabilityVerdict verdict = check_stability_pd(b);
        if (!verdict.is_pd)
            throw PreconditionError(
                "solve_lcp: 2I - (B+B^T) not positive definite (lambda_max=" +
                fmt_g17(verdict.lambda_max_sym) + "); solution may be non-unique");
    }

    const Matrix m = Matrix::Identity(n, n) - b;
    const Vector q = -Vector::Ones(n);

    Vector guess;
    switch (opts.method) {
        case LcpMethod::lemke:
            guess = detail::lemke(m, q, opts.max_pivots);
            break;
        case LcpMethod::pgs:
            guess = detail::pgs(b, opts.pgs_omega, opts.pgs_max_iter, opts.tol);
            break;
    }

    std::vector<bool> support(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k)
        support[static_cast<std::size_t>(k)] = guess(k) > 0.0;
    auto [x, w] = detail::polish_support(b, std::move(support));

    EquilibriumSolution sol;
    sol.lcp_residual = detail::lcp_residual(x, w);
    if (!(sol.lcp_residual <= opts.tol))
        throw ConvergenceError("solve_lcp: residual " + fmt_g17(sol.lcp_residual) +
                                   " above tolerance " + fmt_g17(opts.tol),
                               sol.lcp_residual);
    sol.feasible = (x.array() > 0.0).all();
    sol.stats = survivor_stats(x, opts.survivor_threshold);
    sol.x = std::move(x);
    return sol;
}

inline EquilibriumSolution solve_lcp(const InteractionMatrix& im, const LcpOptions& opts = {}) {
    return solve_lcp(im.b, opts);
}

} // namespace ellv
