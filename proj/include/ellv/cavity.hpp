#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ellv/csv.hpp"
#include "ellv/errors.hpp"

namespace ellv {

/// Unknowns of the surviving-species fixed-point system: surviving fraction
/// phi, moments m = <x> and q = <x^2>, and the response parameter v.
struct CavityState {
    double phi = 1.0;
    double m = 1.0;
    double q = 1.0;
    double v = 0.0;
};

/// Moments of a standard normal conditioned on Z > -delta.
struct TruncatedMoments {
    double p = 0.0;   ///< P(Z > -delta)
    double e1 = 0.0;  ///< E(Z | Z > -delta)
    double e2 = 0.0;  ///< E(Z^2 | Z > -delta)
};

/// Standard normal CDF via erfc; relative accuracy near machine precision.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

/// Standard normal density.
inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

/// Closed forms: p = Phi(delta), e1 = pdf(delta)/Phi(delta),
/// e2 = 1 - delta e1. Validated against direct quadrature in the test suite.
/// For delta << 0 the ratio is evaluated by the Mills asymptotic series to
/// avoid 0/0.
inline TruncatedMoments truncated_moments(double delta) {
    if (!std::isfinite(delta)) throw ParameterError("truncated_moments: delta must be finite");
    TruncatedMoments tm;
    tm.p = normal_cdf(delta);
    if (delta <= -8.0) {
        // E(Z | Z > -delta) ~ -delta + 1/(-delta) - 2/(-delta)^3 + ...
        const double d = -delta;
        tm.e1 = d + 1.0 / d - 2.0 / (d * d * d);
    } else {
        tm.e1 = normal_pdf(delta) / tm.p;
    }
    tm.e2 = 1.0 - delta * tm.e1;
    return tm;
}

/// Exposure scale Delta = (1 + m mu) alpha / sqrt(q) entering the
/// surviving-fraction integral.
inline double cavity_delta(const CavityState& s, double alpha, double mu) {
    if (!(s.q > 0.0)) throw EvaluationError("cavity: q must be positive");
    return (1.0 + s.m * mu) * alpha / std::sqrt(s.q);
}

/// One evaluation of the fixed-point map. phi' comes first; the v update
/// uses the fresh phi' (Gauss-Seidel ordering) and the input v on the right:
///   phi' = P(Z > -Delta)
///   m'   = phi/(1 - rho v/alpha) ((1 + m mu) + sqrt(q)/alpha E(Z|Z>-Delta))
///   q'   = phi/(1 - rho v/alpha)^2 ((1 + m mu)^2
///          + 2 (1 + m mu) sqrt(q)/alpha E(Z|Z>-Delta)
///          + q/alpha^2 E(Z^2|Z>-Delta))
///   v'   = phi' / (alpha - rho v)
inline CavityState cavity_rhs(const CavityState& s, double rho, double alpha, double mu) {
    if (!(alpha > 0.0)) throw ParameterError("cavity_rhs: alpha must be > 0");
    const double delta = cavity_delta(s, alpha, mu);
    const double denom = 1.0 - rho * s.v / alpha;
    if (std::abs(denom) < 1e-14)
        throw EvaluationError("cavity_rhs: 1 - rho v / alpha vanishes");
    const TruncatedMoments tm = truncated_moments(delta);
    const double growth = 1.0 + s.m * mu;
    const double noise = std::sqrt(s.q) / alpha;

    CavityState out;
    out.phi = tm.p;
    out.m = s.phi / denom * (growth + noise * tm.e1);
    out.q = s.phi / (denom * denom) *
            (growth * growth + 2.0 * growth * noise * tm.e1 + s.q / (alpha * alpha) * tm.e2);
    const double v_denom = alpha - rho * s.v;
    if (std::abs(v_denom) < 1e-14)
        throw EvaluationError("cavity_rhs: alpha - rho v vanishes");
    out.v = out.phi / v_denom;
    return out;
}

struct CavitySolveOptions {
    double damping = 0.5;   ///< Picard damping theta; halved on oscillation
    double tol = 1e-10;
    int max_iter = 200000;
    double min_damping = 1.0 / 64.0;
};

struct CavityResult {
    CavityState state;
    double residual = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
};

/// Default starting point: the feasible large-alpha limit.
inline CavityState cavity_default_init(double alpha, double mu) {
    CavityState s;
    s.phi = 1.0;
    s.m = mu < 1.0 ? 1.0 / (1.0 - mu) : 1.0;
    s.q = s.m * s.m;
    s.v = 1.0 / alpha;
    return s;
}

namespace detail {

inline double cavity_residual(const CavityState& a, const CavityState& b) {
    return std::max(std::max(std::abs(a.phi - b.phi), std::abs(a.m - b.m)),
                    std::max(std::abs(a.q - b.q), std::abs(a.v - b.v)));
}

inline CavityState cavity_blend(const CavityState& s, const CavityState& r, double theta) {
    CavityState out;
    out.phi = (1.0 - theta) * s.phi + theta * r.phi;
    out.m = (1.0 - theta) * s.m + theta * r.m;
    out.q = (1.0 - theta) * s.q + theta * r.q;
    out.v = (1.0 - theta) * s.v + theta * r.v;
    return out;
}

} // namespace detail

/// Damped Picard iteration on cavity_rhs until the sup-norm fixed-point
/// residual drops below tol. The damping is halved whenever the residual
/// grows (oscillation near the stability boundary).
inline CavityResult solve_cavity(double rho, double alpha, double mu,
                                 const CavitySolveOptions& opts = {},
                                 std::optional<CavityState> init = std::nullopt) {
    if (!(alpha > 0.0)) throw ParameterError("solve_cavity: alpha must be > 0");
    if (!(std::abs(rho) <= 1.0)) throw ParameterError("solve_cavity: |rho| must be <= 1");

    CavityState state = init ? *init : cavity_default_init(alpha, mu);
    double theta = opts.damping;
    double prev_residual = std::numeric_limits<double>::infinity();

    for (int it = 0; it < opts.max_iter; ++it) {
        CavityState next;
        try {
            next = cavity_rhs(state, rho, alpha, mu);
        } catch (const EvaluationError& e) {
            throw DivergenceError(std::string("solve_cavity: iterate left the domain (") +
                                  e.what() + "); try smaller damping");
        }
        if (!std::isfinite(next.phi) || !std::isfinite(next.m) || !std::isfinite(next.q) ||
            !std::isfinite(next.v))
            throw DivergenceError("solve_cavity: iteration diverged; try smaller damping");

        const double residual = detail::cavity_residual(next, state);
        if (residual <= opts.tol) {
            CavityResult result;
            result.state = state;
            result.residual = residual;
            result.iterations = it + 1;
            return result;
        }
        if (residual > prev_residual)
            theta = std::max(theta * 0.5, opts.min_damping);
        prev_residual = residual;
        state = detail::cavity_blend(state, next, theta);
    }
    throw ConvergenceError("solve_cavity: no convergence in " +
                               std::to_string(opts.max_iter) + " iterations",
                           prev_residual);
}

/// Solves along an alpha grid with continuation: grid points are processed
/// from the largest alpha down (where the default init is accurate), each
/// warm-started from its predecessor. Results are returned in the input
/// grid order.
inline std::vector<CavityResult> solve_cavity_curve(double rho, double mu,
                                                    const std::vector<double>& alphas,
                                                    const CavitySolveOptions& opts = {}) {
    std::vector<std::size_t> order(alphas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&alphas](std::size_t i, std::size_t j) { return alphas[i] > alphas[j]; });

    std::vector<CavityResult> results(alphas.size());
    std::optional<CavityState> warm;
    for (std::size_t k : order) {
        results[k] = solve_cavity(rho, alphas[k], mu, opts, warm);
        warm = results[k].state;
    }
    return results;
}

/// Checks fixed-point uniqueness empirically: re-solves from perturbed
/// starting points and reports the worst disagreement. The uniqueness of
/// the solution is conjectural, so callers warn instead of asserting.
inline double cavity_multistart_spread(double rho, double alpha, double mu,
                                       const CavityResult& reference,
                                       const CavitySolveOptions& opts = {}) {
    double spread = 0.0;
    const double scales[] = {0.5, 2.0};
    for (double c : scales) {
        CavityState init = cavity_default_init(alpha, mu);
        init.phi = std::min(1.0, init.phi * c);
        init.m *= c;
        init.q *= c * c;
        init.v *= c;
        const CavityResult r = solve_cavity(rho, alpha, mu, opts, init);
        spread = std::max(spread, detail::cavity_residual(r.state, reference.state));
    }
    return spread;
}

/// Cavity dump: rho,alpha,mu,phi,mean_x,mean_x2,v,residual,iterations.
inline void write_cavity_csv(const std::string& path,
                             const std::vector<double>& rhos,
                             const std::vector<double>& alphas,
                             const std::vector<double>& mus,
                             const std::vector<CavityResult>& results,
                             const std::string& meta = "") {
    if (rhos.size() != results.size() || alphas.size() != results.size() ||
        mus.size() != results.size())
        throw ShapeError("write_cavity_csv: column lengths differ");
    CsvWriter csv;
    if (!meta.empty()) csv.comment(meta);
    csv.header(
        {"rho", "alpha", "mu", "phi", "mean_x", "mean_x2", "v", "residual", "iterations"});
    for (std::size_t i = 0; i < results.size(); ++i) {
        csv.row()
            .col(rhos[i])
            .col(alphas[i])
            .col(mus[i])
            .col(results[i].state.phi)
            .col(results[i].state.m)
            .col(results[i].state.q)
            .col(results[i].state.v)
            .col(results[i].residual)
            .col(results[i].iterations);
    }
    csv.write_file(path);
}

} // namespace ellv
