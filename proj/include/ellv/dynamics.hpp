#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ellv/csv.hpp"
#include "ellv/errors.hpp"
#include "ellv/random_interactions.hpp"

namespace ellv {

/// Adaptive-step controls for the LV integrator.
struct StepControls {
    double tol = 1e-8;        ///< local error per step (abs and rel)
    double h_init = 1e-2;
    double h_min = 1e-13;
    int record_stride = 1;    ///< record every k-th accepted step
    double blowup_threshold = 1e12;
    long max_steps = 50'000'000;
};

/// Time-stamped abundances plus convergence bookkeeping. Recorded states are
/// componentwise positive: steps that would cross zero are rejected.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    bool converged = false;
    double final_distance = std::numeric_limits<double>::quiet_NaN();

    double distance_to(const Vector& x_ref, std::size_t index) const {
        return (states[index] - x_ref).lpNorm<Eigen::Infinity>();
    }
};

/// Integrates dx_k/dt = x_k (1 - x_k + (Bx)_k) with the Dormand-Prince 5(4)
/// embedded pair. Any step producing a nonpositive component is rejected and
/// halved (never clamped; clamping would change the dynamics).
inline Trajectory integrate(const Matrix& b, const Vector& x0, double t_end,
                            const StepControls& controls = {}) {
    if (b.rows() != b.cols()) throw ShapeError("integrate: matrix must be square");
    if (x0.size() != b.rows()) throw ShapeError("integrate: x0 size does not match B");
    if (!(x0.array() > 0.0).all())
        throw PreconditionError("integrate: x0 must be componentwise positive");
    if (!(t_end > 0.0)) throw ParameterError("integrate: t_end must be positive");

    const Eigen::Index n = x0.size();
    auto rhs = [&b](const Vector& x, Vector& dx) {
        dx.noalias() = b * x;
        dx.array() = x.array() * (1.0 - x.array() + dx.array());
    };

    // Dormand-Prince coefficients
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                     a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                     b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // y5 - y4 weights (k7 = f(y5), FSAL)
    constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                     e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                     e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y(x0), y5(n), err(n), stage(n);
    rhs(y, k1);

    Trajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(y);

    double t = 0.0;
    double h = std::min(controls.h_init, t_end);
    long accepted_since_record = 0;

    for (long step = 0; step < controls.max_steps && t < t_end; ++step) {
        h = std::min(h, t_end - t);

        stage = y + h * (a21 * k1);
        rhs(stage, k2);
        stage = y + h * (a31 * k1 + a32 * k2);
        rhs(stage, k3);
        stage = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(stage, k4);
        stage = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(stage, k5);
        stage = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(stage, k6);
        y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(y5, k7);

        if (!y5.allFinite() ||
            y5.lpNorm<Eigen::Infinity>() > controls.blowup_threshold)
            throw DivergenceError("integrate: blow-up detected at t=" + fmt_g17(t), t);

        // positivity gate: reject and halve, independent of the error test
        if (!(y5.array() > 0.0).all()) {
            h *= 0.5;
            if (h < controls.h_min)
                throw NumericError("integrate: step underflow at positivity gate, t=" +
                                   fmt_g17(t));
            continue;
        }

        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double err_norm = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double scale =
                controls.tol + controls.tol * std::max(std::abs(y(i)), std::abs(y5(i)));
            const double r = err(i) / scale;
            err_norm += r * r;
        }
        err_norm = std::sqrt(err_norm / static_cast<double>(n));

        if (err_norm <= 1.0) {
            t += h;
            y.swap(y5);
            k1.swap(k7);  // FSAL
            ++accepted_since_record;
            if (t >= t_end || accepted_since_record >= controls.record_stride) {
                traj.times.push_back(t);
                traj.states.push_back(y);
                accepted_since_record = 0;
            }
        }
        const double factor =
            err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
        h *= std::clamp(factor, 0.2, 5.0);
        if (h < controls.h_min) {
            // a step-size collapse while the state explodes is finite-time
            // blow-up: the error control shrinks h faster than the state can
            // reach any fixed magnitude threshold
            if (y.lpNorm<Eigen::Infinity>() > 1e6)
                throw DivergenceError("integrate: blow-up detected at t=" + fmt_g17(t), t);
            throw NumericError("integrate: step size underflow at t=" + fmt_g17(t));
        }
    }
    if (t < t_end)
        throw ConvergenceError("integrate: step cap reached at t=" + fmt_g17(t),
                               t_end - t);
    return traj;
}

inline Trajectory integrate(const InteractionMatrix& im, const Vector& x0, double t_end,
                            const StepControls& controls = {}) {
    return integrate(im.b, x0, t_end, controls);
}

/// True iff the trajectory ends within `tol` of `x_ref` (sup norm) and the
/// distance is non-increasing over the last quarter of the time span.
/// Fluctuations below 0.1 tol are ignored: once the distance sits at the
/// integrator's noise floor it wobbles instead of decreasing.
inline bool converged_to(const Trajectory& traj, const Vector& x_ref, double tol) {
    if (traj.states.empty()) throw ParameterError("converged_to: empty trajectory");
    const std::size_t last = traj.states.size() - 1;
    const double d_last = traj.distance_to(x_ref, last);
    if (!(d_last <= tol)) return false;

    const double t_last = traj.times[last];
    const double span = t_last - traj.times.front();
    const double window_start = t_last - 0.25 * span;
    const double slack = 0.1 * tol;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= last; ++i) {
        if (traj.times[i] < window_start) continue;
        const double d = traj.distance_to(x_ref, i);
        if (d > prev + slack) return false;
        prev = std::min(prev, d);
    }
    return true;
}

/// Trajectory dump: t,x_1,...,x_n at the given output stride.
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                                 int stride = 1, const std::string& meta = "") {
    if (stride < 1) throw ParameterError("write_trajectory_csv: stride must be >= 1");
    CsvWriter csv;
    if (!meta.empty()) csv.comment(meta);
    const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
    std::vector<std::string> cols{"t"};
    for (Eigen::Index k = 1; k <= n; ++k) cols.push_back("x_" + std::to_string(k));
    csv.header(cols);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        if (i % static_cast<std::size_t>(stride) != 0 && i + 1 != traj.times.size())
            continue;
        auto row = csv.row();
        row.col(traj.times[i]);
        for (Eigen::Index k = 0; k < n; ++k) row.col(traj.states[i](k));
    }
    csv.write_file(path);
}

} // namespace ellv
