#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ckcomp/errors.hpp"
#include "ckcomp/field.hpp"

namespace ckcomp {

enum class Termination { SpanEnd, BoundaryEvent, StepFailure };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::SpanEnd: return "span_end";
        case Termination::BoundaryEvent: return "boundary_event";
        case Termination::StepFailure: return "step_failure";
    }
    return "?";
}

/// Numerically integrated orbit: accepted steps with their derivatives
/// (cubic-Hermite dense output), the tolerance used, and how the run
/// ended.
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::vector<std::vector<double>> derivs;
    double tol = 0.0;
    Termination termination = Termination::SpanEnd;
    std::optional<double> boundary_time; // s-clock saturation instant
    std::string note;

    std::size_t size() const { return times.size(); }
    const std::vector<double>& front_state() const { return states.front(); }
    const std::vector<double>& back_state() const { return states.back(); }
    double t_begin() const { return times.front(); }
    double t_end() const { return times.back(); }

    /// Dense evaluation by cubic Hermite interpolation on the bracketing
    /// accepted step.
    std::vector<double> at(double t) const {
        if (times.empty()) throw StructureError("empty trajectory");
        const bool fwd = times.back() >= times.front();
        if ((fwd && (t < times.front() - 1e-12 || t > times.back() + 1e-12)) ||
            (!fwd && (t > times.front() + 1e-12 || t < times.back() - 1e-12)))
            throw StructureError("dense evaluation outside trajectory span");
        // bracketing index by binary search
        std::size_t lo = 0, hi = times.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (fwd ? times[mid] <= t : times[mid] >= t) lo = mid; else hi = mid;
        }
        const double t0 = times[lo], t1 = times[hi];
        const double h = t1 - t0;
        if (h == 0.0) return states[lo];
        const double u = (t - t0) / h;
        const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
        const double h10 = u * (1 - u) * (1 - u);
        const double h01 = u * u * (3 - 2 * u);
        const double h11 = u * u * (u - 1);
        std::vector<double> y(states[lo].size());
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] = h00 * states[lo][i] + h * h10 * derivs[lo][i] +
                   h01 * states[hi][i] + h * h11 * derivs[hi][i];
        return y;
    }
};

struct IntegratorOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double h_init = 0.0; // 0: choose automatically
    double h_max = std::numeric_limits<double>::infinity();
    long max_steps = 50'000'000;
    double safety = 0.9;
};

namespace detail {

/// Dormand-Prince 5(4) embedded pair with PI step-size control and an
/// optional scalar event function; stops at the first sign change of the
/// event (refined by bisection on the Hermite interpolant).
template <typename RHS>
Trajectory dopri5(RHS&& rhs, std::vector<double> y0, double t0, double t_end,
                  const IntegratorOptions& opt,
                  const std::function<double(double, const std::vector<double>&)>& event = {}) {
    static const double C[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static const double A[7][6] = {
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
        {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
    static const double B5[7] = {35.0 / 384,      0.0,        500.0 / 1113, 125.0 / 192,
                                 -2187.0 / 6784,  11.0 / 84,  0.0};
    static const double B4[7] = {5179.0 / 57600,   0.0,         7571.0 / 16695, 393.0 / 640,
                                 -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

    const std::size_t n = y0.size();
    const double dir = t_end >= t0 ? 1.0 : -1.0;
    const double span = std::abs(t_end - t0);

    Trajectory traj;
    traj.tol = opt.rtol;

    std::vector<std::vector<double>> k(7, std::vector<double>(n));
    std::vector<double> y = std::move(y0), ytmp(n), y5(n), y4(n);

    rhs(t0, y, k[0]);
    traj.times.push_back(t0);
    traj.states.push_back(y);
    traj.derivs.push_back(k[0]);

    double h = opt.h_init;
    if (h == 0.0) {
        double ynorm = 0.0, fnorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ynorm = std::max(ynorm, std::abs(y[i]));
            fnorm = std::max(fnorm, std::abs(k[0][i]));
        }
        h = fnorm > 0.0 ? 0.01 * std::max(ynorm, 1.0) / fnorm : 1e-3;
        h = std::min(h, span);
    }
    h = std::min(h, opt.h_max) * dir;

    double t = t0;
    double err_prev = 1e-2;
    double e_prev = event ? event(t0, y) : 0.0;

    for (long step = 0; step < opt.max_steps; ++step) {
        if (dir * (t - t_end) >= 0.0) {
            traj.termination = Termination::SpanEnd;
            return traj;
        }
        if (dir * (t + h - t_end) > 0.0) h = t_end - t;
        if (std::abs(h) < 1e-14 * std::max(span, 1.0)) {
            traj.termination = Termination::StepFailure;
            traj.note = "step size underflow at t=" + std::to_string(t);
            return traj;
        }

        for (int stage = 1; stage < 7; ++stage) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = y[i];
                for (int j = 0; j < stage; ++j) acc += h * A[stage][j] * k[j][i];
                ytmp[i] = acc;
            }
            rhs(t + C[stage] * h, ytmp, k[stage]);
        }
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc5 = y[i], acc4 = y[i];
            for (int j = 0; j < 7; ++j) {
                acc5 += h * B5[j] * k[j][i];
                acc4 += h * B4[j] * k[j][i];
            }
            y5[i] = acc5;
            y4[i] = acc4;
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(acc5));
            const double e = (acc5 - acc4) / sc;
            err += e * e;
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (err <= 1.0) {
            // accepted; FSAL: k[6] is the derivative at the new point
            t += h;
            y = y5;
            traj.times.push_back(t);
            traj.states.push_back(y);
            traj.derivs.push_back(k[6]);
            if (event) {
                const double e_now = event(t, y);
                if (e_prev < 0.0 && e_now >= 0.0) {
                    // refine the crossing by bisection on the interpolant
                    double ta = traj.times[traj.size() - 2], tb = t;
                    for (int it = 0; it < 80 && tb - ta > 1e-15 * std::max(1.0, std::abs(tb));
                         ++it) {
                        const double tm = 0.5 * (ta + tb);
                        if (event(tm, traj.at(tm)) < 0.0) ta = tm; else tb = tm;
                    }
                    const std::vector<double> ye = traj.at(tb);
                    traj.times.back() = tb;
                    traj.states.back() = ye;
                    std::vector<double> fe(n);
                    rhs(tb, ye, fe);
                    traj.derivs.back() = fe;
                    traj.termination = Termination::BoundaryEvent;
                    traj.boundary_time = tb;
                    return traj;
                }
                e_prev = e_now;
            }
            k[0] = k[6];
            err_prev = std::max(err, 1e-10);
        }
        // PI controller (Hairer's dopri5 constants)
        const double beta = 0.04, alpha = 0.2 - 0.75 * beta;
        double fac = opt.safety * std::pow(std::max(err, 1e-16), -alpha) *
                     std::pow(err_prev, beta);
        fac = std::min(5.0, std::max(0.2, fac));
        h *= fac;
        if (std::abs(h) > opt.h_max) h = dir * opt.h_max;
    }
    traj.termination = Termination::StepFailure;
    traj.note = "max step count exceeded";
    return traj;
}

} // namespace detail

/// Integrates an arbitrary (possibly nonautonomous) ODE given as
/// rhs(t, y, dy); used by the dynamics layer and by oracle tests.
template <typename RHS>
Trajectory integrate_ode(RHS&& rhs, std::vector<double> y0, double t0, double t_end,
                         const IntegratorOptions& opt = {},
                         const std::function<double(double, const std::vector<double>&)>& event = {}) {
    return detail::dopri5(std::forward<RHS>(rhs), std::move(y0), t0, t_end, opt, event);
}

/// Flows the compactified field from (x0, s0) over t_span. Interior
/// integration stops when |s| crosses into the near-boundary band and
/// continues on the boundary branch (the frozen limit system, with the
/// s-clock reported as saturated via boundary_time). With
/// stop_at_boundary the run ends at the crossing instead.
inline Trajectory integrate(const CompactifiedField& field, const std::vector<double>& x0,
                            double s0, double t_span, double tol = 1e-8,
                            bool stop_at_boundary = false) {
    if (static_cast<int>(x0.size()) != field.state_dim())
        throw StructureError("integrate: x0 has wrong dimension");
    if (!(tol > 0.0)) throw StructureError("integrate: tolerance must be positive");
    field.require_in_domain(s0);
    IntegratorOptions opt;
    opt.rtol = tol;
    opt.atol = tol * 1e-2;

    std::vector<double> y0 = x0;
    y0.push_back(s0);
    const double t_end = t_span;
    const std::size_t s_idx = x0.size();

    CompactifiedField::EvalContext ctx = field.make_context();
    // Trial Runge-Kutta stages may overshoot a compactified end; there
    // the boundary branch is the continuous extension, so evaluate at
    // the clamped s. A finite one-sided end stays a hard domain
    // boundary and crossing it raises a domain error.
    auto interior_rhs = [&, s_idx](double, const std::vector<double>& y,
                                   std::vector<double>& dy) {
        std::vector<double> x(y.begin(), y.end() - 1);
        double s = y[s_idx];
        if (field.compactified_right()) s = std::min(s, field.s_max());
        if (field.compactified_left()) s = std::max(s, field.s_min());
        dy = field.rhs(x, s, &ctx);
    };

    Trajectory traj;
    if (!field.in_boundary_band(s0)) {
        // watch for the band boundary reachable in the direction of travel
        const bool fwd = t_span >= 0.0;
        std::function<double(double, const std::vector<double>&)> event;
        if (fwd && field.compactified_right())
            event = [&, s_idx](double, const std::vector<double>& y) {
                return y[s_idx] - (1.0 - field.boundary_band());
            };
        else if (!fwd && field.compactified_left())
            event = [&, s_idx](double, const std::vector<double>& y) {
                return (-1.0 + field.boundary_band()) - y[s_idx];
            };
        traj = integrate_ode(interior_rhs, y0, 0.0, t_end, opt, event);
        if (traj.termination != Termination::BoundaryEvent || stop_at_boundary)
            return traj;
    } else {
        traj.tol = tol;
        std::vector<double> f0 = field.rhs_packed(y0, &ctx);
        traj.times.push_back(0.0);
        traj.states.push_back(y0);
        traj.derivs.push_back(std::move(f0));
        traj.boundary_time = 0.0;
    }

    // continue on the boundary branch: x' = f(x, mu^side), s frozen
    const double t_resume = traj.times.back();
    const std::vector<double> y_resume = traj.states.back();
    const double s_frozen = y_resume[s_idx];
    const int side = field.boundary_side(s_frozen);
    auto boundary_rhs = [&](double, const std::vector<double>& y, std::vector<double>& dy) {
        std::vector<double> x(y.begin(), y.end() - 1);
        const std::vector<double> f = field.frozen_rhs(side, x);
        dy.assign(y.size(), 0.0);
        for (std::size_t i = 0; i + 1 < y.size(); ++i) dy[i] = f[i];
    };
    Trajectory rest = integrate_ode(boundary_rhs, y_resume, t_resume, t_end, opt);
    const std::optional<double> saturated = traj.boundary_time;
    for (std::size_t i = 1; i < rest.size(); ++i) {
        traj.times.push_back(rest.times[i]);
        traj.states.push_back(std::move(rest.states[i]));
        traj.derivs.push_back(std::move(rest.derivs[i]));
    }
    traj.termination = rest.termination;
    traj.boundary_time = saturated ? saturated : traj.boundary_time;
    if (!traj.boundary_time) traj.boundary_time = t_resume;
    traj.note = rest.note;
    traj.tol = tol;
    return traj;
}

} // namespace ckcomp
