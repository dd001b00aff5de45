#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ckcomp/errors.hpp"
#include "ckcomp/field.hpp"
#include "ckcomp/integrate.hpp"
#include "ckcomp/linalg.hpp"

namespace ckcomp {

/// A located periodic orbit of a frozen limit system: section anchor,
/// period, dense samples over one period, and the nontrivial Floquet
/// multipliers (the unit multiplier along the flow is identified and
/// removed).
struct PeriodicOrbit {
    std::vector<double> anchor;
    double period = 0.0;
    std::vector<std::vector<double>> dense; // >= 2048 states over one period
    std::vector<std::complex<double>> multipliers; // trivial one excluded
    double residual = 0.0;
    Mat monodromy;
    std::vector<double> section_normal;

    double dense_spacing() const { return period / static_cast<double>(dense.size()); }
};

struct FindCycleOptions {
    double transient_span = 100.0;
    double residual_tol = 1e-9;
    int max_newton = 50;
    double integrator_tol = 1e-11;
    int dense_samples = 4096;
    double min_return_time = 1e-2;
};

namespace detail {

inline Eigen::MatrixXd to_eigen(const Mat& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
    return out;
}

/// Integrates the frozen system together with its variational flow
/// until the section event fires; returns (x(T), M(T), T).
struct ReturnMapResult {
    std::vector<double> x;
    Mat monodromy;
    double time = 0.0;
    Trajectory traj; // augmented trajectory (for dense resampling)
};

template <typename RhsFn, typename JacFn>
ReturnMapResult return_map(const RhsFn& f, const JacFn& jac, int N,
                           const std::vector<double>& q, const std::vector<double>& normal,
                           const std::vector<double>& anchor, double min_time,
                           double horizon, double tol) {
    // augmented state: x (N) followed by the variational matrix, row-major
    std::vector<double> y0(static_cast<std::size_t>(N + N * N), 0.0);
    for (int i = 0; i < N; ++i) y0[static_cast<std::size_t>(i)] = q[static_cast<std::size_t>(i)];
    for (int i = 0; i < N; ++i) y0[static_cast<std::size_t>(N + i * N + i)] = 1.0;

    auto rhs = [&](double, const std::vector<double>& y, std::vector<double>& dy) {
        std::vector<double> x(y.begin(), y.begin() + N);
        const std::vector<double> fx = f(x);
        const Mat J = jac(x);
        dy.assign(y.size(), 0.0);
        for (int i = 0; i < N; ++i) dy[static_cast<std::size_t>(i)] = fx[static_cast<std::size_t>(i)];
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                double acc = 0.0;
                for (int l = 0; l < N; ++l)
                    acc += J(i, l) * y[static_cast<std::size_t>(N + l * N + j)];
                dy[static_cast<std::size_t>(N + i * N + j)] = acc;
            }
    };
    // Section crossing in the positive direction. The start point lies on
    // (or near) the section, so the event arms only after the orbit has
    // genuinely left through the negative side; arming is monotone, which
    // keeps the stateful lambda consistent with the in-step refinement.
    auto armed = std::make_shared<bool>(false);
    auto event = [&, armed](double t, const std::vector<double>& y) -> double {
        double e = 0.0;
        for (int i = 0; i < N; ++i)
            e += normal[static_cast<std::size_t>(i)] *
                 (y[static_cast<std::size_t>(i)] - anchor[static_cast<std::size_t>(i)]);
        if (!*armed) {
            if (t >= min_time && e < -1e-9) *armed = true;
            return -1.0;
        }
        return e;
    };
    IntegratorOptions opt;
    opt.rtol = tol;
    opt.atol = tol * 1e-2;
    Trajectory traj = integrate_ode(rhs, y0, 0.0, horizon, opt, event);
    if (traj.termination != Termination::BoundaryEvent)
        throw NumericsError("return map: no section crossing within the horizon (" +
                            std::string(to_string(traj.termination)) + ")");
    ReturnMapResult r;
    r.time = traj.t_end();
    const std::vector<double>& ye = traj.back_state();
    r.x.assign(ye.begin(), ye.begin() + N);
    r.monodromy = Mat(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            r.monodromy(i, j) = ye[static_cast<std::size_t>(N + i * N + j)];
    r.traj = std::move(traj);
    return r;
}

} // namespace detail

/// Locates an attracting periodic orbit of the frozen limit system on
/// the given side by transient integration followed by Newton iteration
/// on the Poincare return map; the monodromy matrix comes from the
/// variational flow integrated alongside the orbit, and the Floquet
/// multipliers are its eigenvalues with the trivial unit multiplier
/// removed by closest-to-1 matching.
inline PeriodicOrbit find_limit_cycle(const CompactifiedField& field, int side,
                                      const std::vector<double>& seed,
                                      std::vector<double> section_normal = {},
                                      const FindCycleOptions& opts = {}) {
    const int N = field.state_dim();
    if (static_cast<int>(seed.size()) != N)
        throw StructureError("find_limit_cycle: seed has wrong dimension");

    auto f = [&](const std::vector<double>& x) { return field.frozen_rhs(side, x); };
    auto jac = [&](const std::vector<double>& x) { return field.frozen_jacobian(side, x); };

    // transient: settle onto the attractor
    IntegratorOptions topt;
    topt.rtol = opts.integrator_tol;
    topt.atol = opts.integrator_tol * 1e-2;
    auto plain_rhs = [&](double, const std::vector<double>& y, std::vector<double>& dy) {
        dy = f(y);
    };
    Trajectory transient = integrate_ode(plain_rhs, seed, 0.0, opts.transient_span, topt);
    std::vector<double> anchor = transient.back_state();

    // section through the post-transient point, orthogonal to the flow
    // unless the caller overrides
    std::vector<double> fq = f(anchor);
    double fnorm = 0.0;
    for (double v : fq) fnorm += v * v;
    fnorm = std::sqrt(fnorm);
    if (fnorm < 1e-12)
        throw NumericsError("find_limit_cycle: flow vanishes at the transient endpoint "
                            "(equilibrium, no cycle nearby)");
    if (section_normal.empty()) {
        section_normal = fq;
        for (double& v : section_normal) v /= fnorm;
    } else {
        double dot = 0.0;
        for (int i = 0; i < N; ++i)
            dot += section_normal[static_cast<std::size_t>(i)] * fq[static_cast<std::size_t>(i)];
        if (std::abs(dot) < 1e-10 * fnorm)
            throw NumericsError("find_limit_cycle: section is not transversal to the flow");
    }

    const double horizon = std::max(1e3, 50.0 * opts.transient_span);
    std::vector<double> q = anchor;
    std::vector<double> residual_history;
    double residual = std::numeric_limits<double>::infinity();
    detail::ReturnMapResult rm;

    for (int it = 0; it < opts.max_newton; ++it) {
        rm = detail::return_map(f, jac, N, q, section_normal, anchor,
                                opts.min_return_time, horizon, opts.integrator_tol);
        residual = 0.0;
        for (int i = 0; i < N; ++i) {
            const double d = rm.x[static_cast<std::size_t>(i)] - q[static_cast<std::size_t>(i)];
            residual += d * d;
        }
        residual = std::sqrt(residual);
        residual_history.push_back(residual);
        if (residual <= opts.residual_tol) break;

        // Newton on (Psi_T(q) - q, n.(q - anchor)) with unknowns (q, T)
        const std::vector<double> fT = f(rm.x);
        Mat A(N + 1, N + 1);
        std::vector<double> b(static_cast<std::size_t>(N + 1), 0.0);
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) A(i, j) = rm.monodromy(i, j) - (i == j ? 1.0 : 0.0);
            A(i, N) = fT[static_cast<std::size_t>(i)];
            b[static_cast<std::size_t>(i)] =
                -(rm.x[static_cast<std::size_t>(i)] - q[static_cast<std::size_t>(i)]);
        }
        for (int j = 0; j < N; ++j) A(N, j) = section_normal[static_cast<std::size_t>(j)];
        A(N, N) = 0.0;
        b[static_cast<std::size_t>(N)] = 0.0;
        std::vector<double> delta;
        try {
            delta = lu_solve(A, b);
        } catch (const SingularityError&) {
            throw NumericsError("find_limit_cycle: singular Newton system (cycle may be "
                                "non-hyperbolic or absent)");
        }
        for (int i = 0; i < N; ++i) q[static_cast<std::size_t>(i)] += delta[static_cast<std::size_t>(i)];
    }
    if (residual > opts.residual_tol) {
        std::string hist;
        for (double r : residual_history) hist += " " + std::to_string(r);
        throw NumericsError("find_limit_cycle: Newton stagnated after " +
                            std::to_string(opts.max_newton) + " iterations; residuals:" + hist);
    }

    PeriodicOrbit orbit;
    orbit.anchor = q;
    orbit.period = rm.time;
    orbit.residual = residual;
    orbit.monodromy = rm.monodromy;
    orbit.section_normal = section_normal;

    // dense samples over one period from the converged pass
    orbit.dense.reserve(static_cast<std::size_t>(opts.dense_samples));
    for (int i = 0; i < opts.dense_samples; ++i) {
        const double ti = orbit.period * static_cast<double>(i) /
                          static_cast<double>(opts.dense_samples);
        const std::vector<double> y = rm.traj.at(ti);
        orbit.dense.emplace_back(y.begin(), y.begin() + N);
    }

    // Floquet multipliers: eigenvalues of the monodromy, trivial unit
    // multiplier removed by closest-to-1 matching
    const Eigen::MatrixXd M = detail::to_eigen(rm.monodromy);
    const Eigen::EigenSolver<Eigen::MatrixXd> es(M);
    std::vector<std::complex<double>> eig;
    for (int i = 0; i < N; ++i) eig.push_back(es.eigenvalues()(i));
    std::size_t trivial = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < eig.size(); ++i) {
        const double d = std::abs(eig[i] - std::complex<double>(1.0, 0.0));
        if (d < best) { best = d; trivial = i; }
    }
    for (std::size_t i = 0; i < eig.size(); ++i)
        if (i != trivial) orbit.multipliers.push_back(eig[i]);
    std::sort(orbit.multipliers.begin(), orbit.multipliers.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  return std::abs(a) > std::abs(b);
              });
    return orbit;
}

/// Minimum Euclidean distance of one point to the orbit: dense-sample
/// minimum, refined against the local quadratic curve through the
/// winning sample and its neighbors (Newton on the arc parameter). The
/// curve model makes the refinement third-order in the sample spacing,
/// which is what pushes on-cycle distances to the 1e-8 level.
inline double distance_to_orbit_point(const std::vector<double>& y,
                                      const PeriodicOrbit& orbit) {
    if (orbit.dense.empty()) throw StructureError("distance_to_orbit: orbit has no samples");
    const std::size_t M = orbit.dense.size();
    const std::size_t N = orbit.dense.front().size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0;
    for (std::size_t i = 0; i < M; ++i) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < N; ++c) {
            const double d = y[c] - orbit.dense[i][c];
            d2 += d * d;
        }
        if (d2 < best) { best = d2; bi = i; }
    }
    // local curve c(tau) = a + b tau + q tau^2 through the neighbors at
    // tau = -1, 0, 1
    const std::size_t il = (bi + M - 1) % M, ir = (bi + 1) % M;
    std::vector<double> a(N), b(N), q(N);
    for (std::size_t c = 0; c < N; ++c) {
        const double pl = orbit.dense[il][c], pm = orbit.dense[bi][c], pr = orbit.dense[ir][c];
        a[c] = pm;
        b[c] = 0.5 * (pr - pl);
        q[c] = 0.5 * (pr - 2.0 * pm + pl);
    }
    double tau = 0.0;
    for (int it = 0; it < 8; ++it) {
        double g = 0.0, gp = 0.0;
        for (std::size_t c = 0; c < N; ++c) {
            const double cc = a[c] + b[c] * tau + q[c] * tau * tau;
            const double dc = b[c] + 2.0 * q[c] * tau;
            const double r = y[c] - cc;
            g += -2.0 * r * dc;
            gp += 2.0 * dc * dc - 4.0 * r * q[c];
        }
        if (gp <= 0.0) break;
        double step = g / gp;
        tau -= step;
        tau = std::min(1.5, std::max(-1.5, tau));
        if (std::abs(step) < 1e-14) break;
    }
    tau = std::min(1.0, std::max(-1.0, tau));
    double d2 = 0.0;
    for (std::size_t c = 0; c < N; ++c) {
        const double cc = a[c] + b[c] * tau + q[c] * tau * tau;
        d2 += (y[c] - cc) * (y[c] - cc);
    }
    return std::sqrt(std::min(d2, best));
}

/// Distance of the trajectory's x-component to the orbit, per sample
/// after from_t.
inline std::vector<std::pair<double, double>> distance_to_orbit(const Trajectory& traj,
                                                                const PeriodicOrbit& orbit,
                                                                double from_t) {
    const std::size_t N = orbit.dense.empty() ? 0 : orbit.dense.front().size();
    std::vector<std::pair<double, double>> out;
    for (std::size_t si = 0; si < traj.size(); ++si) {
        const double t = traj.times[si];
        if (t < from_t) continue;
        std::vector<double> x(traj.states[si].begin(), traj.states[si].begin() +
                                                           static_cast<std::ptrdiff_t>(N));
        out.emplace_back(t, distance_to_orbit_point(x, orbit));
    }
    return out;
}

/// Exponential-separation diagnostic: integrates two nearby initial
/// points, takes M1 as the grid maximum of the spectral norm of the
/// field Jacobian over the region, and reports the pointwise ratio
///   |X2(t) - X1(t)| / (|X2(0) - X1(0)| exp(M1 t)).
struct GronwallReport {
    double m1 = 0.0;
    bool pass = false;
    bool trivial = false;              // identical initial points
    double max_ratio = 0.0;
    std::vector<std::pair<double, double>> ratios;
    std::optional<double> exit_time;   // first time an orbit leaves the region
    std::string note;
};

struct GronwallOptions {
    int grid_per_axis = 13;
    double integrator_tol = 1e-10;
    int report_samples = 200;
    double ratio_slack = 1e-6; // pass iff ratio <= 1 + slack
};

inline GronwallReport gronwall_check(const CompactifiedField& field,
                                     const std::vector<double>& x1,
                                     const std::vector<double>& x2,
                                     const std::vector<std::pair<double, double>>& region,
                                     double t_span, const GronwallOptions& opts = {}) {
    const int D = field.dim();
    if (static_cast<int>(x1.size()) != D || static_cast<int>(x2.size()) != D)
        throw StructureError("gronwall_check: points must be (x, s) states of dimension " +
                             std::to_string(D));
    if (static_cast<int>(region.size()) != D)
        throw StructureError("gronwall_check: region must have one interval per dimension");

    GronwallReport rep;

    // M1: spectral-norm maximum of the Jacobian over the region grid
    std::vector<int> idx(static_cast<std::size_t>(D), 0);
    const int G = opts.grid_per_axis;
    CompactifiedField::EvalContext ctx = field.make_context();
    for (;;) {
        std::vector<double> p(static_cast<std::size_t>(D));
        for (int d = 0; d < D; ++d) {
            const auto [lo, hi] = region[static_cast<std::size_t>(d)];
            p[static_cast<std::size_t>(d)] =
                G == 1 ? 0.5 * (lo + hi)
                       : lo + (hi - lo) * idx[static_cast<std::size_t>(d)] / (G - 1);
        }
        double s = p.back();
        s = std::min(std::max(s, field.s_min()), field.s_max());
        std::vector<double> x(p.begin(), p.end() - 1);
        const Mat J = field.jacobian(x, s, &ctx);
        const Eigen::MatrixXd Je = detail::to_eigen(J);
        const double nrm = Je.jacobiSvd().singularValues()(0);
        rep.m1 = std::max(rep.m1, nrm);
        int d = 0;
        for (; d < D; ++d) {
            if (++idx[static_cast<std::size_t>(d)] < G) break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
        if (d == D) break;
    }

    double delta0 = 0.0;
    for (int i = 0; i < D; ++i) {
        const double d = x2[static_cast<std::size_t>(i)] - x1[static_cast<std::size_t>(i)];
        delta0 += d * d;
    }
    delta0 = std::sqrt(delta0);
    if (delta0 == 0.0) {
        rep.trivial = true;
        rep.pass = true;
        rep.note = "identical initial points; separation is identically zero";
        return rep;
    }

    auto run = [&](const std::vector<double>& p) {
        std::vector<double> x(p.begin(), p.end() - 1);
        return integrate(field, x, p.back(), t_span, opts.integrator_tol);
    };
    const Trajectory tr1 = run(x1);
    const Trajectory tr2 = run(x2);

    auto inside = [&](const std::vector<double>& y) {
        for (int d = 0; d < D; ++d) {
            const auto [lo, hi] = region[static_cast<std::size_t>(d)];
            if (y[static_cast<std::size_t>(d)] < lo - 1e-12 ||
                y[static_cast<std::size_t>(d)] > hi + 1e-12)
                return false;
        }
        return true;
    };

    const double t_hi = std::min(tr1.t_end(), tr2.t_end());
    rep.pass = true;
    for (int i = 0; i <= opts.report_samples; ++i) {
        const double t = t_span * i / opts.report_samples;
        if (t > t_hi) break;
        const std::vector<double> y1 = tr1.at(t);
        const std::vector<double> y2 = tr2.at(t);
        if (!inside(y1) || !inside(y2)) {
            rep.exit_time = t;
            rep.note = "an orbit left the region; the bound is inapplicable beyond t=" +
                       std::to_string(t);
            break;
        }
        double sep = 0.0;
        for (int d = 0; d < D; ++d) {
            const double dd = y2[static_cast<std::size_t>(d)] - y1[static_cast<std::size_t>(d)];
            sep += dd * dd;
        }
        sep = std::sqrt(sep);
        const double ratio = sep / (delta0 * std::exp(rep.m1 * t));
        rep.ratios.emplace_back(t, ratio);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        if (ratio > 1.0 + opts.ratio_slack) rep.pass = false;
    }
    return rep;
}

} // namespace ckcomp
