#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ckcomp/criteria.hpp"
#include "ckcomp/errors.hpp"
#include "ckcomp/linalg.hpp"
#include "ckcomp/system.hpp"
#include "ckcomp/transform.hpp"

namespace ckcomp {

/// The (N+1) x (N+1) linearization of the compactified field at a
/// boundary point (eta, +-1): the frozen-system block, the forcing
/// sensitivity column chained through the pulled-back forcing slope, and
/// the time-factor slope in the corner. The bottom-left block is zero
/// identically (G depends on s alone).
struct BoundaryJacobian {
    int side = +1;
    Mat block;                       // (N+1)^2
    Mat fx;                          // d f / d x at (eta, mu^side)
    std::vector<double> dF_ds;       // d F / d s (eta, +-1)
    double g_prime = 0.0;            // G'(+-1)
};

/// The extended autonomous system on U x [-1,1] (or a one-sided
/// subinterval): interior evaluation pulls time back through the
/// transform inverse, the added boundaries carry the frozen limit
/// systems with a vanishing time factor. Immutable after build(); the
/// Newton seed for transform inversion lives in a per-consumer context.
class CompactifiedField {
public:
    /// Seed cache for the transform inversion; each concurrent consumer
    /// owns one.
    struct EvalContext {
        double t_seed = 0.0;
        bool has_seed = false;
    };

    const SystemSpec& system() const { return system_; }
    const TransformSpec& transform() const { return transform_; }
    const SmoothnessVerdict& verdict() const { return verdict_; }
    int smoothness_k() const { return k_; }
    bool forced() const { return forced_; }
    double boundary_band() const { return eps_band_; }

    int state_dim() const { return system_.state_dim; }
    int dim() const { return system_.state_dim + 1; }

    /// Closed s-interval the field is defined on.
    double s_min() const { return s_min_; }
    double s_max() const { return s_max_; }

    /// Which boundary s-values carry a frozen limit system.
    bool compactified_right() const { return compact_right_; }
    bool compactified_left() const { return compact_left_; }

    EvalContext make_context() const { return EvalContext{}; }

    bool in_boundary_band(double s) const {
        return (compact_right_ && s >= 1.0 - eps_band_) ||
               (compact_left_ && s <= -1.0 + eps_band_);
    }

    /// +1 / -1 for a point in the respective boundary band.
    int boundary_side(double s) const {
        if (compact_right_ && s >= 1.0 - eps_band_) return +1;
        if (compact_left_ && s <= -1.0 + eps_band_) return -1;
        throw StructureError("s=" + std::to_string(s) + " is not in a boundary band");
    }

    void require_in_domain(double s) const {
        const double slack = 1e-12;
        if (s < s_min_ - slack || s > s_max_ + slack)
            throw DomainError("s=" + std::to_string(s) + " outside the field domain [" +
                              std::to_string(s_min_) + ", " + std::to_string(s_max_) + "]");
    }

    /// t = h(s) for interior s. Uses the transform's closed form where
    /// one exists, otherwise guarded Newton with a bisection fallback on
    /// a bracket grown from the seed; monotone phi keeps the bracket
    /// safe. May return +-inf when h(s) exceeds the double range (deep
    /// inside the boundary band of slow transforms).
    double invert(double s, EvalContext* ctx = nullptr) const {
        require_in_domain(s);
        if (auto t = invert_closed_form(transform_, s)) {
            if (ctx && std::isfinite(*t)) { ctx->t_seed = *t; ctx->has_seed = true; }
            return *t;
        }
        // Newton with bracket maintenance
        double t = (ctx && ctx->has_seed) ? ctx->t_seed : initial_seed();
        double lo, hi;
        bracket(s, t, lo, hi);
        double flo = phi_value(transform_, lo) - s;
        for (int it = 0; it < 100; ++it) {
            const JetD j = phi_jet(transform_, t, 1);
            const double r = j.value() - s;
            if (std::abs(r) <= 1e-14 * (1.0 + std::abs(s))) break;
            if (r * flo < 0.0) hi = t; else lo = t;
            const double d = j.derivative(1);
            double tn = (d != 0.0) ? t - r / d : std::numeric_limits<double>::quiet_NaN();
            if (!std::isfinite(tn) || tn <= lo || tn >= hi) tn = 0.5 * (lo + hi);
            if (tn == t) break;
            t = tn;
            if (hi - lo <= 1e-15 * (1.0 + std::abs(t))) break;
        }
        const double resid = phi_value(transform_, t) - s;
        if (std::abs(resid) > 1e-9 * (1.0 + std::abs(s)))
            throw NumericsError("transform inversion stalled at s=" + std::to_string(s) +
                                ": residual " + std::to_string(resid) + ", bracket [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
        if (ctx) { ctx->t_seed = t; ctx->has_seed = true; }
        return t;
    }

    /// Field value (F(x, s), G(s)).
    std::vector<double> rhs(const std::vector<double>& x, double s,
                            EvalContext* ctx = nullptr) const {
        require_in_domain(s);
        std::vector<double> out(static_cast<std::size_t>(dim()), 0.0);
        if (in_boundary_band(s)) {
            const std::vector<double> f = system_.f_eval(x, system_.limit(boundary_side(s)));
            for (int i = 0; i < state_dim(); ++i) out[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i)];
            out[static_cast<std::size_t>(state_dim())] = 0.0; // boundary branch: s frozen exactly
            return out;
        }
        const double t = invert(s, ctx);
        if (!std::isfinite(t)) {
            // h(s) beyond the double range: the limit branch is the
            // continuous extension
            const int side = t > 0 ? +1 : -1;
            const std::vector<double> f = system_.f_eval(x, system_.limit(side));
            for (int i = 0; i < state_dim(); ++i) out[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i)];
            return out;
        }
        const std::vector<double> mu = system_.mu_eval(t);
        const std::vector<double> f = system_.f_eval(x, mu);
        for (int i = 0; i < state_dim(); ++i) out[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(state_dim())] = phi_derivative(transform_, t);
        return out;
    }

    /// Packed-state convenience: y = (x1..xN, s).
    std::vector<double> rhs_packed(const std::vector<double>& y,
                                   EvalContext* ctx = nullptr) const {
        std::vector<double> x(y.begin(), y.end() - 1);
        return rhs(x, y.back(), ctx);
    }

    /// Full (N+1)^2 Jacobian of the field at (x, s). Boundary entries
    /// use the verdict's converged limits.
    Mat jacobian(const std::vector<double>& x, double s, EvalContext* ctx = nullptr) const {
        require_in_domain(s);
        const int N = state_dim();
        Mat jac(N + 1, N + 1);
        if (in_boundary_band(s)) {
            const int side = boundary_side(s);
            const std::vector<double>& muv = system_.limit(side);
            const Mat fx = system_.f_jacobian_x(x, muv);
            const Mat fmu = system_.f_jacobian_mu(x, muv);
            const std::vector<double> mtp = mu_tilde_prime_limit(side);
            for (int i = 0; i < N; ++i) {
                for (int j = 0; j < N; ++j) jac(i, j) = fx(i, j);
                double acc = 0.0;
                for (int c = 0; c < system_.forcing_dim; ++c)
                    acc += fmu(i, c) * mtp[static_cast<std::size_t>(c)];
                jac(i, N) = acc;
            }
            jac(N, N) = g_prime_limit(side);
            return jac;
        }
        const double t = invert(s, ctx);
        const std::vector<double> mu = system_.mu_eval(t);
        const Mat fx = system_.f_jacobian_x(x, mu);
        const Mat fmu = system_.f_jacobian_mu(x, mu);
        const JetD pj = phi_jet(transform_, t, 2);
        const double pd = pj.derivative(1);
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) jac(i, j) = fx(i, j);
            double acc = 0.0;
            for (int c = 0; c < system_.forcing_dim; ++c) {
                const double mud = system_.mu_table(c, t, 1).d(1);
                acc += fmu(i, c) * (mud / pd); // d mu~_c / ds
            }
            jac(i, N) = acc;
        }
        jac(N, N) = pj.derivative(2) / pd; // g'(s)
        return jac;
    }

    /// Frozen limit system at side +-1 (the autonomous system the
    /// boundary carries).
    std::vector<double> frozen_rhs(int side, const std::vector<double>& x) const {
        return system_.f_eval(x, system_.limit(side));
    }

    Mat frozen_jacobian(int side, const std::vector<double>& x) const {
        return system_.f_jacobian_x(x, system_.limit(side));
    }

    /// mu~'(+-1) componentwise, from the verdict's converged n=1 probes.
    std::vector<double> mu_tilde_prime_limit(int side) const {
        const OrderProbes& o = verdict_.order(1);
        const std::vector<LimitProbe>& probes = side > 0 ? o.mu_plus : o.mu_minus;
        if (static_cast<int>(probes.size()) != system_.forcing_dim)
            throw NumericsError("incomplete Jacobian: no mu~' probes for side " +
                                std::to_string(side));
        std::vector<double> out;
        for (const LimitProbe& p : probes) {
            if (!p.converged())
                throw NumericsError("incomplete Jacobian: mu~' limit at side " +
                                    std::to_string(side) + " did not converge");
            out.push_back(p.value());
        }
        return out;
    }

    /// G'(+-1) from the verdict's converged n=1 time-factor probe.
    double g_prime_limit(int side) const {
        const OrderProbes& o = verdict_.order(1);
        const std::optional<LimitProbe>& p = side > 0 ? o.g_plus : o.g_minus;
        if (!p || !p->converged())
            throw NumericsError("incomplete Jacobian: G' limit at side " +
                                std::to_string(side) + " is unavailable");
        return p->value();
    }

    /// Boundary Jacobian block at a supplied boundary point eta.
    BoundaryJacobian boundary_jacobian(int side, const std::vector<double>& eta) const {
        if (side > 0 && !compact_right_)
            throw StructureError("field has no compactified boundary at s=+1");
        if (side < 0 && !compact_left_)
            throw StructureError("field has no compactified boundary at s=-1");
        const int N = state_dim();
        BoundaryJacobian bj;
        bj.side = side;
        bj.fx = system_.f_jacobian_x(eta, system_.limit(side));
        const Mat fmu = system_.f_jacobian_mu(eta, system_.limit(side));
        const std::vector<double> mtp = mu_tilde_prime_limit(side);
        bj.dF_ds.assign(static_cast<std::size_t>(N), 0.0);
        for (int i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int c = 0; c < system_.forcing_dim; ++c)
                acc += fmu(i, c) * mtp[static_cast<std::size_t>(c)];
            bj.dF_ds[static_cast<std::size_t>(i)] = acc;
        }
        bj.g_prime = g_prime_limit(side);
        bj.block = Mat(N + 1, N + 1);
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) bj.block(i, j) = bj.fx(i, j);
            bj.block(i, N) = bj.dF_ds[static_cast<std::size_t>(i)];
        }
        // bottom-left block is exactly zero; corner is G'
        bj.block(N, N) = bj.g_prime;
        return bj;
    }

    /// Structured description for reproducibility (key=value lines).
    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        os << "state_dim=" << system_.state_dim << "\n";
        os << "forcing_dim=" << system_.forcing_dim << "\n";
        for (std::size_t i = 0; i < system_.f_source.size(); ++i)
            os << "f" << (i + 1) << "=" << system_.f_source[i] << "\n";
        for (std::size_t i = 0; i < system_.mu_source.size(); ++i)
            os << "mu" << (i + 1) << "=" << system_.mu_source[i] << "\n";
        os << "transform=" << to_string(transform_.kind) << "\n";
        if (transform_.kind == TransformKind::PhiM)
            os << "transform.m=" << transform_.pieces->m << "\n";
        if (transform_.kind == TransformKind::User)
            os << "transform.expr=" << transform_.expr_source << "\n";
        os << "s_min=" << s_min_ << "\n";
        os << "s_max=" << s_max_ << "\n";
        os << "boundary_band=" << eps_band_ << "\n";
        os << "k=" << k_ << "\n";
        os << "forced=" << (forced_ ? 1 : 0) << "\n";
        os << "verdict=" << to_string(verdict_.overall) << "\n";
        auto emit_side = [&](int side, const char* name) {
            // forced fields may lack converged boundary limits
            try {
                const double gp = g_prime_limit(side);
                const auto mtp = mu_tilde_prime_limit(side);
                os << "boundary." << name << ".G_prime=" << gp << "\n";
                for (std::size_t c = 0; c < mtp.size(); ++c)
                    os << "boundary." << name << ".mu_tilde_prime." << (c + 1) << "="
                       << mtp[c] << "\n";
            } catch (const NumericsError&) {
                os << "boundary." << name << ".limits=unavailable\n";
            }
        };
        if (compact_right_) emit_side(+1, "plus");
        if (compact_left_) emit_side(-1, "minus");
        return os.str();
    }

    friend CompactifiedField build(const SystemSpec&, const TransformSpec&, int,
                                   const ProbeOptions&, bool);
    friend CompactifiedField build_one_sided(const SystemSpec&, const TransformSpec&, int,
                                             int, const ProbeOptions&, bool);

private:
    double initial_seed() const {
        if (transform_.side == AsymptoticClass::Right) return transform_.t_plus;
        if (transform_.side == AsymptoticClass::Left) return transform_.t_minus;
        return 0.0;
    }

    /// Grows [lo, hi] around the seed until phi brackets s.
    void bracket(double s, double seed, double& lo, double& hi) const {
        lo = hi = seed;
        double step = 1.0;
        const double dlo = transform_.side == AsymptoticClass::Right
                               ? transform_.t_plus
                               : -std::numeric_limits<double>::infinity();
        const double dhi = transform_.side == AsymptoticClass::Left
                               ? transform_.t_minus
                               : std::numeric_limits<double>::infinity();
        for (int i = 0; i < 2100 && phi_value(transform_, lo) > s; ++i) {
            if (lo <= dlo) break;
            lo = std::max(dlo, lo - step);
            step *= 2.0;
        }
        step = 1.0;
        for (int i = 0; i < 2100 && phi_value(transform_, hi) < s; ++i) {
            if (hi >= dhi) break;
            hi = std::min(dhi, hi + step);
            step *= 2.0;
        }
        if (!(phi_value(transform_, lo) <= s && s <= phi_value(transform_, hi)))
            throw NumericsError("failed to bracket h(s) at s=" + std::to_string(s));
    }

    SystemSpec system_;
    TransformSpec transform_;
    SmoothnessVerdict verdict_;
    int k_ = 1;
    bool forced_ = false;
    double eps_band_ = 1e-12;
    double s_min_ = -1.0, s_max_ = 1.0;
    bool compact_right_ = true, compact_left_ = true;
};

/// Builds the two-sided compactified field. Refuses when the C^k verdict
/// does not hold unless `force` is set (the forced flag is recorded; the
/// interior flow stays well defined, boundary Jacobian entries may be
/// unavailable).
inline CompactifiedField build(const SystemSpec& system, const TransformSpec& transform,
                               int k, const ProbeOptions& opt = {}, bool force = false) {
    system.validate();
    if (system.asymptotic_class != AsymptoticClass::TwoSided)
        throw ConfigError("build: two-sided compactification needs a bi-asymptotically "
                          "constant system (declared class: " +
                          std::string(to_string(system.asymptotic_class)) + ")");
    if (transform.one_sided())
        throw ConfigError("build: transform is one-sided; use build_one_sided");
    SmoothnessVerdict verdict = check_ck(system, transform, k, opt);
    if (!verdict.holds() && !force)
        throw NumericsError(std::string("build refused: C^k verdict is ") +
                            to_string(verdict.overall) + " at order n=" +
                            std::to_string(verdict.failing_order) + " (" +
                            verdict.failing_limit + "); pass force to override");
    CompactifiedField f;
    f.system_ = system;
    f.transform_ = transform;
    f.verdict_ = std::move(verdict);
    f.k_ = k;
    f.forced_ = force && !f.verdict_.holds();
    f.s_min_ = -1.0;
    f.s_max_ = 1.0;
    f.compact_left_ = true;
    f.compact_right_ = true;
    return f;
}

/// One-sided compactification on U x [s_+, 1] (side = +1) or
/// U x [-1, s_-] (side = -1); the finite end s_-+ = phi(t_-+) comes from
/// the transform's declared one-sided domain.
inline CompactifiedField build_one_sided(const SystemSpec& system,
                                         const TransformSpec& transform, int k, int side,
                                         const ProbeOptions& opt = {}, bool force = false) {
    system.validate();
    if (side != +1 && side != -1) throw ConfigError("build_one_sided: side must be +1 or -1");
    if (side > 0 && system.asymptotic_class == AsymptoticClass::Left)
        throw ConfigError("build_one_sided: system has no future limit");
    if (side < 0 && system.asymptotic_class == AsymptoticClass::Right)
        throw ConfigError("build_one_sided: system has no past limit");
    if (side > 0 && transform.side != AsymptoticClass::Right)
        throw ConfigError("build_one_sided: transform must declare side=right with t_plus");
    if (side < 0 && transform.side != AsymptoticClass::Left)
        throw ConfigError("build_one_sided: transform must declare side=left with t_minus");

    SystemSpec one_sided_system = system;
    one_sided_system.asymptotic_class =
        side > 0 ? AsymptoticClass::Right : AsymptoticClass::Left;
    SmoothnessVerdict verdict = check_ck(one_sided_system, transform, k, opt);
    if (!verdict.holds() && !force)
        throw NumericsError(std::string("build_one_sided refused: C^k verdict is ") +
                            to_string(verdict.overall) + " at order n=" +
                            std::to_string(verdict.failing_order) + " (" +
                            verdict.failing_limit + "); pass force to override");

    CompactifiedField f;
    f.system_ = one_sided_system;
    f.transform_ = transform;
    f.verdict_ = std::move(verdict);
    f.k_ = k;
    f.forced_ = force && !f.verdict_.holds();
    if (side > 0) {
        f.s_min_ = phi_value(transform, transform.t_plus);
        f.s_max_ = 1.0;
        f.compact_left_ = false;
        f.compact_right_ = true;
    } else {
        f.s_min_ = -1.0;
        f.s_max_ = phi_value(transform, transform.t_minus);
        f.compact_left_ = true;
        f.compact_right_ = false;
    }
    return f;
}

} // namespace ckcomp
