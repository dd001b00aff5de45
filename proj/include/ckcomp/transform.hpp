#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ckcomp/bell.hpp"
#include "ckcomp/errors.hpp"
#include "ckcomp/expr.hpp"
#include "ckcomp/jet.hpp"
#include "ckcomp/probe.hpp"
#include "ckcomp/system.hpp"

namespace ckcomp {

enum class TransformKind { Arctan, PhiM, User };

inline const char* to_string(TransformKind k) {
    switch (k) {
        case TransformKind::Arctan: return "arctan";
        case TransformKind::PhiM: return "phi_m";
        case TransformKind::User: return "user";
    }
    return "?";
}

namespace slowtf {

// The slow transform family Phi_m(t) = -1/ln^m(|t|) with iterated
// logarithms, defined for |t| > exp^{m-1}(1). exp^m(1) overflows the
// double range beyond m = 3, which bounds the catalog.
constexpr int kMaxM = 3;

inline double ln_iter(double t, int m) {
    for (int i = 0; i < m; ++i) {
        if (!(t > 0.0))
            throw DomainError("iterated log undefined (argument " + std::to_string(t) + ")");
        t = std::log(t);
    }
    return t;
}

inline double exp_iter(double w, int m) {
    for (int i = 0; i < m; ++i) {
        if (w > 700.0) return std::numeric_limits<double>::infinity();
        w = std::exp(w);
    }
    return w;
}

/// Smallest |t| for which Phi_m is defined and positive-logged:
/// exp^{m-1}(1), with exp^0(1) = 1.
inline double domain_min(int m) { return exp_iter(1.0, m - 1); }

inline double phi_m_value(double t, int m) {
    const double u = std::abs(t);
    if (!(u > domain_min(m)))
        throw DomainError("Phi_m undefined at t=" + std::to_string(t) +
                          " (needs |t| > " + std::to_string(domain_min(m)) + ")");
    return -1.0 / ln_iter(u, m);
}

/// Jet of P(t) = t * prod_{i=1..m} ln^i(t) at t > domain_min(m).
inline JetD p_factor_jet(double t, int m, int order) {
    JetD id = JetD::variable(t, order);
    JetD acc = id;
    JetD lni = id;
    for (int i = 1; i <= m; ++i) {
        lni = jets::log(lni);
        acc = acc * lni;
    }
    return acc;
}

/// Jet of Phi_m at |t| > domain_min(m). Derivatives come from the
/// recurrence obtained by Leibniz-differentiating Phi' * P + Phi = 0,
///   Phi^(n+1) = -(Phi^(n) + sum_{i<n} C(n,i) Phi^(i+1) P^(n-i)) / P,
/// which stays conditioned at huge t where naive chain-rule products of
/// iterated-log jets lose accuracy. Phi_m is even; negative t goes
/// through the parity of the derivatives.
inline JetD phi_m_jet(double t, int m, int order) {
    const double u = std::abs(t);
    if (!(u > domain_min(m)))
        throw DomainError("Phi_m jet requested outside domain at t=" + std::to_string(t));
    const JetD p = p_factor_jet(u, m, order);
    std::vector<double> raw(static_cast<std::size_t>(order) + 1, 0.0);
    raw[0] = -1.0 / ln_iter(u, m);
    const double p0 = p.value();
    std::vector<double> binom(static_cast<std::size_t>(order) + 1, 0.0);
    for (int n = 0; n < order; ++n) {
        // binomial row C(n, i)
        binom[0] = 1.0;
        for (int i = n; i >= 1; --i)
            binom[static_cast<std::size_t>(i)] =
                (i <= n - 1 ? binom[static_cast<std::size_t>(i)] : 0.0) +
                binom[static_cast<std::size_t>(i - 1)];
        double acc = raw[static_cast<std::size_t>(n)];
        for (int i = 0; i <= n - 1; ++i)
            acc += binom[static_cast<std::size_t>(i)] *
                   raw[static_cast<std::size_t>(i + 1)] * p.derivative(n - i);
        raw[static_cast<std::size_t>(n + 1)] = -acc / p0;
    }
    std::vector<double> coeffs(static_cast<std::size_t>(order) + 1, 0.0);
    double fact = 1.0;
    for (int j = 0; j <= order; ++j) {
        if (j >= 2) fact *= j;
        double c = raw[static_cast<std::size_t>(j)] / fact;
        if (t < 0.0 && (j % 2 == 1)) c = -c; // even function
        coeffs[static_cast<std::size_t>(j)] = c;
    }
    return JetD(t, std::move(coeffs));
}

/// C-infinity step lifted over a jet: 0 for u <= 0, 1 for u >= 1,
/// strictly increasing between, flat to all orders at both ends.
/// exp(-1/u) underflows to an exact zero jet near the ends, which is the
/// correct flat limit.
inline JetD smoothstep_lift(const JetD& u) {
    const double base = u.base_point();
    const int order = u.order();
    auto zero = [&] { return JetD::constant(0.0, base, order); };
    auto one = [&] { return JetD::constant(1.0, base, order); };
    if (u.value() <= 0.0) return zero();
    if (u.value() >= 1.0) return one();
    auto bump = [&](const JetD& v) -> JetD {
        if (v.value() < 1.0 / 745.0) return JetD::constant(0.0, base, order);
        return jets::exp(-jets::reciprocal(v));
    };
    const JetD b0 = bump(u);
    const JetD b1 = bump(1.0 - u);
    if (b0.value() == 0.0) return zero();
    if (b1.value() == 0.0) return one();
    return b0 / (b0 + b1);
}

inline double smoothstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return smoothstep_lift(JetD::variable(u, 1)).value();
}

} // namespace slowtf

/// The assembled piecewise transform realizing the slow Phi_m family as
/// an (H1) transformation: outer branches +-1 + Phi_m(t) beyond the
/// splice radius, a linear core through the origin, and a smoothstep
/// blend in between. Every piece is strictly increasing by construction:
/// phi' = w'(outer - core) + w outer' + (1-w) core' with all three terms
/// nonnegative on the blend zone.
struct PhiMPieces {
    int m = 1;
    int max_order = 3;      // K = k+1 used for construction checks
    double splice_radius = 0.0; // R: outer branches live on |t| >= R
    double blend_start = 0.0;   // a: linear core on |t| <= a
    double core_slope = 0.0;    // lambda

    double outer_value(double t) const { return 1.0 + slowtf::phi_m_value(t, m); }
};

/// A time transformation phi with jet evaluation and a declared
/// asymptotic class. Immutable after construction.
struct TransformSpec {
    TransformKind kind = TransformKind::Arctan;
    int max_order = 12;
    AsymptoticClass side = AsymptoticClass::TwoSided;
    double t_plus = 0.0;  // used when side == Right
    double t_minus = 0.0; // used when side == Left

    // PhiM
    std::shared_ptr<const PhiMPieces> pieces;

    // User
    Expr expr;
    std::string expr_source;

    bool one_sided() const { return side != AsymptoticClass::TwoSided; }

    void require_in_domain(double t) const {
        if (side == AsymptoticClass::Right && t < t_plus)
            throw DomainError("t=" + std::to_string(t) +
                              " below the right-sided domain start t_plus=" +
                              std::to_string(t_plus));
        if (side == AsymptoticClass::Left && t > t_minus)
            throw DomainError("t=" + std::to_string(t) +
                              " above the left-sided domain end t_minus=" +
                              std::to_string(t_minus));
    }
};

/// phi(t) = (2/pi) atan(t): the workhorse two-sided transform.
inline TransformSpec arctan_transform(int max_order = 12) {
    TransformSpec s;
    s.kind = TransformKind::Arctan;
    s.max_order = max_order;
    return s;
}

inline TransformSpec user_transform(const std::string& source, int max_order = 12,
                                    AsymptoticClass side = AsymptoticClass::TwoSided,
                                    double t_plus = 0.0, double t_minus = 0.0) {
    TransformSpec s;
    s.kind = TransformKind::User;
    s.max_order = max_order;
    s.side = side;
    s.t_plus = t_plus;
    s.t_minus = t_minus;
    s.expr = parse(source);
    s.expr_source = source;
    const VarUsage u = usage(s.expr);
    if (u.max_x > 0 || u.max_mu > 0 || u.uses_s)
        throw ConfigError("a user transform must be a function of t only");
    // must evaluate and be strictly increasing on a validation grid;
    // the full hypothesis scan (kinks, tail limits) is a separate step
    double lo = -30.0, hi = 30.0;
    if (side == AsymptoticClass::Right) { lo = t_plus; hi = t_plus + 60.0; }
    if (side == AsymptoticClass::Left) { hi = t_minus; lo = t_minus - 60.0; }
    double prev = 0.0;
    for (int i = 0; i <= 64; ++i) {
        const double t = lo + (hi - lo) * i / 64.0;
        double v;
        try {
            VarBindings env;
            env.t = t;
            v = eval_real(s.expr, env);
        } catch (const Error& e) {
            throw ConfigError("user transform does not evaluate at t=" + std::to_string(t) +
                              ": " + e.what());
        }
        if (i > 0 && !(v > prev))
            throw ConfigError("user transform is not strictly increasing near t=" +
                              std::to_string(t));
        prev = v;
    }
    return s;
}

namespace detail {

inline JetD phi_m_assembled_jet(const PhiMPieces& pc, double t, int order) {
    const double R = pc.splice_radius;
    const double a = pc.blend_start;
    const double u = std::abs(t);
    if (u <= a) {
        // linear core; odd, so valid for both signs directly
        std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
        c[0] = pc.core_slope * t;
        c[1] = pc.core_slope;
        return JetD(t, std::move(c));
    }
    // evaluate on the positive side, mirror oddly afterwards
    JetD val = [&]() -> JetD {
        if (u >= R) return 1.0 + slowtf::phi_m_jet(u, pc.m, order);
        const JetD id = JetD::variable(u, order);
        const JetD w = slowtf::smoothstep_lift((id - a) * (1.0 / (R - a)));
        const JetD outer = 1.0 + slowtf::phi_m_jet(u, pc.m, order);
        const JetD core = pc.core_slope * id;
        return w * outer + (1.0 - w) * core;
    }();
    if (t >= 0.0) return val;
    // odd mirror: phi(t) = -phi(-t)
    std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
    for (int j = 0; j <= order; ++j) {
        double cj = -val.coeff(j);
        if (j % 2 == 1) cj = -cj;
        c[static_cast<std::size_t>(j)] = cj;
    }
    return JetD(t, std::move(c));
}

} // namespace detail

/// Jet of phi at t to the given order.
inline JetD phi_jet(const TransformSpec& spec, double t, int order) {
    if (order < 1 || order > spec.max_order)
        throw StructureError("phi_jet order " + std::to_string(order) +
                             " outside 1..max_order=" + std::to_string(spec.max_order));
    spec.require_in_domain(t);
    switch (spec.kind) {
        case TransformKind::Arctan:
            return (2.0 / M_PI) * jets::atan(JetD::variable(t, order));
        case TransformKind::PhiM:
            if (!spec.pieces) throw StructureError("phi_m transform has no pieces");
            return detail::phi_m_assembled_jet(*spec.pieces, t, order);
        case TransformKind::User:
            return eval_jet(spec.expr, ActiveVar{VarKind::T, 0}, VarBindings{}, t, order);
    }
    throw StructureError("corrupt transform kind");
}

inline double phi_value(const TransformSpec& spec, double t) {
    return phi_jet(spec, t, 1).value();
}

inline double phi_derivative(const TransformSpec& spec, double t) {
    return phi_jet(spec, t, 1).derivative(1);
}

/// phi^(1)..phi^(order) at t as a derivative table.
inline DerivativeTable<double> phi_table(const TransformSpec& spec, double t, int order) {
    return DerivativeTable<double>::from_jet(phi_jet(spec, t, order));
}

/// Builds the assembled slow transform for a given m: splice radius
/// R = exp^m(1) + 1 (the smallest radius of this shape for which the
/// outer branch value 1 + Phi_m(R) is positive, hence a strictly
/// increasing odd filler exists), a linear core of slope
/// (1 + Phi_m(a))/R on |t| <= a = exp^m(1) + 1/4, and the smoothstep
/// blend on a <= |t| <= R. Verifies strict monotonicity on a 10^4-point
/// grid and jet consistency at the splice points.
inline PhiMPieces build_phi_m(int m, int K) {
    if (m < 1 || m > slowtf::kMaxM)
        throw ConfigError("phi_m transform requires 1 <= m <= " +
                          std::to_string(slowtf::kMaxM));
    if (K < 2) throw ConfigError("build_phi_m requires K >= 2");
    PhiMPieces pc;
    pc.m = m;
    pc.max_order = K;
    const double base = slowtf::exp_iter(1.0, m);
    pc.splice_radius = base + 1.0;
    pc.blend_start = base + 0.25;
    const double outer_at_a = 1.0 + slowtf::phi_m_value(pc.blend_start, m);
    if (!(outer_at_a > 0.0))
        throw NumericsError("phi_m blend start lies below the zero of the outer branch");
    pc.core_slope = outer_at_a / pc.splice_radius;

    TransformSpec probe;
    probe.kind = TransformKind::PhiM;
    probe.max_order = std::max(K, 2);
    probe.pieces = std::make_shared<PhiMPieces>(pc);

    // strict monotonicity on the validation grid
    const double lo = -pc.splice_radius - 10.0, hi = pc.splice_radius + 10.0;
    const int npts = 10000;
    for (int i = 0; i <= npts; ++i) {
        const double t = lo + (hi - lo) * i / npts;
        const double d = phi_derivative(probe, t);
        if (!(d > 0.0))
            throw NumericsError("phi_m construction failed: phi' = " + std::to_string(d) +
                                " at grid point t=" + std::to_string(t));
    }
    // splice consistency: the blend equals the adjacent branch exactly at
    // the splice points, so one-sided jets must agree to roundoff
    for (double tsp : {pc.blend_start, pc.splice_radius}) {
        const JetD inner = detail::phi_m_assembled_jet(pc, tsp - 1e-13, K);
        const JetD outer = detail::phi_m_assembled_jet(pc, tsp + 1e-13, K);
        for (int j = 0; j <= K; ++j) {
            const double x = inner.coeff(j), y = outer.coeff(j);
            const double scale = std::max({std::abs(x), std::abs(y), 1e-30});
            if (std::abs(x - y) / scale > 1e-6 && std::abs(x - y) > 1e-10)
                throw NumericsError("phi_m splice mismatch at t=" + std::to_string(tsp) +
                                    " order " + std::to_string(j));
        }
    }
    return pc;
}

inline TransformSpec phi_m_transform(int m, int max_order = 12) {
    TransformSpec s;
    s.kind = TransformKind::PhiM;
    s.max_order = max_order;
    s.pieces = std::make_shared<const PhiMPieces>(build_phi_m(m, std::max(2, max_order)));
    return s;
}

/// Phi_m^(n+1)(t) / (Phi_m'(t))^n along a grid: the decay ratios that
/// make the slow family a universal C^k splice, and the quantity the
/// iterated-log identities cross-check.
inline std::vector<double> phi_m_ratio_check(int m, int n, const std::vector<double>& t_grid) {
    if (m < 1 || m > slowtf::kMaxM) throw ConfigError("phi_m_ratio_check: bad m");
    std::vector<double> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) {
        const JetD j = slowtf::phi_m_jet(t, m, n + 1);
        const double d1 = j.derivative(1);
        double denom = 1.0;
        for (int i = 0; i < n; ++i) denom *= d1;
        out.push_back(j.derivative(n + 1) / denom);
    }
    return out;
}

/// Closed-form inverse h(s) = phi^{-1}(s) where one exists; nullopt asks
/// the caller to fall back to bracketed Newton.
inline std::optional<double> invert_closed_form(const TransformSpec& spec, double s) {
    switch (spec.kind) {
        case TransformKind::Arctan:
            return std::tan(M_PI * s / 2.0);
        case TransformKind::PhiM: {
            const PhiMPieces& pc = *spec.pieces;
            const double mag = std::abs(s);
            const double sign = s < 0.0 ? -1.0 : 1.0;
            if (mag <= pc.core_slope * pc.blend_start)
                return s / pc.core_slope;
            if (mag >= pc.outer_value(pc.splice_radius)) {
                // 1 + Phi_m(t) = mag  =>  ln^m(t) = 1/(1 - mag)
                const double w = 1.0 / (1.0 - mag);
                return sign * slowtf::exp_iter(w, pc.m);
            }
            return std::nullopt; // blend zone: Newton
        }
        case TransformKind::User:
            return std::nullopt;
    }
    return std::nullopt;
}

/// Verdicts of validating the (H1)/(H3)-style hypotheses numerically.
struct HypothesisReport {
    struct Verdict {
        bool pass = false;
        std::string detail;
    };
    Verdict smooth;      // jets of order k+1 evaluate on the scan grid
    Verdict monotone;    // phi' > 0 on the scan grid
    Verdict limits;      // phi(+-inf) = +-1 by tail probing
    Verdict decay;       // phi-dot -> 0 by tail probing
    Verdict ratio;       // phi-dot/phi -> 0 by tail probing (center-direction limit)
    std::vector<LimitProbe> probes;

    bool all_pass() const {
        return smooth.pass && monotone.pass && limits.pass && decay.pass && ratio.pass;
    }
};

/// Scans a transform for kinks, positivity of phi', and the tail limits
/// phi -> +-1, phi' -> 0 and phi'/phi -> 0. Verdicts carry the probe
/// trail; nothing throws on a failed hypothesis.
inline HypothesisReport validate_hypotheses(const TransformSpec& spec, int k,
                                            const ProbeOptions& opt = {},
                                            double limit_tol = 1e-4) {
    HypothesisReport rep;
    const int order = std::min(spec.max_order, k + 1);

    // scan grid: a symmetric interior window clipped to the transform's
    // one-sided domain, plus the geometric tails
    std::vector<double> grid;
    double lo = -40.0, hi = 40.0;
    if (spec.side == AsymptoticClass::Right) lo = spec.t_plus;
    if (spec.side == AsymptoticClass::Left) hi = spec.t_minus;
    if (spec.side == AsymptoticClass::Right) hi = lo + 80.0;
    if (spec.side == AsymptoticClass::Left) lo = hi - 80.0;
    for (int i = 0; i <= 400; ++i) grid.push_back(lo + (hi - lo) * i / 400.0);
    for (int j = opt.j_min; j <= opt.j_max; ++j) {
        if (spec.side != AsymptoticClass::Left) grid.push_back(std::pow(10.0, j));
        if (spec.side != AsymptoticClass::Right) grid.push_back(-std::pow(10.0, j));
    }

    rep.smooth.pass = true;
    rep.monotone.pass = true;
    for (double t : grid) {
        try {
            spec.require_in_domain(t);
        } catch (const DomainError&) {
            continue;
        }
        try {
            const JetD j = phi_jet(spec, t, order);
            const double d = j.derivative(1);
            if (!(d > 0.0) && rep.monotone.pass) {
                rep.monotone.pass = false;
                rep.monotone.detail = "phi' = " + std::to_string(d) +
                                      " at t = " + std::to_string(t);
            }
        } catch (const NonSmoothError& ex) {
            if (rep.smooth.pass) {
                rep.smooth.pass = false;
                rep.smooth.detail = std::string(ex.what()) + " (t = " +
                                    std::to_string(ex.location) + ")";
            }
        } catch (const Error& ex) {
            if (rep.smooth.pass) {
                rep.smooth.pass = false;
                rep.smooth.detail = std::string("jet evaluation failed at t = ") +
                                    std::to_string(t) + ": " + ex.what();
            }
        }
    }
    if (rep.smooth.pass) rep.smooth.detail = "jets of order " + std::to_string(order) +
                                             " evaluate on the scan grid";
    if (rep.monotone.pass) rep.monotone.detail = "phi' > 0 on the scan grid";

    std::vector<LimitDirection> dirs;
    if (spec.side != AsymptoticClass::Left) dirs.push_back(LimitDirection::PlusInfinity);
    if (spec.side != AsymptoticClass::Right) dirs.push_back(LimitDirection::MinusInfinity);

    rep.limits.pass = true;
    rep.decay.pass = true;
    rep.ratio.pass = true;
    for (LimitDirection d : dirs) {
        const double target = d == LimitDirection::PlusInfinity ? 1.0 : -1.0;
        LimitProbe pv = probe_limit([&](double t) { return phi_value(spec, t); }, d, opt);
        if (!pv.converged() || std::abs(pv.value() - target) > limit_tol) {
            rep.limits.pass = false;
            rep.limits.detail = std::string("phi(") + to_string(d) + ") probe: " +
                                to_string(pv.status) + ", extrapolant " +
                                std::to_string(pv.value());
        }
        rep.probes.push_back(std::move(pv));

        LimitProbe pd = probe_limit([&](double t) { return phi_derivative(spec, t); }, d, opt);
        if (!pd.converged() || std::abs(pd.value()) > limit_tol) {
            rep.decay.pass = false;
            rep.decay.detail = std::string("phi'(") + to_string(d) + ") probe: " +
                               to_string(pd.status) + ", extrapolant " +
                               std::to_string(pd.value());
        }
        rep.probes.push_back(std::move(pd));

        LimitProbe pr = probe_limit(
            [&](double t) {
                const JetD j = phi_jet(spec, t, 1);
                if (j.value() == 0.0) throw DomainError("phi vanishes at probe point");
                return j.derivative(1) / j.value();
            },
            d, opt);
        if (!pr.converged() || std::abs(pr.value()) > limit_tol) {
            rep.ratio.pass = false;
            rep.ratio.detail = std::string("phi'/phi (") + to_string(d) + ") probe: " +
                               to_string(pr.status) + ", extrapolant " +
                               std::to_string(pr.value());
        }
        rep.probes.push_back(std::move(pr));
    }
    if (rep.limits.pass) rep.limits.detail = "tail extrapolants reach +-1";
    if (rep.decay.pass) rep.decay.detail = "phi' tail extrapolants vanish";
    if (rep.ratio.pass) rep.ratio.detail = "phi'/phi tail extrapolants vanish";
    return rep;
}

} // namespace ckcomp
