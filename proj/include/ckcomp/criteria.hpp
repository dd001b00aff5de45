#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ckcomp/bell.hpp"
#include "ckcomp/errors.hpp"
#include "ckcomp/linalg.hpp"
#include "ckcomp/probe.hpp"
#include "ckcomp/system.hpp"
#include "ckcomp/transform.hpp"

namespace ckcomp {

// The C^k-extension criteria evaluate boundary limits of two families of
// quantities built from lower-triangular matrices of partial Bell sums:
//
//   g^(n)(s), the n-th derivative of the compactified time factor
//   g(s) = phi'(h(s)), computable from an h-derivative table (rows of
//   Bell sums of h) or from a phi-derivative table, and
//
//   mu~^(n)(s), the n-th derivative of the pulled-back forcing
//   mu(h(s)), via the inverse-function derivatives h^(i)(s) expressed in
//   phi-derivatives.
//
// All determinant ratios are computed as components of triangular
// solves (Cramer's rule in reverse). This matters numerically: the raw
// determinants are products prod (phi')^i that underflow far before the
// ratios lose meaning near the boundary.

/// rows x rows lower-triangular matrix with entry (j, i) = bell_sum(tbl, j, i),
/// 1-based in both indices.
inline Mat lower_bell_matrix(const DerivativeTable<double>& tbl, int rows) {
    Mat m(rows, rows);
    for (int j = 1; j <= rows; ++j)
        for (int i = 1; i <= j; ++i)
            m(j - 1, i - 1) = bell_sum(tbl, j, i);
    return m;
}

/// det of the lower Bell matrix: prod_{i=1..rows} (f')^i.
inline double det_lower_bell(const DerivativeTable<double>& tbl, int rows) {
    double det = 1.0, p = 1.0;
    for (int i = 1; i <= rows; ++i) {
        p *= tbl.d(1);
        det *= p;
    }
    return det;
}

inline Mat replace_column(Mat m, int col_1based, const std::vector<double>& v) {
    for (int r = 0; r < m.rows(); ++r) m(r, col_1based - 1) = v[static_cast<std::size_t>(r)];
    return m;
}

/// g^(n)(s) from a table of h^(1)..h^(n+1) at s:
/// recovers phi^(i)(t) as the triangular-solve components (the
/// determinant ratios of the replaced-column matrices over the Bell
/// matrix of h) and contracts them against the Bell sums of h.
inline double g_derivative_via_h(const DerivativeTable<double>& h_table, int n) {
    if (n < 1 || n + 1 > h_table.size())
        throw StructureError("g_derivative_via_h: table must hold h^(1)..h^(n+1)");
    if (h_table.d(1) == 0.0)
        throw SingularityError("g_derivative_via_h: h' vanishes (boundary singularity)");
    const Mat m = lower_bell_matrix(h_table, n + 1);
    std::vector<double> e1(static_cast<std::size_t>(n) + 1, 0.0);
    e1[0] = 1.0;
    const std::vector<double> phi = solve_lower_triangular(m, e1); // phi[i-1] = phi^(i)
    double g = 0.0;
    for (int i = 1; i <= n; ++i)
        g += phi[static_cast<std::size_t>(i)] * bell_sum(h_table, n, i);
    return g;
}

/// g^(n)(s) from a table of phi^(1)..phi^(n+1) at t = h(s): the n-th
/// component of the triangular solve of the Bell matrix of phi against
/// (phi^(2), ..., phi^(n+1)).
inline double g_derivative_via_phi(const DerivativeTable<double>& phi_table, int n) {
    if (n < 1 || n + 1 > phi_table.size())
        throw StructureError("g_derivative_via_phi: table must hold phi^(1)..phi^(n+1)");
    if (phi_table.d(1) == 0.0)
        throw SingularityError("g_derivative_via_phi: phi' vanishes");
    const Mat m = lower_bell_matrix(phi_table, n);
    std::vector<double> rhs(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) rhs[static_cast<std::size_t>(i - 1)] = phi_table.d(i + 1);
    const std::vector<double> g = solve_lower_triangular(m, rhs); // g[i-1] = g^(i)(s)
    return g[static_cast<std::size_t>(n - 1)];
}

/// g^(n)(s) by the bordered-determinant form: the Bell matrix of h with
/// its first row replaced by (0, S_n^1 h, ..., S_n^n h), over det of the
/// Bell matrix. An independent dense-determinant route used to
/// cross-check the two triangular pipelines.
inline double g_derivative_via_cofactors(const DerivativeTable<double>& h_table, int n) {
    if (n < 1 || n + 1 > h_table.size())
        throw StructureError("g_derivative_via_cofactors: table must hold h^(1)..h^(n+1)");
    if (h_table.d(1) == 0.0)
        throw SingularityError("g_derivative_via_cofactors: h' vanishes");
    Mat b = lower_bell_matrix(h_table, n + 1);
    b(0, 0) = 0.0;
    for (int i = 1; i <= n; ++i) b(0, i) = bell_sum(h_table, n, i);
    return det_dense(b) / det_lower_bell(h_table, n + 1);
}

/// The inverse-function derivative ratios h^(i)(s) = phi_{n,i}(t)
/// computed literally as dense determinant ratios of the replaced-column
/// Bell matrices; the cross-check route for inverse_jets.
inline DerivativeTable<double> inverse_jets_by_determinants(
    const DerivativeTable<double>& phi_table, int n) {
    const Mat q = lower_bell_matrix(phi_table, n);
    const double dq = det_dense(q);
    if (dq == 0.0) throw SingularityError("inverse_jets_by_determinants: singular system");
    std::vector<double> e1(static_cast<std::size_t>(n), 0.0);
    e1[0] = 1.0;
    std::vector<double> h(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i)
        h[static_cast<std::size_t>(i - 1)] = det_dense(replace_column(q, i, e1)) / dq;
    return DerivativeTable<double>(std::move(h));
}

/// mu~^(n)(s), the n-th s-derivative of the pulled-back forcing
/// component mu(h(s)), evaluated at t = h(s) from derivative tables of
/// mu and phi. The inverse-function derivatives solve the triangular
/// phi-Bell system, then the composition contracts them with mu's
/// derivatives.
inline double mu_tilde_derivative(const DerivativeTable<double>& mu_table,
                                  const DerivativeTable<double>& phi_table, int n) {
    if (n < 1 || n > mu_table.size() || n > phi_table.size())
        throw StructureError("mu_tilde_derivative: tables must hold orders 1..n");
    if (phi_table.d(1) == 0.0)
        throw SingularityError("mu_tilde_derivative: phi' vanishes");
    const DerivativeTable<double> h = inverse_jets(phi_table, n);
    return compose_derivative(mu_table, h, n);
}

/// Same quantity through the literal determinant-ratio route.
inline double mu_tilde_derivative_by_determinants(const DerivativeTable<double>& mu_table,
                                                  const DerivativeTable<double>& phi_table,
                                                  int n) {
    const DerivativeTable<double> h = inverse_jets_by_determinants(phi_table, n);
    return compose_derivative(mu_table, h, n);
}

enum class OverallVerdict { Holds, Fails, Inconclusive };

inline const char* to_string(OverallVerdict v) {
    switch (v) {
        case OverallVerdict::Holds: return "ck_extension_holds";
        case OverallVerdict::Fails: return "fails";
        case OverallVerdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

/// Probe set for one derivative order n: the time-factor route limits
/// and the pulled-back-forcing route limits (one probe per forcing
/// component), in each compactified direction.
struct OrderProbes {
    int n = 0;
    std::optional<LimitProbe> g_plus, g_minus;
    std::vector<LimitProbe> mu_plus, mu_minus; // per forcing component
};

struct SmoothnessVerdict {
    int requested_k = 0;
    AsymptoticClass directions = AsymptoticClass::TwoSided;
    std::vector<OrderProbes> per_order;
    OverallVerdict overall = OverallVerdict::Inconclusive;
    int failing_order = 0;          // valid when overall != Holds
    std::string failing_limit;      // which limit broke / stalled

    bool holds() const { return overall == OverallVerdict::Holds; }

    const OrderProbes& order(int n) const {
        for (const auto& p : per_order)
            if (p.n == n) return p;
        throw StructureError("verdict holds no probes for n=" + std::to_string(n));
    }
};

namespace detail {

struct VerdictAccumulator {
    OverallVerdict overall = OverallVerdict::Holds;
    int failing_order = 0;
    std::string failing_limit;

    void feed(const LimitProbe& p, int n, const std::string& label) {
        if (p.status == ProbeStatus::Converged) return;
        const OverallVerdict v = p.status == ProbeStatus::Diverged
                                     ? OverallVerdict::Fails
                                     : OverallVerdict::Inconclusive;
        // a divergence outranks a stall; earlier orders outrank later ones
        const bool replace =
            overall == OverallVerdict::Holds ||
            (v == OverallVerdict::Fails && overall == OverallVerdict::Inconclusive) ||
            (v == overall && n < failing_order);
        if (replace) {
            overall = v;
            failing_order = n;
            failing_limit = label;
        }
    }
};

} // namespace detail

/// Probes the boundary limits of g^(n) and mu~^(n) for n = 1..k in the
/// directions demanded by the system's asymptotic class and assembles
/// the C^k-extension verdict. Probing cannot prove a limit fails to
/// exist, so "inconclusive" is reported distinctly from divergence.
inline SmoothnessVerdict check_ck(const SystemSpec& system, const TransformSpec& transform,
                                  int k, ProbeOptions opt = {}) {
    if (k < 1) throw ConfigError("check_ck requires k >= 1");
    if (k + 1 > transform.max_order)
        throw ConfigError("check_ck: k+1 = " + std::to_string(k + 1) +
                          " exceeds the transform's max_order " +
                          std::to_string(transform.max_order));
    system.validate();
    // the slow family decays like an iterated logarithm; its ratios need
    // a longer geometric grid before the extrapolation stabilizes
    if (transform.kind == TransformKind::PhiM && opt.j_max < 12) opt.j_max = 12;
    // keep the probe grid inside a one-sided transform domain
    if (transform.side == AsymptoticClass::Right)
        while (opt.j_min < opt.j_max && std::pow(10.0, opt.j_min) <= transform.t_plus)
            ++opt.j_min;
    if (transform.side == AsymptoticClass::Left)
        while (opt.j_min < opt.j_max && std::pow(10.0, opt.j_min) <= -transform.t_minus)
            ++opt.j_min;

    SmoothnessVerdict verdict;
    verdict.requested_k = k;
    verdict.directions = system.asymptotic_class;
    detail::VerdictAccumulator acc;

    std::vector<LimitDirection> dirs;
    if (system.asymptotic_class != AsymptoticClass::Left)
        dirs.push_back(LimitDirection::PlusInfinity);
    if (system.asymptotic_class != AsymptoticClass::Right)
        dirs.push_back(LimitDirection::MinusInfinity);

    for (int n = 1; n <= k; ++n) {
        OrderProbes probes;
        probes.n = n;
        for (LimitDirection d : dirs) {
            LimitProbe g = probe_limit(
                [&](double t) {
                    return g_derivative_via_phi(phi_table(transform, t, n + 1), n);
                },
                d, opt);
            acc.feed(g, n, std::string("g^(") + std::to_string(n) + "), " + to_string(d));
            std::vector<LimitProbe> mus;
            for (int c = 0; c < system.forcing_dim; ++c) {
                LimitProbe mu = probe_limit(
                    [&](double t) {
                        return mu_tilde_derivative(system.mu_table(c, t, n),
                                                   phi_table(transform, t, n), n);
                    },
                    d, opt);
                acc.feed(mu, n, std::string("mu~") + std::to_string(c + 1) + "^(" +
                                    std::to_string(n) + "), " + to_string(d));
                mus.push_back(std::move(mu));
            }
            if (d == LimitDirection::PlusInfinity) {
                probes.g_plus = std::move(g);
                probes.mu_plus = std::move(mus);
            } else {
                probes.g_minus = std::move(g);
                probes.mu_minus = std::move(mus);
            }
        }
        verdict.per_order.push_back(std::move(probes));
    }
    verdict.overall = acc.overall;
    verdict.failing_order = acc.failing_order;
    verdict.failing_limit = acc.failing_limit;
    return verdict;
}

/// Result of the slow-family criterion: the verdict plus, on success,
/// the assembled transform realizing the extension.
struct SimpleCriterionResult {
    SmoothnessVerdict verdict;
    std::optional<TransformSpec> realized_transform;
};

/// The simple criterion on the forcing alone: the hypothesis is the set
/// of mu-route limits built from Phi_m derivative tables, and only those
/// feed the verdict. The time-factor ratios of the slow family vanish
/// identically in the limit (its decay lemma), so they are probed only
/// as report evidence; their extrapolation stalls do not gate anything.
///
/// Phi_m decays like an iterated logarithm, so the default geometric
/// grid is extended before extrapolation stabilizes.
inline SimpleCriterionResult check_simple_criterion(const SystemSpec& system, int m, int k,
                                                    ProbeOptions opt = {}) {
    if (m < 1 || m > slowtf::kMaxM)
        throw ConfigError("check_simple_criterion requires 1 <= m <= " +
                          std::to_string(slowtf::kMaxM));
    if (k < 1) throw ConfigError("check_simple_criterion requires k >= 1");
    system.validate();

    if (opt.j_max < 12) opt.j_max = 12;
    // keep the grid inside D(Phi_m)
    const double dom = slowtf::domain_min(m);
    while (std::pow(10.0, opt.j_min) <= dom + 1.0) ++opt.j_min;

    SmoothnessVerdict verdict;
    verdict.requested_k = k;
    verdict.directions = system.asymptotic_class;
    detail::VerdictAccumulator acc;

    std::vector<LimitDirection> dirs;
    if (system.asymptotic_class != AsymptoticClass::Left)
        dirs.push_back(LimitDirection::PlusInfinity);
    if (system.asymptotic_class != AsymptoticClass::Right)
        dirs.push_back(LimitDirection::MinusInfinity);

    auto phim_table = [&](double t, int order) {
        return DerivativeTable<double>::from_jet(slowtf::phi_m_jet(t, m, order));
    };

    for (int n = 1; n <= k; ++n) {
        OrderProbes probes;
        probes.n = n;
        for (LimitDirection d : dirs) {
            // evidence only: the family's decay lemma settles these limits
            LimitProbe g = probe_limit(
                [&](double t) { return g_derivative_via_phi(phim_table(t, n + 1), n); },
                d, opt);
            std::vector<LimitProbe> mus;
            for (int c = 0; c < system.forcing_dim; ++c) {
                LimitProbe mu = probe_limit(
                    [&](double t) {
                        return mu_tilde_derivative(system.mu_table(c, t, n),
                                                   phim_table(t, n), n);
                    },
                    d, opt);
                acc.feed(mu, n, std::string("mu") + std::to_string(c + 1) +
                                    " against Phi_m, order " + std::to_string(n) + ", " +
                                    to_string(d));
                mus.push_back(std::move(mu));
            }
            if (d == LimitDirection::PlusInfinity) {
                probes.g_plus = std::move(g);
                probes.mu_plus = std::move(mus);
            } else {
                probes.g_minus = std::move(g);
                probes.mu_minus = std::move(mus);
            }
        }
        verdict.per_order.push_back(std::move(probes));
    }
    verdict.overall = acc.overall;
    verdict.failing_order = acc.failing_order;
    verdict.failing_limit = acc.failing_limit;

    SimpleCriterionResult result;
    result.verdict = std::move(verdict);
    if (result.verdict.holds())
        result.realized_transform = phi_m_transform(m, std::max(k + 1, 2));
    return result;
}

/// Human-readable verdict table with one line per probe.
inline std::string verdict_report_text(const SmoothnessVerdict& v) {
    std::ostringstream os;
    os << "C^k extension verdict: " << to_string(v.overall) << " (k = " << v.requested_k
       << ", directions: " << to_string(v.directions) << ")\n";
    if (!v.holds())
        os << "  first obstruction: order n=" << v.failing_order << ", " << v.failing_limit
           << "\n";
    auto line = [&os](const std::string& label, const LimitProbe& p) {
        os << "  " << label << ": " << to_string(p.status);
        if (p.status != ProbeStatus::Inconclusive || p.note.empty())
            os << ", extrapolant " << p.extrapolant;
        if (!p.note.empty()) os << " [" << p.note << "]";
        os << "\n    samples:";
        for (const auto& [t, val] : p.samples) os << " (" << t << ", " << val << ")";
        os << "\n";
    };
    for (const OrderProbes& o : v.per_order) {
        os << "order n=" << o.n << "\n";
        if (o.g_plus) line("g-route, t->+inf", *o.g_plus);
        if (o.g_minus) line("g-route, t->-inf", *o.g_minus);
        for (std::size_t c = 0; c < o.mu_plus.size(); ++c)
            line("mu-route [" + std::to_string(c + 1) + "], t->+inf", o.mu_plus[c]);
        for (std::size_t c = 0; c < o.mu_minus.size(); ++c)
            line("mu-route [" + std::to_string(c + 1) + "], t->-inf", o.mu_minus[c]);
    }
    return os.str();
}

/// Flat key-value rendering for machine consumption.
inline std::string verdict_report_kv(const SmoothnessVerdict& v) {
    std::ostringstream os;
    os.precision(17);
    os << "verdict=" << to_string(v.overall) << "\n";
    os << "k=" << v.requested_k << "\n";
    os << "directions=" << to_string(v.directions) << "\n";
    if (!v.holds()) {
        os << "failing_order=" << v.failing_order << "\n";
        os << "failing_limit=" << v.failing_limit << "\n";
    }
    auto emit = [&os](const std::string& key, const LimitProbe& p) {
        os << key << ".status=" << to_string(p.status) << "\n";
        os << key << ".extrapolant=" << p.extrapolant << "\n";
        for (std::size_t i = 0; i < p.samples.size(); ++i)
            os << key << ".sample." << i << "=" << p.samples[i].first << ","
               << p.samples[i].second << "\n";
    };
    for (const OrderProbes& o : v.per_order) {
        const std::string base = "n" + std::to_string(o.n);
        if (o.g_plus) emit(base + ".g.plus", *o.g_plus);
        if (o.g_minus) emit(base + ".g.minus", *o.g_minus);
        for (std::size_t c = 0; c < o.mu_plus.size(); ++c)
            emit(base + ".mu" + std::to_string(c + 1) + ".plus", o.mu_plus[c]);
        for (std::size_t c = 0; c < o.mu_minus.size(); ++c)
            emit(base + ".mu" + std::to_string(c + 1) + ".minus", o.mu_minus[c]);
    }
    return os.str();
}

} // namespace ckcomp
