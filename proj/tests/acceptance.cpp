// Acceptance suite: one pass/fail line per criterion, nonzero exit if
// any fail. Criteria 2-10 exercise the library directly; criterion 1
// drives the installed CLI on the bundled configuration.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ckcomp/ckcomp.hpp"
#include "support/poly.hpp"
#include "support/random.hpp"
#include "support/rational.hpp"

using namespace ckcomp;
using testsupport::Poly;
using testsupport::Rational;
using testsupport::Rng;

namespace {

int g_failures = 0;

class Criterion {
public:
    Criterion(int number, std::string name) : number_(number), name_(std::move(name)) {
        start_ = std::chrono::steady_clock::now();
    }

    void require(bool cond, const std::string& detail) {
        if (!cond && failure_.empty()) failure_ = detail;
    }

    void require_close(double got, double expect, double tol, const std::string& what) {
        if (std::abs(got - expect) > tol && failure_.empty()) {
            std::ostringstream os;
            os << what << ": got " << got << ", expected " << expect << " within " << tol;
            failure_ = os.str();
        }
    }

    void require_runtime_below(double seconds) {
        const double el = elapsed();
        if (el >= seconds && failure_.empty()) {
            std::ostringstream os;
            os << "runtime " << el << " s exceeds the " << seconds << " s budget";
            failure_ = os.str();
        }
    }

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

    void finish(const std::string& pass_detail) {
        const bool ok = failure_.empty();
        if (!ok) ++g_failures;
        std::printf("[%s] criterion %d: %s — %s (%.2f s)\n", ok ? "PASS" : "FAIL", number_,
                    name_.c_str(), ok ? pass_detail.c_str() : failure_.c_str(), elapsed());
        std::fflush(stdout);
    }

private:
    int number_;
    std::string name_;
    std::string failure_;
    std::chrono::steady_clock::time_point start_;
};

std::string source_dir() {
#ifdef CKCOMP_SOURCE_DIR
    return CKCOMP_SOURCE_DIR;
#else
    return ".";
#endif
}

std::string cli_path() {
#ifdef CKCOMP_CLI_PATH
    return CKCOMP_CLI_PATH;
#else
    return "./ckcomp";
#endif
}

std::map<std::string, std::string> read_kv(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

DerivativeTable<double> random_table(Rng& rng, int n) {
    std::vector<double> raw;
    raw.push_back(rng.uniform(0.5, 2.0));
    for (int i = 1; i < n; ++i) raw.push_back(rng.uniform(-1.0, 1.0));
    return DerivativeTable<double>(std::move(raw));
}

// ---------------------------------------------------------------------

void criterion_1_limit_quadruple() {
    Criterion c(1, "worked-example boundary limits via the CLI");
    const std::string outdir = "acceptance_c1_out";
    const std::string cmd = "\"" + cli_path() + "\" check --config \"" + source_dir() +
                            "/configs/vdp.cfg\" --k 2 --output-dir " + outdir +
                            " > acceptance_c1.log 2>&1";
    const int rc = std::system(cmd.c_str());
    c.require(rc == 0, "CLI check exited with status " + std::to_string(rc));
    const auto kv = read_kv(outdir + "/report.kv");
    c.require(kv.count("verdict") && kv.at("verdict") == "ck_extension_holds",
              "verdict line missing or not positive");
    struct Expect {
        const char* key;
        double value;
    };
    const Expect expects[] = {
        {"n1.g.plus.extrapolant", 0.0},   {"n1.g.minus.extrapolant", 0.0},
        {"n1.mu1.plus.extrapolant", 1.0}, {"n1.mu1.minus.extrapolant", 1.0},
        {"n2.g.plus.extrapolant", M_PI},  {"n2.g.minus.extrapolant", M_PI},
        {"n2.mu1.plus.extrapolant", 0.0}, {"n2.mu1.minus.extrapolant", 0.0},
    };
    for (const auto& e : expects) {
        if (!kv.count(e.key)) {
            c.require(false, std::string("report key missing: ") + e.key);
            break;
        }
        c.require_close(std::stod(kv.at(e.key)), e.value, 1e-4, e.key);
    }
    c.require_runtime_below(5.0);
    c.finish("limits (0, 1, pi, 0) reproduced in both directions");
}

void criterion_2_route_equivalence() {
    Criterion c(2, "time-factor derivative routes agree");
    Rng rng(20260808);
    for (int rep = 0; rep < 200; ++rep) {
        for (int n = 1; n <= 6; ++n) {
            const DerivativeTable<double> phi = random_table(rng, n + 1);
            const DerivativeTable<double> h = inverse_jets(phi, n + 1);
            const double a = g_derivative_via_phi(phi, n);
            const double b = g_derivative_via_h(h, n);
            const double d = g_derivative_via_cofactors(h, n);
            const double scale = std::max({std::abs(a), std::abs(b), std::abs(d), 1e-12});
            c.require(std::abs(a - b) / scale < 1e-8,
                      "h-route vs phi-route disagree at n=" + std::to_string(n));
            c.require(std::abs(a - d) / scale < 1e-8,
                      "cofactor route disagrees at n=" + std::to_string(n));
        }
    }
    c.require_runtime_below(10.0);
    c.finish("200 random transforms, n <= 6, pairwise within 1e-8 relative");
}

void criterion_3_faa_di_bruno_oracle() {
    Criterion c(3, "composition derivatives against the exact symbolic oracle");
    Rng rng(33);
    auto rand_poly = [&](int deg) {
        std::vector<Rational> coeffs;
        for (int i = 0; i <= deg; ++i)
            coeffs.emplace_back(rng.uniform_int(-5, 5), rng.uniform_int(1, 3));
        return Poly<Rational>(std::move(coeffs));
    };
    auto table = [](const Poly<Rational>& p, const Rational& x, int n) {
        std::vector<Rational> raw;
        for (int i = 1; i <= n; ++i) raw.push_back(p.derivative_at(x, i));
        return DerivativeTable<Rational>(std::move(raw));
    };
    for (int rep = 0; rep < 40; ++rep) {
        const Poly<Rational> outer = rand_poly(rng.uniform_int(2, 6));
        const Poly<Rational> inner = rand_poly(rng.uniform_int(2, 6));
        const Rational x0(rng.uniform_int(-2, 2), rng.uniform_int(1, 3));
        const Poly<Rational> comp = outer.compose(inner);
        const Rational s0 = inner.eval(x0);
        for (int n = 1; n <= 6; ++n) {
            const Rational expect = comp.derivative_at(x0, n);
            const Rational got = compose_derivative(table(outer, s0, n), table(inner, x0, n), n);
            c.require(got == expect,
                      "exact mismatch at n=" + std::to_string(n) + ": got " + got.str() +
                          ", expected " + expect.str());
        }
    }
    // partition counts against an independent recursive counter
    std::function<long long(int, int, int)> brute = [&](int n, int l, int max_part) -> long long {
        if (l == 0) return n == 0 ? 1 : 0;
        long long total = 0;
        for (int first = std::min(n, max_part); first >= 1; --first) {
            if (first * l < n) break;
            total += brute(n - first, l - 1, first);
        }
        return total;
    };
    for (int n = 1; n <= 12; ++n)
        for (int l = 1; l <= n; ++l)
            c.require(static_cast<long long>(enumerate_partitions(n, l).size()) ==
                          brute(n, l, n),
                      "partition count mismatch at (" + std::to_string(n) + "," +
                          std::to_string(l) + ")");
    c.finish("exact rational agreement for n <= 6; |q(n,l)| verified to n = 12");
}

void criterion_4_closed_forms() {
    Criterion c(4, "n = 1, 2 determinant pipeline against the closed forms");
    Rng rng(44);
    for (int rep = 0; rep < 100; ++rep) {
        const DerivativeTable<double> h = random_table(rng, 3);
        const DerivativeTable<double> phi = random_table(rng, 3);
        const DerivativeTable<double> mu = random_table(rng, 3);

        const double h1 = h.d(1), h2 = h.d(2), h3 = h.d(3);
        const double p1 = phi.d(1), p2 = phi.d(2), p3 = phi.d(3);
        const double m1 = mu.d(1), m2 = mu.d(2);

        auto rel = [&](double got, double expect, const char* what) {
            const double scale = std::max(std::abs(expect), 1e-12);
            c.require(std::abs(got - expect) / scale < 1e-10, what);
        };
        rel(g_derivative_via_h(h, 1), -h2 / (h1 * h1), "g' via h");
        rel(g_derivative_via_h(h, 2), 2 * h2 * h2 / std::pow(h1, 3) - h3 / (h1 * h1),
            "g'' via h");
        rel(g_derivative_via_phi(phi, 1), p2 / p1, "g' via phi");
        rel(g_derivative_via_phi(phi, 2), (p1 * p3 - p2 * p2) / std::pow(p1, 3),
            "g'' via phi");
        rel(mu_tilde_derivative(mu, phi, 1), m1 / p1, "mu~'");
        rel(mu_tilde_derivative(mu, phi, 2), (m2 * p1 - m1 * p2) / std::pow(p1, 3),
            "mu~''");
    }
    c.finish("100 random jet tables within 1e-10 relative");
}

void criterion_5_slow_family_ratios() {
    Criterion c(5, "slow-family derivative ratios decay; iterated-log identity holds");
    for (int m : {1, 2}) {
        for (int n = 1; n <= 4; ++n) {
            const auto vals = phi_m_ratio_check(m, n, {1e2, 1e4, 1e6});
            c.require(std::abs(vals[1]) < std::abs(vals[0]) &&
                          std::abs(vals[2]) < std::abs(vals[1]),
                      "ratio not monotonically decreasing at m=" + std::to_string(m) +
                          ", n=" + std::to_string(n));
            std::ostringstream os;
            os << "ratio at t=1e6 is " << vals[2] << " (not < 1e-3) at m=" << m
               << ", n=" << n
               << "; value verified against a 50-digit oracle, the decay is "
                  "iterated-log slow";
            c.require(std::abs(vals[2]) < 1e-3, os.str());
        }
        for (double t : {1e2, 1e3, 1e4, 1e6, 1e8}) {
            if (t <= slowtf::domain_min(m) + 1.0) continue;
            // independent composition route for the identity check
            JetD u = JetD::variable(t, 1);
            for (int i = 0; i < m; ++i) u = jets::log(u);
            const JetD phi = -jets::reciprocal(u);
            const double P = slowtf::p_factor_jet(t, m, 1).value();
            const double resid = phi.derivative(1) * P + phi.value();
            c.require(std::abs(resid) <= 1e-10 * std::abs(phi.value()),
                      "identity residual too large at m=" + std::to_string(m) +
                          ", t=" + std::to_string(t));
        }
    }
    c.finish("m = 1, 2 with n <= 4: monotone decay, < 1e-3 at 1e6, identity to 1e-10");
}

void criterion_6_conjugacy() {
    Criterion c(6, "compactified flow is conjugate to the nonautonomous flow");
    const CompactifiedField field = build(vdp_system(), arctan_transform(), 2);
    const std::vector<std::vector<double>> ics{
        {2.0, 0.0}, {-1.0, 1.5}, {0.5, -0.5}, {3.0, 1.0}, {-2.5, -2.0}};
    auto na_rhs = [](double t, const std::vector<double>& y, std::vector<double>& dy) {
        const double mu = (2.0 / M_PI) * std::atan(t);
        dy = {y[1], mu * mu * (1 - y[0] * y[0]) * y[1] - y[0]};
    };
    for (const auto& x0 : ics) {
        const Trajectory compact = integrate(field, x0, 0.0, 20.0, 1e-10);
        IntegratorOptions opt;
        opt.rtol = 1e-10;
        opt.atol = 1e-12;
        const Trajectory direct = integrate_ode(na_rhs, x0, 0.0, 20.0, opt);
        double sup = 0.0;
        for (int i = 0; i <= 200; ++i) {
            const double t = 20.0 * i / 200.0;
            const auto yc = compact.at(t);
            const auto yd = direct.at(t);
            sup = std::max(sup, std::hypot(yc[0] - yd[0], yc[1] - yd[1]));
        }
        c.require(sup <= 1e-6, "sup-difference " + std::to_string(sup) + " above 1e-6");
    }
    c.require_runtime_below(10.0);
    c.finish("5 initial conditions, sup-difference <= 1e-6 over t in [0, 20]");
}

void criterion_7_attraction() {
    Criterion c(7, "all non-origin starts are asymptotic to the limit cycle");
    const CompactifiedField field = build(vdp_system(), arctan_transform(), 2);
    const PeriodicOrbit orbit = find_limit_cycle(field, +1, {2.0, 0.0});
    const std::vector<std::vector<double>> ics{
        {2.0, 0.0, 0.0},  {-2.0, 0.0, 0.0},  {0.5, 0.5, 0.0},  {-0.5, -0.5, 0.0},
        {3.0, 1.0, 0.0},  {-3.0, 1.0, -0.5}, {0.1, 0.0, 0.0},  {1.0, -2.0, 0.5}};
    const double span = 3000.0;
    for (std::size_t i = 0; i < ics.size(); ++i) {
        std::vector<double> x(ics[i].begin(), ics[i].end() - 1);
        const Trajectory traj = integrate(field, x, ics[i].back(), span, 1e-8);
        const auto dist = distance_to_orbit(traj, orbit, 0.0);
        // falls below 1e-3 and stays: the last excursion above the
        // threshold must end well before the span runs out
        double last_above = 0.0;
        for (const auto& [t, d] : dist)
            if (d >= 1e-3) last_above = t;
        std::ostringstream os;
        os << "ic " << (i + 1) << ": distance stays below 1e-3 only after t=" << last_above
           << " (span " << span << ")";
        c.require(last_above <= 0.8 * span, os.str());
    }
    // the origin stays put
    const Trajectory origin = integrate(field, {0.0, 0.0}, 0.0, span, 1e-8);
    for (const auto& y : origin.states)
        c.require(y[0] == 0.0 && y[1] == 0.0, "origin moved");
    c.require_runtime_below(30.0);
    c.finish("8 starts reach and stay within 1e-3 of the cycle; origin is fixed");
}

void criterion_8_floquet() {
    Criterion c(8, "normal hyperbolicity of the frozen cycle");
    const CompactifiedField field = build(vdp_system(), arctan_transform(), 2);
    const PeriodicOrbit orbit = find_limit_cycle(field, +1, {2.0, 0.0});
    c.require(orbit.multipliers.size() == 1, "expected one nontrivial multiplier");
    const double mod = std::abs(orbit.multipliers.front());
    c.require(mod > 0.0 && mod < 1.0,
              "nontrivial multiplier modulus " + std::to_string(mod) + " not in (0,1)");
    // Liouville/Abel identity: product of multipliers = exp of the
    // divergence integral over one period (independent quadrature)
    const double det = orbit.monodromy(0, 0) * orbit.monodromy(1, 1) -
                       orbit.monodromy(0, 1) * orbit.monodromy(1, 0);
    double integral = 0.0;
    for (const auto& p : orbit.dense) {
        const Mat J = field.frozen_jacobian(+1, p);
        integral += J(0, 0) + J(1, 1);
    }
    integral *= orbit.period / static_cast<double>(orbit.dense.size());
    const double expect = std::exp(integral);
    c.require(std::abs(det - expect) / std::abs(expect) < 1e-4,
              "multiplier product " + std::to_string(det) + " vs exp(integral) " +
                  std::to_string(expect));
    std::ostringstream os;
    os << "multiplier modulus " << mod << "; product matches exp(divergence integral) to "
       << std::abs(det - expect) / std::abs(expect);
    c.finish(os.str());
}

void criterion_9_boundary_structure() {
    Criterion c(9, "boundary Jacobian structure");
    const CompactifiedField field = build(vdp_system(), arctan_transform(), 2);
    for (int side : {+1, -1}) {
        const BoundaryJacobian bj = field.boundary_jacobian(side, {0.0, 0.0});
        c.require(std::abs(bj.g_prime) < 1e-4,
                  "G' at side " + std::to_string(side) + " is " + std::to_string(bj.g_prime));
        const int N = field.state_dim();
        for (int j = 0; j < N; ++j)
            c.require(bj.block(N, j) == 0.0, "bottom-left block entry is not exactly zero");
    }
    c.finish("G'(+-1) within 1e-4 of zero; bottom-left block exactly zero");
}

void criterion_10_gronwall() {
    Criterion c(10, "exponential separation diagnostic");
    const CompactifiedField field = build(vdp_system(), arctan_transform(), 2);
    const std::vector<std::pair<double, double>> region{{-3, 3}, {-3, 3}, {-1, 1}};
    Rng rng(1010);
    int checked = 0;
    while (checked < 20) {
        std::vector<double> p{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                              rng.uniform(-0.5, 0.5)};
        std::vector<double> q = p;
        q[0] += rng.uniform(-1e-3, 1e-3);
        q[1] += rng.uniform(-1e-3, 1e-3);
        const GronwallReport rep = gronwall_check(field, p, q, region, 5.0);
        if (rep.exit_time) continue; // draw left the region; bound inapplicable
        c.require(rep.pass, "ratio " + std::to_string(rep.max_ratio) + " above 1 + 1e-6");
        ++checked;
    }
    // equality case: f = 3x, diagonal Jacobian, M1 = 3 exactly
    const SystemSpec lin = make_system(2, 1, {"3*x1 + 0*mu1", "3*x2"}, {"1"},
                                       std::vector<double>{1.0}, std::vector<double>{1.0},
                                       AsymptoticClass::TwoSided);
    const CompactifiedField linf = build(lin, arctan_transform(), 1);
    GronwallOptions opts;
    opts.integrator_tol = 1e-12;
    const GronwallReport tight = gronwall_check(
        linf, {1.0, 0.0, 0.0}, {1.01, 0.0, 0.0},
        {{-1.0, 4.0e6}, {-1.0, 1.0}, {-1.0, 1.0}}, 5.0, opts);
    c.require(tight.pass, "equality case exceeded the bound: max ratio " +
                              std::to_string(tight.max_ratio));
    c.require(tight.max_ratio >= 0.9, "equality case not tight: max ratio " +
                                          std::to_string(tight.max_ratio));
    std::ostringstream os;
    os << "20 random pairs bounded; equality-case max ratio " << tight.max_ratio;
    c.finish(os.str());
}

} // namespace

int main() {
    std::printf("acceptance suite\n================\n");
    criterion_1_limit_quadruple();
    criterion_2_route_equivalence();
    criterion_3_faa_di_bruno_oracle();
    criterion_4_closed_forms();
    criterion_5_slow_family_ratios();
    criterion_6_conjugacy();
    criterion_7_attraction();
    criterion_8_floquet();
    criterion_9_boundary_structure();
    criterion_10_gronwall();
    if (g_failures > 0) {
        std::printf("================\n%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("================\nall criteria passed\n");
    return 0;
}
