#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ckcomp/criteria.hpp"
#include "support/random.hpp"

using namespace ckcomp;
using testsupport::Rng;

namespace {

DerivativeTable<double> random_table(Rng& rng, int n) {
    std::vector<double> raw;
    raw.push_back(rng.uniform(0.5, 2.0)); // positive first derivative
    for (int i = 1; i < n; ++i) raw.push_back(rng.uniform(-1.0, 1.0));
    return DerivativeTable<double>(std::move(raw));
}

} // namespace

TEST_CASE("triangular determinant identities") {
    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = rng.uniform_int(1, 6);
        const DerivativeTable<double> h = random_table(rng, n + 1);
        const Mat m = lower_bell_matrix(h, n + 1);
        double expect = 1.0, p = 1.0;
        for (int i = 1; i <= n + 1; ++i) {
            p *= h.d(1);
            expect *= p;
        }
        CHECK(det_dense(m) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(det_lower_bell(h, n + 1) == doctest::Approx(expect).epsilon(1e-12));

        const DerivativeTable<double> phi = random_table(rng, n + 1);
        const Mat q = lower_bell_matrix(phi, n);
        double eq = 1.0, pq = 1.0;
        for (int i = 1; i <= n; ++i) {
            pq *= phi.d(1);
            eq *= pq;
        }
        CHECK(det_dense(q) == doctest::Approx(eq).epsilon(1e-12));
    }
}

TEST_CASE("g via h: n=2 closed form and the replaced-column determinants") {
    Rng rng(57);
    for (int rep = 0; rep < 100; ++rep) {
        const DerivativeTable<double> h = random_table(rng, 3);
        const double h1 = h.d(1), h2 = h.d(2), h3 = h.d(3);
        const double closed = 2.0 * h2 * h2 / std::pow(h1, 3) - h3 / (h1 * h1);
        CHECK(g_derivative_via_h(h, 2) == doctest::Approx(closed).epsilon(1e-10));

        // intermediate determinants of the column-replaced matrices
        const Mat m = lower_bell_matrix(h, 3);
        std::vector<double> e1{1.0, 0.0, 0.0};
        CHECK(det_dense(replace_column(m, 2, e1)) ==
              doctest::Approx(-std::pow(h1, 3) * h2).epsilon(1e-12));
        CHECK(det_dense(replace_column(m, 3, e1)) ==
              doctest::Approx(3.0 * h1 * h2 * h2 - h1 * h1 * h3).epsilon(1e-12));
    }
    // identity h: g is constant 1, all derivatives vanish
    DerivativeTable<double> ident(std::vector<double>{1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    for (int n = 1; n <= 6; ++n)
        CHECK(g_derivative_via_h(ident, n) == doctest::Approx(0.0));
}

TEST_CASE("g via phi: n=1 and n=2 closed forms") {
    Rng rng(58);
    for (int rep = 0; rep < 100; ++rep) {
        const DerivativeTable<double> phi = random_table(rng, 3);
        const double p1 = phi.d(1), p2 = phi.d(2), p3 = phi.d(3);
        CHECK(g_derivative_via_phi(phi, 1) == doctest::Approx(p2 / p1).epsilon(1e-12));
        CHECK(g_derivative_via_phi(phi, 2) ==
              doctest::Approx((p1 * p3 - p2 * p2) / std::pow(p1, 3)).epsilon(1e-10));
    }
}

TEST_CASE("g via cofactors: n=1 closed form and agreement with the h route") {
    Rng rng(59);
    for (int rep = 0; rep < 60; ++rep) {
        const DerivativeTable<double> h = random_table(rng, 7);
        CHECK(g_derivative_via_cofactors(h, 1) ==
              doctest::Approx(-h.d(2) / (h.d(1) * h.d(1))).epsilon(1e-12));
        for (int n = 1; n <= 6; ++n) {
            const double a = g_derivative_via_h(h, n);
            const double b = g_derivative_via_cofactors(h, n);
            CHECK(b == doctest::Approx(a).epsilon(1e-9));
        }
    }
    DerivativeTable<double> ident(std::vector<double>{1.0, 0.0, 0.0});
    CHECK(g_derivative_via_cofactors(ident, 2) == doctest::Approx(0.0));
}

TEST_CASE("route equivalence: h route == phi route == cofactor route") {
    Rng rng(60);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = rng.uniform_int(1, 6);
        const DerivativeTable<double> phi = random_table(rng, n + 1);
        const DerivativeTable<double> h = inverse_jets(phi, n + 1);
        const double via_phi = g_derivative_via_phi(phi, n);
        const double via_h = g_derivative_via_h(h, n);
        const double via_cof = g_derivative_via_cofactors(h, n);
        const double scale = std::max({std::abs(via_phi), std::abs(via_h), 1e-12});
        CHECK(std::abs(via_h - via_phi) / scale < 1e-8);
        CHECK(std::abs(via_cof - via_phi) / scale < 1e-8);
    }
}

TEST_CASE("boundary singularity guards") {
    DerivativeTable<double> flat(std::vector<double>{0.0, 1.0, 0.5});
    CHECK_THROWS_AS(g_derivative_via_h(flat, 2), SingularityError);
    CHECK_THROWS_AS(g_derivative_via_phi(flat, 2), SingularityError);
    CHECK_THROWS_AS(g_derivative_via_cofactors(flat, 2), SingularityError);
    CHECK_THROWS_AS(mu_tilde_derivative(flat, flat, 2), SingularityError);
}

TEST_CASE("mu~ closed forms for n=1,2") {
    Rng rng(61);
    for (int rep = 0; rep < 100; ++rep) {
        const DerivativeTable<double> mu = random_table(rng, 2);
        const DerivativeTable<double> phi = random_table(rng, 2);
        CHECK(mu_tilde_derivative(mu, phi, 1) ==
              doctest::Approx(mu.d(1) / phi.d(1)).epsilon(1e-12));
        CHECK(mu_tilde_derivative(mu, phi, 2) ==
              doctest::Approx((mu.d(2) * phi.d(1) - mu.d(1) * phi.d(2)) /
                              std::pow(phi.d(1), 3))
                  .epsilon(1e-10));
        // mu == phi gives the identity pull-back: first derivative 1
        CHECK(mu_tilde_derivative(phi, phi, 1) == doctest::Approx(1.0).epsilon(1e-13));
        // determinant route agrees
        CHECK(mu_tilde_derivative_by_determinants(mu, phi, 2) ==
              doctest::Approx(mu_tilde_derivative(mu, phi, 2)).epsilon(1e-10));
    }
}

TEST_CASE("mu~ derivatives against a directly-composed jet") {
    // mu(t) = sin(t), h(s) = tan(pi s / 2): mu~(s) = sin(tan(pi s / 2));
    // the composite evaluated as a single jet is an independent route
    const Expr composite = parse("sin(tan((pi/2)*s))");
    const Expr mu_expr = parse("sin(t)");
    const TransformSpec tf = arctan_transform();
    for (double s : {-0.6, -0.2, 0.1, 0.45, 0.8}) {
        const double t = std::tan(M_PI * s / 2.0);
        const JetD direct = eval_jet(composite, "s", {}, s, 6);
        for (int n = 1; n <= 6; ++n) {
            const DerivativeTable<double> mu_table =
                DerivativeTable<double>::from_jet(eval_jet(mu_expr, "t", {}, t, n));
            const DerivativeTable<double> phi_tab = phi_table(tf, t, n);
            const double via_routes = mu_tilde_derivative(mu_table, phi_tab, n);
            const double scale = std::max(std::abs(direct.derivative(n)), 1e-9);
            CHECK(std::abs(via_routes - direct.derivative(n)) / scale < 1e-8);
        }
    }
}

TEST_CASE("probe_limit classification") {
    const auto conv0 = probe_limit([](double t) { return -2.0 * t / (t * t + 1.0); },
                                   LimitDirection::PlusInfinity);
    CHECK(conv0.status == ProbeStatus::Converged);
    CHECK(std::abs(conv0.value()) < 1e-10);

    const auto convpi = probe_limit(
        [](double t) { return M_PI * (t * t - 1.0) / (t * t + 1.0); },
        LimitDirection::PlusInfinity);
    CHECK(convpi.status == ProbeStatus::Converged);
    CHECK(convpi.value() == doctest::Approx(M_PI).epsilon(1e-10));

    const auto div = probe_limit([](double t) { return t; }, LimitDirection::PlusInfinity);
    CHECK(div.status == ProbeStatus::Diverged);

    const auto osc = probe_limit([](double t) { return std::sin(t); },
                                 LimitDirection::PlusInfinity);
    CHECK(osc.status == ProbeStatus::Inconclusive);

    const auto fail = probe_limit(
        [](double t) -> double { throw DomainError("nope at " + std::to_string(t)); },
        LimitDirection::PlusInfinity);
    CHECK(fail.status == ProbeStatus::Inconclusive);
    CHECK(!fail.note.empty());

    const auto minus = probe_limit([](double t) { return 1.0 / t; },
                                   LimitDirection::MinusInfinity);
    CHECK(minus.status == ProbeStatus::Converged);
    CHECK(std::abs(minus.value()) < 1e-10);
}

TEST_CASE("the worked system is at least C^2: all four limits, both directions") {
    const SystemSpec sys = vdp_system();
    const TransformSpec tf = arctan_transform();
    const SmoothnessVerdict v = check_ck(sys, tf, 2);
    REQUIRE(v.holds());
    for (int dir = 0; dir < 2; ++dir) {
        const LimitProbe& g1 = dir ? *v.order(1).g_minus : *v.order(1).g_plus;
        const LimitProbe& m1 = dir ? v.order(1).mu_minus[0] : v.order(1).mu_plus[0];
        const LimitProbe& g2 = dir ? *v.order(2).g_minus : *v.order(2).g_plus;
        const LimitProbe& m2 = dir ? v.order(2).mu_minus[0] : v.order(2).mu_plus[0];
        CHECK(std::abs(g1.value() - 0.0) < 1e-4);
        CHECK(std::abs(m1.value() - 1.0) < 1e-4);
        CHECK(std::abs(g2.value() - M_PI) < 1e-4);
        CHECK(std::abs(m2.value() - 0.0) < 1e-4);
    }
}

TEST_CASE("constant forcing passes C^1 trivially") {
    const SystemSpec sys = make_system(1, 1, {"-x1 + mu1"}, {"3"},
                                       std::vector<double>{3.0}, std::vector<double>{3.0},
                                       AsymptoticClass::TwoSided);
    const SmoothnessVerdict v = check_ck(sys, arctan_transform(), 1);
    CHECK(v.holds());
    CHECK(std::abs(v.order(1).g_plus->value()) < 1e-8);
    CHECK(std::abs(v.order(1).mu_plus[0].value()) < 1e-8);
}

TEST_CASE("oscillatory forcing is rejected as non-asymptotic") {
    const SystemSpec sys = make_system(1, 1, {"-x1 + mu1"}, {"sin(t)"},
                                       std::vector<double>{0.0}, std::vector<double>{0.0},
                                       AsymptoticClass::TwoSided);
    const SmoothnessVerdict v = check_ck(sys, arctan_transform(), 1);
    CHECK(!v.holds());
    CHECK(v.failing_order == 1);
}

TEST_CASE("one-sided transform domains shift the probe grid") {
    // right-sided iterated-log transform valid only for t >= 50: probes
    // below t_plus would be domain errors, so the grid starts above it
    const TransformSpec tf =
        user_transform("1 - 1/ln(t)", 12, AsymptoticClass::Right, 50.0, 0.0);
    const SystemSpec sys = make_system(1, 1, {"-x1 + mu1"}, {"1/(1+exp(-t))"},
                                       std::vector<double>{1.0}, std::nullopt,
                                       AsymptoticClass::Right);
    const SmoothnessVerdict v = check_ck(sys, tf, 1);
    CHECK(v.holds());
    CHECK(v.order(1).g_plus->samples.front().first >= 50.0);
}

TEST_CASE("one-sided verdicts probe only their direction") {
    SystemSpec sys = make_system(1, 1, {"-x1 + mu1"}, {"1/(1+exp(-t))"},
                                 std::vector<double>{1.0}, std::nullopt,
                                 AsymptoticClass::Right);
    const SmoothnessVerdict v = check_ck(sys, arctan_transform(), 1);
    CHECK(v.holds());
    CHECK(v.order(1).g_plus.has_value());
    CHECK(!v.order(1).g_minus.has_value());
    CHECK(v.order(1).mu_minus.empty());
}

TEST_CASE("simple criterion: forcing with 1/t^2 derivative decay passes") {
    // mu(t) = -1/t on the tails: mu' = 1/t^2, and mu'/Phi_1' -> 0
    const SystemSpec sys = make_system(1, 1, {"-x1 + mu1"}, {"-1/t"},
                                       std::vector<double>{0.0}, std::vector<double>{0.0},
                                       AsymptoticClass::TwoSided);
    const SimpleCriterionResult r = check_simple_criterion(sys, 1, 1);
    CHECK(r.verdict.holds());
    CHECK(std::abs(r.verdict.order(1).mu_plus[0].value()) < 1e-4);
    REQUIRE(r.realized_transform.has_value());
    CHECK(r.realized_transform->kind == TransformKind::PhiM);
    // the realized transform is a valid strictly-increasing splice
    CHECK(phi_derivative(*r.realized_transform, 0.3) > 0.0);
}

TEST_CASE("simple criterion: constant forcing passes at higher k") {
    const SystemSpec sys = make_system(1, 1, {"-x1 + mu1"}, {"2"},
                                       std::vector<double>{2.0}, std::vector<double>{2.0},
                                       AsymptoticClass::TwoSided);
    const SimpleCriterionResult r = check_simple_criterion(sys, 1, 3);
    CHECK(r.verdict.holds());
}

TEST_CASE("simple criterion: iterated-log forcing hits the -1 cancellation") {
    // mu(t) = 1/ln|t| = -Phi_1(t) on the tails, so mu'/Phi_1' == -1
    const SystemSpec sys = make_system(1, 1, {"-x1 + mu1"}, {"1/ln(abs(t))"},
                                       std::vector<double>{0.0}, std::vector<double>{0.0},
                                       AsymptoticClass::TwoSided);
    const SimpleCriterionResult r = check_simple_criterion(sys, 1, 1);
    CHECK(r.verdict.holds());
    CHECK(r.verdict.order(1).mu_plus[0].value() == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(r.verdict.order(1).mu_minus[0].value() == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("verdict reports render both formats") {
    const SystemSpec sys = vdp_system();
    const SmoothnessVerdict v = check_ck(sys, arctan_transform(), 1);
    const std::string text = verdict_report_text(v);
    CHECK(text.find("ck_extension_holds") != std::string::npos);
    CHECK(text.find("order n=1") != std::string::npos);
    const std::string kv = verdict_report_kv(v);
    CHECK(kv.find("verdict=ck_extension_holds") != std::string::npos);
    CHECK(kv.find("n1.g.plus.status=converged") != std::string::npos);
}
