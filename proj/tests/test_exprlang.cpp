#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "ckcomp/expr.hpp"
#include "support/random.hpp"

using namespace ckcomp;
using testsupport::Rng;

namespace {

/// Random expression over variables t, x1, x2, mu1 with domain-safe
/// structure (denominators bounded away from zero, ln/sqrt over strictly
/// positive combinations).
ExprPtr random_expr(Rng& rng, int depth);

ExprPtr mk(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

ExprPtr random_leaf(Rng& rng) {
    ExprNode n{};
    switch (rng.uniform_int(0, 5)) {
        case 0:
            // parser-shaped literals are nonnegative; negatives arrive as Neg
            n.kind = ExprNode::Kind::Number;
            n.number = rng.uniform_int(0, 8) / 2.0;
            break;
        case 1: n.kind = ExprNode::Kind::Const; n.cname = NamedConst::Pi; break;
        case 2: n.kind = ExprNode::Kind::Var; n.var = VarKind::T; break;
        case 3: n.kind = ExprNode::Kind::Var; n.var = VarKind::X; n.var_index = 1; break;
        case 4: n.kind = ExprNode::Kind::Var; n.var = VarKind::X; n.var_index = 2; break;
        default: n.kind = ExprNode::Kind::Var; n.var = VarKind::Mu; n.var_index = 1; break;
    }
    return mk(std::move(n));
}

ExprPtr random_expr(Rng& rng, int depth) {
    if (depth <= 0) return random_leaf(rng);
    ExprNode n{};
    switch (rng.uniform_int(0, 9)) {
        case 0: case 1: {
            n.kind = ExprNode::Kind::Binary;
            n.op = static_cast<BinOp>(rng.uniform_int(0, 2)); // add/sub/mul
            n.a = random_expr(rng, depth - 1);
            n.b = random_expr(rng, depth - 1);
            break;
        }
        case 2: { // division by something >= 1 in magnitude: u^2 + 2
            n.kind = ExprNode::Kind::Binary;
            n.op = BinOp::Div;
            n.a = random_expr(rng, depth - 1);
            ExprNode sq{};
            sq.kind = ExprNode::Kind::Binary;
            sq.op = BinOp::Mul;
            ExprPtr u = random_expr(rng, depth - 2 < 0 ? 0 : depth - 2);
            sq.a = u; sq.b = u;
            ExprNode plus{};
            plus.kind = ExprNode::Kind::Binary;
            plus.op = BinOp::Add;
            plus.a = mk(std::move(sq));
            ExprNode two{};
            two.kind = ExprNode::Kind::Number;
            two.number = 2.0;
            plus.b = mk(std::move(two));
            n.b = mk(std::move(plus));
            break;
        }
        case 3: {
            n.kind = ExprNode::Kind::Neg;
            n.a = random_expr(rng, depth - 1);
            break;
        }
        case 4: { // integer power
            n.kind = ExprNode::Kind::Binary;
            n.op = BinOp::Pow;
            n.a = random_expr(rng, depth - 1);
            ExprNode k{};
            k.kind = ExprNode::Kind::Number;
            k.number = rng.uniform_int(0, 3);
            n.b = mk(std::move(k));
            break;
        }
        default: {
            n.kind = ExprNode::Kind::Unary;
            switch (rng.uniform_int(0, 3)) {
                case 0: n.func = UnaryFunc::Sin; break;
                case 1: n.func = UnaryFunc::Cos; break;
                case 2: n.func = UnaryFunc::Atan; break;
                default: n.func = UnaryFunc::Exp; break;
            }
            ExprPtr arg = random_expr(rng, depth - 1);
            if (n.func == UnaryFunc::Exp) {
                // keep exp arguments bounded: exp(sin(arg))
                ExprNode s{};
                s.kind = ExprNode::Kind::Unary;
                s.func = UnaryFunc::Sin;
                s.a = arg;
                arg = mk(std::move(s));
            }
            n.a = arg;
            break;
        }
    }
    return mk(std::move(n));
}

} // namespace

TEST_CASE("parsing the worked expressions") {
    CHECK(print(parse("(2/pi)*atan(t)")) == "2/pi*atan(t)");
    CHECK_NOTHROW(parse("mu1^2*(1-x1^2)*x2 - x1"));
    CHECK_NOTHROW(parse("x2"));
}

TEST_CASE("precedence and associativity") {
    // ^ binds tighter than unary minus; right-associative
    CHECK(structurally_equal(parse("-t^2"), parse("-(t^2)")));
    CHECK(structurally_equal(parse("t^2^3"), parse("t^(2^3)")));
    CHECK(!structurally_equal(parse("t^2^3"), parse("(t^2)^3")));
    CHECK(structurally_equal(parse("1 - 2 - 3"), parse("(1-2) - 3")));
    CHECK(structurally_equal(parse("2*t + 1"), parse("(2*t) + 1")));
    CHECK(eval_real(parse("2^-2"), {}) == doctest::Approx(0.25));
}

TEST_CASE("parse errors carry positions") {
    CHECK_THROWS_AS(parse("x1 + "), ParseError);
    try {
        parse("x1 + ");
    } catch (const ParseError& e) {
        CHECK(e.position == 5);
        CHECK(std::string(e.what()).find("1:6") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("2 $ 3"), ParseError);
    CHECK_THROWS_AS(parse("foo + 1"), ParseError);
    CHECK_THROWS_AS(parse("x0 + 1"), ParseError);
    CHECK_THROWS_AS(parse("sin 3"), ParseError);
    CHECK_THROWS_AS(parse("(1 + 2"), ParseError);
    CHECK_THROWS_AS(parse("1.2.3"), ParseError);
}

TEST_CASE("eval_real on the worked examples") {
    VarBindings env;
    env.t = 0.0;
    CHECK(eval_real(parse("(2/pi)*atan(t)"), env) == doctest::Approx(0.0));

    std::vector<double> x{0.0, 1.0}, mu{1.0};
    VarBindings env2;
    env2.x = x;
    env2.mu = mu;
    CHECK(eval_real(parse("mu1^2*(1-x1^2)*x2 - x1"), env2) == doctest::Approx(1.0));

    std::vector<double> x0{0.0};
    VarBindings env3;
    env3.x = x0;
    CHECK_THROWS_AS(eval_real(parse("1/x1"), env3), DomainError);
}

TEST_CASE("eval_real error paths") {
    VarBindings empty;
    CHECK_THROWS_AS(eval_real(parse("t"), empty), StructureError);   // unbound
    CHECK_THROWS_AS(eval_real(parse("x3"), empty), StructureError);  // beyond bindings
    VarBindings env;
    env.t = -1.0;
    CHECK_THROWS_AS(eval_real(parse("ln(t)"), env), DomainError);
    CHECK_THROWS_AS(eval_real(parse("sqrt(t)"), env), DomainError);
    CHECK_THROWS_AS(eval_real(parse("t^0.5"), env), DomainError);
    CHECK_THROWS_AS(eval_real(parse("exp(1/0.0000001)"), env), DomainError); // overflow -> inf
    CHECK(eval_real(parse("abs(t)"), env) == doctest::Approx(1.0));
    CHECK(eval_real(parse("sgn(t)"), env) == doctest::Approx(-1.0));
}

TEST_CASE("eval_jet on the worked examples") {
    const JetD j = eval_jet(parse("(2/pi)*atan(t)"), "t", {}, 0.0, 1);
    CHECK(j.value() == doctest::Approx(0.0));
    CHECK(j.derivative(1) == doctest::Approx(2.0 / M_PI).epsilon(1e-14));

    const JetD c = eval_jet(parse("pi*2 - 3"), "t", {}, 1.5, 4);
    CHECK(c.value() == doctest::Approx(2 * M_PI - 3));
    for (int i = 1; i <= 4; ++i) CHECK(c.coeff(i) == 0.0);

    const JetD m = eval_jet(parse("t^3"), "t", {}, 1.0, 3);
    CHECK(m.derivative(1) == doctest::Approx(3.0));
    CHECK(m.derivative(2) == doctest::Approx(6.0));
    CHECK(m.derivative(3) == doctest::Approx(6.0));
}

TEST_CASE("kinks are flagged, not silently differentiated") {
    CHECK_THROWS_AS(eval_jet(parse("t/(1+abs(t))"), "t", {}, 0.0, 1), NonSmoothError);
    CHECK_THROWS_AS(eval_jet(parse("sgn(t)"), "t", {}, 0.0, 1), NonSmoothError);
    // away from the kink both are smooth
    const JetD a = eval_jet(parse("t/(1+abs(t))"), "t", {}, 2.0, 2);
    CHECK(a.value() == doctest::Approx(2.0 / 3.0));
    const JetD s = eval_jet(parse("sgn(t)"), "t", {}, -3.0, 2);
    CHECK(s.value() == doctest::Approx(-1.0));
    CHECK(s.derivative(1) == 0.0);
}

TEST_CASE("print/parse round-trip is structurally exact on a random corpus") {
    Rng rng(99);
    int count = 0;
    while (count < 1000) {
        const Expr e(random_expr(rng, rng.uniform_int(1, 5)));
        const std::string text = print(e);
        const Expr back = parse(text);
        CHECK(structurally_equal(e, back));
        ++count;
    }
}

TEST_CASE("jet order-0 equals eval_real exactly; first derivative matches differences") {
    Rng rng(123);
    std::vector<double> x{0.7, -0.4}, mu{0.9};
    int checked = 0;
    while (checked < 200) {
        const Expr e(random_expr(rng, rng.uniform_int(1, 4)));
        const double t0 = rng.uniform(-2.0, 2.0);
        VarBindings env;
        env.x = x;
        env.mu = mu;
        env.t = t0;
        double v;
        try {
            v = eval_real(e, env);
        } catch (const Error&) {
            continue; // domain-unlucky draw
        }
        JetD j = eval_jet(e, "t", env, t0, 1);
        CHECK(j.value() == v); // bitwise: same evaluation path at order 0

        const double h = 1e-5;
        VarBindings ep = env, em = env;
        ep.t = t0 + h;
        em.t = t0 - h;
        double vp, vm;
        try {
            vp = eval_real(e, ep);
            vm = eval_real(e, em);
        } catch (const Error&) {
            continue;
        }
        const double fd = (vp - vm) / (2 * h);
        const double an = j.derivative(1);
        if (std::abs(an) > 1e-3)
            CHECK(fd == doctest::Approx(an).epsilon(1e-6));
        else
            CHECK(std::abs(fd - an) < 1e-6);
        ++checked;
    }
}
