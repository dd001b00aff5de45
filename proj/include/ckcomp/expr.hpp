#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ckcomp/errors.hpp"
#include "ckcomp/jet.hpp"

namespace ckcomp {

// A small expression language for vector fields f(x, mu), forcings mu(t)
// and user-defined time transformations phi(t). Evaluates over plain
// reals and over jets with one designated active variable.
//
// Grammar (documented in docs/expressions.md):
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          -- right-associative
//   primary := number | 'pi' | 'e' | var | func '(' expr ')' | '(' expr ')'
//   var     := 't' | 's' | 'x'<digits> | 'mu'<digits>
//   func    := exp | ln | sin | cos | tan | atan | sqrt | abs | sgn

enum class UnaryFunc { Exp, Ln, Sin, Cos, Tan, Atan, Sqrt, Abs, Sgn };
enum class BinOp { Add, Sub, Mul, Div, Pow };
enum class VarKind { X, Mu, T, S };
enum class NamedConst { Pi, E };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    enum class Kind { Number, Const, Var, Unary, Neg, Binary } kind;
    double number = 0.0;       // Kind::Number
    NamedConst cname{};        // Kind::Const
    VarKind var{};             // Kind::Var
    int var_index = 0;         // 1-based for X / Mu
    UnaryFunc func{};          // Kind::Unary
    BinOp op{};                // Kind::Binary
    ExprPtr a, b;              // children (a only for Unary/Neg)
};

/// Immutable parsed expression.
class Expr {
public:
    Expr() = default;
    explicit Expr(ExprPtr root) : root_(std::move(root)) {}
    const ExprPtr& root() const { return root_; }
    bool empty() const { return root_ == nullptr; }

private:
    ExprPtr root_;
};

/// Values for the free variables of one evaluation.
struct VarBindings {
    std::span<const double> x{};
    std::span<const double> mu{};
    std::optional<double> t{};
    std::optional<double> s{};
};

namespace detail {

inline std::string line_col(const std::string& src, std::size_t pos) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos && i < src.size(); ++i) {
        if (src[i] == '\n') { ++line; col = 1; } else ++col;
    }
    return std::to_string(line) + ":" + std::to_string(col);
}

struct Token {
    enum class Type { Number, Ident, Op, LParen, RParen, End } type;
    std::string text;
    double value = 0.0;
    std::size_t pos = 0;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        std::size_t i = 0;
        const std::size_t n = src_.size();
        while (i < n) {
            const char c = src_[i];
            if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t start = i;
                int dots = 0;
                while (i < n && (std::isdigit(static_cast<unsigned char>(src_[i])) || src_[i] == '.')) {
                    if (src_[i] == '.') ++dots;
                    ++i;
                }
                if (dots > 1)
                    throw ParseError("invalid number '" + src_.substr(start, i - start) +
                                     "' at " + line_col(src_, start), start);
                if (i < n && (src_[i] == 'e' || src_[i] == 'E')) {
                    std::size_t save = i;
                    ++i;
                    if (i < n && (src_[i] == '+' || src_[i] == '-')) ++i;
                    if (i < n && std::isdigit(static_cast<unsigned char>(src_[i]))) {
                        while (i < n && std::isdigit(static_cast<unsigned char>(src_[i]))) ++i;
                    } else {
                        i = save; // bare 'e' after a number is not an exponent
                    }
                }
                const std::string text = src_.substr(start, i - start);
                try {
                    out.push_back({Token::Type::Number, text, std::stod(text), start});
                } catch (const std::exception&) {
                    throw ParseError("invalid number '" + text + "' at " + line_col(src_, start), start);
                }
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t start = i;
                while (i < n && (std::isalnum(static_cast<unsigned char>(src_[i])) || src_[i] == '_')) ++i;
                out.push_back({Token::Type::Ident, src_.substr(start, i - start), 0.0, start});
                continue;
            }
            if (c == '(') { out.push_back({Token::Type::LParen, "(", 0.0, i}); ++i; continue; }
            if (c == ')') { out.push_back({Token::Type::RParen, ")", 0.0, i}); ++i; continue; }
            if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
                out.push_back({Token::Type::Op, std::string(1, c), 0.0, i});
                ++i;
                continue;
            }
            throw ParseError(std::string("unexpected character '") + c + "' at " +
                             line_col(src_, i), i);
        }
        out.push_back({Token::Type::End, "", 0.0, n});
        return out;
    }

private:
    const std::string& src_;
};

inline std::optional<UnaryFunc> func_by_name(const std::string& s) {
    if (s == "exp") return UnaryFunc::Exp;
    if (s == "ln") return UnaryFunc::Ln;
    if (s == "sin") return UnaryFunc::Sin;
    if (s == "cos") return UnaryFunc::Cos;
    if (s == "tan") return UnaryFunc::Tan;
    if (s == "atan") return UnaryFunc::Atan;
    if (s == "sqrt") return UnaryFunc::Sqrt;
    if (s == "abs") return UnaryFunc::Abs;
    if (s == "sgn") return UnaryFunc::Sgn;
    return std::nullopt;
}

inline const char* func_name(UnaryFunc f) {
    switch (f) {
        case UnaryFunc::Exp: return "exp";
        case UnaryFunc::Ln: return "ln";
        case UnaryFunc::Sin: return "sin";
        case UnaryFunc::Cos: return "cos";
        case UnaryFunc::Tan: return "tan";
        case UnaryFunc::Atan: return "atan";
        case UnaryFunc::Sqrt: return "sqrt";
        case UnaryFunc::Abs: return "abs";
        case UnaryFunc::Sgn: return "sgn";
    }
    return "?";
}

class Parser {
public:
    Parser(const std::string& src, std::vector<Token> toks)
        : src_(src), t_(std::move(toks)) {}

    ExprPtr run() {
        ExprPtr e = parse_expr();
        if (peek().type != Token::Type::End)
            fail("unexpected trailing input '" + peek().text + "'");
        return e;
    }

private:
    const Token& peek() const { return t_[i_]; }
    Token take() { return t_[i_++]; }

    [[noreturn]] void fail(const std::string& msg) const {
        const std::size_t pos = peek().pos;
        throw ParseError("syntax error at " + line_col(src_, pos) + ": " + msg, pos);
    }

    bool eat_op(const char* op) {
        if (peek().type == Token::Type::Op && peek().text == op) { ++i_; return true; }
        return false;
    }

    static ExprPtr make(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

    ExprPtr parse_expr() {
        ExprPtr lhs = parse_term();
        for (;;) {
            if (eat_op("+")) {
                ExprNode n{};
                n.kind = ExprNode::Kind::Binary;
                n.op = BinOp::Add; n.a = lhs; n.b = parse_term();
                lhs = make(std::move(n));
            } else if (eat_op("-")) {
                ExprNode n{};
                n.kind = ExprNode::Kind::Binary;
                n.op = BinOp::Sub; n.a = lhs; n.b = parse_term();
                lhs = make(std::move(n));
            } else break;
        }
        return lhs;
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_unary();
        for (;;) {
            if (eat_op("*")) {
                ExprNode n{};
                n.kind = ExprNode::Kind::Binary;
                n.op = BinOp::Mul; n.a = lhs; n.b = parse_unary();
                lhs = make(std::move(n));
            } else if (eat_op("/")) {
                ExprNode n{};
                n.kind = ExprNode::Kind::Binary;
                n.op = BinOp::Div; n.a = lhs; n.b = parse_unary();
                lhs = make(std::move(n));
            } else break;
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (eat_op("-")) {
            ExprNode n{};
                n.kind = ExprNode::Kind::Neg;
            n.a = parse_unary();
            return make(std::move(n));
        }
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_primary();
        if (eat_op("^")) {
            ExprNode n{};
                n.kind = ExprNode::Kind::Binary;
            n.op = BinOp::Pow; n.a = base; n.b = parse_unary();
            return make(std::move(n));
        }
        return base;
    }

    ExprPtr parse_primary() {
        const Token& tok = peek();
        switch (tok.type) {
            case Token::Type::Number: {
                Token t = take();
                ExprNode n{};
                n.kind = ExprNode::Kind::Number;
                n.number = t.value;
                return make(std::move(n));
            }
            case Token::Type::LParen: {
                take();
                ExprPtr e = parse_expr();
                if (peek().type != Token::Type::RParen) fail("expected ')'");
                take();
                return e;
            }
            case Token::Type::Ident: {
                Token t = take();
                if (auto f = func_by_name(t.text)) {
                    if (peek().type != Token::Type::LParen)
                        fail("expected '(' after function '" + t.text + "'");
                    take();
                    ExprPtr arg = parse_expr();
                    if (peek().type != Token::Type::RParen) fail("expected ')'");
                    take();
                    ExprNode n{};
                n.kind = ExprNode::Kind::Unary;
                    n.func = *f; n.a = arg;
                    return make(std::move(n));
                }
                if (t.text == "pi") {
                    ExprNode n{};
                n.kind = ExprNode::Kind::Const;
                    n.cname = NamedConst::Pi;
                    return make(std::move(n));
                }
                if (t.text == "e") {
                    ExprNode n{};
                n.kind = ExprNode::Kind::Const;
                    n.cname = NamedConst::E;
                    return make(std::move(n));
                }
                if (t.text == "t" || t.text == "s") {
                    ExprNode n{};
                n.kind = ExprNode::Kind::Var;
                    n.var = t.text == "t" ? VarKind::T : VarKind::S;
                    return make(std::move(n));
                }
                auto indexed = [&](const std::string& prefix, VarKind kind) -> ExprPtr {
                    const std::string digits = t.text.substr(prefix.size());
                    if (digits.empty()) return nullptr;
                    for (char d : digits)
                        if (!std::isdigit(static_cast<unsigned char>(d))) return nullptr;
                    const int idx = std::stoi(digits);
                    if (idx < 1)
                        throw ParseError("variable indices are 1-based: '" + t.text +
                                         "' at " + line_col(src_, t.pos), t.pos);
                    ExprNode n{};
                n.kind = ExprNode::Kind::Var;
                    n.var = kind; n.var_index = idx;
                    return make(std::move(n));
                };
                if (t.text.rfind("mu", 0) == 0)
                    if (ExprPtr e = indexed("mu", VarKind::Mu)) return e;
                if (t.text.rfind("x", 0) == 0)
                    if (ExprPtr e = indexed("x", VarKind::X)) return e;
                throw ParseError("unknown identifier '" + t.text + "' at " +
                                 line_col(src_, t.pos), t.pos);
            }
            default:
                fail(tok.type == Token::Type::End
                         ? std::string("unexpected end of input")
                         : "unexpected token '" + tok.text + "'");
        }
    }

    const std::string& src_;
    std::vector<Token> t_;
    std::size_t i_ = 0;
};

inline std::optional<long long> integer_literal(const ExprPtr& e) {
    if (!e) return std::nullopt;
    if (e->kind == ExprNode::Kind::Number) {
        const double v = e->number;
        if (v == std::floor(v) && std::abs(v) <= 1e15) return static_cast<long long>(v);
        return std::nullopt;
    }
    if (e->kind == ExprNode::Kind::Neg) {
        if (auto inner = integer_literal(e->a)) return -*inner;
    }
    return std::nullopt;
}

} // namespace detail

/// Parses source text into an AST; throws ParseError with line:column on
/// lexical errors, syntax errors and unknown identifiers.
inline Expr parse(const std::string& source) {
    detail::Lexer lex(source);
    detail::Parser p(source, lex.run());
    return Expr(p.run());
}

namespace detail {

inline double check_finite(double v) {
    if (!std::isfinite(v))
        throw DomainError("expression evaluated to a non-finite value");
    return v;
}

inline double eval_node(const ExprPtr& e, const VarBindings& env) {
    switch (e->kind) {
        case ExprNode::Kind::Number: return e->number;
        case ExprNode::Kind::Const:
            return e->cname == NamedConst::Pi ? M_PI : M_E;
        case ExprNode::Kind::Var: {
            switch (e->var) {
                case VarKind::T:
                    if (!env.t) throw StructureError("variable 't' is unbound");
                    return *env.t;
                case VarKind::S:
                    if (!env.s) throw StructureError("variable 's' is unbound");
                    return *env.s;
                case VarKind::X:
                    if (e->var_index > static_cast<int>(env.x.size()))
                        throw StructureError("variable 'x" + std::to_string(e->var_index) + "' is unbound");
                    return env.x[static_cast<std::size_t>(e->var_index - 1)];
                case VarKind::Mu:
                    if (e->var_index > static_cast<int>(env.mu.size()))
                        throw StructureError("variable 'mu" + std::to_string(e->var_index) + "' is unbound");
                    return env.mu[static_cast<std::size_t>(e->var_index - 1)];
            }
            throw StructureError("corrupt variable node");
        }
        case ExprNode::Kind::Neg:
            return -eval_node(e->a, env);
        case ExprNode::Kind::Unary: {
            const double u = eval_node(e->a, env);
            switch (e->func) {
                case UnaryFunc::Exp: return check_finite(std::exp(u));
                case UnaryFunc::Ln:
                    if (!(u > 0.0))
                        throw DomainError("ln of non-positive value " + std::to_string(u));
                    return std::log(u);
                case UnaryFunc::Sin: return std::sin(u);
                case UnaryFunc::Cos: return std::cos(u);
                case UnaryFunc::Tan: return check_finite(std::tan(u));
                case UnaryFunc::Atan: return std::atan(u);
                case UnaryFunc::Sqrt:
                    if (u < 0.0)
                        throw DomainError("sqrt of negative value " + std::to_string(u));
                    return std::sqrt(u);
                case UnaryFunc::Abs: return std::abs(u);
                case UnaryFunc::Sgn: return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
            }
            throw StructureError("corrupt function node");
        }
        case ExprNode::Kind::Binary: {
            const double a = eval_node(e->a, env);
            if (e->op == BinOp::Pow) {
                if (auto k = integer_literal(e->b)) {
                    double acc = 1.0, base = a;
                    long long ex = *k < 0 ? -*k : *k;
                    while (ex > 0) {
                        if (ex & 1) acc *= base;
                        base *= base;
                        ex >>= 1;
                    }
                    if (*k < 0) {
                        if (acc == 0.0) throw DomainError("zero raised to a negative power");
                        acc = 1.0 / acc;
                    }
                    return check_finite(acc);
                }
                const double b = eval_node(e->b, env);
                if (!(a > 0.0))
                    throw DomainError("power with non-integer exponent requires positive base, got " +
                                      std::to_string(a));
                return check_finite(std::pow(a, b));
            }
            const double b = eval_node(e->b, env);
            switch (e->op) {
                case BinOp::Add: return check_finite(a + b);
                case BinOp::Sub: return check_finite(a - b);
                case BinOp::Mul: return check_finite(a * b);
                case BinOp::Div:
                    if (b == 0.0) throw DomainError("division by zero");
                    return check_finite(a / b);
                case BinOp::Pow: break;
            }
            throw StructureError("corrupt binary node");
        }
    }
    throw StructureError("corrupt expression node");
}

struct JetEnv {
    const VarBindings* env;
    VarKind active;
    int active_index;
    double base;
    int order;
};

inline JetD eval_jet_node(const ExprPtr& e, const JetEnv& je);

inline JetD jet_const(const JetEnv& je, double v) {
    return JetD::constant(v, je.base, je.order);
}

inline JetD eval_jet_node(const ExprPtr& e, const JetEnv& je) {
    switch (e->kind) {
        case ExprNode::Kind::Number: return jet_const(je, e->number);
        case ExprNode::Kind::Const:
            return jet_const(je, e->cname == NamedConst::Pi ? M_PI : M_E);
        case ExprNode::Kind::Var: {
            const bool is_active =
                e->var == je.active &&
                (e->var != VarKind::X && e->var != VarKind::Mu
                     ? true
                     : e->var_index == je.active_index);
            if (is_active) return JetD::variable(je.base, je.order);
            // inactive variables are constants of the jet
            return jet_const(je, eval_node(e, *je.env));
        }
        case ExprNode::Kind::Neg:
            return -eval_jet_node(e->a, je);
        case ExprNode::Kind::Unary: {
            const JetD u = eval_jet_node(e->a, je);
            switch (e->func) {
                case UnaryFunc::Exp: return jets::exp(u);
                case UnaryFunc::Ln: return jets::log(u);
                case UnaryFunc::Sin: return jets::sin(u);
                case UnaryFunc::Cos: return jets::cos(u);
                case UnaryFunc::Tan: return jets::tan(u);
                case UnaryFunc::Atan: return jets::atan(u);
                case UnaryFunc::Sqrt: return jets::sqrt(u);
                case UnaryFunc::Abs: return jets::abs(u);
                case UnaryFunc::Sgn: return jets::sgn(u);
            }
            throw StructureError("corrupt function node");
        }
        case ExprNode::Kind::Binary: {
            const JetD a = eval_jet_node(e->a, je);
            if (e->op == BinOp::Pow) {
                if (auto k = integer_literal(e->b)) {
                    if (*k >= 0) return jets::ipow(a, *k);
                    return jets::reciprocal(jets::ipow(a, -*k));
                }
                const JetD b = eval_jet_node(e->b, je);
                return jets::exp(b * jets::log(a));
            }
            const JetD b = eval_jet_node(e->b, je);
            switch (e->op) {
                case BinOp::Add: return a + b;
                case BinOp::Sub: return a - b;
                case BinOp::Mul: return a * b;
                case BinOp::Div: return a / b;
                case BinOp::Pow: break;
            }
            throw StructureError("corrupt binary node");
        }
    }
    throw StructureError("corrupt expression node");
}

} // namespace detail

/// Standard evaluation over the reals. All free variables must be bound;
/// non-finite results and domain violations raise errors.
inline double eval_real(const Expr& e, const VarBindings& env) {
    if (e.empty()) throw StructureError("empty expression");
    return detail::check_finite(detail::eval_node(e.root(), env));
}

/// Active variables for jet evaluation, e.g. "t", "s", "x2", "mu1".
struct ActiveVar {
    VarKind kind;
    int index = 0; // for X / Mu

    static ActiveVar named(const std::string& name) {
        if (name == "t") return {VarKind::T, 0};
        if (name == "s") return {VarKind::S, 0};
        if (name.rfind("mu", 0) == 0) return {VarKind::Mu, std::stoi(name.substr(2))};
        if (name.rfind("x", 0) == 0) return {VarKind::X, std::stoi(name.substr(1))};
        throw StructureError("not a variable name: '" + name + "'");
    }
};

/// Jet of the expression as a function of the active variable at `base`,
/// other variables held fixed at their bound values.
inline JetD eval_jet(const Expr& e, ActiveVar active, const VarBindings& env,
                     double base, int order) {
    if (e.empty()) throw StructureError("empty expression");
    detail::JetEnv je{&env, active.kind, active.index, base, order};
    return detail::eval_jet_node(e.root(), je);
}

inline JetD eval_jet(const Expr& e, const std::string& active, const VarBindings& env,
                     double base, int order) {
    return eval_jet(e, ActiveVar::named(active), env, base, order);
}

namespace detail {

inline int precedence(const ExprPtr& e) {
    switch (e->kind) {
        case ExprNode::Kind::Binary:
            switch (e->op) {
                case BinOp::Add: case BinOp::Sub: return 1;
                case BinOp::Mul: case BinOp::Div: return 2;
                case BinOp::Pow: return 4;
            }
            return 0;
        case ExprNode::Kind::Neg: return 3;
        default: return 5;
    }
}

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void print_node(const ExprPtr& e, std::string& out);

inline void print_child(const ExprPtr& child, int parent_prec, bool tight, std::string& out) {
    const bool parens = tight ? precedence(child) <= parent_prec
                              : precedence(child) < parent_prec;
    if (parens) out += '(';
    print_node(child, out);
    if (parens) out += ')';
}

inline void print_node(const ExprPtr& e, std::string& out) {
    switch (e->kind) {
        case ExprNode::Kind::Number: out += format_number(e->number); return;
        case ExprNode::Kind::Const: out += e->cname == NamedConst::Pi ? "pi" : "e"; return;
        case ExprNode::Kind::Var:
            switch (e->var) {
                case VarKind::T: out += "t"; return;
                case VarKind::S: out += "s"; return;
                case VarKind::X: out += "x" + std::to_string(e->var_index); return;
                case VarKind::Mu: out += "mu" + std::to_string(e->var_index); return;
            }
            return;
        case ExprNode::Kind::Neg:
            out += '-';
            print_child(e->a, 3, false, out);
            return;
        case ExprNode::Kind::Unary:
            out += func_name(e->func);
            out += '(';
            print_node(e->a, out);
            out += ')';
            return;
        case ExprNode::Kind::Binary: {
            const int prec = precedence(e);
            const char* sym = "";
            switch (e->op) {
                case BinOp::Add: sym = " + "; break;
                case BinOp::Sub: sym = " - "; break;
                case BinOp::Mul: sym = "*"; break;
                case BinOp::Div: sym = "/"; break;
                case BinOp::Pow: sym = "^"; break;
            }
            if (e->op == BinOp::Pow) {
                print_child(e->a, prec, true, out);  // (a^b)^c needs parens on a^b
                out += sym;
                print_child(e->b, prec, false, out); // right-assoc
            } else {
                print_child(e->a, prec, false, out);
                out += sym;
                print_child(e->b, prec, true, out);
            }
            return;
        }
    }
}

} // namespace detail

/// Pretty-prints with minimal parentheses; parse(print(e)) is
/// structurally identical to e.
inline std::string print(const Expr& e) {
    if (e.empty()) return "";
    std::string out;
    detail::print_node(e.root(), out);
    return out;
}

/// Structural equality of two ASTs.
inline bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
    if (!a || !b) return a == b;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case ExprNode::Kind::Number: return a->number == b->number;
        case ExprNode::Kind::Const: return a->cname == b->cname;
        case ExprNode::Kind::Var: return a->var == b->var && a->var_index == b->var_index;
        case ExprNode::Kind::Neg: return structurally_equal(a->a, b->a);
        case ExprNode::Kind::Unary:
            return a->func == b->func && structurally_equal(a->a, b->a);
        case ExprNode::Kind::Binary:
            return a->op == b->op && structurally_equal(a->a, b->a) &&
                   structurally_equal(a->b, b->b);
    }
    return false;
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
    return structurally_equal(a.root(), b.root());
}

/// Which variables an expression references (for system validation).
struct VarUsage {
    int max_x = 0;
    int max_mu = 0;
    bool uses_t = false;
    bool uses_s = false;
};

inline void collect_usage(const ExprPtr& e, VarUsage& u) {
    if (!e) return;
    if (e->kind == ExprNode::Kind::Var) {
        switch (e->var) {
            case VarKind::T: u.uses_t = true; break;
            case VarKind::S: u.uses_s = true; break;
            case VarKind::X: u.max_x = std::max(u.max_x, e->var_index); break;
            case VarKind::Mu: u.max_mu = std::max(u.max_mu, e->var_index); break;
        }
    }
    collect_usage(e->a, u);
    collect_usage(e->b, u);
}

inline VarUsage usage(const Expr& e) {
    VarUsage u;
    collect_usage(e.root(), u);
    return u;
}

} // namespace ckcomp
