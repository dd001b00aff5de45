#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include "ckcomp/errors.hpp"

namespace ckcomp {

/// Truncated Taylor expansion of a scalar function at a point.
///
/// Coefficients are Taylor-normalized: coeff(i) == f^(i)(base)/i!, which
/// keeps intermediate products well conditioned up to order ~20; raw
/// derivatives are reconstructed on demand by derivative(). The order is
/// a runtime quantity (the smoothness class k requested by a caller
/// dictates jets of order k+1).
///
/// Jets are immutable values; every operation returns a fresh jet.
template <typename T>
class Jet {
public:
    Jet(T base_point, std::vector<T> coeffs)
        : base_(base_point), c_(std::move(coeffs)) {
        if (c_.size() < 2)
            throw StructureError("jet order must be >= 1 (got order " +
                                 std::to_string(c_.empty() ? -1 : 0) + ")");
    }

    /// The independent variable: value x, first derivative 1.
    static Jet variable(T x, int order) {
        check_order(order);
        std::vector<T> c(static_cast<std::size_t>(order) + 1, T(0));
        c[0] = x;
        c[1] = T(1);
        return Jet(x, std::move(c));
    }

    /// A constant: all derivatives vanish.
    static Jet constant(T value, T base_point, int order) {
        check_order(order);
        std::vector<T> c(static_cast<std::size_t>(order) + 1, T(0));
        c[0] = value;
        return Jet(base_point, std::move(c));
    }

    int order() const { return static_cast<int>(c_.size()) - 1; }
    T base_point() const { return base_; }
    T value() const { return c_[0]; }

    /// Taylor-normalized coefficient f^(i)/i!.
    T coeff(int i) const {
        range_check(i);
        return c_[static_cast<std::size_t>(i)];
    }

    /// Raw derivative f^(i) = coeff(i) * i!.
    T derivative(int i) const {
        range_check(i);
        T f = T(1);
        for (int j = 2; j <= i; ++j) f = f * T(j);
        return c_[static_cast<std::size_t>(i)] * f;
    }

    const std::vector<T>& coeffs() const { return c_; }

    /// Copy truncated (or zero-extended) to the given order.
    Jet resized(int order) const {
        check_order(order);
        std::vector<T> c(static_cast<std::size_t>(order) + 1, T(0));
        for (int i = 0; i <= order && i <= this->order(); ++i)
            c[static_cast<std::size_t>(i)] = c_[static_cast<std::size_t>(i)];
        return Jet(base_, std::move(c));
    }

    friend Jet operator+(const Jet& a, const Jet& b) {
        a.require_compatible(b, "add");
        std::vector<T> c(a.c_.size());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.c_[i] + b.c_[i];
        return Jet(a.base_, std::move(c));
    }

    friend Jet operator-(const Jet& a, const Jet& b) {
        a.require_compatible(b, "sub");
        std::vector<T> c(a.c_.size());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.c_[i] - b.c_[i];
        return Jet(a.base_, std::move(c));
    }

    friend Jet operator-(const Jet& a) {
        std::vector<T> c(a.c_.size());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = -a.c_[i];
        return Jet(a.base_, std::move(c));
    }

    // Cauchy product on normalized coefficients (Leibniz rule).
    friend Jet operator*(const Jet& a, const Jet& b) {
        a.require_compatible(b, "mul");
        std::vector<T> c(a.c_.size(), T(0));
        for (std::size_t i = 0; i < c.size(); ++i)
            for (std::size_t j = 0; j <= i; ++j)
                c[i] = c[i] + a.c_[j] * b.c_[i - j];
        return Jet(a.base_, std::move(c));
    }

    // Long division: q with q*b == a to the stored order.
    friend Jet operator/(const Jet& a, const Jet& b) {
        a.require_compatible(b, "div");
        if (b.c_[0] == T(0))
            throw SingularityError("jet division by a jet with zero value");
        std::vector<T> q(a.c_.size(), T(0));
        for (std::size_t i = 0; i < q.size(); ++i) {
            T acc = a.c_[i];
            for (std::size_t j = 0; j < i; ++j) acc = acc - q[j] * b.c_[i - j];
            q[i] = acc / b.c_[0];
        }
        return Jet(a.base_, std::move(q));
    }

    friend Jet operator*(const T& s, const Jet& a) {
        std::vector<T> c(a.c_.size());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = s * a.c_[i];
        return Jet(a.base_, std::move(c));
    }
    friend Jet operator*(const Jet& a, const T& s) { return s * a; }

    friend Jet operator+(const Jet& a, const T& s) {
        std::vector<T> c = a.c_;
        c[0] = c[0] + s;
        return Jet(a.base_, std::move(c));
    }
    friend Jet operator+(const T& s, const Jet& a) { return a + s; }
    friend Jet operator-(const Jet& a, const T& s) { return a + (-s); }
    friend Jet operator-(const T& s, const Jet& a) { return (-a) + s; }

private:
    static void check_order(int order) {
        if (order < 1)
            throw StructureError("jet order must be >= 1, got " +
                                 std::to_string(order));
    }
    void range_check(int i) const {
        if (i < 0 || i > order())
            throw StructureError("derivative index " + std::to_string(i) +
                                 " out of range for jet of order " +
                                 std::to_string(order()));
    }
    void require_compatible(const Jet& other, const char* op) const {
        if (c_.size() != other.c_.size())
            throw StructureError(std::string("jet ") + op +
                                 ": mismatched orders");
        if (base_ != other.base_)
            throw StructureError(std::string("jet ") + op +
                                 ": mismatched base points");
    }

    T base_;
    std::vector<T> c_;
};

namespace jets {

// Elementary lifts compute f(u) for a jet u by the standard convolution
// recurrences on normalized coefficients (Griewank & Walther, ch. 13).
// They are meaningful only over floating-point scalars.

template <std::floating_point T>
Jet<T> exp(const Jet<T>& u) {
    const int K = u.order();
    std::vector<T> v(static_cast<std::size_t>(K) + 1, T(0));
    v[0] = std::exp(u.value());
    for (int i = 1; i <= K; ++i) {
        T acc = T(0);
        for (int j = 1; j <= i; ++j) acc += T(j) * u.coeff(j) * v[static_cast<std::size_t>(i - j)];
        v[static_cast<std::size_t>(i)] = acc / T(i);
    }
    return Jet<T>(u.base_point(), std::move(v));
}

template <std::floating_point T>
Jet<T> log(const Jet<T>& u) {
    if (!(u.value() > T(0)))
        throw DomainError("ln of non-positive value " + std::to_string(u.value()));
    const int K = u.order();
    std::vector<T> v(static_cast<std::size_t>(K) + 1, T(0));
    v[0] = std::log(u.value());
    for (int i = 1; i <= K; ++i) {
        T acc = T(i) * u.coeff(i);
        for (int j = 1; j < i; ++j) acc -= T(j) * v[static_cast<std::size_t>(j)] * u.coeff(i - j);
        v[static_cast<std::size_t>(i)] = acc / (T(i) * u.value());
    }
    return Jet<T>(u.base_point(), std::move(v));
}

template <std::floating_point T>
Jet<T> reciprocal(const Jet<T>& u) {
    if (u.value() == T(0))
        throw SingularityError("reciprocal of a jet with zero value");
    return Jet<T>::constant(T(1), u.base_point(), u.order()) / u;
}

/// u^r for real exponent r; requires u > 0 unless r is a nonnegative
/// integer handled by the caller via repeated multiplication.
template <std::floating_point T>
Jet<T> pow(const Jet<T>& u, T r) {
    if (!(u.value() > T(0)))
        throw DomainError("power with non-integer exponent requires positive base, got " +
                          std::to_string(u.value()));
    const int K = u.order();
    std::vector<T> v(static_cast<std::size_t>(K) + 1, T(0));
    v[0] = std::pow(u.value(), r);
    // i*v_i*u_0 = sum_{j=1..i} ((r+1)j - i) u_j v_{i-j}
    for (int i = 1; i <= K; ++i) {
        T acc = T(0);
        for (int j = 1; j <= i; ++j)
            acc += ((r + T(1)) * T(j) - T(i)) * u.coeff(j) * v[static_cast<std::size_t>(i - j)];
        v[static_cast<std::size_t>(i)] = acc / (T(i) * u.value());
    }
    return Jet<T>(u.base_point(), std::move(v));
}

template <std::floating_point T>
Jet<T> sqrt(const Jet<T>& u) {
    if (!(u.value() > T(0)))
        throw DomainError("sqrt requires positive value in jet context, got " +
                          std::to_string(u.value()));
    return pow(u, T(0.5));
}

template <std::floating_point T>
void sin_cos(const Jet<T>& u, Jet<T>* sin_out, Jet<T>* cos_out) {
    const int K = u.order();
    std::vector<T> s(static_cast<std::size_t>(K) + 1, T(0));
    std::vector<T> c(static_cast<std::size_t>(K) + 1, T(0));
    s[0] = std::sin(u.value());
    c[0] = std::cos(u.value());
    for (int i = 1; i <= K; ++i) {
        T as = T(0), ac = T(0);
        for (int j = 1; j <= i; ++j) {
            as += T(j) * u.coeff(j) * c[static_cast<std::size_t>(i - j)];
            ac += T(j) * u.coeff(j) * s[static_cast<std::size_t>(i - j)];
        }
        s[static_cast<std::size_t>(i)] = as / T(i);
        c[static_cast<std::size_t>(i)] = -ac / T(i);
    }
    if (sin_out) *sin_out = Jet<T>(u.base_point(), std::move(s));
    if (cos_out) *cos_out = Jet<T>(u.base_point(), std::move(c));
}

template <std::floating_point T>
Jet<T> sin(const Jet<T>& u) {
    Jet<T> s = u, c = u;
    sin_cos(u, &s, &c);
    return s;
}

template <std::floating_point T>
Jet<T> cos(const Jet<T>& u) {
    Jet<T> s = u, c = u;
    sin_cos(u, &s, &c);
    return c;
}

template <std::floating_point T>
Jet<T> tan(const Jet<T>& u) {
    Jet<T> s = u, c = u;
    sin_cos(u, &s, &c);
    if (std::abs(c.value()) < T(1e-12))
        throw DomainError("tan evaluated at a pole (cos = " +
                          std::to_string(c.value()) + ")");
    return s / c;
}

template <std::floating_point T>
Jet<T> atan(const Jet<T>& u) {
    // v' = u'/(1+u^2), integrated coefficientwise.
    const int K = u.order();
    Jet<T> w = Jet<T>::constant(T(1), u.base_point(), K) + u * u;
    Jet<T> q = [&] {
        std::vector<T> du(static_cast<std::size_t>(K) + 1, T(0));
        for (int i = 0; i < K; ++i) du[static_cast<std::size_t>(i)] = T(i + 1) * u.coeff(i + 1);
        return Jet<T>(u.base_point(), std::move(du)) / w;
    }();
    std::vector<T> v(static_cast<std::size_t>(K) + 1, T(0));
    v[0] = std::atan(u.value());
    for (int i = 1; i <= K; ++i) v[static_cast<std::size_t>(i)] = q.coeff(i - 1) / T(i);
    return Jet<T>(u.base_point(), std::move(v));
}

/// |u|: smooth wherever the value is nonzero, kink otherwise.
template <std::floating_point T>
Jet<T> abs(const Jet<T>& u) {
    if (u.value() > T(0)) return u;
    if (u.value() < T(0)) return -u;
    throw NonSmoothError("abs is not differentiable at zero argument",
                         static_cast<double>(u.base_point()));
}

/// sgn(u): locally constant away from zero, kink at zero.
template <std::floating_point T>
Jet<T> sgn(const Jet<T>& u) {
    if (u.value() == T(0))
        throw NonSmoothError("sgn is not differentiable at zero argument",
                             static_cast<double>(u.base_point()));
    return Jet<T>::constant(u.value() > T(0) ? T(1) : T(-1), u.base_point(), u.order());
}

/// Integer power by repeated multiplication; e >= 0.
template <typename T>
Jet<T> ipow(const Jet<T>& u, long long e) {
    if (e < 0) throw StructureError("ipow expects nonnegative exponent");
    Jet<T> acc = Jet<T>::constant(T(1), u.base_point(), u.order());
    Jet<T> base = u;
    while (e > 0) {
        if (e & 1) acc = acc * base;
        base = base * base;
        e >>= 1;
    }
    return acc;
}

} // namespace jets

using JetD = Jet<double>;

} // namespace ckcomp
