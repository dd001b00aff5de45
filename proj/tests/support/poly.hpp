#pragma once

// Symbolic univariate polynomials over an exact scalar: the independent
// differentiation oracle for the jet and composition tests.

#include <cstddef>
#include <vector>

namespace testsupport {

template <typename T>
class Poly {
public:
    Poly() : c_{T(0)} {}
    explicit Poly(std::vector<T> coeffs) : c_(std::move(coeffs)) {
        if (c_.empty()) c_.push_back(T(0));
    }
    static Poly constant(T v) { return Poly(std::vector<T>{v}); }
    static Poly x() { return Poly(std::vector<T>{T(0), T(1)}); }

    std::size_t degree() const { return c_.size() - 1; }
    T coeff(std::size_t i) const { return i < c_.size() ? c_[i] : T(0); }

    friend Poly operator+(const Poly& a, const Poly& b) {
        std::vector<T> c(std::max(a.c_.size(), b.c_.size()), T(0));
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.coeff(i) + b.coeff(i);
        return Poly(std::move(c));
    }
    friend Poly operator-(const Poly& a, const Poly& b) {
        std::vector<T> c(std::max(a.c_.size(), b.c_.size()), T(0));
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.coeff(i) - b.coeff(i);
        return Poly(std::move(c));
    }
    friend Poly operator*(const Poly& a, const Poly& b) {
        std::vector<T> c(a.c_.size() + b.c_.size() - 1, T(0));
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] = c[i + j] + a.c_[i] * b.c_[j];
        return Poly(std::move(c));
    }

    Poly derivative() const {
        if (c_.size() == 1) return Poly();
        std::vector<T> c(c_.size() - 1, T(0));
        for (std::size_t i = 1; i < c_.size(); ++i) c[i - 1] = c_[i] * T(static_cast<long long>(i));
        return Poly(std::move(c));
    }

    T eval(const T& x) const {
        T acc = T(0);
        for (std::size_t i = c_.size(); i-- > 0;) acc = acc * x + c_[i];
        return acc;
    }

    /// this(inner(x)) by Horner in polynomial arithmetic.
    Poly compose(const Poly& inner) const {
        Poly acc = Poly::constant(c_.back());
        for (std::size_t i = c_.size() - 1; i-- > 0;)
            acc = acc * inner + Poly::constant(c_[i]);
        return acc;
    }

    /// n-th derivative evaluated at x.
    T derivative_at(const T& x, int n) const {
        Poly p = *this;
        for (int i = 0; i < n; ++i) p = p.derivative();
        return p.eval(x);
    }

private:
    std::vector<T> c_;
};

} // namespace testsupport
