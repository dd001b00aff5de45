#pragma once

#include <cmath>
#include <string>
#include <type_traits>
#include <vector>

#include "ckcomp/errors.hpp"
#include "ckcomp/jet.hpp"

namespace ckcomp {

/// A multiplicity vector (lambda_1, ..., lambda_n) with
/// sum(lambda_i) == l and sum(i*lambda_i) == n: the index object of the
/// Faa di Bruno expansion (one per partition of n into exactly l parts).
struct Partition {
    std::vector<int> multiplicities; // lambda_1..lambda_n
    int n = 0;
    int l = 0;
};

/// Number of partitions of n into exactly l parts (the size of q(n, l)),
/// by the standard recurrence p(n, l) = p(n-1, l-1) + p(n-l, l).
inline long long partition_count(int n, int l) {
    if (l < 1 || l > n) return 0;
    std::vector<std::vector<long long>> p(static_cast<std::size_t>(n) + 1,
                                          std::vector<long long>(static_cast<std::size_t>(l) + 1, 0));
    p[0][0] = 1;
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= l && j <= i; ++j)
            p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                p[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] +
                p[static_cast<std::size_t>(i - j)][static_cast<std::size_t>(j)];
    return p[static_cast<std::size_t>(n)][static_cast<std::size_t>(l)];
}

/// All multiplicity vectors of q(n, l), each exactly once, in
/// lexicographic order of the vector. Bounded recursive descent over the
/// slots lambda_1..lambda_n with weight/count feasibility pruning.
inline std::vector<Partition> enumerate_partitions(int n, int l) {
    if (l < 1 || l > n)
        throw StructureError("enumerate_partitions requires 1 <= l <= n, got n=" +
                             std::to_string(n) + " l=" + std::to_string(l));
    std::vector<Partition> out;
    out.reserve(static_cast<std::size_t>(partition_count(n, l)));
    std::vector<int> lambda(static_cast<std::size_t>(n), 0);
    auto rec = [&](auto&& self, int i, int weight_left, int parts_left) -> void {
        if (i > n) {
            if (weight_left == 0 && parts_left == 0)
                out.push_back(Partition{lambda, n, l});
            return;
        }
        int max_li = weight_left / i;
        if (max_li > parts_left) max_li = parts_left;
        for (int li = 0; li <= max_li; ++li) {
            const int w = weight_left - i * li;
            const int p = parts_left - li;
            // remaining parts have sizes in [i+1, n]
            if (w < p * (i + 1) || w > p * n) continue;
            lambda[static_cast<std::size_t>(i - 1)] = li;
            self(self, i + 1, w, p);
            lambda[static_cast<std::size_t>(i - 1)] = 0;
        }
    };
    rec(rec, 1, n, l);
    return out;
}

/// Raw derivative sequence of one scalar function at one point:
/// d(i) == f^(i), i = 1..size. The carrier consumed by the Bell sums and
/// the criteria matrices.
template <typename T>
class DerivativeTable {
public:
    DerivativeTable() = default;
    explicit DerivativeTable(std::vector<T> raw) : raw_(std::move(raw)) {}

    /// Extracts f^(1)..f^(order) from a jet.
    static DerivativeTable from_jet(const Jet<T>& j) {
        std::vector<T> raw;
        raw.reserve(static_cast<std::size_t>(j.order()));
        for (int i = 1; i <= j.order(); ++i) raw.push_back(j.derivative(i));
        return DerivativeTable(std::move(raw));
    }

    int size() const { return static_cast<int>(raw_.size()); }

    /// f^(i), 1-indexed.
    T d(int i) const {
        if (i < 1 || i > size())
            throw StructureError("derivative table index " + std::to_string(i) +
                                 " out of range 1.." + std::to_string(size()));
        return raw_[static_cast<std::size_t>(i - 1)];
    }

    const std::vector<T>& raw() const { return raw_; }

private:
    std::vector<T> raw_;
};

namespace detail {
template <typename T>
T factorial(int n) {
    T f = T(1);
    for (int i = 2; i <= n; ++i) f = f * T(i);
    return f;
}
} // namespace detail

/// The partial Bell sum
///   sum over q(n,l) of  n! * prod_i  f^(i)^lambda_i / (lambda_i! (i!)^lambda_i),
/// the building block of every criteria matrix entry.
template <typename T>
T bell_sum(const DerivativeTable<T>& table, int n, int l) {
    if (n > table.size())
        throw StructureError("bell_sum needs derivatives up to order " +
                             std::to_string(n) + ", table holds " +
                             std::to_string(table.size()));
    T total = T(0);
    for (const Partition& p : enumerate_partitions(n, l)) {
        T term = detail::factorial<T>(n);
        for (int i = 1; i <= n; ++i) {
            const int li = p.multiplicities[static_cast<std::size_t>(i - 1)];
            if (li == 0) continue;
            T pw = T(1);
            for (int rep = 0; rep < li; ++rep) pw = pw * table.d(i);
            term = term * pw;
            T denom = detail::factorial<T>(li);
            T ifact = detail::factorial<T>(i);
            for (int rep = 0; rep < li; ++rep) denom = denom * ifact;
            term = term / denom;
        }
        total = total + term;
    }
    return total;
}

/// n-th derivative of the composition outer(inner(.)) at the base point:
/// sum_l outer^(l) * bell_sum(inner, n, l). `outer` holds derivatives at
/// inner's function value, `inner` at the evaluation point.
template <typename T>
T compose_derivative(const DerivativeTable<T>& outer,
                     const DerivativeTable<T>& inner, int n) {
    if (n < 1 || n > outer.size() || n > inner.size())
        throw StructureError("compose_derivative: order " + std::to_string(n) +
                             " exceeds a table length");
    T total = T(0);
    for (int l = 1; l <= n; ++l)
        total = total + outer.d(l) * bell_sum(inner, n, l);
    return total;
}

/// Derivatives h^(1)..h^(n) of the inverse function h = phi^{-1} at
/// s = phi(t), given phi^(1)..phi^(n) at t. Solves the triangular system
///   sum_i h^(i) * bell_sum(phi, m, i) = delta_{m,1},  m = 1..n
/// by forward substitution; the diagonal entries are (phi')^m.
template <typename T>
DerivativeTable<T> inverse_jets(const DerivativeTable<T>& phi, int n) {
    if (n < 1 || n > phi.size())
        throw StructureError("inverse_jets: order out of range");
    const T d1 = phi.d(1);
    // guards only literal zero / underflow; a small phi' is the expected
    // behavior near the boundary and the caller's business
    bool singular;
    if constexpr (std::is_floating_point_v<T>)
        singular = std::abs(d1) < T(1e-300);
    else
        singular = d1 == T(0);
    if (singular)
        throw SingularityError("inverse_jets: phi' vanishes (value " +
                               [&] {
                                   if constexpr (std::is_floating_point_v<T>)
                                       return std::to_string(d1);
                                   else
                                       return std::string("0");
                               }() + ")");
    std::vector<T> h(static_cast<std::size_t>(n), T(0));
    h[0] = T(1) / d1;
    T diag = d1;
    for (int m = 2; m <= n; ++m) {
        diag = diag * d1; // (phi')^m
        T acc = T(0);
        for (int i = 1; i < m; ++i)
            acc = acc + h[static_cast<std::size_t>(i - 1)] * bell_sum(phi, m, i);
        h[static_cast<std::size_t>(m - 1)] = -acc / diag;
    }
    return DerivativeTable<T>(std::move(h));
}

} // namespace ckcomp
