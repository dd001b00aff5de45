#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ckcomp/errors.hpp"

namespace ckcomp {

/// Dense row-major matrix of doubles; sized for the small systems this
/// library solves (criteria matrices, Newton steps, monodromy blocks).
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, double fill = 0.0)
        : r_(rows), c_(cols), a_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {}

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return r_; }
    int cols() const { return c_; }

    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * static_cast<std::size_t>(c_) + static_cast<std::size_t>(j)]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * static_cast<std::size_t>(c_) + static_cast<std::size_t>(j)]; }

    const std::vector<double>& data() const { return a_; }

private:
    int r_ = 0, c_ = 0;
    std::vector<double> a_;
};

inline std::vector<double> mat_vec(const Mat& m, const std::vector<double>& x) {
    std::vector<double> y(static_cast<std::size_t>(m.rows()), 0.0);
    for (int i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < m.cols(); ++j) acc += m(i, j) * x[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

/// Determinant by LU with partial pivoting. Used as the generic route for
/// the replaced-column and bordered matrices in cross-checks.
inline double det_dense(Mat m) {
    if (m.rows() != m.cols()) throw StructureError("det of non-square matrix");
    const int n = m.rows();
    double det = 1.0;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
        if (m(piv, k) == 0.0) return 0.0;
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(m(piv, j), m(k, j));
            det = -det;
        }
        det *= m(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double f = m(i, k) / m(k, k);
            for (int j = k; j < n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    return det;
}

/// Solves m x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> lu_solve(Mat m, std::vector<double> b) {
    if (m.rows() != m.cols() || m.rows() != static_cast<int>(b.size()))
        throw StructureError("lu_solve: dimension mismatch");
    const int n = m.rows();
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
        if (m(piv, k) == 0.0)
            throw SingularityError("lu_solve: singular matrix (pivot " +
                                   std::to_string(k) + ")");
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(m(piv, j), m(k, j));
            std::swap(b[static_cast<std::size_t>(piv)], b[static_cast<std::size_t>(k)]);
        }
        for (int i = k + 1; i < n; ++i) {
            const double f = m(i, k) / m(k, k);
            for (int j = k; j < n; ++j) m(i, j) -= f * m(k, j);
            b[static_cast<std::size_t>(i)] -= f * b[static_cast<std::size_t>(k)];
        }
    }
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double acc = b[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j) acc -= m(i, j) * x[static_cast<std::size_t>(j)];
        x[static_cast<std::size_t>(i)] = acc / m(i, i);
    }
    return x;
}

/// Forward substitution on a lower-triangular system; the workhorse of
/// the criteria determinant ratios (Cramer components without forming
/// underflow-prone determinant products).
inline std::vector<double> solve_lower_triangular(const Mat& m, const std::vector<double>& b) {
    if (m.rows() != m.cols() || m.rows() != static_cast<int>(b.size()))
        throw StructureError("solve_lower_triangular: dimension mismatch");
    const int n = m.rows();
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        if (m(i, i) == 0.0)
            throw SingularityError("solve_lower_triangular: zero diagonal at row " +
                                   std::to_string(i));
        double acc = b[static_cast<std::size_t>(i)];
        for (int j = 0; j < i; ++j) acc -= m(i, j) * x[static_cast<std::size_t>(j)];
        x[static_cast<std::size_t>(i)] = acc / m(i, i);
    }
    return x;
}

} // namespace ckcomp
