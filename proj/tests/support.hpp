#pragma once

// Independent reference implementations used as test oracles.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "imd2/rng.hpp"
#include "imd2/signal.hpp"

namespace oracle {

using imd2::RowMatrix;
using imd2::Vector;

/// Gauss-Jordan elimination with partial pivoting on a dense copy.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (a[piv][col] == 0.0) throw std::runtime_error("singular");
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
    return b;
}

/// Solves (A^T A + lambda I) x = A^T b by forming the normal equations with plain loops.
inline std::vector<double> normal_equations_solve(const RowMatrix& a, const std::vector<double>& b, double lambda) {
    const auto m = static_cast<std::size_t>(a.rows());
    const auto n = static_cast<std::size_t>(a.cols());
    std::vector<std::vector<double>> g(n, std::vector<double>(n, 0.0));
    std::vector<double> r(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < m; ++k) g[i][j] += a(k, i) * a(k, j);
        g[i][i] += lambda;
        for (std::size_t k = 0; k < m; ++k) r[i] += a(k, i) * b[k];
    }
    return gauss_solve(g, r);
}

/// Neumaier-compensated sum.
inline double kahan_sum(const std::vector<double>& v) {
    double s = 0.0, c = 0.0;
    for (double x : v) {
        const double t = s + x;
        c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
        s = t;
    }
    return s + c;
}

/// Central-difference gradient.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vector xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        g(i) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

/// max_i |a_i - b_i| / max(|b|_inf, floor)
inline double rel_err(const Vector& a, const Vector& b, double floor = 1e-8) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), floor);
}

inline RowMatrix random_matrix(imd2::Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0,
                               double hi = 1.0) {
    RowMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
    return m;
}

inline Vector random_vector(imd2::Rng& rng, Eigen::Index n, double lo = -1.0, double hi = 1.0) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
    return v;
}

inline std::vector<imd2::cdouble> random_complex(imd2::Rng& rng, std::size_t n) {
    std::vector<imd2::cdouble> out(n);
    for (auto& z : out) z = {rng.normal(), rng.normal()};
    return out;
}

} // namespace oracle
