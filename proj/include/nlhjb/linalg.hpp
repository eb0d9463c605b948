// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NLHJB_LINALG_HPP
#define NLHJB_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace nlhjb {

/// Row-major dense matrix, just enough for the quadrature stencils.
struct DenseMatrix {
    std::size_t n = 0;
    std::vector<double> a;

    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t n_) : n(n_), a(n_ * n_, 0.0) {}

    double* row(std::size_t i) { return a.data() + i * n; }
    const double* row(std::size_t i) const { return a.data() + i * n; }
    double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

/// In-place LU with partial pivoting. Factorizes A and fills the pivot
/// vector; throws on a numerically singular pivot.
inline void lu_factor(DenseMatrix& A, std::vector<std::size_t>& piv) {
    const std::size_t n = A.n;
    piv.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(A(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::abs(A(i, k));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (!(best > 0.0))
            throw std::runtime_error("lu_factor: singular matrix");
        piv[k] = p;
        if (p != k)
            for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(p, j));
        const double inv = 1.0 / A(k, k);
        const long long kk = static_cast<long long>(k);
        const long long nn = static_cast<long long>(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n - k > 256)
#endif
        for (long long i = kk + 1; i < nn; ++i) {
            const double m = A(i, k) * inv;
            A(i, k) = m;
            if (m == 0.0) continue;
            double* ri = A.row(i);
            const double* rk = A.row(k);
            for (long long j = kk + 1; j < nn; ++j) ri[j] -= m * rk[j];
        }
    }
}

inline void lu_solve(const DenseMatrix& LU, const std::vector<std::size_t>& piv,
                     std::vector<double>& b) {
    const std::size_t n = LU.n;
    // rows were swapped in full during factorization, so all pivots apply
    // to b before the substitution sweeps
    for (std::size_t k = 0; k < n; ++k)
        if (piv[k] != k) std::swap(b[k], b[piv[k]]);
    for (std::size_t k = 0; k < n; ++k) {
        const double bk = b[k];
        if (bk == 0.0) continue;
        for (std::size_t i = k + 1; i < n; ++i) b[i] -= LU(i, k) * bk;
    }
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        const double* rk = LU.row(k);
        for (std::size_t j = k + 1; j < n; ++j) s -= rk[j] * b[j];
        b[k] = s / rk[k];
    }
}

inline double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace nlhjb

#endif  // NLHJB_LINALG_HPP
