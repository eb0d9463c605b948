// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NLHJB_OPERATOR_HPP
#define NLHJB_OPERATOR_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nlhjb/grid.hpp"
#include "nlhjb/kernel.hpp"

namespace nlhjb {

// Evaluation of the nonlocal operator
//
//   Iu(x) = int (u(x+y) - u(x) - chi_B(y) y u'(x)) K(y) dy
//
// on grid functions, in 1-D, for symmetric kernels. Symmetry lets the
// compensator drop out and the integral collapse to
//
//   Iu(x) = int_0^inf (u(x+y) + u(x-y) - 2 u(x)) K(y) dy,
//
// which is split into three pieces:
//   (a) y < r_in = 2h      second-order Taylor closure of the principal
//                          value, u''(x) int_0^{r_in} y^2 K dy;
//   (b) on-grid y          composite cell-by-cell Gauss-Legendre with the
//                          cubic interpolant of u;
//   (c) beyond the grid    analytic / semi-analytic far-field tails.
//
// Convention: (-Delta)^s u = -Iu for the fractional Laplacian kernel.

namespace quad {

inline constexpr std::array<double, 4> kGL4X = {
    -0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
    0.8611363115940526};
inline constexpr std::array<double, 4> kGL4W = {
    0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
    0.3478548451374538};

inline constexpr std::array<double, 16> kGL16X = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
    -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
    -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
    0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
    0.9894009349916499};
inline constexpr std::array<double, 16> kGL16W = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
    0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
    0.1826034150449236, 0.1894506104550685, 0.1894506104550685,
    0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
    0.0271524594117541};

template <class F>
inline double gl4(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int g = 0; g < 4; ++g) s += kGL4W[g] * f(mid + half * kGL4X[g]);
    return s * half;
}

template <class F>
inline double gl16(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int g = 0; g < 16; ++g) s += kGL16W[g] * f(mid + half * kGL16X[g]);
    return s * half;
}

}  // namespace quad

namespace detail {

/// int_0^r y^2 K(y) dy (one-sided). Closed form for the power-law kernel,
/// 16-point quadrature after desingularization otherwise.
inline double inner_second_moment(const KernelSpec& k, double r) {
    const double expo = 2.0 - 2.0 * k.s;  // integrand is y^{1-2s} * amplitude
    if (k.is_power_law()) return k.lambda_low * std::pow(r, expo) / expo;
    // substitute y = r t^{1/expo}; the image integrand is amplitude, smooth
    auto f = [&](double t) { return k.amplitude(r * std::pow(t, 1.0 / expo)); };
    return std::pow(r, expo) / expo * quad::gl16(f, 0.0, 1.0);
}

/// int_Y^inf K(y) dy for the power-law bound; exact for the default kernel.
inline double tail_kernel_mass(const KernelSpec& k, double Y) {
    return k.amplitude(Y) * std::pow(Y, -2.0 * k.s) / (2.0 * k.s);
}

/// Geometric-cell quadrature of f(y) K(y) over [Y, Ybig]. Cells grow by a
/// fixed ratio so smooth power-type integrands stay resolved at all scales.
template <class F>
inline double geometric_tail(const KernelSpec& k, F&& f, double Y, double Ybig) {
    constexpr double kGrow = 1.12;
    double s = 0.0, a = Y;
    while (a < Ybig) {
        const double b = std::min(Ybig, a * kGrow);
        s += quad::gl4([&](double y) { return f(y) * k(y); }, a, b);
        a = b;
    }
    return s;
}

/// int_Y^inf (x + sgn*y)^beta K(y) dy for y >= Y with x + sgn*Y beyond the
/// grid edge (so the argument keeps one sign). Power-law kernel only in the
/// closed-form remainder; modulated kernels use the edge amplitude there.
inline double tail_power_integral(const KernelSpec& k, double amp, double beta,
                                  double x, double sgn, double Y) {
    const double twos = 2.0 * k.s;
    if (beta >= twos)
        throw std::invalid_argument(
            "far-field growth beta >= 2s: tail integral diverges");
    const double Ybig = std::max(4.0 * Y, 64.0 * (std::abs(x) + 1.0));
    auto prof = [&](double y) { return amp * std::pow(std::abs(x + sgn * y), beta); };
    double s = geometric_tail(k, prof, Y, Ybig);
    // remainder: expand (|x + sgn y|)^beta = y^beta (1 + sgn x / y)^beta
    const double c = k.amplitude(Ybig);
    const double u = sgn * x;
    const double t0 = std::pow(Ybig, beta - twos) / (twos - beta);
    const double t1 = beta * u * std::pow(Ybig, beta - 1.0 - twos) / (1.0 + twos - beta);
    const double t2 = 0.5 * beta * (beta - 1.0) * u * u *
                      std::pow(Ybig, beta - 2.0 - twos) / (2.0 + twos - beta);
    return s + amp * c * (t0 + t1 + t2);
}

/// Average of u over one far-field period, from grid data.
inline double period_average(const GridFunction& u) {
    const double T = u.farfield().period;
    return quad::gl16([&](double x) { return u.eval(x); }, u.xlo(), u.xlo() + T) / T;
}

/// One-sided far-field tail int_Y^inf (u(x + sgn y) - u(x)) K(y) dy where
/// x + sgn Y is at the grid edge.
inline double farfield_tail(const GridFunction& u, const KernelSpec& k, double x,
                            double ux, double sgn, double Y) {
    const auto& ff = u.farfield();
    switch (ff.kind) {
    case FarFieldModel::Kind::Zero:
        return -ux * tail_kernel_mass(k, Y);
    case FarFieldModel::Kind::Constant:
        return (ff.value - ux) * tail_kernel_mass(k, Y);
    case FarFieldModel::Kind::PowerGrowth:
        return tail_power_integral(k, ff.amp, ff.beta, x, sgn, Y) -
               ux * tail_kernel_mass(k, Y);
    case FarFieldModel::Kind::Periodic: {
        const double T = ff.period;
        const double Ycut_target = std::max(2.0 * Y, 100.0);
        const auto J = static_cast<std::size_t>(
            std::ceil(std::max(1.0, (Ycut_target - Y) / T)));
        double s = 0.0;
        double a = Y;
        for (std::size_t j = 0; j < J; ++j) {
            s += quad::gl16(
                [&](double y) { return (u.eval(x + sgn * y) - ux) * k(y); }, a,
                a + T);
            a += T;
        }
        const double ubar = period_average(u);
        return s + (ubar - ux) * tail_kernel_mass(k, a);
    }
    }
    return 0.0;
}

inline void require_symmetric_power_range(const GridFunction& u,
                                          const KernelSpec& k) {
    const auto& ff = u.farfield();
    if (ff.kind == FarFieldModel::Kind::PowerGrowth && ff.beta >= 2.0 * k.s)
        throw std::invalid_argument(
            "far-field growth beta >= 2s leaves L1(omega_s)");
}

}  // namespace detail

/// Iu at node i. Requires the node to sit at least 2h from the grid edge.
inline double apply_operator(const GridFunction& u, const KernelSpec& k,
                             std::size_t i) {
    detail::require_symmetric_power_range(u, k);
    const std::size_t n = u.size();
    if (i < 2 || i + 2 >= n)
        throw std::invalid_argument("apply_operator: node too close to the edge");

    const double h = u.h();
    const double x = u.x(i);
    const double ux = u[i];

    // (a) Taylor closure of the principal value on (0, 2h)
    const double r_in = 2.0 * h;
    double acc = u.second_diff(i) * detail::inner_second_moment(k, r_in);

    // (b) symmetric on-grid sweep, cells [kh, (k+1)h] while both sides stay
    // on the grid
    const std::size_t room_plus = n - 1 - i, room_minus = i;
    const std::size_t near = std::min(room_plus, room_minus);
    const std::size_t far = std::max(room_plus, room_minus);
    for (std::size_t c = 2; c < near; ++c) {
        acc += quad::gl4(
            [&](double y) {
                return (u.interp(x + y) + u.interp(x - y) - 2.0 * ux) * k(y);
            },
            c * h, (c + 1) * h);
    }

    // (b2) one-sided strip on whichever side still has grid data
    const double sgn_far = room_plus > room_minus ? 1.0 : -1.0;
    for (std::size_t c = std::max<std::size_t>(near, 2); c < far; ++c) {
        acc += quad::gl4(
            [&](double y) { return (u.interp(x + sgn_far * y) - ux) * k(y); },
            c * h, (c + 1) * h);
    }
    // (near could be < 2 only if the node were at the edge, excluded above)

    // (c) far-field tails on each side separately
    acc += detail::farfield_tail(u, k, x, ux, +1.0, room_plus * h);
    acc += detail::farfield_tail(u, k, x, ux, -1.0, room_minus * h);
    return acc;
}

/// Vectorized Iu. Nodes closer than 2h to the edge are flagged by NaN.
struct OperatorField {
    GridFunction field;
    std::size_t first = 0;  // first and last evaluated node
    std::size_t last = 0;
};

inline OperatorField apply_operator_field(const GridFunction& u,
                                          const KernelSpec& k) {
    OperatorField out{GridFunction(u.xlo(), u.h(), u.size(), FarFieldModel::zero()),
                      2, u.size() - 3};
    for (std::size_t i = 0; i < u.size(); ++i)
        out.field[i] = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = out.first; i <= out.last; ++i)
        out.field[i] = apply_operator(u, k, i);
    return out;
}

// ---------------------------------------------------------------------------
// Assembled form: Iu restricted to grid values is linear, so for solves we
// build the dense weight matrix W with (Iu)_i = sum_j W_ij u_j. Valid for
// Zero and Constant far fields (the far-field contribution is affine in the
// node values; the Constant offset is returned separately).
// ---------------------------------------------------------------------------

struct OperatorMatrix {
    std::size_t n = 0;
    std::vector<double> w;     // row-major n x n
    std::vector<double> rhs0;  // constant far-field offset per row
    std::size_t first = 0, last = 0;

    double row_apply(std::size_t i, const std::vector<double>& u) const {
        const double* wi = w.data() + i * n;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += wi[j] * u[j];
        return s + rhs0[i];
    }
};

inline OperatorMatrix build_operator_matrix(const GridFunction& geom,
                                            const KernelSpec& k) {
    const auto& ff = geom.farfield();
    if (ff.kind == FarFieldModel::Kind::Periodic)
        throw std::invalid_argument(
            "operator matrix requires a Zero, Constant or PowerGrowth far field");
    detail::require_symmetric_power_range(geom, k);
    const std::size_t n = geom.size();
    const double h = geom.h();
    OperatorMatrix M;
    M.n = n;
    M.w.assign(n * n, 0.0);
    M.rhs0.assign(n, 0.0);
    M.first = 2;
    M.last = n - 3;

    // cubic stencil weights of the interpolant at grid offset t (in units
    // of h measured from node 0 of the stencil)
    auto stencil = [&](double xq, std::size_t& k0, std::array<double, 4>& wts) {
        const double t = (xq - geom.xlo()) / h;
        auto j = static_cast<long long>(std::floor(t));
        long long j0 = j - 1;
        if (j0 < 0) j0 = 0;
        if (j0 > static_cast<long long>(n) - 4) j0 = static_cast<long long>(n) - 4;
        const double s = t - static_cast<double>(j0);
        const double s1 = s - 1.0, s2 = s - 2.0, s3 = s - 3.0;
        wts[0] = -s1 * s2 * s3 / 6.0;
        wts[1] = s * s2 * s3 / 2.0;
        wts[2] = -s * s1 * s3 / 2.0;
        wts[3] = s * s1 * s2 / 6.0;
        k0 = static_cast<std::size_t>(j0);
    };

    for (std::size_t i = M.first; i <= M.last; ++i) {
        double* wi = M.w.data() + i * n;
        const double x = geom.x(i);

        // (a) Taylor closure: u'' spread over (i-1, i, i+1)
        const double m2 = detail::inner_second_moment(k, 2.0 * h) / (h * h);
        wi[i - 1] += m2;
        wi[i + 1] += m2;
        wi[i] -= 2.0 * m2;

        const std::size_t room_plus = n - 1 - i, room_minus = i;
        const std::size_t near = std::min(room_plus, room_minus);
        const std::size_t far = std::max(room_plus, room_minus);
        const double sgn_far = room_plus > room_minus ? 1.0 : -1.0;

        std::size_t k0;
        std::array<double, 4> wts;
        auto scatter = [&](double xq, double wk) {
            stencil(xq, k0, wts);
            for (int q = 0; q < 4; ++q) wi[k0 + q] += wk * wts[q];
            wi[i] -= wk;
        };

        for (std::size_t c = 2; c < near; ++c) {
            const double a = c * h, b = (c + 1) * h;
            const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            for (int g = 0; g < 4; ++g) {
                const double y = mid + half * quad::kGL4X[g];
                const double wk = half * quad::kGL4W[g] * k(y);
                scatter(x + y, wk);
                scatter(x - y, wk);
            }
        }
        for (std::size_t c = std::max<std::size_t>(near, 2); c < far; ++c) {
            const double a = c * h, b = (c + 1) * h;
            const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            for (int g = 0; g < 4; ++g) {
                const double y = mid + half * quad::kGL4X[g];
                const double wk = half * quad::kGL4W[g] * k(y);
                scatter(x + sgn_far * y, wk);
            }
        }

        // far-field tails: -u_i times the remaining kernel mass goes to the
        // diagonal; the model values contribute an affine offset per row
        const double Yp = room_plus * h, Ym = room_minus * h;
        wi[i] -= detail::tail_kernel_mass(k, Yp) + detail::tail_kernel_mass(k, Ym);
        switch (ff.kind) {
        case FarFieldModel::Kind::Zero: break;
        case FarFieldModel::Kind::Constant:
            M.rhs0[i] += ff.value * (detail::tail_kernel_mass(k, Yp) +
                                     detail::tail_kernel_mass(k, Ym));
            break;
        case FarFieldModel::Kind::PowerGrowth:
            M.rhs0[i] +=
                detail::tail_power_integral(k, ff.amp, ff.beta, x, +1.0, Yp) +
                detail::tail_power_integral(k, ff.amp, ff.beta, x, -1.0, Ym);
            break;
        case FarFieldModel::Kind::Periodic: break;  // excluded above
        }
    }
    return M;
}

// ---------------------------------------------------------------------------
// Tail seminorm sup_{x in E} int |u(x+y) - u(x)| / (a + |y|^{d+2s}) dy.
// The weight is bounded at the origin, so no principal-value closure is
// needed; tails reuse the far-field models.
// ---------------------------------------------------------------------------

inline double tail_seminorm_at(const GridFunction& u, const KernelSpec& k,
                               std::size_t i, double a) {
    if (!(a > 0.0)) throw std::invalid_argument("tail seminorm needs a > 0");
    detail::require_symmetric_power_range(u, k);
    const double twos = 2.0 * k.s;
    auto wgt = [&](double y) { return 1.0 / (a + std::pow(std::abs(y), 1.0 + twos)); };
    const std::size_t n = u.size();
    const double h = u.h();
    const double x = u.x(i);
    const double ux = u[i];

    double acc = 0.0;
    const std::size_t room_plus = n - 1 - i, room_minus = i;
    for (std::size_t c = 0; c < room_plus; ++c)
        acc += quad::gl4(
            [&](double y) { return std::abs(u.interp(x + y) - ux) * wgt(y); },
            c * h, (c + 1) * h);
    for (std::size_t c = 0; c < room_minus; ++c)
        acc += quad::gl4(
            [&](double y) { return std::abs(u.interp(x - y) - ux) * wgt(y); },
            c * h, (c + 1) * h);

    // far tails, geometric cells against the actual model, then a power
    // remainder bound evaluated as if the weight were |y|^{-(1+2s)}
    for (double sgn : {1.0, -1.0}) {
        const double Y = (sgn > 0.0 ? room_plus : room_minus) * h;
        const double Ybig = std::max(std::max(4.0 * Y, 64.0 * (std::abs(x) + 1.0)),
                                     4.0 * std::pow(a, 1.0 / (1.0 + twos)));
        double s = 0.0, lo = Y;
        constexpr double kGrow = 1.12;
        bool periodic = u.farfield().kind == FarFieldModel::Kind::Periodic;
        if (periodic) {
            const double T = u.farfield().period;
            const double Ycut = std::max(2.0 * Y, 100.0);
            double p = Y;
            while (p < Ycut) {
                s += quad::gl16(
                    [&](double y) { return std::abs(u.eval(x + sgn * y) - ux) * wgt(y); },
                    p, p + T);
                p += T;
            }
            double maxdev = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                maxdev = std::max(maxdev, std::abs(u[j] - ux));
            s += maxdev * std::pow(p, -twos) / twos;
            acc += s;
            continue;
        }
        while (lo < Ybig) {
            const double b = std::min(Ybig, lo * kGrow);
            s += quad::gl4(
                [&](double y) { return std::abs(u.eval(x + sgn * y) - ux) * wgt(y); },
                lo, b);
            lo = b;
        }
        const auto& ff = u.farfield();
        if (ff.kind == FarFieldModel::Kind::PowerGrowth) {
            const double beta = ff.beta;
            s += ff.amp * std::pow(Ybig, beta - twos) / (twos - beta) +
                 std::abs(ux) * std::pow(Ybig, -twos) / twos;
        } else {
            const double lev = ff.kind == FarFieldModel::Kind::Constant ? ff.value : 0.0;
            s += std::abs(lev - ux) * std::pow(Ybig, -twos) / twos;
        }
        acc += s;
    }
    return acc;
}

inline double tail_seminorm(const GridFunction& u, const KernelSpec& k,
                            const std::vector<std::size_t>& E, double a) {
    double sup = 0.0;
    for (std::size_t i : E) sup = std::max(sup, tail_seminorm_at(u, k, i, a));
    return sup;
}

/// Seminorm over all nodes with |x| <= R.
inline double tail_seminorm_ball(const GridFunction& u, const KernelSpec& k,
                                 double R, double a = 1.0) {
    std::vector<std::size_t> E;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (std::abs(u.x(i)) <= R + 1e-12) E.push_back(i);
    return tail_seminorm(u, k, E, a);
}

}  // namespace nlhjb

#endif  // NLHJB_OPERATOR_HPP
