// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

// Test-only oracles, kept independent of the implementation paths they
// check: adaptive quadrature, a brute-force fixed point for the discrete
// HJB system, a golden-section maximizer and small statistics helpers.

#ifndef NLHJB_TESTS_ORACLES_HPP
#define NLHJB_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "nlhjb/grid.hpp"
#include "nlhjb/operator.hpp"
#include "nlhjb/problem.hpp"

namespace oracles {

/// Adaptive Simpson quadrature.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol, int depth = 28) {
    struct Rec {
        static double run(const std::function<double(double)>& f, double a,
                          double b, double fa, double fm, double fb, double S,
                          double tol, int depth) {
            const double m = 0.5 * (a + b);
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const double flm = f(lm), frm = f(rm);
            const double Sl = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const double Sr = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if (depth <= 0 || std::abs(Sl + Sr - S) < 15.0 * tol)
                return Sl + Sr + (Sl + Sr - S) / 15.0;
            return run(f, a, m, fa, flm, fm, Sl, 0.5 * tol, depth - 1) +
                   run(f, m, b, fm, frm, fb, Sr, 0.5 * tol, depth - 1);
        }
    };
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double S = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return Rec::run(f, a, b, fa, fm, fb, S, tol, depth);
}

/// (-Delta)^s of an analytic profile at x, via the symmetrized integral:
/// Taylor closure on (0, delta), adaptive quadrature to R, analytic
/// zero-tail beyond (profile must vanish outside [-support, support]).
inline double frac_laplacian_of_profile(const std::function<double(double)>& u,
                                        double x, double s, double support) {
    const double c = nlhjb::normalizing_constant(1, s);
    const double delta = 1e-4;
    // centered stencils of the analytic profile
    const double e = 1e-5;
    const double upp = (u(x + e) - 2.0 * u(x) + u(x - e)) / (e * e);
    double acc = upp * c * std::pow(delta, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    auto g = [&](double y) {
        return (u(x + y) + u(x - y) - 2.0 * u(x)) * c *
               std::pow(y, -(1.0 + 2.0 * s));
    };
    const double R = support + std::abs(x) + 1.0;
    acc += adaptive_simpson(g, delta, R, 1e-11);
    // u = 0 for |x +- y| beyond the support; both sides are clear of it
    acc += -2.0 * u(x) * c * std::pow(R, -2.0 * s) / (2.0 * s);
    return -acc;
}

/// Golden-section maximizer of a concave function on [lo, hi].
template <class F>
inline double golden_argmax(F&& f, double lo, double hi, int iters = 120) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int k = 0; k < iters; ++k) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

/// Damped fixed-point iteration on the discrete HJB residual, independent
/// of the policy-iteration solver: W <- W - tau * residual(W) with the
/// Godunov Hamiltonian evaluated directly. Converges on monotone schemes
/// for small tau; iterated to machine stationarity.
inline nlhjb::GridFunction brute_force_dirichlet(const nlhjb::ProblemSpec& spec,
                                                 double alpha, double radius,
                                                 double h, double tau,
                                                 int max_iters = 400000) {
    using namespace nlhjb;
    const auto half = static_cast<std::size_t>(std::llround(radius / h));
    GridFunction w(-(radius + 2.0 * h), h, 2 * half + 5, FarFieldModel::zero());
    const OperatorMatrix I_h = build_operator_matrix(w, spec.kernel);
    std::vector<std::size_t> interior;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (std::abs(w.x(i)) < radius - 1e-12) interior.push_back(i);
    std::vector<double> r(w.size(), 0.0);
    double last = 1e300;
    for (int it = 0; it < max_iters; ++it) {
        double sup = 0.0;
        for (std::size_t i : interior) {
            double Iu = I_h.rhs0[i];
            const double* wi = I_h.w.data() + i * I_h.n;
            for (std::size_t j = 0; j < w.size(); ++j) Iu += wi[j] * w[j];
            const double dm = (w[i] - w[i - 1]) / h;
            const double dp = (w[i + 1] - w[i]) / h;
            const double pm = std::max(dm, 0.0), pp = std::min(dp, 0.0);
            const double H =
                std::max(eval_H(spec, w.x(i), pm), eval_H(spec, w.x(i), pp));
            r[i] = alpha * w[i] - Iu + H - spec.source.eval(w.x(i));
            sup = std::max(sup, std::abs(r[i]));
        }
        for (std::size_t i : interior) w[i] -= tau * r[i];
        if (sup < 1e-13) break;
        if (it % 5000 == 4999) {
            if (sup > last * (1.0 - 1e-9)) break;  // stationary
            last = sup;
        }
    }
    return w;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        const double fa = static_cast<double>(i) / a.size();
        const double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

/// Symmetric trimming: drop the lowest and highest q-fraction.
inline double trimmed_mean(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const auto cut = static_cast<std::size_t>(q * v.size());
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = cut; i + cut < v.size(); ++i) {
        s += v[i];
        ++n;
    }
    return n ? s / n : 0.0;
}

}  // namespace oracles

#endif  // NLHJB_TESTS_ORACLES_HPP
