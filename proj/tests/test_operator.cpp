// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nlhjb/kernel.hpp"
#include "nlhjb/operator.hpp"
#include "oracles.hpp"

using namespace nlhjb;

TEST_CASE("normalizing constant") {
    SUBCASE("d=1, s=1/2 equals 1/pi") {
        // Gamma(-1/2) = -2 sqrt(pi), so the closed form collapses
        CHECK(normalizing_constant(1, 0.5) ==
              doctest::Approx(1.0 / M_PI).epsilon(1e-12));
    }
    SUBCASE("d=1, s=0.75") {
        CHECK(normalizing_constant(1, 0.75) ==
              doctest::Approx(0.2992067328).epsilon(1e-6));
    }
    SUBCASE("positivity across orders and dimensions") {
        for (int d : {1, 2, 3})
            for (double s : {0.1, 0.3, 0.51, 0.75, 0.9, 0.99})
                CHECK(normalizing_constant(d, s) > 0.0);
    }
    SUBCASE("degenerate orders rejected") {
        CHECK_THROWS_AS(normalizing_constant(1, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(normalizing_constant(1, 1.0), std::invalid_argument);
    }
}

TEST_CASE("operator kills constants") {
    auto ker = KernelSpec::fractional_laplacian(1, 0.7);
    GridFunction u = GridFunction::symmetric(4.0, 0.0625,
                                             FarFieldModel::constant(3.5));
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = 3.5;
    for (std::size_t i = 2; i + 2 < u.size(); ++i)
        CHECK(std::abs(apply_operator(u, ker, i)) <= 1e-13);
}

TEST_CASE("operator annihilates affine functions") {
    // the odd part cancels exactly at the grid center for a symmetric
    // kernel; the constant far field represents the affine function
    // exactly at that evaluation point
    auto ker = KernelSpec::fractional_laplacian(1, 0.75);
    for (double a : {0.5, -2.0}) {
        for (double center : {0.0, 1.5}) {
            const double b = 0.7;
            GridFunction u(center - 4.0, 0.0625, 129, FarFieldModel::constant(b));
            for (std::size_t i = 0; i < u.size(); ++i)
                u[i] = a * (u.x(i) - center) + b;
            const std::size_t mid = u.index_of(center);
            CHECK(std::abs(apply_operator(u, ker, mid)) <=
                  1e-8 * (1.0 + std::abs(a)));
        }
    }
}

TEST_CASE("Fourier symbol of the fractional Laplacian on cosines") {
    // trimmed version of the acceptance oracle
    for (double s : {0.6, 0.9}) {
        const double k = 2.0;
        const double L = 16.0 * M_PI;
        const std::size_t N = 2048;
        GridFunction u(-L, 2.0 * L / N, N + 1,
                       FarFieldModel::periodic(2.0 * M_PI / k));
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::cos(k * u.x(i));
        auto ker = KernelSpec::fractional_laplacian(1, s);
        const double scale = std::pow(k, 2.0 * s);
        double maxrel = 0.0;
        for (std::size_t i = 2; i + 2 < u.size(); ++i) {
            if (std::abs(u.x(i)) > 0.5 * L) continue;
            const double got = -apply_operator(u, ker, i);
            maxrel = std::max(maxrel,
                              std::abs(got - scale * std::cos(k * u.x(i))) / scale);
        }
        CHECK(maxrel <= 1e-3);
    }
}

TEST_CASE("profile constant against the adaptive-quadrature oracle") {
    const double s = 0.75;
    auto profile = [s](double x) {
        return x * x < 1.0 ? std::pow(1.0 - x * x, s) : 0.0;
    };
    const double closed_form = std::pow(2.0, 2.0 * s) * std::tgamma(0.5 + s) *
                               std::tgamma(1.0 + s) / std::tgamma(0.5);
    // oracle at several interior points agrees with the closed form
    for (double x : {0.0, -0.3, 0.45, 0.7}) {
        const double o = oracles::frac_laplacian_of_profile(profile, x, s, 1.0);
        CHECK(o == doctest::Approx(closed_form).epsilon(2e-6));
    }
    // grid operator agrees to the contract tolerance
    const double L = 8.0;
    const std::size_t N = 2048;
    GridFunction u(-L, 2.0 * L / N, N + 1, FarFieldModel::zero());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = profile(u.x(i));
    auto ker = KernelSpec::fractional_laplacian(1, s);
    for (double xq : {0.0, -0.4, 0.6}) {
        const auto i = static_cast<std::size_t>(
            std::llround((xq - u.xlo()) / u.h()));
        const double got = -apply_operator(u, ker, i);
        CHECK(got == doctest::Approx(closed_form).epsilon(1e-2));
    }
}

TEST_CASE("linearity of the field application") {
    auto ker = KernelSpec::fractional_laplacian(1, 0.8);
    GridFunction u = GridFunction::symmetric(4.0, 0.125, FarFieldModel::zero());
    GridFunction v = u, w = u;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double a = 1.7, b = -0.6;
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = uni(rng);
        v[i] = uni(rng);
        w[i] = a * u[i] + b * v[i];
    }
    const auto fu = apply_operator_field(u, ker);
    const auto fv = apply_operator_field(v, ker);
    const auto fw = apply_operator_field(w, ker);
    for (std::size_t i = fw.first; i <= fw.last; ++i) {
        const double want = a * fu.field[i] + b * fv.field[i];
        CHECK(std::abs(fw.field[i] - want) <=
              1e-10 * (1.0 + std::abs(want)));
    }
}

TEST_CASE("grid refinement improves the symbol at first order or better") {
    const double s = 0.75, k = 1.0;
    auto ker = KernelSpec::fractional_laplacian(1, s);
    auto sweep = [&](std::size_t N) {
        const double L = 8.0 * M_PI;
        GridFunction u(-L, 2.0 * L / N, N + 1,
                       FarFieldModel::periodic(2.0 * M_PI / k));
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::cos(k * u.x(i));
        double maxerr = 0.0;
        for (std::size_t i = 2; i + 2 < u.size(); ++i) {
            if (std::abs(u.x(i)) > 0.5 * L) continue;
            const double got = -apply_operator(u, ker, i);
            maxerr = std::max(maxerr, std::abs(got - std::cos(k * u.x(i))));
        }
        return maxerr;
    };
    const double e1 = sweep(512);
    const double e2 = sweep(1024);
    CHECK(e1 / e2 >= 3.0);
}

TEST_CASE("translation equivariance on periodic input") {
    const double s = 0.7, k = 1.0;
    auto ker = KernelSpec::fractional_laplacian(1, s);
    const double L = 8.0 * M_PI;
    const std::size_t N = 1024;
    const double h = 2.0 * L / N;
    const double tau = 16.0 * h;
    GridFunction u(-L, h, N + 1, FarFieldModel::periodic(2.0 * M_PI));
    GridFunction v = u;
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = std::cos(k * u.x(i));
        v[i] = std::cos(k * (v.x(i) - tau));
    }
    for (double xq : {-2.0, 0.0, 3.0}) {
        const auto i = static_cast<std::size_t>(
            std::llround((xq - u.xlo()) / u.h()));
        const auto j = i + 16;  // tau = 16 h
        const double a = apply_operator(u, ker, i);
        const double b = apply_operator(v, ker, j);
        CHECK(std::abs(a - b) <= 1e-6);
    }
}

TEST_CASE("maximum principle direction at a strict interior maximum") {
    auto ker = KernelSpec::fractional_laplacian(1, 0.75);
    GridFunction u = GridFunction::symmetric(6.0, 0.125, FarFieldModel::zero());
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = std::exp(-u.x(i) * u.x(i));
    CHECK(apply_operator(u, ker, u.index_of(0.0)) < 0.0);
}

TEST_CASE("bounded kernels respect the ellipticity envelope") {
    auto mod = [](double y) { return 1.0 + 0.5 * std::cos(y); };
    auto ker = KernelSpec::bounded(1, 0.75, 0.5, 1.5, mod);
    for (double y : {0.1, 0.5, 2.0, 17.0}) {
        const double pl = std::pow(std::abs(y), -(1.0 + 1.5));
        CHECK(ker(y) >= 0.5 * pl);
        CHECK(ker(y) <= 1.5 * pl);
        CHECK(ker(y) == ker(-y));
    }
    // operator still kills constants with a modulated kernel
    GridFunction u = GridFunction::symmetric(4.0, 0.125,
                                             FarFieldModel::constant(2.0));
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = 2.0;
    CHECK(std::abs(apply_operator(u, ker, u.index_of(0.0))) <= 1e-10);
}

TEST_CASE("diverging far-field growth is rejected") {
    auto ker = KernelSpec::fractional_laplacian(1, 0.6);
    GridFunction u = GridFunction::symmetric(
        4.0, 0.125, FarFieldModel::power_growth(1.0, 1.3, 4.0));
    // beta = 1.3 >= 2s = 1.2 leaves L1(omega_s)
    CHECK_THROWS_AS(apply_operator(u, ker, u.index_of(0.0)),
                    std::invalid_argument);
}

TEST_CASE("operator matrix equals direct application") {
    auto ker = KernelSpec::fractional_laplacian(1, 0.75);
    GridFunction u = GridFunction::symmetric(4.0, 0.125, FarFieldModel::zero());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = u.x(i);
        u[i] = std::exp(-x * x) * (1.0 + 0.3 * std::sin(3.0 * x));
    }
    const auto M = build_operator_matrix(u, ker);
    for (std::size_t i = M.first; i <= M.last; ++i)
        CHECK(M.row_apply(i, u.values()) ==
              doctest::Approx(apply_operator(u, ker, i)).epsilon(1e-10));
}

TEST_CASE("discrete operator is degenerate elliptic") {
    // increasing any off-diagonal neighbor never decreases Iu at a node,
    // checked both through the assembled weights and by finite perturbation
    for (double s : {0.6, 0.75, 0.9}) {
        auto ker = KernelSpec::fractional_laplacian(1, s);
        auto geom = GridFunction::symmetric(6.0, 0.125, FarFieldModel::zero());
        const auto M = build_operator_matrix(geom, ker);
        double worst = 0.0;
        for (std::size_t i = M.first; i <= M.last; ++i)
            for (std::size_t j = 0; j < M.n; ++j)
                if (j != i) worst = std::min(worst, M.w[i * M.n + j]);
        CHECK(worst >= -1e-14);
    }
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    auto ker = KernelSpec::fractional_laplacian(1, 0.75);
    GridFunction u = GridFunction::symmetric(6.0, 0.25, FarFieldModel::zero());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = uni(rng);
    for (int t = 0; t < 40; ++t) {
        const auto i = 2 + static_cast<std::size_t>((u.size() - 4) * 0.5 *
                                                    (uni(rng) + 1.0));
        auto j = 2 + static_cast<std::size_t>((u.size() - 4) * 0.5 *
                                              (uni(rng) + 1.0));
        if (j == i) j = (j + 1 < u.size() - 2) ? j + 1 : j - 1;
        const double before = apply_operator(u, ker, i);
        GridFunction v = u;
        v[j] += 0.37;
        const double after = apply_operator(v, ker, i);
        CHECK(after >= before - 1e-12);
    }
}

TEST_CASE("tail seminorm properties") {
    auto ker = KernelSpec::fractional_laplacian(1, 0.75);
    SUBCASE("constant function gives zero") {
        GridFunction u = GridFunction::symmetric(4.0, 0.25,
                                                 FarFieldModel::constant(1.0));
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = 1.0;
        CHECK(tail_seminorm_ball(u, ker, 1.0, 1.0) <= 1e-12);
    }
    GridFunction u = GridFunction::symmetric(6.0, 0.125, FarFieldModel::zero());
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = std::exp(-0.5 * u.x(i) * u.x(i)) * (1.0 + 0.2 * u.x(i));
    SUBCASE("decreasing in a") {
        const double h1 = tail_seminorm_ball(u, ker, 2.0, 1.0);
        const double h2 = tail_seminorm_ball(u, ker, 2.0, 2.0);
        CHECK(h2 <= h1);
    }
    SUBCASE("a < 1 scaling bound") {
        const double ha = tail_seminorm_ball(u, ker, 2.0, 0.25);
        const double h1 = tail_seminorm_ball(u, ker, 2.0, 1.0);
        CHECK(ha <= h1 / 0.25 + 1e-9);
    }
}
