// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "nlhjb/grid.hpp"
#include "nlhjb/io.hpp"

using namespace nlhjb;

TEST_CASE("cubic interpolation is exact on cubics") {
    GridFunction u = GridFunction::symmetric(4.0, 0.25, FarFieldModel::zero());
    auto cubic = [](double x) { return 2.0 + 0.5 * x - 3.0 * x * x + 0.25 * x * x * x; };
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = cubic(u.x(i));
    for (double x = -3.9; x < 3.9; x += 0.0371)
        CHECK(u.interp(x) == doctest::Approx(cubic(x)).epsilon(1e-12));
}

TEST_CASE("far field evaluation per model") {
    GridFunction u = GridFunction::symmetric(2.0, 0.5, FarFieldModel::constant(7.0));
    CHECK(u.eval(5.0) == 7.0);
    u.farfield() = FarFieldModel::power_growth(2.0, 1.2, 2.0);
    CHECK(u.eval(-4.0) == doctest::Approx(2.0 * std::pow(4.0, 1.2)));

    GridFunction p = GridFunction::symmetric(2.0, 0.125,
                                             FarFieldModel::periodic(1.0));
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = std::sin(2.0 * M_PI * p.x(i));
    CHECK(p.eval(3.25) == doctest::Approx(std::sin(2.0 * M_PI * 0.25)).epsilon(1e-9));
    CHECK(std::abs(p.eval(-11.5) - std::sin(-2.0 * M_PI * 0.5)) <= 1e-9);
}

TEST_CASE("grid csv round trip is bit exact") {
    GridFunction u = GridFunction::symmetric(3.0, 0.1875,
                                             FarFieldModel::power_growth(
                                                 0.123456789012345678, 1.25, 3.0));
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uni(-10.0, 10.0);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = uni(rng) * std::exp(uni(rng));

    std::ostringstream os;
    write_grid_function(os, u);
    std::istringstream is(os.str());
    const GridFunction v = read_grid_function(is);

    REQUIRE(v.size() == u.size());
    CHECK(v.h() == u.h());
    CHECK(v.xlo() == u.xlo());
    CHECK(v.farfield().kind == u.farfield().kind);
    CHECK(v.farfield().amp == u.farfield().amp);
    CHECK(v.farfield().beta == u.farfield().beta);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(v[i] == u[i]);

    // a second serialization is byte-identical
    std::ostringstream os2;
    write_grid_function(os2, v);
    CHECK(os.str() == os2.str());
}

TEST_CASE("config parsing") {
    std::istringstream is(
        "# worked instance\n"
        "order.s = 0.75\n"
        "hamiltonian.m = 2.0\n"
        "source.kind = power_growth\n"
        "source.c0 = 1.0\n"
        "source.gamma = 0.5\n"
        "truncation.radii = 24, 36, 48\n"
        "seed = 12345\n"
        "grid.h = 0.125\n");
    const RunConfig rc = parse_config(is);
    CHECK(rc.spec.order.s == 0.75);
    CHECK(rc.spec.hamiltonian.m == 2.0);
    CHECK(rc.spec.source.gamma == 0.5);
    REQUIRE(rc.spec.truncation_plan.size() == 3);
    CHECK(rc.spec.truncation_plan[2] == 48.0);
    CHECK(rc.seed == 12345);
    CHECK(rc.spec.regime == RegimeFlag::Existence);
}

TEST_CASE("config missing keys throw") {
    std::istringstream is("order.s = 0.75\n");
    CHECK_THROWS_AS(parse_config(is), std::invalid_argument);
}
