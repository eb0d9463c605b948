// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nlhjb/verify.hpp"

using namespace nlhjb;

namespace {

ProblemSpec worked_spec(std::vector<double> plan = {16.0, 24.0, 32.0}) {
    ProblemSpec spec;
    spec.order.s = 0.75;
    spec.hamiltonian = HamiltonianSpec::power_law(2.0);
    spec.source = SourceTerm::power_growth(1.0, 0.5);
    spec.kernel = KernelSpec::fractional_laplacian(1, 0.75);
    spec.truncation_plan = std::move(plan);
    spec.regime = spec.recompute_regime();
    return normalize_source(spec);
}

}  // namespace

TEST_CASE("lipschitz diagnostic on a constant profile") {
    ProblemSpec spec = worked_spec();
    GridFunction u = GridFunction::symmetric(8.0, 0.25,
                                             FarFieldModel::constant(1.0));
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = 1.0;
    const auto d = lipschitz_diagnostic(spec, u, 0.1, 2.0);
    CHECK(d.measured_lip == 0.0);
    CHECK(d.H_seminorm <= 1e-10);
    CHECK(d.Z2 >= 1.0);
    CHECK(d.A_R >= 1.0);
    // m = 2 < 2s + 1 = 2.5: the Holder regime indicator stays unset
    CHECK_FALSE(d.gamma0_set);
}

TEST_CASE("gamma0 is exposed in the supercritical regime") {
    ProblemSpec spec = worked_spec();
    spec.hamiltonian = HamiltonianSpec::power_law(3.0);  // m = 3 >= 2s+1
    GridFunction u = GridFunction::symmetric(8.0, 0.25, FarFieldModel::zero());
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = std::abs(std::sin(u.x(i)));
    const auto d = lipschitz_diagnostic(spec, u, 0.1, 2.0);
    CHECK(d.gamma0_set);
    CHECK(d.gamma0 == doctest::Approx((3.0 - 1.5) / 2.0));
    CHECK(d.gamma0 > 0.0);
    CHECK(d.gamma0 < 1.0);
    CHECK(d.holder_quotient > 0.0);
}

TEST_CASE("lipschitz probe is stable under refinement") {
    ProblemSpec spec = worked_spec({8.0, 12.0, 16.0});
    const auto rep = probe_lipschitz(spec, 0.1, 2.0, {0.25, 0.125});
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[0].h == 0.25);
    CHECK(rep.rows[1].h == 0.125);
    CHECK(rep.lip_stable);
    CHECK(rep.rows[1].diag.measured_lip <=
          1.1 * rep.rows[0].diag.measured_lip);
}

TEST_CASE("probe rejects a non-decreasing ladder") {
    ProblemSpec spec = worked_spec({8.0, 12.0});
    CHECK_THROWS_AS(probe_lipschitz(spec, 0.1, 2.0, {0.125, 0.25}),
                    std::invalid_argument);
}

TEST_CASE("uniqueness check on identical runs is exact") {
    // build a synthetic eigenpair; identical inputs must agree with zero
    // offset and zero deviation
    EigenPair a;
    a.u = GridFunction::symmetric(8.0, 0.25,
                                  FarFieldModel::power_growth(1.0, 1.25, 8.0));
    for (std::size_t i = 0; i < a.u.size(); ++i)
        a.u[i] = std::pow(std::abs(a.u.x(i)), 1.25);
    a.lambda_star = 1.7;
    const EigenPair b = a;
    const auto rep = check_uniqueness(worked_spec(), a, b);
    CHECK(rep.offset == 0.0);
    CHECK(rep.sup_deviation == 0.0);
    CHECK(rep.lambda_gap == 0.0);
    CHECK(rep.pass);

    SUBCASE("constant offsets are aligned away") {
        EigenPair c = a;
        for (std::size_t i = 0; i < c.u.size(); ++i) c.u[i] += 0.42;
        const auto rep2 = check_uniqueness(worked_spec(), c, a);
        CHECK(rep2.offset == doctest::Approx(0.42));
        CHECK(rep2.sup_deviation <= 1e-12);
        CHECK(rep2.pass);
    }
}

TEST_CASE("monotonicity check validates its inputs") {
    ProblemSpec f1 = worked_spec();
    ProblemSpec f2 = worked_spec();
    // identical sources: no strict gap anywhere
    CHECK_THROWS_AS(check_monotonicity(f1, f2, ExtractConfig::defaults()),
                    std::invalid_argument);
    // reversed order
    ProblemSpec f3 = worked_spec();
    f3.source.c0 = 0.5;
    CHECK_THROWS_AS(check_monotonicity(f1, f3, ExtractConfig::defaults()),
                    std::invalid_argument);
}

TEST_CASE("comparison fuzz row and csv emission") {
    const CheckRow row = fuzz_comparison(5, 0);
    CHECK(row.pass);
    CHECK(row.name == "comparison_fuzz");
    std::ostringstream os;
    write_check_rows(os, {row});
    CHECK(os.str().find("comparison_fuzz,pass") != std::string::npos);

    SUBCASE("reproducible for a fixed seed") {
        const CheckRow row2 = fuzz_comparison(5, 0);
        CHECK(row.metrics == row2.metrics);
    }
}
