// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "nlhjb/levy.hpp"
#include "nlhjb/problem.hpp"
#include "oracles.hpp"

using namespace nlhjb;

namespace {

ProblemSpec worked_spec() {
    ProblemSpec spec;
    spec.order.s = 0.75;
    spec.hamiltonian = HamiltonianSpec::power_law(2.0);
    spec.source = SourceTerm::power_growth(1.0, 0.5);
    spec.kernel = KernelSpec::fractional_laplacian(1, 0.75);
    spec.truncation_plan = {16.0};
    return spec;
}

}  // namespace

TEST_CASE("stable sampler rejects bad parameters") {
    SplitMix64 rng(1);
    double out[2];
    CHECK_THROWS_AS(sample_stable_increment(0.4, 0.1, 1, rng, out),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_stable_increment(0.75, 0.1, 3, rng, out),
                    std::invalid_argument);
}

TEST_CASE("empirical characteristic function matches the symbol") {
    // E cos(xi L_dt) = exp(-dt |xi|^{2s}), a few (s, xi) pairs at dt = 1
    for (double s : {0.6, 0.75, 0.9}) {
        for (double xi : {0.5, 2.0}) {
            SplitMix64 rng(42);
            const std::size_t n = 200000;
            double sum = 0.0, sum2 = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double c = std::cos(xi * sample_stable_increment_1d(s, 1.0, rng));
                sum += c;
                sum2 += c * c;
            }
            const double mean = sum / n;
            const double se = std::sqrt((sum2 / n - mean * mean) / n);
            const double want = std::exp(-std::pow(xi, 2.0 * s));
            CHECK(std::abs(mean - want) <= 4.0 * se);
        }
    }
}

TEST_CASE("two-dimensional increments carry the rotational symbol") {
    SplitMix64 rng(43);
    const double s = 0.75, dt = 0.7;
    const double xi[2] = {0.8, 0.6};  // |xi| = 1
    const std::size_t n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double L[2];
        sample_stable_increment(s, dt, 2, rng, L);
        const double c = std::cos(xi[0] * L[0] + xi[1] * L[1]);
        sum += c;
        sum2 += c * c;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - std::exp(-dt)) <= 4.0 * se);
}

TEST_CASE("increment symmetry via the trimmed mean") {
    SplitMix64 rng(7);
    std::vector<double> xs(400000);
    for (auto& v : xs) v = sample_stable_increment_1d(0.75, 0.5, rng);
    const double tm = oracles::trimmed_mean(xs, 0.001);
    // trimmed variance scale is O(1); the trimmed mean should be near zero
    CHECK(std::abs(tm) <= 0.02);
}

TEST_CASE("self-similarity: doubling dt scales by 2^{1/(2s)}") {
    const double s = 0.75;
    SplitMix64 rng(11);
    const std::size_t n = 60000;
    std::vector<double> a(n), b(n);
    for (std::size_t k = 0; k < n; ++k) {
        a[k] = sample_stable_increment_1d(s, 2.0 * 0.3, rng);
        b[k] = std::pow(2.0, 1.0 / (2.0 * s)) *
               sample_stable_increment_1d(s, 0.3, rng);
    }
    const double d = oracles::ks_statistic(a, b);
    // 1% two-sample critical value: 1.628 sqrt((n+m)/(nm))
    const double crit = 1.628 * std::sqrt(2.0 / n);
    CHECK(d < crit);
}

TEST_CASE("paths and estimates") {
    ProblemSpec spec = worked_spec();
    SUBCASE("zero policy with zero source accumulates nothing") {
        ProblemSpec zs = spec;
        zs.source = SourceTerm::power_growth(0.0, 0.0);
        PathConfig pc;
        pc.dt = 0.01;
        pc.horizon_T = 5.0;
        pc.seed = 3;
        const auto acc = simulate_path(ControlPolicy::zero(), zs, pc, 0);
        CHECK(acc.cost_integral == 0.0);
        CHECK(acc.time_averaged_cost == 0.0);
    }
    SUBCASE("start inside the return set: tau = 0 by convention") {
        PathConfig pc;
        pc.dt = 0.01;
        pc.horizon_T = 1.0;
        pc.x0 = 0.5;
        pc.return_radius = 4.0;
        const auto acc = simulate_path(ControlPolicy::zero(), spec, pc, 1);
        CHECK(acc.first_return_time == 0.0);
        CHECK(acc.returned);
    }
    SUBCASE("cost accumulation is a plain running sum") {
        PathConfig pc;
        pc.dt = 0.02;
        pc.horizon_T = 2.0;
        pc.seed = 9;
        pc.burn_in_fraction = 0.0;
        const auto acc = simulate_path(ControlPolicy::constant_drift(0.3), spec, pc, 4);
        // replay the same stream and re-accumulate
        SplitMix64 rng(path_stream_seed(pc.seed, 4));
        double x = pc.x0, total = 0.0;
        const auto steps = static_cast<std::size_t>(pc.horizon_T / pc.dt);
        for (std::size_t k = 0; k < steps; ++k) {
            total += (spec.source.eval_original(x) +
                      eval_lagrangian(spec, x, 0.3)) * pc.dt;
            x += -0.3 * pc.dt + sample_stable_increment_1d(spec.s(), pc.dt, rng);
        }
        CHECK(acc.cost_integral == total);
    }
}

TEST_CASE("estimates are reproducible bit for bit") {
    ProblemSpec spec = worked_spec();
    PathConfig pc;
    pc.dt = 0.02;
    pc.horizon_T = 20.0;
    pc.n_paths = 64;
    pc.seed = 2026;
    pc.return_radius = 6.0;
    const auto a = estimate_long_run_cost(ControlPolicy::zero(), spec, pc);
    const auto b = estimate_long_run_cost(ControlPolicy::zero(), spec, pc);
    CHECK(a.mean == b.mean);
    CHECK(a.stderr_ == b.stderr_);
    SUBCASE("and independent of the thread count") {
        PathConfig pc2 = pc;
        pc2.threads = 2;
        const auto c = estimate_long_run_cost(ControlPolicy::zero(), spec, pc2);
        CHECK(c.mean == a.mean);
        CHECK(c.stderr_ == a.stderr_);
    }
}

TEST_CASE("doubling the path count shrinks the stderr at CLT rate") {
    ProblemSpec spec = worked_spec();
    PathConfig pc;
    pc.dt = 0.02;
    pc.horizon_T = 150.0;
    pc.n_paths = 600;
    pc.seed = 6;
    pc.return_radius = 6.0;
    GridFunction u = GridFunction::symmetric(
        16.0, 0.25, FarFieldModel::power_growth(0.9, 1.25, 16.0));
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = 0.9 * std::pow(std::abs(u.x(i)), 1.25);
    const auto pol = ControlPolicy::feedback_from(spec, u, "test");
    const auto e1 = estimate_long_run_cost(pol, spec, pc);
    PathConfig pc2 = pc;
    pc2.n_paths = 2 * pc.n_paths;
    const auto e2 = estimate_long_run_cost(pol, spec, pc2);
    const double ratio = e1.stderr_ / e2.stderr_;
    CHECK(ratio >= 1.2);
    CHECK(ratio <= 1.8);
}

TEST_CASE("feedback policy matches grad_p H at the nodes and continues") {
    ProblemSpec spec = worked_spec();
    GridFunction u = GridFunction::symmetric(
        8.0, 0.125, FarFieldModel::power_growth(0.8, 1.25, 8.0));
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = 0.8 * std::pow(std::abs(u.x(i)), 1.25);
    const auto pol = ControlPolicy::feedback_from(spec, u, "b_u");
    for (double x : {-3.0, 0.5, 6.0})
        CHECK(pol.eval(x) ==
              doctest::Approx(eval_grad_pH(spec, x, u.deriv(u.index_of(x))))
                  .epsilon(1e-9));
    // beyond the grid: |grad V|^{m-2} grad V with V the fitted far field
    const double g = 0.8 * 1.25 * std::pow(20.0, 0.25);
    CHECK(pol.eval(20.0) == doctest::Approx(g).epsilon(1e-12));
    CHECK(pol.eval(-20.0) == doctest::Approx(-g).epsilon(1e-12));
}

TEST_CASE("positive recurrence proxy under a confining feedback policy") {
    ProblemSpec spec = worked_spec();
    GridFunction u = GridFunction::symmetric(
        16.0, 0.25, FarFieldModel::power_growth(0.9, 1.25, 16.0));
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = 0.9 * std::pow(std::abs(u.x(i)), 1.25);
    const auto pol = ControlPolicy::feedback_from(spec, u, "b_u");
    PathConfig pc;
    pc.dt = 0.01;
    pc.horizon_T = 80.0;
    pc.seed = 12;
    pc.return_radius = 6.0;
    pc.x0 = pc.return_radius + 2.0;
    const std::size_t n = 500;
    std::size_t returned = 0;
    for (std::size_t p = 0; p < n; ++p)
        if (simulate_path(pol, spec, pc, p).returned) ++returned;
    CHECK(static_cast<double>(returned) / n >= 0.99);
}

TEST_CASE("return set admissibility check") {
    ProblemSpec spec = worked_spec();
    // {f <= lambda + 1} with lambda = 1: |x| <= 4; radius 5 admissible
    CHECK(return_set_admissible(spec, 1.0, 5.0));
    CHECK_FALSE(return_set_admissible(spec, 1.0, 2.0));
}

TEST_CASE("dynkin identity for the uncontrolled process") {
    ProblemSpec spec = worked_spec();
    // psi in C^2 with compact support
    GridFunction psi = GridFunction::symmetric(24.0, 0.0625, FarFieldModel::zero());
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double t = psi.x(i) / 3.0;
        psi[i] = t * t < 1.0 ? std::pow(1.0 - t * t, 3.0) : 0.0;
    }
    PathConfig pc;
    pc.dt = 0.005;
    pc.n_paths = 4000;
    pc.seed = 17;
    pc.x0 = 0.0;
    pc.threads = 2;
    const auto rep = dynkin_check(ControlPolicy::zero(), spec, psi, 1.0, pc);
    const double tol = 4.0 * (rep.lhs_stderr + rep.rhs_stderr) + 0.06;
    CHECK(std::abs(rep.lhs - rep.rhs) <= tol);

    SUBCASE("both sides vanish as t -> 0") {
        const auto rep0 = dynkin_check(ControlPolicy::zero(), spec, psi, 0.01, pc);
        CHECK(std::abs(rep0.lhs) <= 0.02);
        CHECK(std::abs(rep0.rhs) <= 0.02);
    }
    SUBCASE("linearity in psi") {
        GridFunction psi2 = psi;
        for (std::size_t i = 0; i < psi2.size(); ++i) psi2[i] *= 2.0;
        const auto rep2 = dynkin_check(ControlPolicy::zero(), spec, psi2, 1.0, pc);
        CHECK(rep2.lhs == doctest::Approx(2.0 * rep.lhs).epsilon(1e-12));
        CHECK(rep2.rhs == doctest::Approx(2.0 * rep.rhs).epsilon(1e-12));
    }
}
