// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NLHJB_VERIFY_HPP
#define NLHJB_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "nlhjb/ergodic.hpp"
#include "nlhjb/operator.hpp"
#include "nlhjb/problem.hpp"
#include "nlhjb/solver.hpp"

namespace nlhjb {

// Cross-cutting property suite: regularity diagnostics, comparison
// fuzzing, uniqueness and monotonicity as executable checks. Every check
// emits a machine-readable row; the CLI `verify` command turns failures
// into a nonzero exit code.

struct CheckRow {
    std::string name;
    bool pass = false;
    std::string witness;
    std::string metrics;
};

inline void write_check_rows(std::ostream& os, const std::vector<CheckRow>& rows) {
    os << "name,status,witness,metrics\n";
    for (const auto& r : rows)
        os << r.name << "," << (r.pass ? "pass" : "fail") << "," << r.witness
           << "," << r.metrics << "\n";
}

// ---------------------------------------------------------------------------
// Lipschitz / regularity diagnostics
// ---------------------------------------------------------------------------

struct LipschitzDiagnostic {
    double R = 2.0;
    double measured_lip = 0.0;
    double gamma0 = 0.0;      // (m-2s)/(m-1), only meaningful when set
    bool gamma0_set = false;
    double A_R = 1.0;         // 1 + sup f+ - alpha inf u- + H(u, B_{R+2})
    double Z1 = 0.0;          // R^{1-gamma0} (A^{1/m} + osc u)
    double Z2 = 1.0;          // 1 + osc u + osc f + H(u, B_{R+2})
    double H_seminorm = 0.0;  // tail seminorm on B_{R+2}
    double holder_quotient = 0.0;
};

namespace detail {

inline double max_pair_slope(const GridFunction& u, double R) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (std::abs(u.x(i)) <= R + 1e-12) idx.push_back(i);
    double lip = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            const double dx = std::abs(u.x(idx[a]) - u.x(idx[b]));
            if (dx <= 0.0) continue;
            lip = std::max(lip, std::abs(u[idx[a]] - u[idx[b]]) / dx);
        }
    return lip;
}

inline double max_holder_quotient(const GridFunction& u, double R, double g0) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (std::abs(u.x(i)) <= R + 1e-12) idx.push_back(i);
    double q = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            const double dx = std::abs(u.x(idx[a]) - u.x(idx[b]));
            if (dx <= 0.0) continue;
            q = std::max(q, std::abs(u[idx[a]] - u[idx[b]]) / std::pow(dx, g0));
        }
    return q;
}

}  // namespace detail

inline LipschitzDiagnostic lipschitz_diagnostic(const ProblemSpec& spec,
                                                const GridFunction& u,
                                                double alpha, double R) {
    LipschitzDiagnostic d;
    d.R = R;
    d.measured_lip = detail::max_pair_slope(u, R);
    const double m = spec.m(), s = spec.s();
    if (m >= 2.0 * s + 1.0) {
        d.gamma0 = (m - 2.0 * s) / (m - 1.0);
        d.gamma0_set = true;
        d.holder_quotient = detail::max_holder_quotient(u, R, d.gamma0);
    }
    d.H_seminorm = tail_seminorm_ball(u, spec.kernel, R + 2.0, 1.0);

    double sup_f_plus = 0.0, min_f = std::numeric_limits<double>::infinity(),
           max_f = -std::numeric_limits<double>::infinity();
    double inf_u_minus = 0.0, umin = std::numeric_limits<double>::infinity(),
           umax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = u.x(i);
        if (std::abs(x) > R + 2.0) continue;
        const double fx = spec.source.eval(x);
        sup_f_plus = std::max(sup_f_plus, std::max(fx, 0.0));
        min_f = std::min(min_f, fx);
        max_f = std::max(max_f, fx);
        inf_u_minus = std::min(inf_u_minus, std::min(u[i], 0.0));
        umin = std::min(umin, u[i]);
        umax = std::max(umax, u[i]);
    }
    const double osc_u = umax - umin, osc_f = max_f - min_f;
    d.A_R = 1.0 + sup_f_plus - alpha * inf_u_minus + d.H_seminorm;
    const double g0 = d.gamma0_set ? d.gamma0 : 0.0;
    d.Z1 = std::pow(R, 1.0 - g0) * (std::pow(d.A_R, 1.0 / m) + osc_u);
    d.Z2 = 1.0 + osc_u + osc_f + d.H_seminorm;
    return d;
}

struct EstimateProbeRow {
    double h = 0.0;
    LipschitzDiagnostic diag;
};

struct EstimateProbeReport {
    std::vector<EstimateProbeRow> rows;  // keyed by strictly decreasing h
    bool lip_stable = false;             // lip(h/2) <= 1.1 lip(h) along the ladder
};

/// Solves the discounted problem at each h of the (decreasing) ladder and
/// tracks the measured local Lipschitz constant under refinement.
inline EstimateProbeReport probe_lipschitz(const ProblemSpec& spec_in,
                                           double alpha, double R,
                                           const std::vector<double>& h_ladder) {
    ProblemSpec spec = normalize_source(spec_in);
    for (std::size_t k = 1; k < h_ladder.size(); ++k)
        if (!(h_ladder[k] < h_ladder[k - 1]))
            throw std::invalid_argument("refinement ladder must decrease in h");
    EstimateProbeReport rep;
    BarrierModel bar = build_barrier(spec, spec.max_radius() + 2.0, h_ladder[0]);
    SolverConfig cfg = SolverConfig::defaults();
    cfg.tol_residual = 1e-9;
    for (double h : h_ladder) {
        auto run = solve_discounted(spec, alpha, cfg, h, bar);
        EstimateProbeRow row;
        row.h = h;
        row.diag = lipschitz_diagnostic(spec, run.wbar, alpha, R);
        rep.rows.push_back(row);
    }
    rep.lip_stable = true;
    for (std::size_t k = 1; k < rep.rows.size(); ++k)
        if (rep.rows[k].diag.measured_lip >
            1.1 * rep.rows[k - 1].diag.measured_lip)
            rep.lip_stable = false;
    return rep;
}

// ---------------------------------------------------------------------------
// Uniqueness up to an additive constant
// ---------------------------------------------------------------------------

struct UniquenessReport {
    double offset = 0.0;          // median(u_a - u_b) on the common region
    double sup_deviation = 0.0;   // sup |u_a - u_b - offset|
    double tolerance = 0.0;
    double lambda_gap = 0.0;
    bool pass = false;
};

inline UniquenessReport check_uniqueness(const ProblemSpec& spec,
                                         const EigenPair& run_a,
                                         const EigenPair& run_b,
                                         double lambda_tol = 5e-2) {
    (void)spec;
    const double R =
        0.5 * std::min(std::min(std::abs(run_a.u.xlo()), run_a.u.xhi()),
                       std::min(std::abs(run_b.u.xlo()), run_b.u.xhi()));
    std::vector<double> diffs;
    for (std::size_t i = 0; i < run_a.u.size(); ++i) {
        const double x = run_a.u.x(i);
        if (std::abs(x) > R || !run_b.u.inside(x)) continue;
        diffs.push_back(run_a.u[i] - run_b.u.eval(x));
    }
    UniquenessReport rep;
    if (diffs.empty()) return rep;
    std::vector<double> sorted = diffs;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                     sorted.end());
    rep.offset = sorted[sorted.size() / 2];
    for (double d : diffs)
        rep.sup_deviation = std::max(rep.sup_deviation, std::abs(d - rep.offset));
    double osc = 0.0;
    {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < run_a.u.size(); ++i) {
            const double x = run_a.u.x(i);
            if (std::abs(x) > R) continue;
            lo = std::min(lo, run_a.u[i]);
            hi = std::max(hi, run_a.u[i]);
        }
        osc = hi - lo;
    }
    rep.tolerance = 5e-3 * (1.0 + osc);
    rep.lambda_gap = std::abs(run_a.lambda_star - run_b.lambda_star);
    rep.pass = rep.sup_deviation <= rep.tolerance && rep.lambda_gap <= lambda_tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Monotonicity of the critical value in f
// ---------------------------------------------------------------------------

struct MonotonicityReport {
    double lambda_1 = 0.0;
    double lambda_2 = 0.0;
    double gap = 0.0;
    double sup_f_gap = 0.0;
    bool ordered_inputs = true;
    bool pass = false;
};

inline MonotonicityReport check_monotonicity(const ProblemSpec& spec_f1,
                                             const ProblemSpec& spec_f2,
                                             const ExtractConfig& cfg,
                                             double noise_floor = 1e-2) {
    MonotonicityReport rep;
    const double span = 2.0 * spec_f1.max_radius();
    for (int i = 0; i <= 2000; ++i) {
        const double x = -span + 2.0 * span * i / 2000.0;
        const double d =
            spec_f2.source.eval_original(x) - spec_f1.source.eval_original(x);
        if (d < -1e-12) rep.ordered_inputs = false;
        rep.sup_f_gap = std::max(rep.sup_f_gap, d);
    }
    if (!rep.ordered_inputs || !(rep.sup_f_gap > 0.0))
        throw std::invalid_argument(
            "monotonicity check requires f1 <= f2 with strict gap somewhere");
    rep.lambda_1 = extract_eigenpair(spec_f1, cfg).lambda_star;
    rep.lambda_2 = extract_eigenpair(spec_f2, cfg).lambda_star;
    rep.gap = rep.lambda_2 - rep.lambda_1;
    rep.pass = rep.gap > noise_floor && rep.gap <= rep.sup_f_gap + noise_floor;
    return rep;
}

// ---------------------------------------------------------------------------
// Comparison fuzz harness
// ---------------------------------------------------------------------------

inline CheckRow fuzz_comparison(int trials, std::uint64_t rng_seed) {
    ProblemSpec base;
    base.order.s = 0.75;
    base.hamiltonian = HamiltonianSpec::power_law(2.0);
    base.kernel = KernelSpec::fractional_laplacian(1, 0.75);
    base.source = SourceTerm::power_growth(1.0, 0.0);
    base.truncation_plan = {2.0};
    const ComparisonReport rep = check_discrete_comparison(base, trials, rng_seed);
    CheckRow row;
    row.name = "comparison_fuzz";
    row.pass = rep.violations == 0;
    row.witness = rep.witness;
    std::ostringstream ms;
    ms << "trials=" << rep.trials << " violations=" << rep.violations
       << " worst_gap=" << rep.worst_gap;
    row.metrics = ms.str();
    return row;
}

}  // namespace nlhjb

#endif  // NLHJB_VERIFY_HPP
