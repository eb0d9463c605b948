// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NLHJB_SOLVER_HPP
#define NLHJB_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlhjb/grid.hpp"
#include "nlhjb/linalg.hpp"
#include "nlhjb/operator.hpp"
#include "nlhjb/problem.hpp"

namespace nlhjb {

// Truncated alpha-discounted Dirichlet problem
//
//   alpha W - I W + H(x, grad W) = f   in B_n,   W = 0 outside,
//
// solved by Howard policy iteration on the control form
//   alpha W - I W + sup_xi { xi D W - l(x, xi) } = f,
// with upwind differences in the linear policy solves and the Godunov
// selection in the nonlinear residual.

struct DiscountedProblem {
    ProblemSpec spec;   // normalized
    double alpha = 0.1;
    double radius_n = 8.0;
    double h = 0.125;

    void validate() const {
        if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
        if (!(radius_n > 0.0) || !(h > 0.0))
            throw std::invalid_argument("radius and h must be positive");
    }
};

struct SolverConfig {
    std::vector<double> control_grid;  // candidate control magnitudes, >= 0
    double tol_residual = 1e-9;
    int max_policy_iters = 80;
    double linear_tol = 1e-12;
    double damping = 1.0;

    static SolverConfig defaults() {
        SolverConfig c;
        c.control_grid.push_back(0.0);
        const int n = 129;
        for (int i = 0; i < n; ++i)
            c.control_grid.push_back(std::pow(10.0, -4.0 + 7.0 * i / (n - 1.0)));
        return c;
    }
};

struct ControlPolicyField {
    GridFunction zeta;  // feedback drift on the solver grid
    std::string source;
};

struct ConvergenceRow {
    int iter = 0;
    double residual_sup = 0.0;
    int policy_changes = 0;
};

struct DiscreteSolution {
    GridFunction w;  // exterior nodes pinned to the boundary data
    double residual_norm = 0.0;
    int iterations = 0;
    ControlPolicyField policy;
    std::vector<ConvergenceRow> log;
};

struct SolverError : std::runtime_error {
    double last_residual;
    SolverError(const std::string& what, double r)
        : std::runtime_error(what), last_residual(r) {}
};

namespace detail {

/// Godunov gradient state for convex H: the endpoint of the interval hull
/// of {max(D-,0), min(D+,0)} with the larger H value; ties take the
/// smaller magnitude.
inline double godunov_gradient(const ProblemSpec& spec, double x, double dminus,
                               double dplus) {
    const double pm = std::max(dminus, 0.0);
    const double pp = std::min(dplus, 0.0);
    const double Hm = eval_H(spec, x, pm);
    const double Hp = eval_H(spec, x, pp);
    if (Hm > Hp + 1e-15 * (1.0 + std::abs(Hm))) return pm;
    if (Hp > Hm + 1e-15 * (1.0 + std::abs(Hp))) return pp;
    return std::abs(pm) <= std::abs(pp) ? pm : pp;
}

struct SolveGrid {
    GridFunction geom;  // [-n-2h, n+2h]; far field set by the caller
    std::vector<std::size_t> unknowns;  // nodes with |x| < n
    std::vector<long long> col_of;      // grid node -> unknown column or -1
};

inline SolveGrid make_solve_grid(double n, double h, FarFieldModel ff) {
    const auto half = static_cast<std::size_t>(std::llround(n / h));
    if (std::abs(half * h - n) > 1e-10 * (1.0 + n))
        throw std::invalid_argument("radius must be a multiple of h");
    SolveGrid g{GridFunction(-(n + 2.0 * h), h, 2 * half + 5, ff), {}, {}};
    g.col_of.assign(g.geom.size(), -1);
    for (std::size_t i = 0; i < g.geom.size(); ++i)
        if (std::abs(g.geom.x(i)) < n - 1e-12) {
            g.col_of[i] = static_cast<long long>(g.unknowns.size());
            g.unknowns.push_back(i);
        }
    return g;
}

/// Howard policy iteration for
///   alpha u - I u + sup_xi { xi D u - l(x, xi) } = rhs(x)
/// on the unknowns of `g`, with the non-unknown nodes frozen at the values
/// already stored in `geom_values` and the far field given by the grid
/// model. Returns on residual <= tol; throws SolverError otherwise.
inline DiscreteSolution howard_solve(const SolveGrid& g, const ProblemSpec& spec,
                                     double alpha,
                                     const std::vector<double>& rhs,
                                     const std::vector<double>& frozen,
                                     const SolverConfig& config,
                                     const GridFunction* warm_w,
                                     const GridFunction* warm_zeta) {
    const std::size_t gn = g.geom.size();
    const std::size_t N = g.unknowns.size();
    const double h = g.geom.h();
    const OperatorMatrix I_h = build_operator_matrix(g.geom, spec.kernel);

    std::vector<double> u = frozen;
    std::vector<double> zeta(gn, 0.0);
    if (warm_w) {
        for (std::size_t i = 0; i < gn; ++i) {
            if (g.col_of[i] < 0) continue;
            const double x = g.geom.x(i);
            u[i] = warm_w->eval(x);
            if (warm_zeta)
                zeta[i] = warm_zeta->inside(x) ? warm_zeta->eval(x) : 0.0;
        }
    }

    auto policy_value = [&](std::size_t i, double xi, double dm, double dp) {
        const double d = xi > 0.0 ? dm : (xi < 0.0 ? dp : 0.0);
        return xi * d - eval_lagrangian(spec, g.geom.x(i), xi);
    };

    DiscreteSolution sol;
    sol.w = g.geom;
    sol.policy.zeta = GridFunction(g.geom.xlo(), h, gn, FarFieldModel::zero());
    sol.policy.source = "howard";

    DenseMatrix A;
    std::vector<std::size_t> piv;
    std::vector<double> b;

    // best iterate so far, for plateau acceptance near the roundoff floor
    double best_res = std::numeric_limits<double>::infinity();
    std::vector<double> best_u, best_zeta;
    int since_best = 0;

    double last_res = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < config.max_policy_iters; ++iter) {
        A = DenseMatrix(N);
        b.assign(N, 0.0);
        for (std::size_t r = 0; r < N; ++r) {
            const std::size_t i = g.unknowns[r];
            double* row = A.row(r);
            const double* wi = I_h.w.data() + i * I_h.n;
            double frozen_flux = 0.0;  // contribution of non-unknown nodes
            for (std::size_t j = 0; j < gn; ++j) {
                const long long c = g.col_of[j];
                if (c >= 0)
                    row[static_cast<std::size_t>(c)] -= wi[j];
                else
                    frozen_flux += wi[j] * frozen[j];
            }
            row[r] += alpha;
            const double xi = zeta[i];
            if (xi > 0.0) {  // xi (u_i - u_{i-1}) / h
                row[r] += xi / h;
                const long long c = g.col_of[i - 1];
                if (c >= 0)
                    row[static_cast<std::size_t>(c)] -= xi / h;
                else
                    frozen_flux += (xi / h) * frozen[i - 1];
            } else if (xi < 0.0) {  // xi (u_{i+1} - u_i) / h
                row[r] -= xi / h;
                const long long c = g.col_of[i + 1];
                if (c >= 0)
                    row[static_cast<std::size_t>(c)] += xi / h;
                else
                    frozen_flux -= (xi / h) * frozen[i + 1];
            }
            b[r] = rhs[i] + eval_lagrangian(spec, g.geom.x(i), xi) +
                   I_h.rhs0[i] + frozen_flux;
        }
        lu_factor(A, piv);
        lu_solve(A, piv, b);
        for (std::size_t r = 0; r < N; ++r) u[g.unknowns[r]] = b[r];

        double res = 0.0;
        for (std::size_t r = 0; r < N; ++r) {
            const std::size_t i = g.unknowns[r];
            const double* wi = I_h.w.data() + i * I_h.n;
            double Iu = I_h.rhs0[i];
            for (std::size_t j = 0; j < gn; ++j) Iu += wi[j] * u[j];
            const double dm = (u[i] - u[i - 1]) / h;
            const double dp = (u[i + 1] - u[i]) / h;
            const double p = godunov_gradient(spec, g.geom.x(i), dm, dp);
            const double ri =
                alpha * u[i] - Iu + eval_H(spec, g.geom.x(i), p) - rhs[i];
            res = std::max(res, std::abs(ri));
        }

        int changes = 0;
        for (std::size_t r = 0; r < N; ++r) {
            const std::size_t i = g.unknowns[r];
            const double dm = (u[i] - u[i - 1]) / h;
            const double dp = (u[i + 1] - u[i]) / h;
            // the incumbent seeds the argmax; Howard's monotone convergence
            // needs the current policy among the candidates
            double best_xi = zeta[i];
            double best_val = policy_value(i, zeta[i], dm, dp);
            auto consider = [&](double xi) {
                const double v = policy_value(i, xi, dm, dp);
                if (v > best_val + 1e-14 * (1.0 + std::abs(best_val)) ||
                    (std::abs(v - best_val) <=
                         1e-14 * (1.0 + std::abs(best_val)) &&
                     std::abs(xi) < std::abs(best_xi))) {
                    best_val = v;
                    best_xi = xi;
                }
            };
            consider(0.0);
            for (double mag : config.control_grid)
                for (double sgn : {1.0, -1.0}) {
                    if (mag == 0.0 && sgn < 0.0) continue;
                    consider(sgn * mag);
                }
            if (best_xi != 0.0) {  // refine once around the incumbent magnitude
                const double mag = std::abs(best_xi);
                const double sgn = best_xi > 0 ? 1.0 : -1.0;
                for (int q = -16; q <= 16; ++q)
                    consider(sgn * mag * std::pow(10.0, 0.0547 * q / 16.0));
            }
            const double p = godunov_gradient(spec, g.geom.x(i), dm, dp);
            consider(eval_grad_pH(spec, g.geom.x(i), p));

            const double xi_new = zeta[i] + config.damping * (best_xi - zeta[i]);
            if (std::abs(xi_new - zeta[i]) > 1e-12 * (1.0 + std::abs(zeta[i])))
                ++changes;
            zeta[i] = xi_new;
        }

        sol.log.push_back({iter, res, changes});
#ifdef NLHJB_SOLVER_TRACE
        std::fprintf(stderr, "    it=%d res=%.3e changes=%d\n", iter, res,
                     changes);
#endif
        last_res = res;
        if (res < best_res * (1.0 - 1e-3)) {
            best_res = res;
            best_u = u;
            best_zeta = zeta;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (res <= config.tol_residual) {
            for (std::size_t i = 0; i < gn; ++i) {
                sol.w[i] = u[i];
                sol.policy.zeta[i] = zeta[i];
            }
            sol.residual_norm = res;
            sol.iterations = iter + 1;
            return sol;
        }
        // roundoff floor: accept the best iterate when the residual is
        // genuinely flat (not merely recovering from a transient) and sits
        // at the scale of the linear-algebra noise
        const std::size_t nl = sol.log.size();
        bool flat = since_best >= 10 && nl >= 6;
        if (flat) {
            double rmin = sol.log[nl - 6].residual_sup;
            double rmax = rmin;
            for (std::size_t q = nl - 6; q < nl; ++q) {
                rmin = std::min(rmin, sol.log[q].residual_sup);
                rmax = std::max(rmax, sol.log[q].residual_sup);
            }
            flat = rmax <= 1.05 * rmin;
        }
        if (flat && !best_u.empty()) {
            double scale = 0.0;
            for (std::size_t r = 0; r < N; ++r)
                scale = std::max(scale, std::abs(best_u[g.unknowns[r]]));
            const double floor = 1e-12 * static_cast<double>(N) * (1.0 + scale);
            if (best_res <= std::max(floor, 10.0 * config.tol_residual)) {
                for (std::size_t i = 0; i < gn; ++i) {
                    sol.w[i] = best_u[i];
                    sol.policy.zeta[i] = best_zeta[i];
                }
                sol.residual_norm = best_res;
                sol.iterations = iter + 1;
                return sol;
            }
            throw SolverError("policy iteration stalled above tolerance",
                              best_res);
        }
    }
    throw SolverError("policy iteration did not converge", last_res);
}

}  // namespace detail

/// Nonlinear discrete residual alpha u - Iu + H(x, D_Godunov u) - f on the
/// interior nodes; NaN where the operator is not evaluated.
inline GridFunction residual_field(const DiscountedProblem& prob,
                                   const GridFunction& gf) {
    const auto kind = gf.farfield().kind;
    if (kind != FarFieldModel::Kind::Zero &&
        kind != FarFieldModel::Kind::Constant &&
        kind != FarFieldModel::Kind::PowerGrowth)
        throw std::invalid_argument("residual: unsupported far field");
    GridFunction out(gf.xlo(), gf.h(), gf.size(), FarFieldModel::zero());
    for (std::size_t i = 0; i < gf.size(); ++i)
        out[i] = std::numeric_limits<double>::quiet_NaN();
    const double h = gf.h();
    for (std::size_t i = 2; i + 2 < gf.size(); ++i) {
        const double x = gf.x(i);
        const double Iu = apply_operator(gf, prob.spec.kernel, i);
        const double dm = (gf[i] - gf[i - 1]) / h;
        const double dp = (gf[i + 1] - gf[i]) / h;
        const double p = detail::godunov_gradient(prob.spec, x, dm, dp);
        out[i] = prob.alpha * gf[i] - Iu + eval_H(prob.spec, x, p) -
                 prob.spec.source.eval(x);
    }
    return out;
}

/// Dirichlet solve of (EBD-1): exterior data identically zero.
inline DiscreteSolution solve_dirichlet(const DiscountedProblem& prob,
                                        const SolverConfig& config,
                                        const DiscreteSolution* warm = nullptr) {
    prob.validate();
    const ProblemSpec& spec = prob.spec;
    if (prob.alpha == 0.0 && spec.regime != RegimeFlag::NonexistenceProbe)
        throw std::invalid_argument(
            "alpha = 0 is reserved for the nonexistence probe");
    auto g = detail::make_solve_grid(prob.radius_n, prob.h, FarFieldModel::zero());
    std::vector<double> rhs(g.geom.size()), frozen(g.geom.size(), 0.0);
    for (std::size_t i = 0; i < g.geom.size(); ++i)
        rhs[i] = spec.source.eval(g.geom.x(i));
    return detail::howard_solve(g, spec, prob.alpha, rhs, frozen, config,
                                warm ? &warm->w : nullptr,
                                warm ? &warm->policy.zeta : nullptr);
}

/// Far-field model of the normalized discounted profile: the near tail
/// grows like amp |z|^beta (the natural exponent 1 + gamma/m); beyond the
/// discount saturation scale the profile follows the ceiling
/// (f(z) - alpha C)/alpha. The model is the pointwise minimum of the two.
struct SaturatedTail {
    double amp = 0.0;
    double beta = 1.2;
    double c0 = 1.0;      // f = c0 |z|^gamma + shift
    double gamma = 0.5;
    double shift = 0.0;
    double alpha = 0.1;
    double C = 0.0;       // gauge level, lambda(alpha)/alpha

    double power(double z) const { return amp * std::pow(std::abs(z), beta); }
    double ceiling(double z) const {
        return (c0 * std::pow(std::abs(z), gamma) + shift) / alpha - C;
    }
    double value(double z) const {
        return std::min(power(z), std::max(ceiling(z), 0.0));
    }

    /// crossover radius where the power branch reaches the ceiling
    double crossover(double zlo) const {
        if (!(amp > 0.0)) return zlo;
        if (power(zlo) >= ceiling(zlo)) return zlo;
        double lo = zlo, hi = std::max(4.0 * zlo, 16.0);
        int guard = 0;
        while (power(hi) < ceiling(hi) && guard++ < 200) hi *= 2.0;
        if (guard >= 200) return hi;  // never crosses within range
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            (power(mid) < ceiling(mid) ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    /// int_Y^inf value(x + sgn y) K(y) dy for x + sgn Y at the grid edge
    double tail_integral(const KernelSpec& k, double x, double sgn,
                         double Y) const {
        const double edge = std::abs(x + sgn * Y);
        const double zc = crossover(edge);
        const double Yc = Y + (zc - edge);  // kernel coordinate of crossover
        double acc = 0.0;
        if (Yc > Y && amp > 0.0)
            acc += detail::tail_power_integral(k, amp, beta, x, sgn, Y) -
                   detail::tail_power_integral(k, amp, beta, x, sgn, Yc);
        const double Ysat = amp > 0.0 ? Yc : Y;
        acc += (gamma > 0.0
                    ? detail::tail_power_integral(k, c0 / alpha, gamma, x, sgn,
                                                  Ysat)
                    : (c0 / alpha) * detail::tail_kernel_mass(k, Ysat));
        acc += (shift / alpha - C) * detail::tail_kernel_mass(k, Ysat);
        return acc;
    }
};

/// Tail-corrected solve in the normalized gauge: Y solves
///   alpha Y - I Y + H(x, D Y) = f - alpha C
/// with the exterior frozen at the saturated tail model. For the gauge
/// C = lambda(alpha)/alpha the solution approximates the normalized profile
/// w_alpha - w_alpha(0) without the killing bias of the zero exterior.
inline DiscreteSolution solve_tail_corrected(const ProblemSpec& spec,
                                             double alpha, double radius,
                                             double h, const SaturatedTail& tail,
                                             const SolverConfig& config,
                                             const GridFunction* warm_w,
                                             const GridFunction* warm_zeta) {
    // geometry carries a zero far field; the model tails enter through the
    // frozen pad and explicit rhs contributions below
    auto g = detail::make_solve_grid(radius, h, FarFieldModel::zero());
    const std::size_t gn = g.geom.size();
    std::vector<double> rhs(gn), frozen(gn, 0.0);
    for (std::size_t i = 0; i < gn; ++i) {
        const double x = g.geom.x(i);
        rhs[i] = spec.source.eval(x) - alpha * tail.C;
        if (g.col_of[i] < 0) frozen[i] = tail.value(x);
    }
    // add the beyond-grid model contribution of I to the rhs: the zero
    // far field in the matrix already subtracts u(x) * tail mass, so only
    // the model-value part is missing
    auto sol_rhs = rhs;
    const double L = g.geom.xhi();
    for (std::size_t i = 2; i + 2 < gn; ++i) {
        if (g.col_of[i] < 0) continue;
        const double x = g.geom.x(i);
        const double Yp = L - x, Ym = x + L;
        // alpha Y - (matrix part) Y - T + H = f - alpha C, so the model
        // value part T of I moves to the right-hand side with a plus
        sol_rhs[i] += tail.tail_integral(spec.kernel, x, +1.0, Yp) +
                      tail.tail_integral(spec.kernel, x, -1.0, Ym);
    }
    return detail::howard_solve(g, spec, alpha, sol_rhs, frozen, config, warm_w,
                                warm_zeta);
}

/// Randomized discrete comparison check on tiny grids: ordered data must
/// produce ordered solutions.
struct ComparisonReport {
    int trials = 0;
    int violations = 0;
    double worst_gap = 0.0;  // most negative (super - sub)
    std::string witness;
};

inline ComparisonReport check_discrete_comparison(const ProblemSpec& base_spec,
                                                  int trials,
                                                  std::uint64_t rng_seed) {
    ComparisonReport rep;
    rep.trials = trials;
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    for (int t = 0; t < trials; ++t) {
        ProblemSpec spec = base_spec;
        spec.order.s = 0.55 + 0.4 * uni(rng);
        spec.hamiltonian = HamiltonianSpec::power_law(1.2 + 2.0 * uni(rng));
        spec.kernel = KernelSpec::fractional_laplacian(1, spec.order.s);
        spec.source = SourceTerm::power_growth(0.2 + uni(rng), 0.0);
        spec.truncation_plan = {2.0};
        spec = normalize_source(spec);

        DiscountedProblem prob{spec, 0.3 + 1.2 * uni(rng), 2.0, 0.125};
        SolverConfig cfg = SolverConfig::defaults();
        cfg.tol_residual = 1e-11;

        // perturb f: sub-f <= super-f with a random nonnegative bump
        const double amp = 0.5 * uni(rng);
        const double width = 0.3 + uni(rng);
        const double center = -1.0 + 2.0 * uni(rng);
        ProblemSpec spec_hi = spec;
        auto core = GridFunction::symmetric(4.0, 0.0625, FarFieldModel::zero());
        for (std::size_t i = 0; i < core.size(); ++i) {
            const double x = core.x(i);
            core[i] = spec.source.eval_original(x) +
                      amp * std::exp(-(x - center) * (x - center) / (width * width));
        }
        spec_hi.source = SourceTerm::tabulated(core, 0.0);
        spec_hi.source.shift = spec.source.shift;

        DiscountedProblem prob_hi = prob;
        prob_hi.spec = spec_hi;

        const auto lo = solve_dirichlet(prob, cfg);
        const auto hi = solve_dirichlet(prob_hi, cfg);
        for (std::size_t i = 0; i < lo.w.size(); ++i) {
            const double gap = hi.w[i] - lo.w[i];
            if (gap < -1e-8) {
                ++rep.violations;
                rep.worst_gap = std::min(rep.worst_gap, gap);
                rep.witness = "trial " + std::to_string(t) + " x=" +
                              std::to_string(lo.w.x(i));
                break;
            }
        }
    }
    return rep;
}

}  // namespace nlhjb

#endif  // NLHJB_SOLVER_HPP
