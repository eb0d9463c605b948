// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NLHJB_LEVY_HPP
#define NLHJB_LEVY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nlhjb/grid.hpp"
#include "nlhjb/operator.hpp"
#include "nlhjb/problem.hpp"

namespace nlhjb {

// Simulation of the controlled 2s-stable dynamics dX = -zeta(X) dt + dL,
// normalized so the generator of L is -(-Delta)^s, i.e. the increment over
// dt has characteristic function exp(-dt |xi|^{2s}).

// ---------------------------------------------------------------------------
// RNG: splitmix64 streams, one per path, derived from (seed, path index).
// ---------------------------------------------------------------------------

struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t s) : state(s) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    /// uniform in (0, 1), never exactly 0 or 1
    double uniform() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }
    double normal() {  // Box-Muller, one value per call pair is fine here
        const double u1 = uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

inline std::uint64_t path_stream_seed(std::uint64_t seed, std::uint64_t path) {
    SplitMix64 mix(seed ^ (0x632be59bd9b4e019ull + path * 0x9e3779b97f4a7c15ull));
    mix.next();
    return mix.next();
}

// ---------------------------------------------------------------------------
// Stable sampling
// ---------------------------------------------------------------------------

namespace detail {

/// Symmetric alpha-stable variate with characteristic function
/// exp(-|xi|^a), 0 < a < 2, by the Chambers-Mallows-Stuck transform.
inline double stable_symmetric(double a, SplitMix64& rng) {
    const double U = M_PI * (rng.uniform() - 0.5);
    const double E = -std::log(rng.uniform());
    return std::sin(a * U) / std::pow(std::cos(U), 1.0 / a) *
           std::pow(std::cos(U - a * U) / E, (1.0 - a) / a);
}

/// Positive s-stable variate with Laplace transform exp(-u^s), s in (0,1)
/// (Kanter's representation).
inline double stable_subordinator(double s, SplitMix64& rng) {
    const double U = M_PI * rng.uniform();
    const double E = -std::log(rng.uniform());
    const double B = std::pow(std::sin(s * U), s) *
                     std::pow(std::sin((1.0 - s) * U), 1.0 - s) / std::sin(U);
    return std::pow(B, 1.0 / s) * std::pow(E, -(1.0 - s) / s);
}

}  // namespace detail

/// Increment of the rotationally invariant 2s-stable process over dt,
/// scaled so E exp(i xi . L_t) = exp(-t |xi|^{2s}). dim 1 uses the CMS
/// sampler directly; dim 2 subordinates a Brownian motion.
inline void sample_stable_increment(double s, double dt, int dim,
                                    SplitMix64& rng, double* out) {
    if (!(s > 0.5 && s < 1.0))
        throw std::invalid_argument("stable sampler: s in (1/2,1) required");
    if (dim != 1 && dim != 2)
        throw std::invalid_argument("stable sampler: dim in {1,2}");
    const double a = 2.0 * s;
    if (dim == 1) {
        out[0] = std::pow(dt, 1.0 / a) * detail::stable_symmetric(a, rng);
        return;
    }
    // B_{2 S_t} has CF exp(-t |xi|^{2s}) when S is the standard s-stable
    // subordinator
    const double S = std::pow(dt, 1.0 / s) * detail::stable_subordinator(s, rng);
    const double sd = std::sqrt(2.0 * S);
    out[0] = sd * rng.normal();
    out[1] = sd * rng.normal();
}

inline double sample_stable_increment_1d(double s, double dt, SplitMix64& rng) {
    double v;
    sample_stable_increment(s, dt, 1, rng, &v);
    return v;
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

/// Feedback drift zeta(x). Gridded policies continue beyond the grid with
/// the power-growth drift implied by the fitted far field of u:
/// zeta = |grad V_fit|^{m-2} grad V_fit.
struct ControlPolicy {
    enum class Kind { Zero, Constant, Feedback };
    Kind kind = Kind::Zero;
    double constant = 0.0;
    GridFunction zeta;   // Feedback: gridded drift values
    double ff_amp = 0.0; // far-field continuation parameters
    double ff_beta = 0.0;
    double m = 2.0;
    std::string source;

    static ControlPolicy zero() { return {}; }
    static ControlPolicy constant_drift(double v) {
        ControlPolicy p;
        p.kind = Kind::Constant;
        p.constant = v;
        p.source = "constant";
        return p;
    }

    /// b_u = grad_p H(x, u') from an eigenfunction profile.
    static ControlPolicy feedback_from(const ProblemSpec& spec,
                                       const GridFunction& u,
                                       const std::string& tag) {
        ControlPolicy p;
        p.kind = Kind::Feedback;
        p.m = spec.m();
        p.zeta = GridFunction(u.xlo(), u.h(), u.size(), FarFieldModel::zero());
        for (std::size_t i = 0; i < u.size(); ++i)
            p.zeta[i] = eval_grad_pH(spec, u.x(i), u.deriv(i));
        const auto& ff = u.farfield();
        if (ff.kind == FarFieldModel::Kind::PowerGrowth) {
            p.ff_amp = ff.amp;
            p.ff_beta = ff.beta;
        }
        p.source = tag;
        return p;
    }

    double eval(double x) const {
        switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::Constant: return constant;
        case Kind::Feedback:
            if (zeta.inside(x)) return zeta.interp(x);
            if (ff_amp > 0.0) {
                const double g = ff_amp * ff_beta *
                                 std::pow(std::abs(x), ff_beta - 1.0);
                return std::pow(g, m - 1.0) * (x > 0.0 ? 1.0 : -1.0);
            }
            return x > 0.0 ? zeta[zeta.size() - 1] : zeta[0];
        }
        return 0.0;
    }
};

// ---------------------------------------------------------------------------
// Paths and estimates
// ---------------------------------------------------------------------------

struct PathConfig {
    double dt = 0.01;
    double horizon_T = 200.0;
    std::size_t n_paths = 1000;
    std::uint64_t seed = 0;
    double x0 = 0.0;
    double return_radius = 4.0;  // the compact return set B
    double burn_in_fraction = 0.2;
    int threads = 1;
    double blowup_abort = 1e6;
};

/// Checks that B contains {x : min_xi G(x, xi) - lambda* <= 1}; for
/// Lagrangians minimized at xi = 0 this is {f(x) <= lambda* + 1}.
inline bool return_set_admissible(const ProblemSpec& spec, double lambda_star,
                                  double return_radius) {
    const int n = 2001;
    const double span = 4.0 * std::max(return_radius, spec.max_radius());
    const double l0 = eval_lagrangian(spec, 0.0, 0.0);
    for (int i = 0; i < n; ++i) {
        const double x = -span + 2.0 * span * i / (n - 1.0);
        const double gmin = spec.source.eval_original(x) + l0;
        if (gmin - lambda_star <= 1.0 && std::abs(x) > return_radius)
            return false;
    }
    return true;
}

struct PathAccumulator {
    double cost_integral = 0.0;   // int G(X, zeta(X)) dt over the horizon
    double time_simulated = 0.0;
    double time_averaged_cost = 0.0;  // after burn-in
    double first_return_time = -1.0;  // < 0 when no return observed
    bool left_set = false;
    bool returned = false;
    bool blown_up = false;
    double final_x = 0.0;
};

/// Euler-Maruyama path of dX = -zeta(X) dt + dL with running cost
/// accumulation and first-return bookkeeping (tau = 0 when started inside
/// the return set).
inline PathAccumulator simulate_path(const ControlPolicy& policy,
                                     const ProblemSpec& spec,
                                     const PathConfig& config,
                                     std::uint64_t path_index) {
    SplitMix64 rng(path_stream_seed(config.seed, path_index));
    PathAccumulator acc;
    const double dt = config.dt;
    const auto steps = static_cast<std::size_t>(config.horizon_T / dt);
    const auto burn = static_cast<std::size_t>(config.burn_in_fraction * steps);
    double x = config.x0;
    const bool started_inside = std::abs(x) <= config.return_radius;
    if (started_inside) {
        acc.first_return_time = 0.0;  // immediate-return convention
        acc.returned = true;
    }
    double cost_after_burn = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        const double z = policy.eval(x);
        const double g = spec.source.eval_original(x) + eval_lagrangian(spec, x, z);
        acc.cost_integral += g * dt;
        if (k >= burn) cost_after_burn += g * dt;
        x += -z * dt + sample_stable_increment_1d(spec.s(), dt, rng);
        acc.time_simulated += dt;
        if (std::abs(x) > config.return_radius) acc.left_set = true;
        else if (acc.left_set && acc.first_return_time < 0.0) {
            acc.first_return_time = acc.time_simulated;
            acc.returned = true;
        }
        if (!(std::abs(x) < config.blowup_abort)) {
            acc.blown_up = true;
            break;
        }
    }
    acc.final_x = x;
    const double tail_time = acc.time_simulated - burn * dt;
    acc.time_averaged_cost = tail_time > 0.0 ? cost_after_burn / tail_time : 0.0;
    return acc;
}

struct SimEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double dt = 0.0;
    std::size_t flagged = 0;  // blown-up / transient paths
    bool reliable = true;
};

namespace detail {

template <class PerPath>
inline void run_paths(std::size_t n_paths, int threads, PerPath&& body) {
    if (threads <= 1) {
        for (std::size_t p = 0; p < n_paths; ++p) body(p);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (n_paths + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk, hi = std::min(n_paths, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body]() {
            for (std::size_t p = lo; p < hi; ++p) body(p);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// Long-run average of the running cost G(X, zeta(X)) across paths.
/// Results are independent of the thread count: per-path outputs land in
/// a preallocated slot and the reduction is sequential.
inline SimEstimate estimate_long_run_cost(const ControlPolicy& policy,
                                          const ProblemSpec& spec,
                                          const PathConfig& config) {
    std::vector<PathAccumulator> accs(config.n_paths);
    detail::run_paths(config.n_paths, config.threads, [&](std::size_t p) {
        accs[p] = simulate_path(policy, spec, config, p);
    });
    SimEstimate est;
    est.n_paths = config.n_paths;
    est.seed = config.seed;
    est.dt = config.dt;
    double sum = 0.0, sum2 = 0.0;
    for (const auto& a : accs) {
        if (a.blown_up) ++est.flagged;
        sum += a.time_averaged_cost;
        sum2 += a.time_averaged_cost * a.time_averaged_cost;
    }
    const double n = static_cast<double>(config.n_paths);
    est.mean = sum / n;
    const double var = std::max(0.0, sum2 / n - est.mean * est.mean);
    est.stderr_ = std::sqrt(var / n);
    est.reliable = est.flagged <= 0.05 * n;
    return est;
}

// ---------------------------------------------------------------------------
// Stochastic representation check:
//   u(x) <= E[ int_0^tau (G - lambda*) dt ] + E[ u(X_tau) ]
// for start points outside the return set, tau the first entry time.
// ---------------------------------------------------------------------------

struct RepresentationPoint {
    double x0 = 0.0;
    double u_x0 = 0.0;
    double rhs_mean = 0.0;
    double rhs_stderr = 0.0;
    double return_fraction = 0.0;
    bool holds = false;
};

struct RepresentationReport {
    std::vector<RepresentationPoint> points;
    bool conclusive = true;
    bool all_hold = true;
};

inline RepresentationReport verify_representation(
    const GridFunction& u, double lambda_star, const ControlPolicy& policy,
    const ProblemSpec& spec, const PathConfig& config,
    const std::vector<double>& starts, double dt_allowance) {
    RepresentationReport rep;
    for (double x0 : starts) {
        std::vector<double> vals(config.n_paths, 0.0);
        std::vector<char> ok(config.n_paths, 0);
        detail::run_paths(config.n_paths, config.threads, [&](std::size_t p) {
            SplitMix64 rng(path_stream_seed(config.seed ^ 0x5bf0ul, p));
            double x = x0;
            double integral = 0.0;
            const auto steps = static_cast<std::size_t>(config.horizon_T / config.dt);
            for (std::size_t k = 0; k < steps; ++k) {
                if (std::abs(x) <= config.return_radius) {
                    vals[p] = integral + (u.inside(x) ? u.interp(x) : u.eval(x));
                    ok[p] = 1;
                    return;
                }
                const double z = policy.eval(x);
                integral += (spec.source.eval_original(x) +
                             eval_lagrangian(spec, x, z) - lambda_star) *
                            config.dt;
                x += -z * config.dt +
                     sample_stable_increment_1d(spec.s(), config.dt, rng);
                if (!(std::abs(x) < config.blowup_abort)) return;
            }
        });
        RepresentationPoint pt;
        pt.x0 = x0;
        pt.u_x0 = u.eval(x0);
        double sum = 0.0, sum2 = 0.0;
        std::size_t nret = 0;
        for (std::size_t p = 0; p < config.n_paths; ++p)
            if (ok[p]) {
                ++nret;
                sum += vals[p];
                sum2 += vals[p] * vals[p];
            }
        pt.return_fraction = static_cast<double>(nret) / config.n_paths;
        if (nret >= 2) {
            pt.rhs_mean = sum / nret;
            const double var = std::max(0.0, sum2 / nret - pt.rhs_mean * pt.rhs_mean);
            pt.rhs_stderr = std::sqrt(var / nret);
            pt.holds = pt.u_x0 <= pt.rhs_mean + 3.0 * pt.rhs_stderr + dt_allowance;
        }
        if (pt.return_fraction < 0.9) rep.conclusive = false;
        rep.all_hold = rep.all_hold && pt.holds;
        rep.points.push_back(pt);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Dynkin / martingale identity:
//   E[psi(X_t)] - psi(x0) = E[ int_0^t A_zeta psi(X_r) dr ],
//   A_zeta psi = -(-Delta)^s psi - zeta psi'.
// The operator side is evaluated by the grid quadrature on a wide grid and
// by a direct far-field formula beyond it.
// ---------------------------------------------------------------------------

struct DynkinReport {
    double lhs = 0.0;
    double lhs_stderr = 0.0;
    double rhs = 0.0;
    double rhs_stderr = 0.0;
    double tolerance = 0.0;
    bool holds = false;
};

inline DynkinReport dynkin_check(const ControlPolicy& policy,
                                 const ProblemSpec& spec, const GridFunction& psi,
                                 double t_end, const PathConfig& config) {
    // generator field on the grid
    const auto Ipsi = apply_operator_field(psi, spec.kernel);
    GridFunction Apsi(psi.xlo(), psi.h(), psi.size(), FarFieldModel::zero());
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double x = psi.x(i);
        const double Ival =
            (i >= Ipsi.first && i <= Ipsi.last) ? Ipsi.field[i] : 0.0;
        Apsi[i] = Ival - policy.eval(x) * psi.deriv(i);
    }
    // support data for the beyond-grid evaluation of I psi
    double psi_mass = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) psi_mass += psi[i] * psi.h();
    const double c = spec.kernel.c_ds();
    auto Apsi_at = [&](double x) {
        if (Apsi.inside(x)) return Apsi.interp(x);
        // psi = 0 far out; I psi(x) = int psi(z) K(z - x) dz over the support
        double v = 0.0;
        for (std::size_t i = 0; i < psi.size(); ++i) {
            if (psi[i] == 0.0) continue;
            const double r = std::abs(psi.x(i) - x);
            v += psi[i] * psi.h() * c * std::pow(r, -(1.0 + 2.0 * spec.s()));
        }
        (void)psi_mass;
        return v;
    };

    const auto steps = static_cast<std::size_t>(t_end / config.dt);
    std::vector<double> lhs_v(config.n_paths, 0.0), rhs_v(config.n_paths, 0.0);
    detail::run_paths(config.n_paths, config.threads, [&](std::size_t p) {
        SplitMix64 rng(path_stream_seed(config.seed ^ 0xd1ull, p));
        double x = config.x0;
        double integral = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            integral += Apsi_at(x) * config.dt;
            const double z = policy.eval(x);
            x += -z * config.dt +
                 sample_stable_increment_1d(spec.s(), config.dt, rng);
            if (!(std::abs(x) < config.blowup_abort)) break;
        }
        lhs_v[p] = psi.eval(x) - psi.eval(config.x0);
        rhs_v[p] = integral;
    });
    DynkinReport rep;
    double sl = 0.0, sl2 = 0.0, sr = 0.0, sr2 = 0.0;
    const double n = static_cast<double>(config.n_paths);
    for (std::size_t p = 0; p < config.n_paths; ++p) {
        sl += lhs_v[p];
        sl2 += lhs_v[p] * lhs_v[p];
        sr += rhs_v[p];
        sr2 += rhs_v[p] * rhs_v[p];
    }
    rep.lhs = sl / n;
    rep.rhs = sr / n;
    rep.lhs_stderr = std::sqrt(std::max(0.0, sl2 / n - rep.lhs * rep.lhs) / n);
    rep.rhs_stderr = std::sqrt(std::max(0.0, sr2 / n - rep.rhs * rep.rhs) / n);
    return rep;
}

}  // namespace nlhjb

#endif  // NLHJB_LEVY_HPP
