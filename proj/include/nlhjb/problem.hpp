// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NLHJB_PROBLEM_HPP
#define NLHJB_PROBLEM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nlhjb/grid.hpp"
#include "nlhjb/kernel.hpp"

namespace nlhjb {

struct FractionalOrder {
    double s = 0.75;
    void validate() const {
        if (!(s > 0.5 && s < 1.0))
            throw std::invalid_argument("fractional order must satisfy 1/2 < s < 1");
    }
};

/// Hamiltonian H(x, p). PowerLaw is |p|^m / m with closed-form dual and
/// gradient; AnisotropicPower is (a(x) p^2)^{m/2} / m + b(x) p with the
/// dual recovered by numeric maximization.
struct HamiltonianSpec {
    enum class Kind { PowerLaw, AnisotropicPower };

    Kind kind = Kind::PowerLaw;
    double m = 2.0;
    double m_conj = 2.0;
    double kappa = 1.0;   // two-sided bound constant of the growth sandwich
    double b_m = 0.0;     // scaling-inequality constants
    double C_H3 = 0.0;
    std::function<double(double)> a;  // AnisotropicPower coefficient, a(x) > 0
    std::function<double(double)> b;  // AnisotropicPower drift field

    static HamiltonianSpec power_law(double m) {
        if (!(m > 1.0)) throw std::invalid_argument("hamiltonian: m > 1 required");
        HamiltonianSpec h;
        h.kind = Kind::PowerLaw;
        h.m = m;
        h.m_conj = m / (m - 1.0);
        h.kappa = std::max(1.0, m);
        // |p|^m/m obeys the scaling inequality with b_m = 1/m, C = 0.
        h.b_m = 1.0 / m;
        h.C_H3 = 0.0;
        return h;
    }

    static HamiltonianSpec anisotropic(double m, std::function<double(double)> a,
                                       std::function<double(double)> b,
                                       double kappa, double b_m, double C_H3) {
        if (!(m > 1.0)) throw std::invalid_argument("hamiltonian: m > 1 required");
        HamiltonianSpec h;
        h.kind = Kind::AnisotropicPower;
        h.m = m;
        h.m_conj = m / (m - 1.0);
        h.kappa = kappa;
        h.b_m = b_m;
        h.C_H3 = C_H3;
        h.a = std::move(a);
        h.b = std::move(b);
        return h;
    }
};

struct SourceTerm {
    enum class Kind { PowerGrowth, Tabulated };

    Kind kind = Kind::PowerGrowth;
    double c0 = 1.0;
    double gamma = 0.5;
    double shift = 0.0;  // additive normalization, recorded so lambda* can
                         // be reported in original units
    std::optional<GridFunction> core;  // optional tabulated override near 0
    std::optional<GridFunction> table; // Tabulated kind

    static SourceTerm power_growth(double c0, double gamma) {
        if (!(gamma >= 0.0)) throw std::invalid_argument("source: gamma >= 0 required");
        SourceTerm f;
        f.kind = Kind::PowerGrowth;
        f.c0 = c0;
        f.gamma = gamma;
        return f;
    }

    static SourceTerm tabulated(GridFunction values, double gamma) {
        SourceTerm f;
        f.kind = Kind::Tabulated;
        f.gamma = gamma;
        f.table = std::move(values);
        return f;
    }

    /// f in original units (before the normalization shift).
    double eval_original(double x) const {
        if (kind == Kind::Tabulated) return table->eval(x);
        if (core && core->inside(x)) return core->eval(x);
        return c0 * std::pow(std::abs(x), gamma);
    }

    /// Working f = original + shift.
    double eval(double x) const { return eval_original(x) + shift; }
};

enum class RegimeFlag { Existence, NonexistenceProbe };

struct ProblemSpec {
    FractionalOrder order;
    int dim = 1;
    HamiltonianSpec hamiltonian;
    SourceTerm source;
    KernelSpec kernel;
    std::vector<double> truncation_plan;
    RegimeFlag regime = RegimeFlag::Existence;

    double s() const { return order.s; }
    double m() const { return hamiltonian.m; }

    /// Growth threshold m(2s-1) separating existence from the divergence
    /// regime.
    double critical_gamma() const { return hamiltonian.m * (2.0 * order.s - 1.0); }

    RegimeFlag recompute_regime() const {
        return source.gamma < critical_gamma() ? RegimeFlag::Existence
                                               : RegimeFlag::NonexistenceProbe;
    }

    double max_radius() const {
        double r = 1.0;
        for (double n : truncation_plan) r = std::max(r, n);
        return r;
    }
};

// ---------------------------------------------------------------------------
// Evaluation of H, grad_p H, the Lagrangian and the running cost.
// ---------------------------------------------------------------------------

inline double eval_H(const ProblemSpec& spec, double x, double p) {
    const auto& ham = spec.hamiltonian;
    if (ham.kind == HamiltonianSpec::Kind::PowerLaw)
        return std::pow(std::abs(p), ham.m) / ham.m;
    const double ax = ham.a(x);
    if (!(ax > 0.0))
        throw std::invalid_argument("anisotropic coefficient must be positive");
    return std::pow(ax * p * p, 0.5 * ham.m) / ham.m + ham.b(x) * p;
}

inline double eval_grad_pH(const ProblemSpec& spec, double x, double p) {
    const auto& ham = spec.hamiltonian;
    if (ham.kind == HamiltonianSpec::Kind::PowerLaw) {
        if (p == 0.0) return 0.0;
        return std::pow(std::abs(p), ham.m - 2.0) * p;
    }
    const double ax = ham.a(x);
    if (!(ax > 0.0))
        throw std::invalid_argument("anisotropic coefficient must be positive");
    if (p == 0.0) return ham.b(x);
    return std::pow(ax, 0.5 * ham.m) * std::pow(std::abs(p), ham.m - 2.0) * p +
           ham.b(x);
}

namespace detail {

/// Maximize a concave 1-D function by coarse scan plus golden-section
/// refinement on the bracketing interval.
template <class F>
inline double golden_max(F&& f, double lo, double hi, int iters = 80) {
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

}  // namespace detail

/// Legendre transform l(x, xi) = sup_p { p xi - H(x, p) }. Closed form for
/// the power-law model; numeric maximization otherwise.
inline double eval_lagrangian(const ProblemSpec& spec, double x, double xi) {
    const auto& ham = spec.hamiltonian;
    if (ham.kind == HamiltonianSpec::Kind::PowerLaw)
        return std::pow(std::abs(xi), ham.m_conj) / ham.m_conj;
    // The maximizer satisfies grad_p H(x, p*) = xi; bracket it by growth.
    auto g = [&](double p) { return p * xi - eval_H(spec, x, p); };
    const double span = 1.0 + std::pow(std::abs(xi) + 1.0, ham.m_conj - 1.0) * 10.0;
    double best = g(0.0);
    double plo = -span, phi = span;
    const int nscan = 65;
    double pbest = 0.0;
    for (int i = 0; i < nscan; ++i) {
        const double p = plo + (phi - plo) * i / (nscan - 1.0);
        const double v = g(p);
        if (v > best) {
            best = v;
            pbest = p;
        }
    }
    const double w = (phi - plo) / (nscan - 1.0);
    const double p = detail::golden_max(g, pbest - w, pbest + w);
    return std::max(best, g(p));
}

/// Running cost G(x, xi) = f(x) + l(x, xi), in original f units.
inline double eval_running_cost(const ProblemSpec& spec, double x, double xi) {
    return spec.source.eval_original(x) + eval_lagrangian(spec, x, xi);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationEntry {
    std::string name;
    bool pass = false;
    std::string witness;  // point of failure or fitted constant
    double metric = 0.0;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;
    RegimeFlag regime = RegimeFlag::Existence;

    bool all_pass() const {
        return std::all_of(entries.begin(), entries.end(),
                           [](const ValidationEntry& e) { return e.pass; });
    }
    const ValidationEntry* find(const std::string& n) const {
        for (const auto& e : entries)
            if (e.name == n) return &e;
        return nullptr;
    }
};

namespace detail {

inline std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> v;
    v.reserve(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
        v.push_back(std::exp(llo + (lhi - llo) * i / (n - 1.0)));
    return v;
}

inline std::string point_str(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

}  // namespace detail

/// Slack report for the rescaling inequality
///   mu H(x, p/mu) - H(x, p) >= (1 - mu)(b_m |p|^m - C)
/// over random (x, p, mu) tuples.
struct H3Report {
    bool pass = true;
    double min_slack = std::numeric_limits<double>::infinity();
    double worst_x = 0.0, worst_p = 0.0, worst_mu = 0.0;
};

inline H3Report check_H3_inequality(const ProblemSpec& spec, int samples,
                                    std::uint64_t rng_seed) {
    H3Report rep;
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double xmax = 2.0 * spec.max_radius();
    const auto& ham = spec.hamiltonian;
    for (int k = 0; k < samples; ++k) {
        const double x = (2.0 * uni(rng) - 1.0) * xmax;
        // log-spaced magnitudes, both signs, plus exact zero now and then
        double p = 0.0;
        if (k % 16 != 0) {
            const double mag = std::pow(10.0, -4.0 + 7.0 * uni(rng));
            p = (uni(rng) < 0.5 ? -1.0 : 1.0) * mag;
        }
        const double mu = std::min(1.0 - 1e-12, std::max(1e-6, uni(rng)));
        const double lhs = mu * eval_H(spec, x, p / mu) - eval_H(spec, x, p);
        const double rhs =
            (1.0 - mu) * (ham.b_m * std::pow(std::abs(p), ham.m) - ham.C_H3);
        const double slack = lhs - rhs;
        if (slack < rep.min_slack) {
            rep.min_slack = slack;
            rep.worst_x = x;
            rep.worst_p = p;
            rep.worst_mu = mu;
        }
    }
    rep.pass = rep.min_slack >= -1e-9;
    return rep;
}

/// Spot-checks the standing assumptions on sample grids and recomputes the
/// regime flag. Malformed specs (s or m out of range) throw.
inline ValidationReport validate_spec(const ProblemSpec& spec) {
    spec.order.validate();
    if (!(spec.hamiltonian.m > 1.0))
        throw std::invalid_argument("hamiltonian exponent m must exceed 1");
    if (spec.dim != 1 && spec.dim != 2)
        throw std::invalid_argument("dim must be 1 or 2");
    if (spec.truncation_plan.empty())
        throw std::invalid_argument("truncation plan must not be empty");
    for (std::size_t i = 1; i < spec.truncation_plan.size(); ++i)
        if (!(spec.truncation_plan[i] > spec.truncation_plan[i - 1]))
            throw std::invalid_argument("truncation radii must increase");

    ValidationReport rep;
    const double xmax = 2.0 * spec.max_radius();
    const auto xs = detail::log_spaced(1e-3, xmax, 48);
    const auto ps = detail::log_spaced(1e-4, 1e3, 48);

    // conjugate exponent identity
    {
        ValidationEntry e;
        e.name = "conjugate_exponent";
        const double err =
            std::abs(1.0 / spec.hamiltonian.m + 1.0 / spec.hamiltonian.m_conj - 1.0);
        e.pass = err <= 1e-14;
        e.metric = err;
        rep.entries.push_back(e);
    }

    // (F1): |f| <= C (1 + |x|^gamma) with the declared growth
    {
        ValidationEntry e;
        e.name = "F1_growth";
        double C = 0.0;
        for (double x : xs)
            for (double sgn : {-1.0, 1.0}) {
                const double fx = std::abs(spec.source.eval(sgn * x));
                C = std::max(C, fx / (1.0 + std::pow(x, spec.source.gamma)));
            }
        e.pass = std::isfinite(C);
        e.metric = C;
        e.witness = "fitted C";
        rep.entries.push_back(e);
    }

    // (F2): coercivity along the sampled radii
    {
        ValidationEntry e;
        e.name = "F2_coercive";
        const double f_mid = spec.source.eval(0.25 * xmax);
        const double f_far = spec.source.eval(xmax);
        bool increasing = true;
        for (std::size_t i = xs.size() / 2; i + 1 < xs.size(); ++i)
            if (spec.source.eval(xs[i + 1]) < spec.source.eval(xs[i]) - 1e-12) {
                increasing = false;
                e.witness = detail::point_str(xs[i]);
            }
        e.pass = increasing && f_far > f_mid;
        e.metric = f_far - f_mid;
        rep.entries.push_back(e);
    }

    // (H2'): kappa^{-1}|p|^m - kappa <= H(x,p) <= kappa(1 + |p|^m)
    {
        ValidationEntry e;
        e.name = "H2_sandwich";
        e.pass = true;
        const double kap = spec.hamiltonian.kappa;
        double min_slack = std::numeric_limits<double>::infinity();
        for (double x : xs)
            for (double p : ps)
                for (double sgn : {-1.0, 1.0}) {
                    const double pm = std::pow(p, spec.hamiltonian.m);
                    const double H = eval_H(spec, x, sgn * p);
                    const double lo = pm / kap - kap;
                    const double hi = kap * (1.0 + pm);
                    min_slack = std::min({min_slack, H - lo, hi - H});
                    if (H - lo < -1e-9 || hi - H < -1e-9) {
                        e.pass = false;
                        e.witness = "x=" + detail::point_str(x) +
                                    " p=" + detail::point_str(sgn * p);
                    }
                }
        e.metric = min_slack;
        rep.entries.push_back(e);
    }

    // (H1'): structural Lipschitz bound; reports the fitted constant
    {
        ValidationEntry e;
        e.name = "H1_structure";
        double C = 0.0;
        std::mt19937_64 rng(12345);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        for (int k = 0; k < 2000; ++k) {
            const double x = uni(rng) * xmax, y = uni(rng) * xmax;
            const double p = uni(rng) * 50.0, q = uni(rng) * 10.0;
            const double num = std::abs(eval_H(spec, x, p + q) - eval_H(spec, y, p));
            const double pm = std::pow(std::abs(p), spec.hamiltonian.m);
            const double den =
                std::abs(x - y) * (1.0 + pm) +
                std::abs(q) * (std::pow(std::abs(p), spec.hamiltonian.m - 1.0) +
                               std::pow(std::abs(q), spec.hamiltonian.m - 1.0));
            if (den > 1e-12) C = std::max(C, num / den);
        }
        e.pass = std::isfinite(C);
        e.metric = C;
        e.witness = "fitted C";
        rep.entries.push_back(e);
    }

    // (H3) sampled rescaling inequality
    {
        const H3Report h3 = check_H3_inequality(spec, 4000, 777);
        ValidationEntry e;
        e.name = "H3_rescaling";
        e.pass = h3.pass;
        e.metric = h3.min_slack;
        if (!h3.pass)
            e.witness = "x=" + detail::point_str(h3.worst_x) +
                        " p=" + detail::point_str(h3.worst_p) +
                        " mu=" + detail::point_str(h3.worst_mu);
        rep.entries.push_back(e);
    }

    // regime flag consistency
    {
        ValidationEntry e;
        e.name = "regime_flag";
        rep.regime = spec.recompute_regime();
        e.pass = rep.regime == spec.regime;
        e.metric = spec.source.gamma - spec.critical_gamma();
        if (!e.pass) e.witness = "declared flag disagrees with (gamma, m, s)";
        rep.entries.push_back(e);
    }

    return rep;
}

/// Chooses source.shift so that H(x, 0) <= f(x) on the sample grid,
/// enabling the zero subsolution. Idempotent: a second call adds nothing.
inline ProblemSpec normalize_source(const ProblemSpec& spec) {
    ProblemSpec out = spec;
    const double xmax = 2.0 * spec.max_radius();
    double sup = -std::numeric_limits<double>::infinity();
    const int n = 4001;
    for (int i = 0; i < n; ++i) {
        const double x = -xmax + 2.0 * xmax * i / (n - 1.0);
        sup = std::max(sup, eval_H(spec, x, 0.0) - spec.source.eval(x));
    }
    if (sup > 0.0) out.source.shift += sup + 1e-6;
    out.regime = out.recompute_regime();
    return out;
}

}  // namespace nlhjb

#endif  // NLHJB_PROBLEM_HPP
