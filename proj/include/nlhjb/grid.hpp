// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NLHJB_GRID_HPP
#define NLHJB_GRID_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlhjb {

/// How a grid function continues beyond the last node. The nonlocal
/// operator integrates over all of R, so every GridFunction carries an
/// explicit model of its values outside [-L, L].
struct FarFieldModel {
    enum class Kind { Zero, Constant, PowerGrowth, Periodic };

    Kind kind = Kind::Zero;
    double value = 0.0;   // Constant
    double amp = 0.0;     // PowerGrowth: amp * |x|^beta for |x| > anchor
    double beta = 0.0;
    double anchor = 1.0;
    double period = 0.0;  // Periodic

    static FarFieldModel zero() { return {}; }
    static FarFieldModel constant(double v) {
        FarFieldModel m;
        m.kind = Kind::Constant;
        m.value = v;
        return m;
    }
    static FarFieldModel power_growth(double amp, double beta, double anchor) {
        FarFieldModel m;
        m.kind = Kind::PowerGrowth;
        m.amp = amp;
        m.beta = beta;
        m.anchor = anchor;
        return m;
    }
    static FarFieldModel periodic(double period) {
        if (!(period > 0.0))
            throw std::invalid_argument("periodic far field needs period > 0");
        FarFieldModel m;
        m.kind = Kind::Periodic;
        m.period = period;
        return m;
    }

    std::string kind_name() const {
        switch (kind) {
        case Kind::Zero: return "zero";
        case Kind::Constant: return "constant";
        case Kind::PowerGrowth: return "power_growth";
        case Kind::Periodic: return "periodic";
        }
        return "?";
    }
};

/// Values on a uniform 1-D grid over [x0, x0 + (n-1) h] plus a far-field
/// model. Interior evaluation is piecewise cubic (4-point Lagrange), which
/// reproduces cubic polynomials exactly; the quadrature accuracy of the
/// nonlocal operator depends on that.
class GridFunction {
  public:
    GridFunction() = default;
    GridFunction(double x0, double h, std::size_t n,
                 FarFieldModel ff = FarFieldModel::zero())
        : x0_(x0), h_(h), v_(n, 0.0), ff_(ff) {
        if (!(h > 0.0) || n < 4)
            throw std::invalid_argument("GridFunction needs h > 0 and >= 4 nodes");
    }

    /// Symmetric grid on [-L, L] with spacing h (L must be a multiple of h).
    static GridFunction symmetric(double L, double h,
                                  FarFieldModel ff = FarFieldModel::zero()) {
        const auto half = static_cast<std::size_t>(std::llround(L / h));
        if (std::abs(half * h - L) > 1e-12 * (1.0 + L))
            throw std::invalid_argument("grid half-width must be a multiple of h");
        return GridFunction(-L, h, 2 * half + 1, ff);
    }

    std::size_t size() const { return v_.size(); }
    double h() const { return h_; }
    double x(std::size_t i) const { return x0_ + static_cast<double>(i) * h_; }
    double xlo() const { return x0_; }
    double xhi() const { return x(v_.size() - 1); }

    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }

    const FarFieldModel& farfield() const { return ff_; }
    FarFieldModel& farfield() { return ff_; }

    /// Index of the node nearest to x; throws if x is off-grid.
    std::size_t index_of(double x) const {
        const double t = (x - x0_) / h_;
        const auto i = static_cast<long long>(std::llround(t));
        if (i < 0 || i >= static_cast<long long>(v_.size()) ||
            std::abs(t - static_cast<double>(i)) > 1e-8)
            throw std::invalid_argument("x is not a grid node");
        return static_cast<std::size_t>(i);
    }

    bool inside(double x) const { return x >= xlo() && x <= xhi(); }

    /// Evaluate anywhere on R: cubic interpolation inside the grid,
    /// far-field model outside.
    double eval(double x) const {
        if (inside(x)) return interp(x);
        switch (ff_.kind) {
        case FarFieldModel::Kind::Zero: return 0.0;
        case FarFieldModel::Kind::Constant: return ff_.value;
        case FarFieldModel::Kind::PowerGrowth:
            return ff_.amp * std::pow(std::abs(x), ff_.beta);
        case FarFieldModel::Kind::Periodic: {
            const double T = ff_.period;
            double y = std::fmod(x - xlo(), T);
            if (y < 0.0) y += T;
            y += xlo();
            if (y > xhi()) y -= T;  // grid spans at least one period
            return interp(y);
        }
        }
        return 0.0;
    }

    /// Piecewise cubic interpolation; requires x in [xlo, xhi].
    double interp(double x) const {
        const std::size_t n = v_.size();
        const double t = (x - x0_) / h_;
        auto j = static_cast<long long>(std::floor(t));
        // 4-node stencil j0..j0+3 with x between nodes j0+1 and j0+2
        // (one-sided at the ends).
        long long j0 = j - 1;
        if (j0 < 0) j0 = 0;
        if (j0 > static_cast<long long>(n) - 4) j0 = static_cast<long long>(n) - 4;
        const double s = t - static_cast<double>(j0);
        const double s1 = s - 1.0, s2 = s - 2.0, s3 = s - 3.0;
        const double w0 = -s1 * s2 * s3 / 6.0;
        const double w1 = s * s2 * s3 / 2.0;
        const double w2 = -s * s1 * s3 / 2.0;
        const double w3 = s * s1 * s2 / 6.0;
        const auto k = static_cast<std::size_t>(j0);
        return w0 * v_[k] + w1 * v_[k + 1] + w2 * v_[k + 2] + w3 * v_[k + 3];
    }

    /// Centered first difference at node i (one-sided at the ends).
    double deriv(std::size_t i) const {
        const std::size_t n = v_.size();
        if (i == 0) return (v_[1] - v_[0]) / h_;
        if (i == n - 1) return (v_[n - 1] - v_[n - 2]) / h_;
        return (v_[i + 1] - v_[i - 1]) / (2.0 * h_);
    }

    /// Centered second difference at node i (interior only).
    double second_diff(std::size_t i) const {
        return (v_[i + 1] - 2.0 * v_[i] + v_[i - 1]) / (h_ * h_);
    }

    double min_value() const {
        double m = v_[0];
        for (double a : v_) m = std::min(m, a);
        return m;
    }
    double max_value() const {
        double m = v_[0];
        for (double a : v_) m = std::max(m, a);
        return m;
    }
    double osc() const { return max_value() - min_value(); }

    /// max over nodes with |x| <= R.
    double max_on_ball(double R) const {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < v_.size(); ++i)
            if (std::abs(x(i)) <= R + 1e-12) m = std::max(m, v_[i]);
        return m;
    }
    double min_on_ball(double R) const {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < v_.size(); ++i)
            if (std::abs(x(i)) <= R + 1e-12) m = std::min(m, v_[i]);
        return m;
    }

  private:
    double x0_ = 0.0;
    double h_ = 1.0;
    std::vector<double> v_;
    FarFieldModel ff_;
};

}  // namespace nlhjb

#endif  // NLHJB_GRID_HPP
