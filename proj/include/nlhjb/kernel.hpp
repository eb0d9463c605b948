// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NLHJB_KERNEL_HPP
#define NLHJB_KERNEL_HPP

#include <cmath>
#include <functional>
#include <stdexcept>

namespace nlhjb {

/// c_{d,s} = 4^s Gamma(d/2+s) / (pi^{d/2} |Gamma(-s)|).
/// |Gamma(-s)| is computed through the recurrence Gamma(-s) =
/// Gamma(2-s) / ((-s)(1-s)), which is regular on s in (0,1).
inline double normalizing_constant(int d, double s) {
    if (d < 1) throw std::invalid_argument("normalizing_constant: d >= 1 required");
    if (!(s > 0.0 && s < 1.0))
        throw std::invalid_argument("normalizing_constant: s in (0,1) required");
    const double abs_gamma_minus_s = std::tgamma(2.0 - s) / (s * (1.0 - s));
    return std::pow(4.0, s) * std::tgamma(0.5 * d + s) /
           (std::pow(M_PI, 0.5 * d) * abs_gamma_minus_s);
}

/// Jump kernel K(y). The default is the fractional Laplacian kernel
/// c_{d,s} |y|^{-(d+2s)}; Bounded wraps a symmetric modulation pinched
/// between lambda_low and lambda_high times the same power law.
struct KernelSpec {
    enum class Kind { FractionalLaplacian, Bounded };

    Kind kind = Kind::FractionalLaplacian;
    int d = 1;
    double s = 0.75;
    double lambda_low = 0.0;
    double lambda_high = 0.0;
    std::function<double(double)> modulation;  // Bounded only; symmetric in y

    static KernelSpec fractional_laplacian(int d, double s) {
        if (!(s > 0.0 && s < 1.0))
            throw std::invalid_argument("kernel: s in (0,1) required");
        KernelSpec k;
        k.kind = Kind::FractionalLaplacian;
        k.d = d;
        k.s = s;
        const double c = normalizing_constant(d, s);
        k.lambda_low = c;
        k.lambda_high = c;
        return k;
    }

    static KernelSpec bounded(int d, double s, double lo, double hi,
                              std::function<double(double)> mod) {
        if (!(s > 0.0 && s < 1.0) || !(lo > 0.0) || !(hi >= lo))
            throw std::invalid_argument("kernel: need s in (0,1), 0 < lo <= hi");
        KernelSpec k;
        k.kind = Kind::Bounded;
        k.d = d;
        k.s = s;
        k.lambda_low = lo;
        k.lambda_high = hi;
        k.modulation = std::move(mod);
        return k;
    }

    double c_ds() const { return normalizing_constant(d, s); }

    /// K(y) for y != 0.
    double operator()(double y) const {
        const double a = std::abs(y);
        const double pl = std::pow(a, -(d + 2.0 * s));
        if (kind == Kind::FractionalLaplacian) return lambda_low * pl;
        return modulation(y) * pl;
    }

    /// Amplitude multiplying |y|^{-(d+2s)} at y (exact for the default kernel).
    double amplitude(double y) const {
        return kind == Kind::FractionalLaplacian ? lambda_low : modulation(y);
    }

    bool is_power_law() const { return kind == Kind::FractionalLaplacian; }
};

}  // namespace nlhjb

#endif  // NLHJB_KERNEL_HPP
