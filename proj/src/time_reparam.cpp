#include "snlab/time_reparam.hpp"

#include <cmath>

#include "snlab/errors.hpp"

namespace snlab {

double TimeReparam::lambda(double t) const {
    const double v = dphi(t);
    if (!(v > 0.0)) throw SingularReparamError("phi'(t) must be positive");
    return v;
}

TimeReparam TimeReparam::affine(double slope, double offset) {
    return {
        [=](double t) { return slope * t + offset; },
        [=](double) { return slope; },
        [](double) { return 0.0; },
        [](double) { return 0.0; },
    };
}

TimeReparam TimeReparam::moebius(double d, double e, double f, double g) {
    const double det = d * g - e * f;
    return {
        [=](double t) { return (d * t + e) / (f * t + g); },
        [=](double t) { const double q = f * t + g; return det / (q * q); },
        [=](double t) { const double q = f * t + g; return -2.0 * f * det / (q * q * q); },
        [=](double t) { const double q = f * t + g; return 6.0 * f * f * det / (q * q * q * q); },
    };
}

TimeReparam TimeReparam::power(int p) {
    return {
        [=](double t) { return std::pow(t, p); },
        [=](double t) { return p * std::pow(t, p - 1); },
        [=](double t) { return static_cast<double>(p) * (p - 1) * std::pow(t, p - 2); },
        [=](double t) { return static_cast<double>(p) * (p - 1) * (p - 2) * std::pow(t, p - 3); },
    };
}

double schwarzian(const TimeReparam& tp, double t) {
    const double d1 = tp.dphi(t);
    if (d1 == 0.0) throw SingularReparamError("Schwarzian undefined where phi' = 0");
    const double d2 = tp.d2phi(t);
    const double d3 = tp.d3phi(t);
    const double r = d2 / d1;
    return d3 / d1 - 1.5 * r * r;
}

TimeReparam compose(const TimeReparam& outer, const TimeReparam& inner) {
    auto f = outer;
    auto g = inner;
    return {
        [=](double t) { return f.phi(g.phi(t)); },
        [=](double t) { return f.dphi(g.phi(t)) * g.dphi(t); },
        [=](double t) {
            const double u = g.phi(t), u1 = g.dphi(t), u2 = g.d2phi(t);
            return f.d2phi(u) * u1 * u1 + f.dphi(u) * u2;
        },
        [=](double t) {
            const double u = g.phi(t), u1 = g.dphi(t), u2 = g.d2phi(t), u3 = g.d3phi(t);
            return f.d3phi(u) * u1 * u1 * u1 + 3.0 * f.d2phi(u) * u1 * u2 + f.dphi(u) * u3;
        },
    };
}

} // namespace snlab
