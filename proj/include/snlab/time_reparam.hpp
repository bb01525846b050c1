#ifndef SNLAB_TIME_REPARAM_HPP
#define SNLAB_TIME_REPARAM_HPP

#include <functional>

namespace snlab {

/// Orientation-preserving reparametrization of the time axis, carried as a
/// closed-form callable with its first three derivatives (the Schwarzian is
/// too noise-sensitive for numerical thirds).
struct TimeReparam {
    std::function<double(double)> phi;
    std::function<double(double)> dphi;
    std::function<double(double)> d2phi;
    std::function<double(double)> d3phi;

    /// lambda(t) = phi'(t); throws SingularReparamError if phi' <= 0.
    double lambda(double t) const;

    static TimeReparam affine(double slope, double offset);
    static TimeReparam moebius(double d, double e, double f, double g);
    static TimeReparam power(int exponent);
};

/// S(phi) = phi'''/phi' - (3/2)(phi''/phi')^2.
double schwarzian(const TimeReparam& tp, double t);

/// Chain-rule composition (outer after inner): phi = outer o inner.
TimeReparam compose(const TimeReparam& outer, const TimeReparam& inner);

} // namespace snlab

#endif
