#ifndef SNLAB_SN_GROUP_HPP
#define SNLAB_SN_GROUP_HPP

#include <Eigen/Dense>

#include <functional>
#include <numeric>

#include "snlab/brinkmann.hpp"

namespace snlab {

/// Entries of the time-axis projective block D = [[d, e], [f, g]].
struct TimeMatrix {
    double d = 1.0, e = 0.0, f = 0.0, g = 1.0;
    double det() const { return d * g - e * f; }
};

/// Chronoprojective parameters (A, b, c, D, h, nu) subject to the
/// Schrodinger-Newton constraint:
///   dim != 4:  f = 0,  d = nu^{(dim-1)/(dim-4)},  g = nu^{-3/(dim-4)}
///   dim == 4:  nu = det D = 1.
/// nu > 0 always (mass positivity).  Construct through validate().
struct SNElement {
    int dim = 3;
    Eigen::MatrixXd A;        // O(d)
    Eigen::VectorXd boost;    // b
    Eigen::VectorXd shift;    // c
    TimeMatrix tm;
    double h = 0.0;
    double nu = 1.0;

    static SNElement identity(int dim);
    static SNElement rotation(const Eigen::MatrixXd& A);
    static SNElement boosted(const Eigen::VectorXd& b);
    static SNElement translation(const Eigen::VectorXd& c);
    static SNElement time_translation(int dim, double e);
    static SNElement dilation(int dim, double nu);
    static SNElement extension(int dim, double h);
    /// dim == 4 only: general projective time block with det = 1.
    static SNElement moebius(int dim, const TimeMatrix& tm);
};

/// Checks all invariants (orthogonality, nu = det D, the SN constraint,
/// nu > 0) with relative tolerance 1e-10 and absolute floor 1e-14; throws
/// ConstraintViolation naming the failed identity.
SNElement validate(const SNElement& raw);

struct ExtendedPoint {
    Eigen::VectorXd x;
    double t = 0.0;
    double s = 0.0;
};

/// The projective action on (x, t, s); ft + g = 0 raises
/// ProjectiveSingularityError.
ExtendedPoint act(const SNElement& el, const Eigen::VectorXd& x, double t, double s);
ExtendedPoint act(const SNElement& el, const ExtendedPoint& p);

/// Group law: act(compose(a, b), p) == act(a, act(b, p)).
SNElement compose(const SNElement& a, const SNElement& b);
SNElement inverse(const SNElement& a);

/// (d+3)x(d+3) faithful matrix embedding, dim != 4 only (the dim == 4 group
/// is a nontrivial central extension and has no such block form).
Eigen::MatrixXd matrix_rep(const SNElement& el);

struct ConformalFactors {
    std::function<double(double)> lambda_of_t;  // 1/(ft+g)^2
    double nu = 1.0;
};

ConformalFactors conformal_factors(const SNElement& el);

struct Rational {
    long num = 0;
    long den = 1;
    Rational() = default;
    Rational(long n, long d);
    bool operator==(const Rational&) const = default;
};

/// z = (dim+2)/3 as a reduced fraction.
Rational dynamical_exponent(int dim);

/// Transported potentials on the hatted time lattice  t_k -> (d t_k + e)/g:
///   omega_hat = lambda^{-1/2} nu^{-1} (omega . A^{-1}) o Phi^{-1}
///   U_hat     = lambda^{-1}  nu^{-2} (U + omega . A^{-1} b) o Phi^{-1}
/// Requires f = 0 (the paper's transport law is derived there); fields are
/// resampled through the grid interpolation rule.
BrinkmannData transform_potentials(const SNElement& el, const BrinkmannData& bd);

/// m -> nu m.
double transform_mass(const SNElement& el, double m);

} // namespace snlab

#endif
