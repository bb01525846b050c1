#include "snlab/sn_group.hpp"

#include <cmath>
#include <string>

#include "snlab/grid_ops.hpp"

namespace snlab {

namespace {

constexpr double rel_tol = 1e-10;
constexpr double abs_floor = 1e-14;

bool close(double a, double b) {
    return std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

double sigma_shift(const SNElement& el, const Eigen::VectorXd& x, double t) {
    const double den = el.tm.f * t + el.tm.g;
    const Eigen::VectorXd num = el.A * x + el.boost * t + el.shift;
    return 0.5 * el.tm.f * num.squaredNorm() / den - el.boost.dot(el.A * x)
           - 0.5 * el.boost.squaredNorm() * t + el.h;
}

// Regular evaluation time for the sigma-matching of the h parameter: keeps
// all three projective denominators away from zero.
double pick_regular_time(const SNElement& a, const SNElement& b, const SNElement& ab) {
    const double candidates[] = {0.0, 1.0, -1.0, 0.5, -0.5, 2.0, -2.0, 3.0, -3.0};
    double best_t = 0.0, best_score = -1.0;
    for (double t0 : candidates) {
        const double d1 = std::abs(b.tm.f * t0 + b.tm.g);
        if (d1 < 1e-12) continue;
        const double tb = (b.tm.d * t0 + b.tm.e) / (b.tm.f * t0 + b.tm.g);
        const double d2 = std::abs(a.tm.f * tb + a.tm.g);
        const double d3 = std::abs(ab.tm.f * t0 + ab.tm.g);
        const double score = std::min({d1, d2, d3});
        if (score > best_score) { best_score = score; best_t = t0; }
    }
    if (best_score <= 0.0)
        throw ProjectiveSingularityError("no regular time found for composition");
    return best_t;
}

SNElement base_element(int dim) {
    SNElement el;
    el.dim = dim;
    el.A = Eigen::MatrixXd::Identity(dim, dim);
    el.boost = Eigen::VectorXd::Zero(dim);
    el.shift = Eigen::VectorXd::Zero(dim);
    return el;
}

} // namespace

SNElement SNElement::identity(int dim) { return validate(base_element(dim)); }

SNElement SNElement::rotation(const Eigen::MatrixXd& A) {
    SNElement el = base_element(static_cast<int>(A.rows()));
    el.A = A;
    return validate(el);
}

SNElement SNElement::boosted(const Eigen::VectorXd& b) {
    SNElement el = base_element(static_cast<int>(b.size()));
    el.boost = b;
    return validate(el);
}

SNElement SNElement::translation(const Eigen::VectorXd& c) {
    SNElement el = base_element(static_cast<int>(c.size()));
    el.shift = c;
    return validate(el);
}

SNElement SNElement::time_translation(int dim, double e) {
    SNElement el = base_element(dim);
    el.tm.e = e;
    return validate(el);
}

SNElement SNElement::dilation(int dim, double nu) {
    if (dim == 4)
        throw ConstraintViolation("dim 4 admits no nu != 1 dilation; use a moebius element");
    SNElement el = base_element(dim);
    el.nu = nu;
    el.tm.d = std::pow(nu, static_cast<double>(dim - 1) / (dim - 4));
    el.tm.g = std::pow(nu, -3.0 / (dim - 4));
    return validate(el);
}

SNElement SNElement::extension(int dim, double h) {
    SNElement el = base_element(dim);
    el.h = h;
    return validate(el);
}

SNElement SNElement::moebius(int dim, const TimeMatrix& tm) {
    SNElement el = base_element(dim);
    el.tm = tm;
    el.nu = tm.det();
    return validate(el);
}

SNElement validate(const SNElement& raw) {
    const int dim = raw.dim;
    if (dim < 1) throw ConstraintViolation("spatial dimension must be >= 1");
    if (raw.A.rows() != dim || raw.A.cols() != dim ||
        raw.boost.size() != dim || raw.shift.size() != dim)
        throw ConstraintViolation("parameter shapes do not match the dimension");

    const double orth = (raw.A.transpose() * raw.A
                         - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff();
    if (orth > 1e-12)
        throw ConstraintViolation("A^T A = I violated (max deviation " + std::to_string(orth) + ")");

    const double det = raw.tm.det();
    if (!(raw.nu > 0.0))
        throw ConstraintViolation("nu must be positive (mass positivity)");
    if (!close(raw.nu, det))
        throw ConstraintViolation("nu = dg - ef violated");

    if (dim != 4) {
        if (std::abs(raw.tm.f) > 1e-12)
            throw ConstraintViolation("f must vanish for dim != 4 (time inversions are excluded)");
        const double want_d = std::pow(raw.nu, static_cast<double>(dim - 1) / (dim - 4));
        const double want_g = std::pow(raw.nu, -3.0 / (dim - 4));
        if (!close(raw.tm.d, want_d))
            throw ConstraintViolation("d = nu^{(dim-1)/(dim-4)} violated");
        if (!close(raw.tm.g, want_g))
            throw ConstraintViolation("g = nu^{-3/(dim-4)} violated");
        // lambda^{2-dim/2} nu^3 = 1 is implied; check it anyway as the
        // defining identity of the group
        const double lam = 1.0 / (raw.tm.g * raw.tm.g);
        const double cons = std::pow(lam, 2.0 - dim / 2.0) * std::pow(raw.nu, 3.0);
        if (!close(cons, 1.0))
            throw ConstraintViolation("lambda^{2-d/2} nu^3 = 1 violated");
    } else {
        if (!close(raw.nu, 1.0) || !close(det, 1.0))
            throw ConstraintViolation("dim 4 requires nu = det D = 1");
    }
    return raw;
}

ExtendedPoint act(const SNElement& el, const Eigen::VectorXd& x, double t, double s) {
    if (x.size() != el.dim) throw ShapeError("point dimension mismatch in act");
    const double den = el.tm.f * t + el.tm.g;
    if (den == 0.0) throw ProjectiveSingularityError("ft + g = 0 at the requested time");
    const Eigen::VectorXd num = el.A * x + el.boost * t + el.shift;
    ExtendedPoint out;
    out.x = num / den;
    out.t = (el.tm.d * t + el.tm.e) / den;
    out.s = (s + 0.5 * el.tm.f * num.squaredNorm() / den - el.boost.dot(el.A * x)
             - 0.5 * el.boost.squaredNorm() * t + el.h) / el.nu;
    return out;
}

ExtendedPoint act(const SNElement& el, const ExtendedPoint& p) {
    return act(el, p.x, p.t, p.s);
}

SNElement compose(const SNElement& a, const SNElement& b) {
    if (a.dim != b.dim) throw ShapeError("cannot compose elements of different dimension");
    SNElement out;
    out.dim = a.dim;
    out.A = a.A * b.A;
    out.boost = a.A * b.boost + a.boost * b.tm.d + a.shift * b.tm.f;
    out.shift = a.A * b.shift + a.boost * b.tm.e + a.shift * b.tm.g;
    out.tm.d = a.tm.d * b.tm.d + a.tm.e * b.tm.f;
    out.tm.e = a.tm.d * b.tm.e + a.tm.e * b.tm.g;
    out.tm.f = a.tm.f * b.tm.d + a.tm.g * b.tm.f;
    out.tm.g = a.tm.f * b.tm.e + a.tm.g * b.tm.g;
    out.nu = a.nu * b.nu;

    if (a.dim != 4) {
        // matrix-group law for the central parameter
        out.h = b.h + b.nu * a.h - b.tm.d * a.boost.dot(a.A * b.shift)
                - 0.5 * b.tm.d * b.tm.e * a.boost.squaredNorm();
    } else {
        out.h = 0.0;
        const double t0 = pick_regular_time(a, b, out);
        const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(a.dim);
        const ExtendedPoint pb = act(b, x0, t0, 0.0);
        const double target = sigma_shift(b, x0, t0) + b.nu * sigma_shift(a, pb.x, pb.t);
        out.h = target - sigma_shift(out, x0, t0);
    }
    return validate(out);
}

SNElement inverse(const SNElement& a) {
    SNElement out;
    out.dim = a.dim;
    out.A = a.A.transpose();
    const double det = a.tm.det();
    out.tm.d = a.tm.g / det;
    out.tm.e = -a.tm.e / det;
    out.tm.f = -a.tm.f / det;
    out.tm.g = a.tm.d / det;
    out.boost = -(out.A * (a.boost * out.tm.d + a.shift * out.tm.f));
    out.shift = -(out.A * (a.boost * out.tm.e + a.shift * out.tm.g));
    out.nu = 1.0 / a.nu;

    if (a.dim != 4) {
        out.h = (0.5 * a.tm.e / a.tm.d * a.boost.squaredNorm()
                 - a.boost.dot(a.shift) - a.h) / a.nu;
    } else {
        out.h = 0.0;
        const double t0 = pick_regular_time(a, out, SNElement::identity(a.dim));
        const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(a.dim);
        const ExtendedPoint po = act(out, x0, t0, 0.0);
        out.h = -(sigma_shift(out, x0, t0) + out.nu * sigma_shift(a, po.x, po.t));
    }
    return validate(out);
}

Eigen::MatrixXd matrix_rep(const SNElement& el) {
    if (el.dim == 4)
        throw ConstraintViolation("matrix embedding unavailable for dim 4 (central extension)");
    const int d = el.dim;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d + 3, d + 3);
    M.topLeftCorner(d, d) = el.A;
    M.block(0, d, d, 1) = el.boost;
    M.block(0, d + 2, d, 1) = el.shift;
    M(d, d) = el.tm.d;
    M(d, d + 2) = el.tm.e;
    M.block(d + 1, 0, 1, d) = -(el.boost.transpose() * el.A) / el.tm.d;
    M(d + 1, d) = -el.boost.squaredNorm() / (2.0 * el.tm.d);
    M(d + 1, d + 1) = 1.0 / el.tm.d;
    M(d + 1, d + 2) = el.h / el.tm.d;
    M(d + 2, d + 2) = el.tm.g;
    return M;
}

ConformalFactors conformal_factors(const SNElement& el) {
    ConformalFactors cf;
    const double f = el.tm.f, g = el.tm.g;
    cf.lambda_of_t = [f, g](double t) {
        const double den = f * t + g;
        if (den == 0.0) throw ProjectiveSingularityError("lambda undefined where ft + g = 0");
        return 1.0 / (den * den);
    };
    cf.nu = el.nu;
    return cf;
}

Rational::Rational(long n, long d) : num(n), den(d) {
    if (den == 0) throw Error("rational with zero denominator");
    if (den < 0) { num = -num; den = -den; }
    const long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
}

Rational dynamical_exponent(int dim) {
    if (dim < 1) throw ConstraintViolation("dimension must be >= 1");
    return Rational(dim + 2, 3);
}

BrinkmannData transform_potentials(const SNElement& el, const BrinkmannData& bd) {
    if (el.dim != bd.grid.dim) throw ShapeError("element/grid dimension mismatch");
    if (std::abs(el.tm.f) > 1e-12)
        throw ConfigError("potential transport requires f = 0 (no time inversion)");

    const double lam = 1.0 / (el.tm.g * el.tm.g);
    const double pot_scale = 1.0 / (lam * el.nu * el.nu);
    const double cor_scale = 1.0 / (std::sqrt(lam) * el.nu);
    const int d = el.dim;
    const Eigen::VectorXd Atb = el.A.transpose() * el.boost;
    const bool identity_A =
        (el.A - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-14;

    std::vector<double> hat_times;
    std::vector<RealField> hat_U;
    std::vector<VectorField> hat_om;
    for (int k = 0; k < bd.n_times(); ++k) {
        const double t = bd.times[k];
        hat_times.push_back((el.tm.d * t + el.tm.e) / el.tm.g);
        // x* = A^T (g x - t b - c)
        const Eigen::VectorXd off = -(el.A.transpose() * (el.boost * t + el.shift));

        RealField Ustar(bd.grid);
        std::vector<RealField> omstar;
        if (identity_A) {
            std::vector<double> scale(static_cast<std::size_t>(d), el.tm.g);
            std::vector<double> shift(off.data(), off.data() + d);
            Ustar = resample_affine(bd.potential[k], scale, shift);
            for (int j = 0; j < d; ++j)
                omstar.push_back(resample_affine(bd.coriolis[k].comps[j], scale, shift));
        } else {
            Eigen::MatrixXd At = el.A.transpose() * el.tm.g;
            auto map = [&](std::span<const double> xin, std::span<double> xout) {
                for (int i = 0; i < d; ++i) {
                    double s = off[i];
                    for (int j = 0; j < d; ++j) s += At(i, j) * xin[j];
                    xout[i] = s;
                }
            };
            Ustar = resample_map(bd.potential[k], map);
            for (int j = 0; j < d; ++j)
                omstar.push_back(resample_map(bd.coriolis[k].comps[j], map));
        }

        RealField Uh(bd.grid);
        VectorField omh(bd.grid);
        for (std::size_t p = 0; p < Uh.size(); ++p) {
            double omAb = 0.0;
            for (int j = 0; j < d; ++j) omAb += omstar[j].values[p] * Atb[j];
            Uh.values[p] = pot_scale * (Ustar.values[p] + omAb);
            for (int i = 0; i < d; ++i) {
                double s = 0.0;
                for (int j = 0; j < d; ++j) s += el.A(i, j) * omstar[j].values[p];
                omh.comps[i].values[p] = cor_scale * s;
            }
        }
        hat_U.push_back(std::move(Uh));
        hat_om.push_back(std::move(omh));
    }
    return BrinkmannData(bd.grid, std::move(hat_times), std::move(hat_U), std::move(hat_om),
                         bd.constants);
}

double transform_mass(const SNElement& el, double m) {
    if (!(m > 0.0)) throw ConfigError("mass must be positive");
    return el.nu * m;
}

} // namespace snlab
