#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "snlab/curvature.hpp"
#include "snlab/grid_ops.hpp"
#include "snlab/poisson.hpp"
#include "snlab/time_reparam.hpp"

using namespace snlab;

namespace {

const PhysicalConstants pc3(1.0, 1.0, 3);

BrinkmannData make_data(const GridSpec& g, double t0, double dt, int nt,
                        const std::function<double(std::span<const double>, double)>& U,
                        const std::function<void(std::span<const double>, double,
                                                 std::span<double>)>& om) {
    return BrinkmannData::from_functions(g, pc3, t0, dt, nt, U, om);
}

auto zero_omega = [](std::span<const double>, double, std::span<double> w) {
    for (double& v : w) v = 0.0;
};

} // namespace

TEST_CASE("christoffel closed form: flat") {
    GridSpec g(3, 0.6, 12, Boundary::zero_padded);
    BrinkmannData bd = make_data(g, 0.0, 0.05, 5,
                                 [](std::span<const double>, double) { return 0.0; }, zero_omega);
    SpacetimePoint p{{5, 6, 5}, 2};
    ChristoffelTable tab = christoffel_closed(bd, p);
    for (int a = 0; a < 5; ++a)
        for (int mu = 0; mu < 5; ++mu)
            for (int nu = 0; nu < 5; ++nu) CHECK(std::abs(tab.at(a, mu, nu)) < 1e-14);
}

TEST_CASE("christoffel closed form: harmonic potential") {
    GridSpec g(3, 0.6, 12, Boundary::zero_padded);
    BrinkmannData bd = make_data(g, 0.0, 0.05, 5,
                                 [](std::span<const double> x, double) {
                                     return 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                                 },
                                 zero_omega);
    SpacetimePoint p{{4, 7, 5}, 2};
    std::vector<double> x(3);
    g.node_coords(p.node, x);
    ChristoffelTable tab = christoffel_closed(bd, p);
    const int t = 3, s = 4;
    for (int i = 0; i < 3; ++i) {
        CHECK(tab.at(i, t, t) == doctest::Approx(x[i]).epsilon(1e-10));
        CHECK(tab.at(s, i, t) == doctest::Approx(-x[i]).epsilon(1e-10));
        for (int j = 0; j < 3; ++j) {
            CHECK(std::abs(tab.at(i, j, t)) < 1e-12);
            CHECK(std::abs(tab.at(s, i, j)) < 1e-12);
        }
    }
    CHECK(std::abs(tab.at(s, t, t)) < 1e-12);
}

TEST_CASE("christoffel closed form: rigid rotation") {
    const double Om0 = 0.8;
    GridSpec g(3, 0.6, 12, Boundary::zero_padded);
    BrinkmannData bd = make_data(g, 0.0, 0.05, 5,
                                 [](std::span<const double>, double) { return 0.0; },
                                 [Om0](std::span<const double> x, double, std::span<double> w) {
                                     w[0] = -0.5 * Om0 * x[1];
                                     w[1] = 0.5 * Om0 * x[0];
                                     w[2] = 0.0;
                                 });
    SpacetimePoint p{{5, 5, 6}, 2};
    ChristoffelTable tab = christoffel_closed(bd, p);
    const int t = 3, s = 4;
    CHECK(tab.at(0, 1, t) == doctest::Approx(-0.5 * Om0).epsilon(1e-10));
    CHECK(tab.at(1, 0, t) == doctest::Approx(0.5 * Om0).epsilon(1e-10));
    // symmetrized derivative of a rigid rotation vanishes
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(std::abs(tab.at(s, i, j)) < 1e-12);
}

TEST_CASE("stencil margin errors") {
    GridSpec g(3, 0.6, 12, Boundary::zero_padded);
    BrinkmannData bd = make_data(g, 0.0, 0.05, 5,
                                 [](std::span<const double>, double) { return 0.0; }, zero_omega);
    CHECK_THROWS_AS(christoffel_closed(bd, SpacetimePoint{{0, 5, 5}, 2}), StencilError);
    CHECK_THROWS_AS(ricci_fd(bd, SpacetimePoint{{5, 5, 5}, 1}), StencilError);
    CHECK_THROWS_AS(ricci_fd(bd, SpacetimePoint{{3, 5, 5}, 2}), StencilError);
}

TEST_CASE("ricci finite-difference oracle: basic fields") {
    GridSpec g(3, 0.75, 16, Boundary::zero_padded);

    // flat
    BrinkmannData flat = make_data(g, 0.0, 0.05, 1,
                                   [](std::span<const double>, double) { return 0.0; },
                                   zero_omega);
    SpacetimePoint p{{7, 8, 7}, 0};
    CHECK(ricci_fd(flat, p).cwiseAbs().maxCoeff() < 1e-8);

    // harmonic potential: Ric = (lap U) dt x dt = 3 dt x dt
    BrinkmannData harm = make_data(g, 0.0, 0.05, 1,
                                   [](std::span<const double> x, double) {
                                       return 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                                   },
                                   zero_omega);
    Eigen::MatrixXd ric = ricci_fd(harm, p);
    CHECK(ric(3, 3) == doctest::Approx(3.0).epsilon(1e-6));
    ric(3, 3) = 0.0;
    CHECK(ric.cwiseAbs().maxCoeff() < 1e-6);

    // harmonic in the weak sense: lap(x1^2 - x2^2) = 0, a vacuum profile
    BrinkmannData vac = make_data(g, 0.0, 0.05, 1,
                                  [](std::span<const double> x, double) {
                                      return x[0] * x[0] - x[1] * x[1];
                                  },
                                  zero_omega);
    CHECK(ricci_fd(vac, p).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("oracle agreement and scalar flatness on random smooth data") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> amp(0.0, 0.4);
    GridSpec g(3, 0.75, 18, Boundary::zero_padded);
    for (int trial = 0; trial < 4; ++trial) {
        const double a0 = amp(rng), a1 = amp(rng), a2 = amp(rng), a3 = amp(rng);
        const double b0 = amp(rng), b1 = amp(rng);
        auto U = [=](std::span<const double> x, double t) {
            const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            return a0 * std::exp(-0.4 * r2) * (1.0 + a1 * t) + a2 * x[0] * x[1] + a3 * x[2];
        };
        auto om = [=](std::span<const double> x, double t, std::span<double> w) {
            const double gsn = std::exp(-0.3 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
            w[0] = -b0 * x[1] * gsn * (1.0 + 0.2 * t);
            w[1] = b0 * x[0] * gsn;
            w[2] = b1 * x[2] * gsn * t;
        };
        BrinkmannData bd = make_data(g, 0.0, 0.03, 12, U, om);
        std::uniform_int_distribution<int> pick(5, 12);
        SpacetimePoint p{{pick(rng), pick(rng), pick(rng)}, 5};
        Eigen::MatrixXd rf = ricci_fd(bd, p);
        Eigen::MatrixXd rc = ricci_from_closed(bd, p);
        const double scale = std::max(1e-12, rf.cwiseAbs().maxCoeff());
        CHECK((rf - rc).cwiseAbs().maxCoeff() / scale < 1e-5);
        CHECK(std::abs(scalar_fd(bd, p)) < 1e-6);

        // Brinkmann Ricci lives in the (t, .) row/column only
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(rf(i, 4)) < 1e-6 * std::max(1.0, scale));
            for (int j = 0; j < 3; ++j) CHECK(std::abs(rf(i, j)) < 1e-6 * std::max(1.0, scale));
        }
        CHECK(std::abs(rf(4, 4)) < 1e-6 * std::max(1.0, scale));
    }
}

TEST_CASE("ricci tt slot carries the field-equation source when delta Omega = 0") {
    // rigid rotation: delta Omega = 0, Ric_tt = lap U + |Omega|^2 / 2
    const double Om0 = 0.7;
    GridSpec g(3, 0.75, 16, Boundary::zero_padded);
    auto U = [](std::span<const double> x, double) {
        const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        return 0.6 * std::exp(-0.4 * r2);
    };
    BrinkmannData bd = make_data(g, 0.0, 0.04, 9, U,
                                 [Om0](std::span<const double> x, double, std::span<double> w) {
                                     w[0] = -0.5 * Om0 * x[1];
                                     w[1] = 0.5 * Om0 * x[0];
                                     w[2] = 0.0;
                                 });
    SpacetimePoint p{{6, 7, 8}, 4};
    Eigen::MatrixXd ric = ricci_fd(bd, p);
    // 4th-order laplacian of U at the node
    std::vector<double> x(3);
    g.node_coords(p.node, x);
    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const double lapU = 0.6 * std::exp(-0.4 * r2) * (0.64 * r2 - 2.4);
    // route-vs-analytic comparison carries the 4th-order stencil error at this h
    CHECK(ric(3, 3) == doctest::Approx(lapU + 0.5 * Om0 * Om0).epsilon(3e-4));
    for (int i = 0; i < 3; ++i) CHECK(std::abs(ric(3, i)) < 1e-6);
}

TEST_CASE("newton-coriolis residual") {
    GridSpec g(3, 1.0, 24, Boundary::zero_padded);
    // smooth density
    RealField rho(g);
    std::vector<int> idx(3, 0);
    std::vector<double> x(3);
    std::size_t p = 0;
    do {
        g.node_coords(idx, x);
        const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        rho.values[p++] = std::exp(-r2 / 0.08);
    } while (advance(idx, g.points));

    SUBCASE("poisson-solved potential satisfies the equations") {
        RealField U = greens_potential(rho, pc3, PoissonKernel::fd_consistent);
        BrinkmannData bd = BrinkmannData::statics(U, VectorField(g), pc3);
        NCResidual r = nc_residual(bd, rho);
        CHECK(r.coriolis_divergence < 1e-12);
        CHECK(r.potential_equation < 1e-8);
    }

    SUBCASE("zero potential leaves the full source as defect") {
        BrinkmannData bd = BrinkmannData::statics(RealField(g), VectorField(g), pc3);
        NCResidual r = nc_residual(bd, rho);
        // defect = 4 pi G rho over the interior
        double acc = 0.0;
        std::vector<int> j(3, 1);
        bool more = true;
        while (more) {
            const double v = 4.0 * M_PI * pc3.G * rho.values[g.flat(j)];
            acc += v * v;
            int a = 2;
            for (; a >= 0; --a) {
                if (++j[a] <= g.points - 2) break;
                j[a] = 1;
            }
            if (a < 0) more = false;
        }
        const double expect = std::sqrt(acc * std::pow(g.spacing(), 3));
        CHECK(r.potential_equation == doctest::Approx(expect).epsilon(1e-12));
    }

    SUBCASE("rigid rotation with the centrifugally completed potential") {
        const double Om0 = 0.9;
        VectorField om(g);
        std::size_t q = 0;
        std::fill(idx.begin(), idx.end(), 0);
        do {
            g.node_coords(idx, x);
            om.comps[0].values[q] = -0.5 * Om0 * x[1];
            om.comps[1].values[q] = 0.5 * Om0 * x[0];
            ++q;
        } while (advance(idx, g.points));
        // lap U = 4 pi G rho - |Omega|^2/2 with |Omega|^2 = Om0^2
        RealField U = greens_potential(rho, pc3, PoissonKernel::fd_consistent);
        std::fill(idx.begin(), idx.end(), 0);
        q = 0;
        do {
            g.node_coords(idx, x);
            const double rp2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            U.values[q++] -= 0.5 * Om0 * Om0 * rp2 / 6.0;
        } while (advance(idx, g.points));
        BrinkmannData bd = BrinkmannData::statics(U, om, pc3);
        NCResidual r = nc_residual(bd, rho);
        CHECK(r.coriolis_divergence < 1e-10);
        CHECK(r.potential_equation < 1e-6);
    }

    SUBCASE("grid mismatch") {
        GridSpec g2(3, 1.0, 16, Boundary::zero_padded);
        BrinkmannData bd = BrinkmannData::statics(RealField(g2), VectorField(g2), pc3);
        CHECK_THROWS_AS(nc_residual(bd, rho), ShapeError);
    }
}

TEST_CASE("schwarzian derivative") {
    CHECK(schwarzian(TimeReparam::affine(2.0, -0.7), 0.9) == 0.0);

    TimeReparam mob = TimeReparam::moebius(1.4, -0.3, 0.8, 1.1);
    for (double t : {-0.4, 0.0, 0.6, 2.0})
        CHECK(std::abs(schwarzian(mob, t)) < 1e-12);

    TimeReparam cubic = TimeReparam::power(3);
    CHECK(schwarzian(cubic, 1.0) == doctest::Approx(-4.0).epsilon(1e-14));

    CHECK_THROWS_AS(schwarzian(cubic, 0.0), SingularReparamError);
    CHECK_THROWS_AS(TimeReparam::affine(-1.0, 0.0).lambda(0.0), SingularReparamError);
}

TEST_CASE("schwarzian cocycle property") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> amp(0.0, 0.5);
    for (int trial = 0; trial < 24; ++trial) {
        TimeReparam f = TimeReparam::moebius(1.0 + std::abs(amp(rng)), amp(rng), amp(rng),
                                             1.0 + std::abs(amp(rng)));
        TimeReparam k = TimeReparam::power(3);
        TimeReparam fk = compose(f, k);
        const double t = 1.0 + 0.3 * std::abs(amp(rng));
        // S(f o k) = S(f)(k(t)) k'(t)^2 + S(k)(t)
        const double lhs = schwarzian(fk, t);
        const double rhs = schwarzian(f, k.phi(t)) * k.dphi(t) * k.dphi(t) + schwarzian(k, t);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("conformal ricci shift") {
    GridSpec g(3, 0.7, 16, Boundary::zero_padded);
    auto U = [](std::span<const double> x, double) {
        const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        return 0.5 * std::exp(-0.5 * r2);
    };

    SUBCASE("affine reparametrization shifts nothing") {
        BrinkmannData bd = make_data(g, 0.5, 0.02, 12, U, zero_omega);
        SpacetimePoint p{{7, 6, 8}, 5};
        TimeReparam aff = TimeReparam::affine(1.7, 0.2);
        CHECK(conformal_ricci_shift(bd, aff, p).cwiseAbs().maxCoeff() < 1e-6);
    }

    SUBCASE("cubic reparametrization near t = 1") {
        BrinkmannData bd = make_data(g, 1.0 - 6 * 0.02, 0.02, 13, U, zero_omega);
        SpacetimePoint p{{7, 6, 8}, 6};   // t = 1
        TimeReparam cubic = TimeReparam::power(3);
        Eigen::MatrixXd shift = conformal_ricci_shift(bd, cubic, p);
        // -(N-2)/2 S = -(3/2)(-4) = +6 in the tt slot
        CHECK(shift(3, 3) == doctest::Approx(6.0).epsilon(1e-4));
        shift(3, 3) = 0.0;
        CHECK(shift.cwiseAbs().maxCoeff() < 1e-4);
        // scalar curvature scales as 1/lambda (both vanish here)
        CHECK(std::abs(scalar_fd_scaled(bd, cubic, p)) < 1e-4);
    }

    SUBCASE("moebius reparametrization of the flat structure") {
        BrinkmannData bd = make_data(g, 0.0, 0.02, 12,
                                     [](std::span<const double>, double) { return 0.0; },
                                     zero_omega);
        SpacetimePoint p{{8, 8, 8}, 5};
        TimeReparam mob = TimeReparam::moebius(1.3, 0.2, 0.5, 1.0);
        CHECK(conformal_ricci_shift(bd, mob, p).cwiseAbs().maxCoeff() < 1e-4);
    }
}
