#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "snlab/evolve.hpp"
#include "snlab/grid_ops.hpp"
#include "snlab/ground_state.hpp"
#include "snlab/representation.hpp"

using namespace snlab;

namespace {

WaveFunction plane_wave(const GridSpec& g, int mode, double mass) {
    WaveFunction wf;
    wf.psi = ComplexField(g);
    wf.mass = mass;
    const double k = M_PI * mode / g.extent;
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
    std::size_t p = 0;
    do {
        wf.psi.values[p++] = std::polar(1.0, k * g.coord(idx[0]));
    } while (advance(idx, g.points));
    return wf;
}

double packet_variance(const WaveFunction& wf) {
    const GridSpec& g = wf.psi.grid;
    double w = 0.0, var = 0.0;
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
    std::vector<double> x(static_cast<std::size_t>(g.dim));
    std::size_t p = 0;
    do {
        g.node_coords(idx, x);
        double r2 = 0.0;
        for (int a = 0; a < g.dim; ++a) r2 += x[a] * x[a];
        const double rho = std::norm(wf.psi.values[p++]);
        w += rho;
        var += rho * r2;
    } while (advance(idx, g.points));
    return var / w;
}

std::vector<double> packet_centroid(const WaveFunction& wf) {
    const GridSpec& g = wf.psi.grid;
    std::vector<double> c(static_cast<std::size_t>(g.dim), 0.0);
    double w = 0.0;
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
    std::vector<double> x(static_cast<std::size_t>(g.dim));
    std::size_t p = 0;
    do {
        g.node_coords(idx, x);
        const double rho = std::norm(wf.psi.values[p++]);
        w += rho;
        for (int a = 0; a < g.dim; ++a) c[a] += rho * x[a];
    } while (advance(idx, g.points));
    for (double& v : c) v /= w;
    return c;
}

} // namespace

TEST_CASE("strang step: free plane wave picks up the exact kinetic phase") {
    GridSpec g(1, 4.0, 32, Boundary::periodic);
    SolverConfig cfg;
    cfg.dt = 0.05;
    cfg.constants = PhysicalConstants(1.3, 0.0, 1);
    WaveFunction wf = plane_wave(g, 3, 0.8);
    RealField U(g);
    WaveFunction out = schrodinger_step(wf, U, nullptr, cfg);
    const double k = M_PI * 3 / g.extent;
    const complex expected_phase =
        std::polar(1.0, -cfg.constants.hbar * k * k * cfg.dt / (2.0 * wf.mass));
    for (std::size_t i = 0; i < wf.psi.size(); ++i)
        CHECK(std::abs(out.psi.values[i] - expected_phase * wf.psi.values[i]) < 1e-12);
}

TEST_CASE("strang step: constant potential is a global phase") {
    GridSpec g(2, 2.0, 16, Boundary::periodic);
    SolverConfig cfg;
    cfg.dt = 0.03;
    cfg.constants = PhysicalConstants(2.0, 0.0, 2);
    const double V0 = 1.7, mass = 1.4;
    WaveFunction wf = gaussian_packet(g, 0.5, std::vector<double>{0.0, 0.0},
                                      std::vector<double>{0.0, 0.0}, mass,
                                      cfg.constants.hbar);
    RealField U(g);
    for (auto& v : U.values) v = V0;
    WaveFunction out = schrodinger_step(wf, U, nullptr, cfg);
    // remove the free part by comparing against the V = 0 step
    RealField zero(g);
    WaveFunction free_out = schrodinger_step(wf, zero, nullptr, cfg);
    const complex phase = std::polar(1.0, -mass * V0 * cfg.dt / cfg.constants.hbar);
    for (std::size_t i = 0; i < wf.psi.size(); ++i)
        CHECK(std::abs(out.psi.values[i] - phase * free_out.psi.values[i]) < 1e-12);
}

TEST_CASE("scheme / coriolis compatibility") {
    GridSpec g(2, 2.0, 8, Boundary::periodic);
    SolverConfig cfg;
    cfg.constants = PhysicalConstants(1.0, 0.0, 2);
    WaveFunction wf = gaussian_packet(g, 0.5, std::vector<double>{0.0, 0.0},
                                      std::vector<double>{0.0, 0.0}, 1.0, 1.0);
    VectorField om(g);
    RealField U(g);
    CHECK_THROWS_AS(schrodinger_step(wf, U, &om, cfg), ConfigError);
    CHECK_THROWS_AS(evolve(wf, cfg, &om), ConfigError);
}

TEST_CASE("free gaussian matches the analytic spreading solution") {
    GridSpec g(1, 12.0, 128, Boundary::periodic);
    const double sigma = 1.0, mass = 1.2, hbar = 0.9;
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.steps = 100;
    cfg.constants = PhysicalConstants(hbar, 0.0, 1);
    WaveFunction wf0 = gaussian_packet(g, sigma, std::vector<double>{0.0},
                                       std::vector<double>{0.0}, mass, hbar);
    TrajectoryRecord traj = evolve(wf0, cfg);
    const double T = cfg.dt * cfg.steps;
    const complex tau(1.0, hbar * T / (mass * sigma * sigma));
    double err2 = 0.0;
    for (int i = 0; i < g.points; ++i) {
        const double x = g.coord(i);
        const complex exact = std::pow(M_PI * sigma * sigma, -0.25) / std::sqrt(tau) *
                              std::exp(-x * x / (2.0 * sigma * sigma * tau));
        err2 += std::norm(traj.states.back().psi.values[i] - exact);
    }
    CHECK(std::sqrt(err2 * g.spacing()) < 1e-4);
}

TEST_CASE("norm conservation") {
    GridSpec g(1, 8.0, 64, Boundary::periodic);
    SolverConfig cfg;
    cfg.dt = 0.02;
    cfg.steps = 300;
    // d = 1 has no Green kernel; a Lambda trap supplies the potential path
    cfg.constants = PhysicalConstants(1.0, 0.0, 1);
    cfg.Lambda = 0.6;
    WaveFunction wf0 = gaussian_packet(g, 1.0, std::vector<double>{0.7},
                                       std::vector<double>{0.0}, 1.0, 1.0);
    TrajectoryRecord traj = evolve(wf0, cfg);
    for (const auto& st : traj.states) CHECK(std::abs(l2_norm(st) - 1.0) < 1e-8);
}

TEST_CASE("crank-nicolson: unitary per step and consistent with strang") {
    GridSpec g(1, 8.0, 64, Boundary::periodic);
    SolverConfig cn;
    cn.dt = 1e-3;
    cn.scheme = Scheme::crank_nicolson_fd;
    cn.constants = PhysicalConstants(1.0, 0.0, 1);
    WaveFunction wf = gaussian_packet(g, 1.0, std::vector<double>{0.0},
                                      std::vector<double>{0.4}, 1.0, 1.0);
    RealField U(g);
    std::vector<int> idx(1, 0);
    for (int i = 0; i < g.points; ++i) U.values[i] = 0.1 * g.coord(i) * g.coord(i);

    WaveFunction out = schrodinger_step(wf, U, nullptr, cn);
    CHECK(std::abs(l2_norm(out) - l2_norm(wf)) < 1e-10);

    SolverConfig strang = cn;
    strang.scheme = Scheme::strang_spectral;
    WaveFunction ref = schrodinger_step(wf, U, nullptr, strang);
    double diff = 0.0;
    for (std::size_t i = 0; i < out.psi.size(); ++i)
        diff = std::max(diff, std::abs(out.psi.values[i] - ref.psi.values[i]));
    CHECK(diff < 2e-5);   // schemes differ at O(dt h^2) through the laplacian
}

TEST_CASE("coriolis drift rotates the packet at the classical rate") {
    // rigid rotation, U = 0, G = 0: Ehrenfest closes exactly for this
    // quadratic Hamiltonian, so the centroid follows the classical ODE
    //   xdot = v,  vdot_i = Omega_ij v_j,  v(0) = -omega(x0)
    const double Om0 = 0.6;
    GridSpec g(2, 5.0, 48, Boundary::periodic);
    SolverConfig cfg;
    cfg.dt = 0.02;
    cfg.steps = 50;
    cfg.scheme = Scheme::crank_nicolson_fd;
    cfg.constants = PhysicalConstants(1.0, 0.0, 2);
    VectorField om(g);
    std::vector<int> idx(2, 0);
    std::vector<double> x(2);
    std::size_t p = 0;
    do {
        g.node_coords(idx, x);
        om.comps[0].values[p] = -0.5 * Om0 * x[1];
        om.comps[1].values[p] = 0.5 * Om0 * x[0];
        ++p;
    } while (advance(idx, g.points));

    const std::vector<double> x0 = {1.2, 0.0};
    WaveFunction wf0 = gaussian_packet(g, 0.7, x0, std::vector<double>{0.0, 0.0}, 1.0, 1.0);
    TrajectoryRecord traj = evolve(wf0, cfg, &om);

    // classical oracle (RK4)
    double cx = x0[0], cy = x0[1];
    double vx = 0.5 * Om0 * x0[1], vy = -0.5 * Om0 * x0[0];
    const double dt = cfg.dt;
    auto acc = [&](double vxx, double vyy, double& ax, double& ay) {
        ax = Om0 * vyy;
        ay = -Om0 * vxx;
    };
    for (int s = 0; s < cfg.steps; ++s) {
        auto deriv = [&](double, double, double vxx, double vyy, double st[4]) {
            double ax, ay;
            acc(vxx, vyy, ax, ay);
            st[0] = vxx; st[1] = vyy; st[2] = ax; st[3] = ay;
        };
        double k1[4], k2[4], k3[4], k4[4];
        deriv(cx, cy, vx, vy, k1);
        deriv(cx + 0.5 * dt * k1[0], cy + 0.5 * dt * k1[1], vx + 0.5 * dt * k1[2],
              vy + 0.5 * dt * k1[3], k2);
        deriv(cx + 0.5 * dt * k2[0], cy + 0.5 * dt * k2[1], vx + 0.5 * dt * k2[2],
              vy + 0.5 * dt * k2[3], k3);
        deriv(cx + dt * k3[0], cy + dt * k3[1], vx + dt * k3[2], vy + dt * k3[3], k4);
        cx += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
        cy += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
        vx += dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
        vy += dt / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]);
    }
    auto centroid = packet_centroid(traj.states.back());
    CHECK(std::abs(centroid[0] - cx) < 0.02);
    CHECK(std::abs(centroid[1] - cy) < 0.02);
    // and it actually moved
    CHECK(std::abs(cy) > 0.02);
}

TEST_CASE("self-gravity contracts the packet relative to free spreading") {
    GridSpec g(3, 8.0, 16, Boundary::periodic);
    SolverConfig free_cfg;
    free_cfg.dt = 0.02;
    free_cfg.steps = 40;
    free_cfg.constants = PhysicalConstants(1.0, 0.0, 3);
    SolverConfig grav_cfg = free_cfg;
    grav_cfg.constants = PhysicalConstants(1.0, 8.0, 3);

    WaveFunction wf0 = gaussian_packet(g, 1.5, std::vector<double>{0, 0, 0},
                                       std::vector<double>{0, 0, 0}, 1.0, 1.0);
    TrajectoryRecord free_run = evolve(wf0, free_cfg);
    TrajectoryRecord grav_run = evolve(wf0, grav_cfg);
    CHECK(packet_variance(grav_run.states.back()) <
          packet_variance(free_run.states.back()));
}

TEST_CASE("sn_residual") {
    SUBCASE("free plane wave with the analytic time derivative") {
        GridSpec g(1, 4.0, 32, Boundary::periodic);
        SolverConfig cfg;
        cfg.constants = PhysicalConstants(1.0, 0.0, 1);
        WaveFunction wf = plane_wave(g, 2, 1.0);
        const double k = M_PI * 2 / g.extent;
        const double w = cfg.constants.hbar * k * k / (2.0 * wf.mass);
        ComplexField ddt(g);
        for (std::size_t i = 0; i < ddt.size(); ++i)
            ddt.values[i] = complex(0.0, -w) * wf.psi.values[i];
        RealField U(g);
        SnResidual r = sn_residual(wf, ddt, U, nullptr, cfg);
        CHECK(r.certificate() < 1e-8);

        // wrong mass is detected
        WaveFunction heavy = wf;
        heavy.mass = 2.0;
        SnResidual bad = sn_residual(heavy, ddt, U, nullptr, cfg);
        CHECK(bad.certificate() > 0.1);
    }

    SUBCASE("consecutive-state residual converges at order >= 1.8 in dt") {
        // resolved enough that the certificate's de-aliasing band holds the
        // whole packet spectrum
        GridSpec g(3, 8.0, 32, Boundary::periodic);
        WaveFunction wf0 = gaussian_packet(g, 1.5, std::vector<double>{0, 0, 0},
                                           std::vector<double>{0, 0, 0}, 1.0, 1.0);
        auto run = [&](double dt, int steps) {
            SolverConfig cfg;
            cfg.dt = dt;
            cfg.steps = steps;
            cfg.constants = PhysicalConstants(1.0, 4.0, 3);
            TrajectoryRecord traj = evolve(wf0, cfg);
            return trajectory_residual(traj, nullptr, cfg);
        };
        // measured above the dt-independent de-aliasing floor of the
        // split-step nonlinearity
        const double r1 = run(0.08, 10);
        const double r2 = run(0.04, 20);
        const double order = std::log2(r1 / r2);
        CHECK(order >= 1.8);
    }

    SUBCASE("crank-nicolson residual converges at order >= 1.8 in h") {
        const double sigma = 1.0;
        auto run = [&](int n) {
            GridSpec g(1, 8.0, n, Boundary::periodic);
            SolverConfig cfg;
            cfg.dt = 5e-4;
            cfg.steps = 20;
            cfg.scheme = Scheme::crank_nicolson_fd;
            cfg.constants = PhysicalConstants(1.0, 0.0, 1);
            WaveFunction wf0 = gaussian_packet(g, sigma, std::vector<double>{0.0},
                                               std::vector<double>{0.3}, 1.0, 1.0);
            TrajectoryRecord traj = evolve(wf0, cfg);
            return trajectory_residual(traj, nullptr, cfg);
        };
        const double r1 = run(64);
        const double r2 = run(128);
        CHECK(std::log2(r1 / r2) >= 1.8);
    }
}

TEST_CASE("galilean covariance of the free evolution") {
    GridSpec g(1, 10.0, 64, Boundary::periodic);
    SolverConfig cfg;
    cfg.dt = 0.02;
    cfg.steps = 25;
    cfg.constants = PhysicalConstants(1.0, 0.0, 1);
    WaveFunction wf0 = gaussian_packet(g, 1.0, std::vector<double>{-1.0},
                                       std::vector<double>{0.0}, 1.0, 1.0);
    Eigen::VectorXd b(1);
    b << 0.5;
    SNElement boost = SNElement::boosted(b);

    // boost then evolve
    WaveFunction boosted0 = rho_apply(boost, normalize(wf0), cfg.constants.hbar);
    TrajectoryRecord t1 = evolve(boosted0, cfg);
    // evolve then boost
    TrajectoryRecord t0 = evolve(wf0, cfg);
    WaveFunction boostedT = rho_apply(boost, t0.states.back(), cfg.constants.hbar);

    CHECK(boostedT.time == doctest::Approx(t1.times.back()).epsilon(1e-12));
    double err2 = 0.0;
    for (std::size_t i = 0; i < boostedT.psi.size(); ++i)
        err2 += std::norm(boostedT.psi.values[i] - t1.states.back().psi.values[i]);
    CHECK(std::sqrt(err2 * g.spacing()) < 1e-4);
}

TEST_CASE("radial ground state") {
    PhysicalConstants pc(1.0, 0.0, 3);

    SUBCASE("harmonic-trap oracle: mu = 3/2 hbar omega") {
        RadialConfig rc;
        rc.radius = 9.0;
        rc.points = 900;
        rc.dtau = 4e-3;
        rc.tol = 1e-11;
        rc.self_gravity = false;
        rc.external_potential = [](double r) { return 0.5 * r * r; };
        RadialProfile prof = ground_state_radial(pc, 1.0, rc);
        CHECK(prof.mu == doctest::Approx(1.5).epsilon(1e-4));
        // nodeless, monotone decreasing psi
        for (std::size_t j = 1; j + 1 < prof.psi.size(); ++j) {
            CHECK(prof.psi[j] > -1e-12);
            if (prof.r[j] > 0.2 && prof.r[j] < 6.0)
                CHECK(prof.psi[j + 1] <= prof.psi[j] + 1e-12);
        }
    }

    SUBCASE("self-gravitating fixed point") {
        PhysicalConstants pcg(1.0, 1.0, 3);
        RadialConfig rc;
        rc.radius = 14.0;
        rc.points = 1200;
        rc.dtau = 3e-3;
        rc.tol = 1e-9;
        RadialProfile prof = ground_state_radial(pcg, 1.0, rc);
        CHECK(prof.residual < rc.tol);
        CHECK(prof.mu < 0.0);   // bound state

        // lifted onto a 3d grid, the stationary state certifies through
        // sn_residual with the analytic phase derivative
        GridSpec g(3, 12.0, 48, Boundary::periodic);
        WaveFunction wf = lift_radial_state(prof, g, 1.0);
        wf = normalize(wf);
        RealField U = lift_radial_potential(prof, g);
        ComplexField ddt(g);
        for (std::size_t i = 0; i < ddt.size(); ++i)
            ddt.values[i] = complex(0.0, -prof.mu / pcg.hbar) * wf.psi.values[i];
        SolverConfig cfg;
        cfg.constants = pcg;
        SnResidual r = sn_residual(wf, ddt, U, nullptr, cfg);
        CHECK(r.certificate() < 8e-2);   // limited by the linear radial-to-grid lift
    }

    SUBCASE("non-convergence raises") {
        RadialConfig rc;
        rc.radius = 8.0;
        rc.points = 128;
        rc.max_iter = 3;
        rc.tol = 1e-14;
        CHECK_THROWS_AS(ground_state_radial(pc, 1.0, rc), SolverError);
    }
}
