#include "snlab/evolve.hpp"

#include <cmath>
#include <string>

#include "snlab/grid_ops.hpp"

namespace snlab {

namespace {

RealField lambda_background(const GridSpec& g, double Lambda) {
    RealField U(g);
    if (Lambda == 0.0) return U;
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
    std::vector<double> x(static_cast<std::size_t>(g.dim));
    std::size_t p = 0;
    do {
        g.node_coords(idx, x);
        double r2 = 0.0;
        for (int a = 0; a < g.dim; ++a) r2 += x[a] * x[a];
        U.values[p++] = Lambda * r2 / (2.0 * g.dim);
    } while (advance(idx, g.points));
    return U;
}

RealField self_potential(const ComplexField& psi, double mass, const SolverConfig& cfg,
                         const RealField* lam_bg) {
    const GridSpec& g = psi.grid;
    RealField U(g);
    if (cfg.constants.G > 0.0) {
        double nrm2 = 0.0;
        for (const complex& v : psi.values) nrm2 += std::norm(v);
        nrm2 *= std::pow(g.spacing(), g.dim);
        if (nrm2 <= 0.0) throw InvalidFieldError("zero state in self-consistent coupling");
        RealField rho(g);
        for (std::size_t p = 0; p < rho.size(); ++p)
            rho.values[p] = mass * std::norm(psi.values[p]) / nrm2;
        U = greens_potential(rho, cfg.constants, cfg.kernel);
    }
    if (lam_bg)
        for (std::size_t p = 0; p < U.size(); ++p) U.values[p] += lam_bg->values[p];
    return U;
}

// ---- Strang split step -------------------------------------------------------

void phase_kick(ComplexField& psi, const RealField& V, double mass, double hbar, double dt) {
    for (std::size_t p = 0; p < psi.size(); ++p)
        psi.values[p] *= std::polar(1.0, -mass * V.values[p] * dt / hbar);
}

void kinetic_drift(ComplexField& psi, double mass, double hbar, double dt) {
    const GridSpec& g = psi.grid;
    auto spec = fft_forward(psi);
    const int n = g.points;
    std::vector<double> k2(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
        const double k = M_PI * signed_mode(m, n) / g.extent;
        k2[m] = k * k;
    }
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
    std::size_t p = 0;
    do {
        double s = 0.0;
        for (int a = 0; a < g.dim; ++a) s += k2[idx[a]];
        spec[p++] *= std::polar(1.0, -hbar * s * dt / (2.0 * mass));
    } while (advance(idx, n));
    psi = fft_inverse(g, std::move(spec));
}

// ---- Crank-Nicolson ----------------------------------------------------------

// H psi with centered differences: -hbar^2/(2m) lap + (i hbar/2)(omega.D + D.omega)
// + m(U + |omega|^2/2).  Periodic wrap or zero extension outside the grid.
struct FdHamiltonian {
    const GridSpec& g;
    const RealField& V;            // U + |omega|^2/2
    const VectorField* omega;
    double mass, hbar;

    void apply(const std::vector<complex>& in, std::vector<complex>& out) const {
        const int n = g.points;
        const double h = g.spacing();
        const double kin = -hbar * hbar / (2.0 * mass * h * h);
        const bool wrap = g.boundary == Boundary::periodic;
        const int d = g.dim;

        std::vector<std::size_t> stride(static_cast<std::size_t>(d), 1);
        for (int a = d - 2; a >= 0; --a) stride[a] = stride[a + 1] * n;

        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        std::size_t p = 0;
        do {
            complex acc = mass * V.values[p] * in[p];
            complex lap = -2.0 * static_cast<double>(d) * in[p];
            for (int a = 0; a < d; ++a) {
                const int i = idx[a];
                complex up = 0.0, dn = 0.0;
                if (i + 1 < n) up = in[p + stride[a]];
                else if (wrap) up = in[p + stride[a] - stride[a] * n];
                if (i - 1 >= 0) dn = in[p - stride[a]];
                else if (wrap) dn = in[p - stride[a] + stride[a] * n];
                lap += up + dn;
                if (omega) {
                    // (i hbar / 2) [ w_a d_a psi + d_a (w_a psi) ]
                    const double w = omega->comps[a].values[p];
                    double wu = 0.0, wd = 0.0;
                    std::size_t pu = p, pd = p;
                    if (i + 1 < n) pu = p + stride[a];
                    else if (wrap) pu = p + stride[a] - stride[a] * n;
                    if (i - 1 >= 0) pd = p - stride[a];
                    else if (wrap) pd = p - stride[a] + stride[a] * n;
                    if (pu != p) wu = omega->comps[a].values[pu];
                    if (pd != p) wd = omega->comps[a].values[pd];
                    const complex du = (pu != p) ? in[pu] : complex(0.0);
                    const complex dd = (pd != p) ? in[pd] : complex(0.0);
                    const complex term = w * (du - dd) + (wu * du - wd * dd);
                    acc += complex(0.0, hbar / (4.0 * h)) * term;
                }
            }
            acc += kin * lap;
            out[p] = acc;
            ++p;
        } while (advance(idx, n));
    }
};

// (I + i a H) psi_next = (I - i a H) psi via CG on the normal equations;
// the system matrix is normal, so A^dag A = I + a^2 H^2.
ComplexField cayley_solve(const ComplexField& psi, const FdHamiltonian& H, double alpha,
                          const SolverConfig& cfg) {
    const std::size_t nn = psi.size();
    std::vector<complex> hpsi(nn), b(nn), x(psi.values), r(nn), z(nn), q(nn), hq(nn);

    H.apply(psi.values, hpsi);
    for (std::size_t i = 0; i < nn; ++i)
        b[i] = psi.values[i] - complex(0.0, alpha) * hpsi[i];

    auto apply_normal = [&](const std::vector<complex>& v, std::vector<complex>& out) {
        H.apply(v, hq);
        for (std::size_t i = 0; i < nn; ++i) q[i] = v[i] + complex(0.0, alpha) * hq[i];
        H.apply(q, hq);
        for (std::size_t i = 0; i < nn; ++i) out[i] = q[i] - complex(0.0, alpha) * hq[i];
    };

    // r = A^dag b - A^dag A x
    H.apply(b, hq);
    std::vector<complex> adb(nn);
    for (std::size_t i = 0; i < nn; ++i) adb[i] = b[i] - complex(0.0, alpha) * hq[i];
    apply_normal(x, r);
    double b2 = 0.0;
    for (std::size_t i = 0; i < nn; ++i) {
        r[i] = adb[i] - r[i];
        b2 += std::norm(adb[i]);
    }
    if (b2 == 0.0) return psi;

    std::vector<complex> pvec(r);
    double rs = 0.0;
    for (std::size_t i = 0; i < nn; ++i) rs += std::norm(r[i]);

    int it = 0;
    for (; it < cfg.cn_max_iter; ++it) {
        if (std::sqrt(rs / b2) < cfg.cn_tol) break;
        apply_normal(pvec, z);
        complex pz = 0.0;
        for (std::size_t i = 0; i < nn; ++i) pz += std::conj(pvec[i]) * z[i];
        const double a = rs / pz.real();
        double rs_new = 0.0;
        for (std::size_t i = 0; i < nn; ++i) {
            x[i] += a * pvec[i];
            r[i] -= a * z[i];
            rs_new += std::norm(r[i]);
        }
        const double beta = rs_new / rs;
        rs = rs_new;
        for (std::size_t i = 0; i < nn; ++i) pvec[i] = r[i] + beta * pvec[i];
    }
    if (it >= cfg.cn_max_iter)
        throw SolverError("Crank-Nicolson solve did not converge: " + std::to_string(it) +
                          " iterations, relative residual " + std::to_string(std::sqrt(rs / b2)));
    return ComplexField(psi.grid, std::move(x));
}

RealField effective_potential(const RealField& U, const VectorField* omega) {
    if (!omega) return U;
    RealField V = omega_half_square(*omega);
    for (std::size_t p = 0; p < V.size(); ++p) V.values[p] += U.values[p];
    return V;
}

} // namespace

RealField self_consistent_potential(const ComplexField& psi, double mass,
                                    const SolverConfig& cfg) {
    const RealField bg = lambda_background(psi.grid, cfg.Lambda);
    return self_potential(psi, mass, cfg, cfg.Lambda != 0.0 ? &bg : nullptr);
}

WaveFunction imaginary_time_ground_state(const WaveFunction& init, const SolverConfig& cfg,
                                         int iterations, double dtau) {
    if (init.psi.grid.boundary != Boundary::periodic)
        throw ConfigError("imaginary-time relaxation needs a periodic grid");
    if (!(dtau > 0.0) || iterations < 1) throw ConfigError("bad imaginary-time parameters");
    const GridSpec& g = init.psi.grid;
    const double hbar = cfg.constants.hbar;
    const RealField bg = lambda_background(g, cfg.Lambda);
    const bool has_bg = cfg.Lambda != 0.0;

    const int n = g.points;
    std::vector<double> k2(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
        const double k = M_PI * signed_mode(m, n) / g.extent;
        k2[m] = k * k;
    }

    WaveFunction wf = normalize(init);
    for (int it = 0; it < iterations; ++it) {
        RealField U = self_potential(wf.psi, wf.mass, cfg, has_bg ? &bg : nullptr);
        for (std::size_t p = 0; p < wf.psi.size(); ++p)
            wf.psi.values[p] *= std::exp(-wf.mass * U.values[p] * dtau / (2.0 * hbar));
        auto spec = fft_forward(wf.psi);
        std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
        std::size_t p = 0;
        do {
            double s = 0.0;
            for (int a = 0; a < g.dim; ++a) s += k2[idx[a]];
            spec[p++] *= std::exp(-hbar * s * dtau / (2.0 * wf.mass));
        } while (advance(idx, n));
        wf.psi = fft_inverse(g, std::move(spec));
        for (std::size_t q = 0; q < wf.psi.size(); ++q)
            wf.psi.values[q] *= std::exp(-wf.mass * U.values[q] * dtau / (2.0 * hbar));
        wf = normalize(wf);
    }
    return wf;
}

WaveFunction schrodinger_step(const WaveFunction& wf, const RealField& U,
                              const VectorField* omega, const SolverConfig& cfg) {
    require_same_grid(wf.psi.grid, U.grid, "schrodinger_step");
    if (omega) require_same_grid(wf.psi.grid, omega->grid, "schrodinger_step omega");
    const double hbar = cfg.constants.hbar;

    WaveFunction out = wf;
    if (cfg.scheme == Scheme::strang_spectral) {
        if (omega) throw ConfigError("strang-spectral cannot carry a Coriolis term; use crank-nicolson-fd");
        if (wf.psi.grid.boundary != Boundary::periodic)
            throw ConfigError("strang-spectral needs a periodic grid");
        phase_kick(out.psi, U, wf.mass, hbar, 0.5 * cfg.dt);
        kinetic_drift(out.psi, wf.mass, hbar, cfg.dt);
        phase_kick(out.psi, U, wf.mass, hbar, 0.5 * cfg.dt);
    } else {
        RealField V = effective_potential(U, omega);
        FdHamiltonian H{wf.psi.grid, V, omega, wf.mass, hbar};
        out.psi = cayley_solve(wf.psi, H, 0.5 * cfg.dt / hbar, cfg);
    }
    out.time = wf.time + cfg.dt;
    check_finite(out.psi, "stepped state");
    return out;
}

TrajectoryRecord evolve(const WaveFunction& wf0, const SolverConfig& cfg,
                        const VectorField* omega) {
    if (cfg.dt <= 0.0) throw ConfigError("dt must be positive");
    if (cfg.steps < 1) throw ConfigError("steps must be >= 1");
    if (omega && cfg.scheme == Scheme::strang_spectral)
        throw ConfigError("strang-spectral cannot carry a Coriolis term; use crank-nicolson-fd");

    WaveFunction state = normalize(wf0);
    const GridSpec& g = state.psi.grid;
    const RealField bg = lambda_background(g, cfg.Lambda);
    const bool has_bg = cfg.Lambda != 0.0;
    const double hbar = cfg.constants.hbar;

    TrajectoryRecord traj;
    auto record = [&](const WaveFunction& wf, const RealField& U) {
        traj.times.push_back(wf.time);
        traj.states.push_back(wf);
        traj.potentials.push_back(U);
    };

    RealField U = self_potential(state.psi, state.mass, cfg, has_bg ? &bg : nullptr);
    record(state, U);

    for (int step = 0; step < cfg.steps; ++step) {
        if (cfg.scheme == Scheme::strang_spectral) {
            WaveFunction next = state;
            phase_kick(next.psi, U, next.mass, hbar, 0.5 * cfg.dt);
            kinetic_drift(next.psi, next.mass, hbar, cfg.dt);
            RealField U_half = U;
            if (cfg.self_consistency == SelfConsistency::midpoint_recompute)
                U_half = self_potential(next.psi, next.mass, cfg, has_bg ? &bg : nullptr);
            phase_kick(next.psi, U_half, next.mass, hbar, 0.5 * cfg.dt);
            next.time = state.time + cfg.dt;
            state = std::move(next);
        } else {
            RealField V = effective_potential(U, omega);
            FdHamiltonian H{g, V, omega, state.mass, hbar};
            ComplexField predicted = cayley_solve(state.psi, H, 0.5 * cfg.dt / hbar, cfg);
            if (cfg.self_consistency == SelfConsistency::midpoint_recompute &&
                cfg.constants.G > 0.0) {
                ComplexField mid(g);
                for (std::size_t p = 0; p < mid.size(); ++p)
                    mid.values[p] = 0.5 * (state.psi.values[p] + predicted.values[p]);
                RealField U_mid = self_potential(mid, state.mass, cfg, has_bg ? &bg : nullptr);
                RealField V_mid = effective_potential(U_mid, omega);
                FdHamiltonian H_mid{g, V_mid, omega, state.mass, hbar};
                predicted = cayley_solve(state.psi, H_mid, 0.5 * cfg.dt / hbar, cfg);
            }
            state.psi = std::move(predicted);
            state.time += cfg.dt;
        }
        for (const complex& v : state.psi.values)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw SolverError("NaN detected at step " + std::to_string(step + 1));

        U = self_potential(state.psi, state.mass, cfg, has_bg ? &bg : nullptr);
        if ((step + 1) % cfg.record_stride == 0 || step + 1 == cfg.steps)
            record(state, U);
    }
    return traj;
}

namespace {

struct SchrodingerTerms {
    ComplexField defect;
    double kinetic_norm, coriolis_norm, time_norm, potential_norm;
};

SchrodingerTerms schrodinger_defect(const ComplexField& psi_mid, const ComplexField& dpsi_dt,
                                    const RealField& U_mid, const VectorField* omega,
                                    double mass, double hbar) {
    const GridSpec& g = psi_mid.grid;
    ComplexField kin = laplacian(psi_mid);
    for (complex& v : kin.values) v *= -hbar * hbar / (2.0 * mass);

    ComplexField cor(g);
    if (omega) {
        auto dpsi = gradient_c(psi_mid);
        for (int a = 0; a < g.dim; ++a) {
            ComplexField wpsi(g);
            for (std::size_t p = 0; p < wpsi.size(); ++p)
                wpsi.values[p] = omega->comps[a].values[p] * psi_mid.values[p];
            auto dwpsi = gradient_c(wpsi);
            for (std::size_t p = 0; p < cor.size(); ++p)
                cor.values[p] += complex(0.0, 0.5 * hbar) *
                                 (omega->comps[a].values[p] * dpsi[a].values[p] +
                                  dwpsi[a].values[p]);
        }
    }

    RealField V = effective_potential(U_mid, omega);
    ComplexField pot(g), tim(g), defect(g);
    for (std::size_t p = 0; p < defect.size(); ++p) {
        pot.values[p] = mass * V.values[p] * psi_mid.values[p];
        tim.values[p] = complex(0.0, -hbar) * dpsi_dt.values[p];
        defect.values[p] = kin.values[p] + cor.values[p] + tim.values[p] + pot.values[p];
    }
    return {std::move(defect), l2_norm(kin), l2_norm(cor), l2_norm(tim), l2_norm(pot)};
}

SnResidual assemble_residual(const ComplexField& psi_mid, const ComplexField& dpsi_dt,
                             const RealField& U_mid, const VectorField* omega,
                             double mass, const SolverConfig& cfg) {
    const GridSpec& g = psi_mid.grid;
    // The wave-equation defect is measured on the resolvable band: inputs
    // pass a sharp 5/6-Nyquist de-aliasing filter (fold-back junk from
    // spatially compressed transformed states sits against the Nyquist
    // edge and would otherwise contaminate the spectral derivatives), and
    // the assembled defect is projected onto the same band so potential
    // products above the cutoff do not count against it.  Base and
    // transformed data see the identical filter.
    constexpr double band = 5.0 / 6.0;
    SchrodingerTerms terms;
    if (g.boundary == Boundary::periodic) {
        terms = schrodinger_defect(band_limit(psi_mid, band), band_limit(dpsi_dt, band),
                                   band_limit(U_mid, band), omega, mass,
                                   cfg.constants.hbar);
        terms.defect = band_limit(terms.defect, band);
    } else {
        terms = schrodinger_defect(psi_mid, dpsi_dt, U_mid, omega, mass, cfg.constants.hbar);
    }

    SnResidual out;
    out.schrodinger_defect = l2_norm(terms.defect);
    out.schrodinger_scale = terms.kinetic_norm + terms.coriolis_norm + terms.time_norm +
                            terms.potential_norm;

    // Newton-Coriolis residual at the midpoint slice
    double nrm2 = 0.0;
    for (const complex& v : psi_mid.values) nrm2 += std::norm(v);
    nrm2 *= std::pow(g.spacing(), g.dim);
    RealField rho(g);
    if (nrm2 > 0.0)
        for (std::size_t p = 0; p < rho.size(); ++p)
            rho.values[p] = mass * std::norm(psi_mid.values[p]) / nrm2;

    VectorField om = omega ? *omega : VectorField(g);
    BrinkmannData bd = BrinkmannData::statics(U_mid, om, cfg.constants);
    NCResidual nc = nc_residual(bd, rho, cfg.Lambda);
    out.nc_coriolis = nc.coriolis_divergence;
    out.nc_potential = nc.potential_equation;

    RealField source(g);
    for (std::size_t p = 0; p < source.size(); ++p)
        source.values[p] = 4.0 * M_PI * cfg.constants.G * rho.values[p] + cfg.Lambda;
    out.nc_scale = l2_norm(source);
    return out;
}

} // namespace

SnResidual sn_residual(const WaveFunction& a, const WaveFunction& b,
                       const RealField& U_a, const RealField& U_b,
                       const VectorField* omega, const SolverConfig& cfg) {
    require_same_grid(a.psi.grid, b.psi.grid, "sn_residual");
    require_same_grid(a.psi.grid, U_a.grid, "sn_residual");
    require_same_grid(a.psi.grid, U_b.grid, "sn_residual");
    if (std::abs(a.mass - b.mass) > 1e-12 * a.mass)
        throw ConfigError("sn_residual states carry different masses");
    const double dt = b.time - a.time;
    if (dt <= 0.0) throw ConfigError("sn_residual needs increasing time stamps");

    const GridSpec& g = a.psi.grid;
    ComplexField mid(g), ddt(g);
    for (std::size_t p = 0; p < mid.size(); ++p) {
        mid.values[p] = 0.5 * (a.psi.values[p] + b.psi.values[p]);
        ddt.values[p] = (b.psi.values[p] - a.psi.values[p]) / dt;
    }
    RealField U_mid(g);
    for (std::size_t p = 0; p < U_mid.size(); ++p)
        U_mid.values[p] = 0.5 * (U_a.values[p] + U_b.values[p]);
    return assemble_residual(mid, ddt, U_mid, omega, a.mass, cfg);
}

SnResidual sn_residual(const WaveFunction& wf, const ComplexField& dpsi_dt,
                       const RealField& U, const VectorField* omega,
                       const SolverConfig& cfg) {
    require_same_grid(wf.psi.grid, dpsi_dt.grid, "sn_residual");
    require_same_grid(wf.psi.grid, U.grid, "sn_residual");
    return assemble_residual(wf.psi, dpsi_dt, U, omega, wf.mass, cfg);
}

double trajectory_residual(const TrajectoryRecord& traj, const VectorField* omega,
                           const SolverConfig& cfg) {
    if (traj.size() < 2) throw ConfigError("trajectory residual needs at least two states");
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        const SnResidual r = sn_residual(traj.states[k], traj.states[k + 1],
                                         traj.potentials[k], traj.potentials[k + 1],
                                         omega, cfg);
        const double c = r.certificate();
        acc += c * c;
    }
    return std::sqrt(acc / (traj.size() - 1));
}

WaveFunction gaussian_packet(const GridSpec& grid, double sigma,
                             std::span<const double> center, std::span<const double> velocity,
                             double mass, double hbar, double time) {
    if (static_cast<int>(center.size()) != grid.dim ||
        static_cast<int>(velocity.size()) != grid.dim)
        throw ShapeError("gaussian_packet argument dimension mismatch");
    WaveFunction wf;
    wf.psi = ComplexField(grid);
    wf.mass = mass;
    wf.time = time;
    const double amp = std::pow(M_PI * sigma * sigma, -grid.dim / 4.0);
    std::vector<int> idx(static_cast<std::size_t>(grid.dim), 0);
    std::vector<double> x(static_cast<std::size_t>(grid.dim));
    std::size_t p = 0;
    do {
        grid.node_coords(idx, x);
        double r2 = 0.0, phase = 0.0;
        for (int a = 0; a < grid.dim; ++a) {
            const double dx = x[a] - center[a];
            r2 += dx * dx;
            phase += mass * velocity[a] * dx / hbar;
        }
        wf.psi.values[p++] = amp * std::exp(-r2 / (2.0 * sigma * sigma)) *
                             std::polar(1.0, phase);
    } while (advance(idx, grid.points));
    return wf;
}

} // namespace snlab
