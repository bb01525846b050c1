#include "snlab/ground_state.hpp"

#include <cmath>
#include <string>

namespace snlab {

namespace {

// U(r) = -G [ (1/r) * 4pi int_0^r rho r'^2 dr' + 4pi int_r^R rho r' dr' ]
// for rho = mass |psi|^2 with unit-normalized psi; trapezoid in r.
void radial_potential(const std::vector<double>& r, const std::vector<double>& u,
                      double mass, double G, std::vector<double>& U) {
    const std::size_t n = r.size();
    const double h = r[1] - r[0];
    // 4pi rho r^2 = 4pi mass |u|^2 ; 4pi rho r = 4pi mass |u|^2 / r
    std::vector<double> f_in(n), f_out(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double uu = u[j] * u[j];
        f_in[j] = 4.0 * M_PI * mass * uu;
        f_out[j] = r[j] > 0.0 ? 4.0 * M_PI * mass * uu / r[j] : 0.0;
    }
    std::vector<double> Fin(n, 0.0), Fout(n, 0.0);
    for (std::size_t j = 1; j < n; ++j)
        Fin[j] = Fin[j - 1] + 0.5 * h * (f_in[j - 1] + f_in[j]);
    for (std::size_t j = n - 1; j-- > 0;)
        Fout[j] = Fout[j + 1] + 0.5 * h * (f_out[j] + f_out[j + 1]);
    for (std::size_t j = 0; j < n; ++j) {
        const double inner = r[j] > 0.0 ? Fin[j] / r[j] : 0.0;
        U[j] = -G * (inner + Fout[j]);
    }
    // limit value at the origin: U(0) = -G 4pi int rho r dr
    U[0] = -G * Fout[0];
}

void normalize_u(std::vector<double>& u, double h) {
    double s = 0.0;
    for (double v : u) s += v * v;
    s *= h * 4.0 * M_PI;
    const double f = 1.0 / std::sqrt(s);
    for (double& v : u) v *= f;
}

} // namespace

RadialProfile ground_state_radial(const PhysicalConstants& pc, double mass,
                                  const RadialConfig& cfg) {
    if (pc.dim != 3) throw UnsupportedDimensionError("radial ground state is d = 3 only");
    if (!(mass > 0.0)) throw ConfigError("mass must be positive");
    const int n = cfg.points;
    if (n < 16) throw ConfigError("radial grid too coarse");
    const double h = cfg.radius / n;
    const double kin = pc.hbar * pc.hbar / (2.0 * mass);

    RadialProfile prof;
    prof.r.resize(n + 1);
    for (int j = 0; j <= n; ++j) prof.r[j] = j * h;

    // start from a broad gaussian in u = r psi
    std::vector<double> u(n + 1, 0.0);
    const double s0 = cfg.radius / 6.0;
    for (int j = 1; j < n; ++j)
        u[j] = prof.r[j] * std::exp(-prof.r[j] * prof.r[j] / (2.0 * s0 * s0));
    normalize_u(u, h);

    std::vector<double> U(n + 1, 0.0), V(n + 1, 0.0);
    std::vector<double> a(n - 1), b(n - 1), c(n - 1), rhs(n - 1), w(n - 1);
    std::vector<double> Hu(n + 1, 0.0);

    auto build_potential = [&]() {
        if (cfg.self_gravity && pc.G > 0.0)
            radial_potential(prof.r, u, mass, pc.G, U);
        else
            std::fill(U.begin(), U.end(), 0.0);
        for (int j = 0; j <= n; ++j) {
            double Uj = U[j];
            if (cfg.external_potential) Uj += cfg.external_potential(prof.r[j]);
            V[j] = mass * Uj;
        }
    };

    auto apply_H = [&]() {
        for (int j = 1; j < n; ++j)
            Hu[j] = -kin * (u[j + 1] - 2.0 * u[j] + u[j - 1]) / (h * h) + V[j] * u[j];
        Hu[0] = Hu[n] = 0.0;
    };

    double mu = 0.0, res = 0.0;
    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        build_potential();
        apply_H();
        double uu = 0.0, uhu = 0.0;
        for (int j = 1; j < n; ++j) {
            uu += u[j] * u[j];
            uhu += u[j] * Hu[j];
        }
        mu = uhu / uu;
        double rr = 0.0;
        for (int j = 1; j < n; ++j) {
            const double d = Hu[j] - mu * u[j];
            rr += d * d;
        }
        res = std::sqrt(rr / uu);
        if (res < cfg.tol) break;

        // (I + dtau/2 H) u' = (I - dtau/2 H) u, Thomas solve on the interior
        const double off = -0.5 * cfg.dtau * kin / (h * h);
        for (int j = 1; j < n; ++j) {
            const double diag_H = 2.0 * kin / (h * h) + V[j];
            a[j - 1] = off;
            b[j - 1] = 1.0 + 0.5 * cfg.dtau * diag_H;
            c[j - 1] = off;
            rhs[j - 1] = u[j] - 0.5 * cfg.dtau * Hu[j];
        }
        // forward sweep
        w[0] = c[0] / b[0];
        rhs[0] /= b[0];
        for (int j = 1; j < n - 1; ++j) {
            const double m_ = b[j] - a[j] * w[j - 1];
            w[j] = c[j] / m_;
            rhs[j] = (rhs[j] - a[j] * rhs[j - 1]) / m_;
        }
        for (int j = n - 3; j >= 0; --j) rhs[j] -= w[j] * rhs[j + 1];
        for (int j = 1; j < n; ++j) u[j] = rhs[j - 1];
        normalize_u(u, h);
    }
    if (it >= cfg.max_iter)
        throw SolverError("ground-state relaxation did not converge: residual " +
                          std::to_string(res) + " after " + std::to_string(it) + " iterations");

    build_potential();
    prof.u = u;
    prof.potential = U;
    if (cfg.external_potential)
        for (int j = 0; j <= n; ++j) prof.potential[j] += cfg.external_potential(prof.r[j]);
    prof.psi.resize(n + 1);
    for (int j = 1; j <= n; ++j) prof.psi[j] = u[j] / prof.r[j];
    prof.psi[0] = 2.0 * prof.psi[1] - prof.psi[2];  // linear extrapolation to r = 0
    prof.mu = mu;
    prof.iterations = it;
    prof.residual = res;
    return prof;
}

namespace {

// 4-point Lagrange interpolation on the uniform radial grid (cubic order;
// the lifted field would otherwise seed grid-scale noise from the kinks of
// a linear interpolant).
double interp_radial(const std::vector<double>& r, const std::vector<double>& f, double x) {
    const double h = r[1] - r[0];
    const double R = r.back();
    if (x >= R) return 0.0;
    const int n = static_cast<int>(r.size());
    const double u = x / h;
    int j0 = static_cast<int>(u) - 1;
    j0 = std::max(0, std::min(j0, n - 4));
    const double s = u - j0;
    const double w0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    const double w1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    const double w2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    const double w3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    return w0 * f[j0] + w1 * f[j0 + 1] + w2 * f[j0 + 2] + w3 * f[j0 + 3];
}

} // namespace

WaveFunction lift_radial_state(const RadialProfile& prof, const GridSpec& grid, double mass) {
    if (grid.dim != 3) throw UnsupportedDimensionError("radial lift is d = 3 only");
    WaveFunction wf;
    wf.psi = ComplexField(grid);
    wf.mass = mass;
    std::vector<int> idx(3, 0);
    std::vector<double> x(3);
    std::size_t p = 0;
    do {
        grid.node_coords(idx, x);
        const double rr = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        wf.psi.values[p++] = interp_radial(prof.r, prof.psi, rr);
    } while (advance(idx, grid.points));
    return wf;
}

RealField lift_radial_potential(const RadialProfile& prof, const GridSpec& grid) {
    if (grid.dim != 3) throw UnsupportedDimensionError("radial lift is d = 3 only");
    RealField U(grid);
    const double R = prof.r.back();
    const double UR = prof.potential.back();
    std::vector<int> idx(3, 0);
    std::vector<double> x(3);
    std::size_t p = 0;
    do {
        grid.node_coords(idx, x);
        const double rr = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        if (rr >= R)
            U.values[p] = UR * R / rr;   // -G M / r continuation
        else
            U.values[p] = interp_radial(prof.r, prof.potential, rr);
        ++p;
    } while (advance(idx, grid.points));
    return U;
}

} // namespace snlab
