#include "snlab/brinkmann.hpp"

#include <cmath>
#include <string>

#include "snlab/grid_ops.hpp"

namespace snlab {

BrinkmannData::BrinkmannData(GridSpec g, std::vector<double> ts, std::vector<RealField> U,
                             std::vector<VectorField> om, PhysicalConstants pc)
    : grid(g), times(std::move(ts)), potential(std::move(U)), coriolis(std::move(om)),
      constants(pc) {
    if (times.empty() || potential.size() != times.size() || coriolis.size() != times.size())
        throw ShapeError("Brinkmann data needs one U and one omega per time sample");
    for (const auto& f : potential) require_same_grid(grid, f.grid, "Brinkmann potential");
    for (const auto& v : coriolis) {
        require_same_grid(grid, v.grid, "Brinkmann coriolis");
        v.check();
    }
    if (times.size() > 1) {
        const double dt = times[1] - times[0];
        if (dt <= 0.0) throw ShapeError("time samples must increase");
        for (std::size_t k = 2; k < times.size(); ++k)
            if (std::abs((times[k] - times[k - 1]) - dt) > 1e-9 * std::abs(dt))
                throw ShapeError("time samples must be uniform");
    }
}

double BrinkmannData::time_step() const {
    if (times.size() < 2) throw ShapeError("single-slice data has no time step");
    return times[1] - times[0];
}

BrinkmannData BrinkmannData::statics(RealField U, VectorField omega, PhysicalConstants pc) {
    GridSpec g = U.grid;
    return BrinkmannData(g, {0.0}, {std::move(U)}, {std::move(omega)}, pc);
}

BrinkmannData BrinkmannData::from_functions(
    const GridSpec& g, PhysicalConstants pc, double t0, double dt, int n_times,
    const std::function<double(std::span<const double>, double)>& U,
    const std::function<void(std::span<const double>, double, std::span<double>)>& omega) {
    std::vector<double> ts;
    std::vector<RealField> pots;
    std::vector<VectorField> oms;
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
    std::vector<double> x(static_cast<std::size_t>(g.dim)), w(static_cast<std::size_t>(g.dim));
    for (int k = 0; k < n_times; ++k) {
        const double t = t0 + k * dt;
        ts.push_back(t);
        RealField pot(g);
        VectorField om(g);
        std::fill(idx.begin(), idx.end(), 0);
        std::size_t p = 0;
        do {
            g.node_coords(idx, x);
            pot.values[p] = U(x, t);
            omega(x, t, w);
            for (int a = 0; a < g.dim; ++a) om.comps[a].values[p] = w[a];
            ++p;
        } while (advance(idx, g.points));
        pots.push_back(std::move(pot));
        oms.push_back(std::move(om));
    }
    return BrinkmannData(g, std::move(ts), std::move(pots), std::move(oms), pc);
}

ChristoffelTable::ChristoffelTable(int bargmann_dim) : n_(bargmann_dim) {
    v_.assign(static_cast<std::size_t>(n_) * n_ * n_, 0.0);
}

double& ChristoffelTable::at(int a, int mu, int nu) {
    return v_[(static_cast<std::size_t>(a) * n_ + mu) * n_ + nu];
}

double ChristoffelTable::at(int a, int mu, int nu) const {
    return v_[(static_cast<std::size_t>(a) * n_ + mu) * n_ + nu];
}

namespace detail {

// 4th-order central first derivative of a sampled field along one axis.
double d4_spatial(const RealField& f, std::span<const int> node, int axis) {
    const GridSpec& g = f.grid;
    const int i = node[axis];
    if (i < 2 || i > g.points - 3)
        throw StencilError("spatial stencil leaves the grid (need 2-node margin)");
    std::vector<int> nb(node.begin(), node.end());
    auto at = [&](int off) {
        nb[axis] = i + off;
        return f.values[g.flat(nb)];
    };
    return (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * g.spacing());
}

double d4_time(const std::vector<RealField>& seq, std::size_t flat, int k, double dt) {
    if (seq.size() == 1) return 0.0;  // static data
    if (k < 2 || k > static_cast<int>(seq.size()) - 3)
        throw StencilError("time stencil leaves the stored samples (need 2-slice margin)");
    return (seq[k - 2].values[flat] - 8.0 * seq[k - 1].values[flat]
            + 8.0 * seq[k + 1].values[flat] - seq[k + 2].values[flat]) / (12.0 * dt);
}

} // namespace detail

ChristoffelTable christoffel_closed(const BrinkmannData& bd, const SpacetimePoint& p) {
    const GridSpec& g = bd.grid;
    const int d = g.dim;
    const int ti = d, si = d + 1;
    if (static_cast<int>(p.node.size()) != d) throw ShapeError("point dimension mismatch");
    if (p.time_index < 0 || p.time_index >= bd.n_times())
        throw StencilError("time index out of range");

    const double dt = bd.n_times() > 1 ? bd.time_step() : 1.0;
    const RealField& U = bd.potential[p.time_index];
    const VectorField& om = bd.coriolis[p.time_index];
    const std::size_t flat = g.flat(p.node);

    std::vector<double> dU(d), dt_om(d), omv(d);
    std::vector<std::vector<double>> dom(d, std::vector<double>(d));
    for (int i = 0; i < d; ++i) {
        dU[i] = detail::d4_spatial(U, p.node, i);
        omv[i] = om.comps[i].values[flat];
        std::vector<RealField> comp_seq;
        comp_seq.reserve(bd.coriolis.size());
        for (const auto& v : bd.coriolis) comp_seq.push_back(v.comps[i]);
        dt_om[i] = detail::d4_time(comp_seq, flat, p.time_index, dt);
        for (int j = 0; j < d; ++j) dom[i][j] = detail::d4_spatial(om.comps[j], p.node, i);
    }
    const double dtU = detail::d4_time(bd.potential, flat, p.time_index, dt);

    // Omega_ij = d_i om_j - d_j om_i
    ChristoffelTable tab(d + 2);
    for (int i = 0; i < d; ++i) {
        double om_dot = 0.0;
        for (int j = 0; j < d; ++j) {
            const double Om_ij = dom[i][j] - dom[j][i];
            tab.at(i, j, ti) = tab.at(i, ti, j) = -0.5 * Om_ij;
            tab.at(si, i, j) = tab.at(si, j, i) = 0.5 * (dom[i][j] + dom[j][i]);
            om_dot += Om_ij * omv[j];
        }
        tab.at(i, ti, ti) = dU[i] + dt_om[i];
        tab.at(si, i, ti) = tab.at(si, ti, i) = -dU[i] - 0.5 * om_dot;
    }
    double adv = 0.0;
    for (int i = 0; i < d; ++i) adv += omv[i] * (dU[i] + dt_om[i]);
    tab.at(si, ti, ti) = -dtU - adv;
    return tab;
}

RealField coriolis_intensity(const VectorField& omega) {
    omega.check();
    const GridSpec& g = omega.grid;
    RealField out(g);
    const int d = g.dim;
    std::vector<VectorField> grads;
    grads.reserve(d);
    for (int j = 0; j < d; ++j) grads.push_back(gradient(omega.comps[j]));
    for (std::size_t p = 0; p < out.size(); ++p) {
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                const double Om = grads[j].comps[i].values[p] - grads[i].comps[j].values[p];
                s += Om * Om;
            }
        out.values[p] = s;
    }
    return out;
}

RealField omega_half_square(const VectorField& omega) {
    omega.check();
    RealField out(omega.grid);
    for (std::size_t p = 0; p < out.size(); ++p) {
        double s = 0.0;
        for (int a = 0; a < omega.grid.dim; ++a) {
            const double w = omega.comps[a].values[p];
            s += w * w;
        }
        out.values[p] = 0.5 * s;
    }
    return out;
}

namespace {

// Central 2nd-order derivative with one-sided closures, ignoring the
// periodic flag: the residual stencils treat stored data as plain samples.
RealField open_derivative(const RealField& f, int axis) {
    const GridSpec& g = f.grid;
    const int n = g.points;
    const double h = g.spacing();
    RealField out(g);
    std::size_t inner = 1;
    for (int a = axis + 1; a < g.dim; ++a) inner *= n;
    for (std::size_t p = 0; p < f.size(); ++p) {
        const int i = static_cast<int>((p / inner) % n);
        const std::size_t base = p - static_cast<std::size_t>(i) * inner;
        auto at = [&](int j) { return f.values[base + static_cast<std::size_t>(j) * inner]; };
        double v;
        if (i == 0) v = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
        else if (i == n - 1) v = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
        else v = (at(i + 1) - at(i - 1)) / (2.0 * h);
        out.values[p] = v;
    }
    return out;
}

double interior_l2(const RealField& f) {
    const GridSpec& g = f.grid;
    const int n = g.points;
    double acc = 0.0;
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 1);
    bool more = true;
    while (more) {
        const double v = f.values[g.flat(idx)];
        acc += v * v;
        int a = g.dim - 1;
        for (; a >= 0; --a) {
            if (++idx[a] <= n - 2) break;
            idx[a] = 1;
        }
        if (a < 0) more = false;
    }
    return std::sqrt(acc * std::pow(g.spacing(), g.dim));
}

} // namespace

NCResidual nc_residual(const BrinkmannData& bd, const std::vector<RealField>& rho,
                       double Lambda) {
    if (rho.size() != bd.times.size())
        throw ShapeError("nc_residual needs one density per time slice");
    for (const auto& r : rho) require_same_grid(bd.grid, r.grid, "nc_residual");

    const GridSpec& g = bd.grid;
    const int d = g.dim;
    const int nt = bd.n_times();
    const double fourPiG = 4.0 * M_PI * bd.constants.G;

    // per-slice divergence of omega (for the d_t term)
    std::vector<RealField> delta_om;
    delta_om.reserve(nt);
    for (int k = 0; k < nt; ++k) {
        RealField div(g);
        for (int a = 0; a < d; ++a) {
            RealField da = open_derivative(bd.coriolis[k].comps[a], a);
            for (std::size_t p = 0; p < div.size(); ++p) div.values[p] += da.values[p];
        }
        delta_om.push_back(std::move(div));
    }

    double acc_cor = 0.0, acc_pot = 0.0;
    int slices = 0;
    const int k_lo = nt > 1 ? 1 : 0;
    const int k_hi = nt > 1 ? nt - 2 : 0;
    for (int k = k_lo; k <= k_hi; ++k, ++slices) {
        // Omega components and its divergence
        std::vector<std::vector<RealField>> dom(d);
        for (int i = 0; i < d; ++i) {
            dom[i].reserve(d);
            for (int j = 0; j < d; ++j)
                dom[i].push_back(open_derivative(bd.coriolis[k].comps[j], i));
        }
        RealField div_norm2(g);
        for (int i = 0; i < d; ++i) {
            RealField dOm_i(g);  // sum_j d_j Omega_ji ... assembled below
            for (int j = 0; j < d; ++j) {
                RealField Om_ji(g);
                for (std::size_t p = 0; p < Om_ji.size(); ++p)
                    Om_ji.values[p] = dom[j][i].values[p] - dom[i][j].values[p];
                RealField dj = open_derivative(Om_ji, j);
                for (std::size_t p = 0; p < dOm_i.size(); ++p) dOm_i.values[p] += dj.values[p];
            }
            for (std::size_t p = 0; p < div_norm2.size(); ++p)
                div_norm2.values[p] += dOm_i.values[p] * dOm_i.values[p];
        }
        for (std::size_t p = 0; p < div_norm2.size(); ++p)
            div_norm2.values[p] = std::sqrt(div_norm2.values[p]);
        const double cor = interior_l2(div_norm2);

        // lap U + d_t(delta omega) + 1/2 |Omega|^2 - 4 pi G rho - Lambda
        RealField defect(g);
        RealField lapU(g);
        {
            const int n = g.points;
            const double h2 = g.spacing() * g.spacing();
            std::vector<int> nb(static_cast<std::size_t>(d));
            std::vector<int> idx(static_cast<std::size_t>(d), 0);
            std::size_t p = 0;
            do {
                bool interior = true;
                for (int a = 0; a < d; ++a)
                    if (idx[a] == 0 || idx[a] == n - 1) { interior = false; break; }
                if (interior) {
                    double lap = 0.0;
                    for (int a = 0; a < d; ++a) {
                        nb.assign(idx.begin(), idx.end());
                        nb[a] = idx[a] + 1;
                        const double up = bd.potential[k].values[g.flat(nb)];
                        nb[a] = idx[a] - 1;
                        const double dn = bd.potential[k].values[g.flat(nb)];
                        lap += (up - 2.0 * bd.potential[k].values[p] + dn) / h2;
                    }
                    lapU.values[p] = lap;
                }
                ++p;
            } while (advance(idx, n));
        }
        for (std::size_t p = 0; p < defect.size(); ++p) {
            double om2 = 0.0;
            for (int i = 0; i < d; ++i)
                for (int j = i + 1; j < d; ++j) {
                    const double Om = dom[i][j].values[p] - dom[j][i].values[p];
                    om2 += Om * Om;
                }
            double dt_div = 0.0;
            if (nt > 1) {
                const double dts = bd.time_step();
                dt_div = (delta_om[k + 1].values[p] - delta_om[k - 1].values[p]) / (2.0 * dts);
            }
            defect.values[p] = lapU.values[p] + dt_div + 0.5 * om2
                               - fourPiG * rho[k].values[p] - Lambda;
        }
        acc_cor += cor * cor;
        acc_pot += std::pow(interior_l2(defect), 2);
    }
    NCResidual out;
    out.coriolis_divergence = std::sqrt(acc_cor / slices);
    out.potential_equation = std::sqrt(acc_pot / slices);
    return out;
}

NCResidual nc_residual(const BrinkmannData& bd, const RealField& rho, double Lambda) {
    std::vector<RealField> rhos(bd.times.size(), rho);
    return nc_residual(bd, rhos, Lambda);
}

} // namespace snlab
