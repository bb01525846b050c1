#include "snlab/curvature.hpp"

#include <cmath>
#include <functional>

namespace snlab {

namespace {

constexpr double c4[5] = {1.0, -8.0, 0.0, 8.0, -1.0};  // /(12 h)

// metric with optional conformal factor lambda(t)
Eigen::MatrixXd metric_scaled(const BrinkmannData& bd, std::span<const int> node,
                              int k, const std::function<double(double)>* lam) {
    const int d = bd.grid.dim;
    const int N = d + 2;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(N, N);
    const std::size_t flat = bd.grid.flat(node);
    for (int i = 0; i < d; ++i) {
        g(i, i) = 1.0;
        const double w = bd.coriolis[k].comps[i].values[flat];
        g(i, d) = g(d, i) = w;
    }
    g(d, d) = -2.0 * bd.potential[k].values[flat];
    g(d, d + 1) = g(d + 1, d) = 1.0;
    if (lam) g *= (*lam)(bd.times[k]);
    return g;
}

void check_margins(const BrinkmannData& bd, const SpacetimePoint& p, int margin) {
    const GridSpec& g = bd.grid;
    for (int a = 0; a < g.dim; ++a)
        if (p.node[a] < margin || p.node[a] > g.points - 1 - margin)
            throw StencilError("curvature stencil leaves the grid (need " +
                               std::to_string(margin) + "-node margin)");
    if (bd.n_times() > 1 &&
        (p.time_index < margin || p.time_index > bd.n_times() - 1 - margin))
        throw StencilError("curvature stencil leaves the stored time slices");
}

using GammaFn = std::function<void(std::span<const int>, int, Eigen::Ref<Eigen::MatrixXd>)>;
// GammaFn fills a N x N*N matrix view Gam(a, mu*N+nu).

// generic Christoffels from 4th-order differences of the metric
void christoffel_generic(const BrinkmannData& bd, const std::function<double(double)>* lam,
                         std::span<const int> node, int k, Eigen::Ref<Eigen::MatrixXd> Gam) {
    const int d = bd.grid.dim;
    const int N = d + 2;
    const double h = bd.grid.spacing();
    const bool has_time = bd.n_times() > 1;
    const double dt = has_time ? bd.time_step() : 1.0;

    Eigen::MatrixXd g0 = metric_scaled(bd, node, k, lam);
    Eigen::MatrixXd ginv = g0.inverse();

    // dg[mu] for mu = 0..d (s-derivative vanishes)
    std::vector<Eigen::MatrixXd> dg(static_cast<std::size_t>(d + 1),
                                    Eigen::MatrixXd::Zero(N, N));
    std::vector<int> nb(node.begin(), node.end());
    for (int mu = 0; mu < d; ++mu) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(N, N);
        for (int off = -2; off <= 2; ++off) {
            if (off == 0) continue;
            nb[mu] = node[mu] + off;
            acc += c4[off + 2] * metric_scaled(bd, nb, k, lam);
        }
        nb[mu] = node[mu];
        dg[mu] = acc / (12.0 * h);
    }
    if (has_time) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(N, N);
        for (int off = -2; off <= 2; ++off) {
            if (off == 0) continue;
            acc += c4[off + 2] * metric_scaled(bd, node, k + off, lam);
        }
        dg[d] = acc / (12.0 * dt);
    }

    for (int a = 0; a < N; ++a)
        for (int mu = 0; mu < N; ++mu)
            for (int nu = 0; nu < N; ++nu) {
                double s = 0.0;
                for (int b = 0; b < N; ++b) {
                    const double dmu = mu <= d ? dg[mu](b, nu) : 0.0;
                    const double dnu = nu <= d ? dg[nu](b, mu) : 0.0;
                    const double db = b <= d ? dg[b](mu, nu) : 0.0;
                    s += ginv(a, b) * (dmu + dnu - db);
                }
                Gam(a, mu * N + nu) = 0.5 * s;
            }
}

Eigen::MatrixXd ricci_from_gamma(const BrinkmannData& bd, const SpacetimePoint& p,
                                 const GammaFn& gamma) {
    const int d = bd.grid.dim;
    const int N = d + 2;
    const double h = bd.grid.spacing();
    const bool has_time = bd.n_times() > 1;
    const double dt = has_time ? bd.time_step() : 1.0;

    Eigen::MatrixXd G(N, N * N);
    gamma(p.node, p.time_index, G);

    // dG[mu](a, nu*N+...) derivatives of the symbols, mu = 0..d
    std::vector<Eigen::MatrixXd> dG(static_cast<std::size_t>(d + 1),
                                    Eigen::MatrixXd::Zero(N, N * N));
    std::vector<int> nb(p.node.begin(), p.node.end());
    Eigen::MatrixXd tmp(N, N * N);
    for (int mu = 0; mu < d; ++mu) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(N, N * N);
        for (int off = -2; off <= 2; ++off) {
            if (off == 0) continue;
            nb[mu] = p.node[mu] + off;
            gamma(nb, p.time_index, tmp);
            acc += c4[off + 2] * tmp;
        }
        nb[mu] = p.node[mu];
        dG[mu] = acc / (12.0 * h);
    }
    if (has_time) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(N, N * N);
        for (int off = -2; off <= 2; ++off) {
            if (off == 0) continue;
            gamma(p.node, p.time_index + off, tmp);
            acc += c4[off + 2] * tmp;
        }
        dG[d] = acc / (12.0 * dt);
    }

    auto gam = [&](int a, int mu, int nu) { return G(a, mu * N + nu); };
    Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(N, N);
    for (int mu = 0; mu < N; ++mu)
        for (int nu = 0; nu < N; ++nu) {
            double s = 0.0;
            for (int a = 0; a < N; ++a) {
                if (a <= d) s += dG[a](a, mu * N + nu);
                if (nu <= d) s -= dG[nu](a, mu * N + a);
                for (int b = 0; b < N; ++b)
                    s += gam(a, a, b) * gam(b, mu, nu) - gam(a, nu, b) * gam(b, mu, a);
            }
            ric(mu, nu) = s;
        }
    return ric;
}

Eigen::MatrixXd ricci_impl(const BrinkmannData& bd, const std::function<double(double)>* lam,
                           const SpacetimePoint& p) {
    check_margins(bd, p, 4);
    GammaFn gamma = [&bd, lam](std::span<const int> node, int k,
                               Eigen::Ref<Eigen::MatrixXd> out) {
        christoffel_generic(bd, lam, node, k, out);
    };
    return ricci_from_gamma(bd, p, gamma);
}

} // namespace

Eigen::MatrixXd metric_at(const BrinkmannData& bd, std::span<const int> node, int time_index) {
    return metric_scaled(bd, node, time_index, nullptr);
}

Eigen::MatrixXd ricci_fd(const BrinkmannData& bd, const SpacetimePoint& p) {
    return ricci_impl(bd, nullptr, p);
}

Eigen::MatrixXd ricci_from_closed(const BrinkmannData& bd, const SpacetimePoint& p) {
    check_margins(bd, p, 4);
    const int N = bd.grid.dim + 2;
    GammaFn gamma = [&bd, N](std::span<const int> node, int k,
                             Eigen::Ref<Eigen::MatrixXd> out) {
        SpacetimePoint q{std::vector<int>(node.begin(), node.end()), k};
        ChristoffelTable tab = christoffel_closed(bd, q);
        for (int a = 0; a < N; ++a)
            for (int mu = 0; mu < N; ++mu)
                for (int nu = 0; nu < N; ++nu) out(a, mu * N + nu) = tab.at(a, mu, nu);
    };
    return ricci_from_gamma(bd, p, gamma);
}

double scalar_fd(const BrinkmannData& bd, const SpacetimePoint& p) {
    Eigen::MatrixXd ric = ricci_fd(bd, p);
    Eigen::MatrixXd g = metric_at(bd, p.node, p.time_index);
    return (g.inverse() * ric).trace();
}

Eigen::MatrixXd ricci_fd_scaled(const BrinkmannData& bd, const TimeReparam& tp,
                                const SpacetimePoint& p) {
    std::function<double(double)> lam = [&tp](double t) { return tp.lambda(t); };
    return ricci_impl(bd, &lam, p);
}

double scalar_fd_scaled(const BrinkmannData& bd, const TimeReparam& tp,
                        const SpacetimePoint& p) {
    std::function<double(double)> lam = [&tp](double t) { return tp.lambda(t); };
    Eigen::MatrixXd ric = ricci_impl(bd, &lam, p);
    Eigen::MatrixXd g = metric_at(bd, p.node, p.time_index) * tp.lambda(bd.times[p.time_index]);
    return (g.inverse() * ric).trace();
}

Eigen::MatrixXd conformal_ricci_shift(const BrinkmannData& bd, const TimeReparam& tp,
                                      const SpacetimePoint& p) {
    return ricci_fd_scaled(bd, tp, p) - ricci_fd(bd, p);
}

} // namespace snlab
