#include "snlab/poisson.hpp"

#include "snlab/grid_ops.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

namespace snlab {

namespace {

double continuum_kernel_unit(int dim, double r_cells) {
    const double c_d = std::tgamma(dim / 2.0) / (2.0 * std::pow(M_PI, dim / 2.0) * (dim - 2.0));
    return -4.0 * M_PI * c_d / std::pow(r_cells, dim - 2.0);
}

// Free-space lattice Green function of the unit-spacing (2d+1)-point
// laplacian on displacements [-(n-1), n-1]^d, with continuum values on the
// shell |j|_inf = n.  Unit G.  Returned box has 2n+1 per axis, index j + n.
std::vector<double> lattice_green_unit(int dim, int n) {
    const int M = 2 * n - 1;            // interior per axis
    const int B = 2 * n + 1;            // full box per axis
    std::size_t interior_size = 1, box_size = 1;
    for (int a = 0; a < dim; ++a) { interior_size *= M; box_size *= B; }

    std::vector<double> box(box_size);
    {
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        std::size_t p = 0;
        do {
            double r2 = 0.0;
            for (int a = 0; a < dim; ++a) {
                const double j = idx[a] - n;
                r2 += j * j;
            }
            box[p++] = r2 > 0 ? continuum_kernel_unit(dim, std::sqrt(r2)) : 0.0;
        } while (advance(idx, B));
    }

    std::vector<double> rhs(interior_size, 0.0);
    {
        // point source at the origin plus folded Dirichlet data
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        std::size_t p = 0;
        do {
            double v = 0.0;
            bool center = true;
            for (int a = 0; a < dim; ++a)
                if (idx[a] != n - 1) { center = false; break; }
            if (center) v += 4.0 * M_PI;
            for (int a = 0; a < dim; ++a) {
                if (idx[a] == 0 || idx[a] == M - 1) {
                    // neighbor on the boundary shell of the full box
                    std::size_t q = 0;
                    for (int b = 0; b < dim; ++b) {
                        int pb = idx[b] + 1;  // interior -> box offset
                        if (b == a) pb += (idx[a] == 0) ? -1 : 1;
                        q = q * B + static_cast<std::size_t>(pb);
                    }
                    v -= box[q];
                }
            }
            rhs[p++] = v;
        } while (advance(idx, M));
    }

    // DST-I diagonalization of the Dirichlet laplacian
    {
        std::vector<int> dims(static_cast<std::size_t>(dim), M);
        std::vector<fftw_r2r_kind> kinds(static_cast<std::size_t>(dim), FFTW_RODFT00);
        fftw_plan plan = fftw_plan_r2r(dim, dims.data(), rhs.data(), rhs.data(),
                                       kinds.data(), FFTW_ESTIMATE);
        fftw_execute(plan);

        std::vector<double> lam(static_cast<std::size_t>(M));
        for (int k = 1; k <= M; ++k)
            lam[k - 1] = 2.0 * std::cos(M_PI * k / (2.0 * n)) - 2.0;

        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        std::size_t p = 0;
        do {
            double s = 0.0;
            for (int a = 0; a < dim; ++a) s += lam[idx[a]];
            rhs[p++] /= s;
        } while (advance(idx, M));

        fftw_execute(plan);  // DST-I is its own inverse up to scale
        fftw_destroy_plan(plan);
        const double norm = std::pow(2.0 * (M + 1), -dim);
        for (double& v : rhs) v *= norm;
    }

    // paste the solve into the box
    {
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        std::size_t p = 0;
        do {
            std::size_t q = 0;
            for (int a = 0; a < dim; ++a) q = q * B + static_cast<std::size_t>(idx[a] + 1);
            box[q] = rhs[p++];
        } while (advance(idx, M));
    }
    return box;
}

// Kernel samples on the full (2n+1)^d displacement box, unit spacing, unit G.
std::vector<double> kernel_box_unit(int dim, int n, PoissonKernel kernel) {
    if (kernel == PoissonKernel::fd_consistent) return lattice_green_unit(dim, n);

    const int B = 2 * n + 1;
    std::size_t box_size = 1;
    for (int a = 0; a < dim; ++a) box_size *= B;
    std::vector<double> box(box_size);
    const double c_d = std::tgamma(dim / 2.0) / (2.0 * std::pow(M_PI, dim / 2.0) * (dim - 2.0));
    const double self_cell = -4.0 * M_PI * c_d * unit_cell_kernel_integral(dim);
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    std::size_t p = 0;
    do {
        double r2 = 0.0;
        for (int a = 0; a < dim; ++a) {
            const double j = idx[a] - n;
            r2 += j * j;
        }
        box[p++] = r2 > 0 ? continuum_kernel_unit(dim, std::sqrt(r2)) : self_cell;
    } while (advance(idx, B));
    return box;
}

struct KernelFFT {
    std::vector<complex> khat;   // r2c transform of the doubled kernel array
    std::size_t doubled_size = 0;
};

// Truncated-kernel solve, unit spacing, unit G (d = 3).  The analytic
// symbol -4 pi (1 - cos(R|k|))/|k|^2 of the kernel truncated at radius R
// is sampled on a 2x-oversampled k-grid (the truncation oscillation sits
// exactly at the Nyquist of the working k-grid, so direct sampling there
// degenerates); the inverse transform is alias-free because the truncated
// kernel is supported in half of the fine box, and the working-box samples
// are then re-transformed.  R = 1.75 * doubled box half-width covers every
// source-target pair of the original domain.
std::shared_ptr<const KernelFFT> kernel_fft_spectral(int dim, int n) {
    if (dim != 3)
        throw UnsupportedDimensionError("the spectral kernel is built for d = 3");
    const int m = 2 * n;       // working (doubled) box
    const int M = 2 * m;       // oversampled box
    const double R = 1.75 * n; // truncation radius in cells

    std::vector<double> fine(static_cast<std::size_t>(M) * M * M);
    {
        std::vector<complex> sym(static_cast<std::size_t>(M) * M * (M / 2 + 1));
        std::size_t p = 0;
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j)
                for (int l = 0; l <= M / 2; ++l) {
                    const double kx = 2.0 * M_PI * signed_mode(i, M) / M;
                    const double ky = 2.0 * M_PI * signed_mode(j, M) / M;
                    const double kz = 2.0 * M_PI * l / M;
                    const double k2 = kx * kx + ky * ky + kz * kz;
                    double s;
                    if (k2 == 0.0) {
                        s = -4.0 * M_PI * R * R / 2.0;
                    } else {
                        const double kk = std::sqrt(k2);
                        s = -4.0 * M_PI * (1.0 - std::cos(R * kk)) / k2;
                    }
                    sym[p++] = s;
                }
        int dims[3] = {M, M, M};
        fftw_plan plan = fftw_plan_dft_c2r(3, dims,
                                           reinterpret_cast<fftw_complex*>(sym.data()),
                                           fine.data(), FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
        const double norm = 1.0 / (static_cast<double>(M) * M * M);
        for (double& v : fine) v *= norm;
    }

    // working-box samples: displacement p <= n ? p : p - m, wrapped on M
    auto out = std::make_shared<KernelFFT>();
    std::size_t msize = static_cast<std::size_t>(m) * m * m;
    out->doubled_size = msize;
    std::vector<double> ker(msize);
    {
        std::size_t p = 0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int l = 0; l < m; ++l) {
                    auto wrapM = [&](int q) {
                        int jdx = q <= n ? q : q - m;  // displacement
                        return (jdx % M + M) % M;
                    };
                    const std::size_t f =
                        (static_cast<std::size_t>(wrapM(i)) * M + wrapM(j)) * M + wrapM(l);
                    ker[p++] = fine[f];
                }
    }
    out->khat.resize(msize / m * (m / 2 + 1));
    int dims[3] = {m, m, m};
    fftw_plan plan = fftw_plan_dft_r2c(3, dims, ker.data(),
                                       reinterpret_cast<fftw_complex*>(out->khat.data()),
                                       FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

std::shared_ptr<const KernelFFT> kernel_fft(int dim, int n, PoissonKernel kernel) {
    static std::mutex mtx;
    static std::map<std::tuple<int, int, int>, std::shared_ptr<const KernelFFT>> cache;
    const auto key = std::make_tuple(dim, n, static_cast<int>(kernel));
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    if (kernel == PoissonKernel::spectral) {
        auto out = kernel_fft_spectral(dim, n);
        std::lock_guard<std::mutex> lock(mtx);
        cache[key] = out;
        return out;
    }

    auto box = kernel_box_unit(dim, n, kernel);
    const int B = 2 * n + 1;
    const int m = 2 * n;
    std::size_t msize = 1;
    for (int a = 0; a < dim; ++a) msize *= m;

    // circular kernel array: index p in [0, 2n-1], displacement p<=n ? p : p-2n
    std::vector<double> ker(msize);
    {
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        std::size_t p = 0;
        do {
            std::size_t q = 0;
            for (int a = 0; a < dim; ++a) {
                const int j = idx[a] <= n ? idx[a] : idx[a] - m;
                q = q * B + static_cast<std::size_t>(j + n);
            }
            ker[p++] = box[q];
        } while (advance(idx, m));
    }

    auto out = std::make_shared<KernelFFT>();
    out->doubled_size = msize;
    std::size_t csize = msize / m * (m / 2 + 1);
    out->khat.resize(csize);
    std::vector<int> dims(static_cast<std::size_t>(dim), m);
    fftw_plan plan = fftw_plan_dft_r2c(dim, dims.data(), ker.data(),
                                       reinterpret_cast<fftw_complex*>(out->khat.data()),
                                       FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    std::lock_guard<std::mutex> lock(mtx);
    cache[key] = out;
    return out;
}

} // namespace

double unit_cell_kernel_integral(int dim) {
    static std::mutex mtx;
    static std::map<int, double> cache;
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(dim);
        if (it != cache.end()) return it->second;
    }
    if (dim <= 2) throw UnsupportedDimensionError("cell kernel integral needs d > 2");

    // I*(1 - 1/m^2) = midpoint sum over non-central subcells; the central
    // subcell rescales onto I itself.  Odd m; Richardson over 3 levels.
    const int m0 = dim <= 3 ? 15 : (dim == 4 ? 9 : 5);
    double est[3];
    for (int lev = 0; lev < 3; ++lev) {
        int mm = m0;
        for (int l = 0; l < lev; ++l) mm *= 3;
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        const int ctr = mm / 2;
        double s = 0.0;
        do {
            bool central = true;
            double r2 = 0.0;
            for (int a = 0; a < dim; ++a) {
                if (idx[a] != ctr) central = false;
                const double z = (idx[a] + 0.5) / mm - 0.5;
                r2 += z * z;
            }
            if (!central) s += std::pow(r2, 0.5 * (2 - dim));
        } while (advance(idx, mm));
        est[lev] = s / std::pow(static_cast<double>(mm), dim) / (1.0 - 1.0 / (static_cast<double>(mm) * mm));
    }
    const double r12 = est[1] + (est[1] - est[0]) / 8.0;
    const double r23 = est[2] + (est[2] - est[1]) / 8.0;
    const double val = r23 + (r23 - r12) / 80.0;

    std::lock_guard<std::mutex> lock(mtx);
    cache[dim] = val;
    return val;
}

RealField greens_potential(const RealField& rho, const PhysicalConstants& pc,
                           PoissonKernel kernel) {
    check_finite(rho, "source density");
    const GridSpec& g = rho.grid;
    if (pc.dim != g.dim) throw ShapeError("constants dimension does not match grid");
    if (g.dim <= 2) throw UnsupportedDimensionError("greens_potential needs d > 2");

    const int n = g.points;
    const int m = 2 * n;
    auto kf = kernel_fft(g.dim, n, kernel);

    std::size_t msize = kf->doubled_size;
    std::vector<double> buf(msize, 0.0);
    {
        std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
        std::size_t p = 0;
        do {
            std::size_t q = 0;
            for (int a = 0; a < g.dim; ++a) q = q * m + static_cast<std::size_t>(idx[a]);
            buf[q] = rho.values[p++];
        } while (advance(idx, n));
    }

    std::vector<int> dims(static_cast<std::size_t>(g.dim), m);
    std::size_t csize = kf->khat.size();
    std::vector<complex> spec(csize);
    fftw_plan fwd = fftw_plan_dft_r2c(g.dim, dims.data(), buf.data(),
                                      reinterpret_cast<fftw_complex*>(spec.data()),
                                      FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);

    for (std::size_t i = 0; i < csize; ++i) spec[i] *= kf->khat[i];

    fftw_plan bwd = fftw_plan_dft_c2r(g.dim, dims.data(),
                                      reinterpret_cast<fftw_complex*>(spec.data()),
                                      buf.data(), FFTW_ESTIMATE);
    fftw_execute(bwd);
    fftw_destroy_plan(bwd);

    // crop and scale: unit-h unit-G kernel times the h^d volume element and
    // the kernel's G h^{2-d} physical scale -> G h^2; plus FFT normalization.
    const double h = g.spacing();
    const double scale = pc.G * h * h / static_cast<double>(msize);
    RealField U(g);
    {
        std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
        std::size_t p = 0;
        do {
            std::size_t q = 0;
            for (int a = 0; a < g.dim; ++a) q = q * m + static_cast<std::size_t>(idx[a]);
            U.values[p++] = buf[q] * scale;
        } while (advance(idx, n));
    }
    check_finite(U, "potential");
    return U;
}

RealField greens_potential_direct(const RealField& rho, const PhysicalConstants& pc,
                                  PoissonKernel kernel) {
    check_finite(rho, "source density");
    const GridSpec& g = rho.grid;
    if (g.dim <= 2) throw UnsupportedDimensionError("greens_potential needs d > 2");
    if (kernel == PoissonKernel::spectral)
        throw ConfigError("the spectral kernel has no real-space summation form");
    const int n = g.points;
    const int B = 2 * n + 1;
    auto box = kernel_box_unit(g.dim, n, kernel);

    const double h = g.spacing();
    const double scale = pc.G * h * h;
    RealField U(g);
    std::vector<int> it(static_cast<std::size_t>(g.dim), 0);
    std::vector<int> js(static_cast<std::size_t>(g.dim), 0);
    std::size_t p = 0;
    do {
        double acc = 0.0;
        std::fill(js.begin(), js.end(), 0);
        std::size_t q = 0;
        do {
            std::size_t kidx = 0;
            for (int a = 0; a < g.dim; ++a)
                kidx = kidx * B + static_cast<std::size_t>(it[a] - js[a] + n);
            acc += box[kidx] * rho.values[q++];
        } while (advance(js, n));
        U.values[p++] = acc * scale;
    } while (advance(it, n));
    return U;
}

namespace {

double residual_norms(const RealField& U, const RealField& rho, const PhysicalConstants& pc,
                      double Lambda, double& source_norm) {
    check_finite(U, "potential");
    check_finite(rho, "source density");
    require_same_grid(U.grid, rho.grid, "poisson_residual");
    const GridSpec& g = U.grid;
    const int n = g.points;
    const double h = g.spacing();
    const double h2 = h * h;

    double acc = 0.0, src = 0.0;
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 1);
    std::vector<int> nb(static_cast<std::size_t>(g.dim));
    bool more = g.dim > 0;
    // iterate interior nodes only
    while (more) {
        const std::size_t p = g.flat(idx);
        double lap = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            nb.assign(idx.begin(), idx.end());
            nb[a] = idx[a] + 1;
            const double up = U.values[g.flat(nb)];
            nb[a] = idx[a] - 1;
            const double dn = U.values[g.flat(nb)];
            lap += (up - 2.0 * U.values[p] + dn) / h2;
        }
        const double source = 4.0 * M_PI * pc.G * rho.values[p] + Lambda;
        const double r = lap - source;
        acc += r * r;
        src += source * source;

        // odometer over [1, n-2]
        int a = g.dim - 1;
        for (; a >= 0; --a) {
            if (++idx[a] <= n - 2) break;
            idx[a] = 1;
        }
        if (a < 0) more = false;
    }
    const double w = std::pow(h, g.dim);
    source_norm = std::sqrt(src * w);
    return std::sqrt(acc * w);
}

} // namespace

double poisson_residual(const RealField& U, const RealField& rho,
                        const PhysicalConstants& pc, double Lambda) {
    double src = 0.0;
    return residual_norms(U, rho, pc, Lambda, src);
}

double poisson_residual_relative(const RealField& U, const RealField& rho,
                                 const PhysicalConstants& pc, double Lambda) {
    double src = 0.0;
    const double abs = residual_norms(U, rho, pc, Lambda, src);
    return src > 0.0 ? abs / src : abs;
}

} // namespace snlab
