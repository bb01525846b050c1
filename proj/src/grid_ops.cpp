#include "snlab/grid_ops.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace snlab {

namespace {

constexpr double node_snap_tol = 1e-9;

std::vector<int> grid_dims(const GridSpec& g) {
    return std::vector<int>(static_cast<std::size_t>(g.dim), g.points);
}

// Apply an n x n complex matrix along one axis of a row-major rank-d array:
// out[..., j, ...] = sum_m M[j*n + m] * in[..., m, ...].
void apply_axis_matrix(std::vector<complex>& data, const GridSpec& g, int axis,
                       const std::vector<complex>& M) {
    const int n = g.points;
    std::size_t inner = 1;
    for (int a = axis + 1; a < g.dim; ++a) inner *= n;
    std::size_t outer = data.size() / (inner * n);

    std::vector<complex> slice(static_cast<std::size_t>(n));
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = (o * n) * inner + i;
            for (int m = 0; m < n; ++m) slice[m] = data[base + m * inner];
            for (int j = 0; j < n; ++j) {
                complex acc = 0.0;
                const complex* row = M.data() + static_cast<std::size_t>(j) * n;
                for (int m = 0; m < n; ++m) acc += row[m] * slice[m];
                data[base + j * inner] = acc;
            }
        }
    }
}

// Trig basis weights for one axis at position x: w_m(x) such that
// f(x) = (1/n) sum_m F_m w_m(x).  Nyquist bin uses cos (split +/- mode).
void trig_weights(const GridSpec& g, double x, std::vector<complex>& w) {
    const int n = g.points;
    const double L = g.extent;
    w.resize(static_cast<std::size_t>(n));
    const double u = x + L;
    for (int m = 0; m < n; ++m) {
        const int s = signed_mode(m, n);
        const double k = M_PI * s / L;
        if (std::abs(s) == n / 2) {
            w[m] = std::cos(k * u);
        } else {
            w[m] = std::polar(1.0, k * u);
        }
    }
}

bool snap_to_node(const GridSpec& g, double x, int& node) {
    const double u = (x + g.extent) / g.spacing();
    const double r = std::round(u);
    if (std::abs(u - r) < node_snap_tol) {
        long idx = static_cast<long>(r);
        if (g.boundary == Boundary::periodic) {
            idx %= g.points;
            if (idx < 0) idx += g.points;
        } else if (idx < 0 || idx >= g.points) {
            return false;
        }
        node = static_cast<int>(idx);
        return true;
    }
    return false;
}

// FD first derivative along one axis, 2nd order.  Periodic wrap or
// one-sided closures depending on the boundary mode.
template <class T>
void fd_derivative_axis(const Field<T>& f, int axis, Field<T>& out) {
    const GridSpec& g = f.grid;
    const int n = g.points;
    const double h = g.spacing();
    std::size_t inner = 1;
    for (int a = axis + 1; a < g.dim; ++a) inner *= n;
    const std::size_t total = f.size();

    for (std::size_t p = 0; p < total; ++p) {
        const int i = static_cast<int>((p / inner) % n);
        const std::size_t base = p - static_cast<std::size_t>(i) * inner;
        auto at = [&](int j) { return f.values[base + static_cast<std::size_t>(j) * inner]; };
        T v;
        if (g.boundary == Boundary::periodic) {
            v = (at((i + 1) % n) - at((i - 1 + n) % n)) / (2.0 * h);
        } else if (i == 0) {
            v = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
        } else if (i == n - 1) {
            v = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
        } else {
            v = (at(i + 1) - at(i - 1)) / (2.0 * h);
        }
        out.values[p] = v;
    }
}

template <class T>
void fd_second_derivative_axis_accum(const Field<T>& f, int axis, Field<T>& out) {
    const GridSpec& g = f.grid;
    const int n = g.points;
    const double h2 = g.spacing() * g.spacing();
    std::size_t inner = 1;
    for (int a = axis + 1; a < g.dim; ++a) inner *= n;
    const std::size_t total = f.size();

    for (std::size_t p = 0; p < total; ++p) {
        const int i = static_cast<int>((p / inner) % n);
        const std::size_t base = p - static_cast<std::size_t>(i) * inner;
        auto at = [&](int j) { return f.values[base + static_cast<std::size_t>(j) * inner]; };
        T v;
        if (g.boundary == Boundary::periodic) {
            v = (at((i + 1) % n) - 2.0 * at(i) + at((i - 1 + n) % n)) / h2;
        } else if (i == 0) {
            v = (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2;
        } else if (i == n - 1) {
            v = (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) / h2;
        } else {
            v = (at(i + 1) - 2.0 * at(i) + at(i - 1)) / h2;
        }
        out.values[p] += v;
    }
}

ComplexField to_complex(const RealField& f) {
    ComplexField c(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) c.values[i] = f.values[i];
    return c;
}

RealField real_part(const ComplexField& f) {
    RealField r(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) r.values[i] = f.values[i].real();
    return r;
}

} // namespace

int signed_mode(int m, int n) { return (m <= n / 2) ? m : m - n; }

ComplexField band_limit(const ComplexField& f, double frac) {
    const GridSpec& g = f.grid;
    if (g.boundary != Boundary::periodic)
        throw ConfigError("band_limit requires a periodic grid");
    const int n = g.points;
    const int cut = static_cast<int>(frac * (n / 2));
    auto spec = fft_forward(f);
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
    std::size_t p = 0;
    do {
        for (int a = 0; a < g.dim; ++a) {
            if (std::abs(signed_mode(idx[a], n)) > cut) {
                spec[p] = 0.0;
                break;
            }
        }
        ++p;
    } while (advance(idx, n));
    return fft_inverse(g, std::move(spec));
}

RealField band_limit(const RealField& f, double frac) {
    ComplexField c(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) c.values[i] = f.values[i];
    ComplexField out = band_limit(c, frac);
    RealField r(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) r.values[i] = out.values[i].real();
    return r;
}

// ---- quadrature ------------------------------------------------------------

double l2_norm(const ComplexField& f) {
    check_finite(f, "wave function");
    double s = 0.0;
    for (const complex& v : f.values) s += std::norm(v);
    return std::sqrt(s * std::pow(f.grid.spacing(), f.grid.dim));
}

double l2_norm(const RealField& f) {
    check_finite(f, "field");
    double s = 0.0;
    for (double v : f.values) s += v * v;
    return std::sqrt(s * std::pow(f.grid.spacing(), f.grid.dim));
}

double l2_norm(const WaveFunction& wf) { return l2_norm(wf.psi); }

double inner_product_re(const RealField& a, const RealField& b) {
    require_same_grid(a.grid, b.grid, "inner_product");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.values[i] * b.values[i];
    return s * std::pow(a.grid.spacing(), a.grid.dim);
}

complex inner_product(const ComplexField& a, const ComplexField& b) {
    require_same_grid(a.grid, b.grid, "inner_product");
    complex s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a.values[i]) * b.values[i];
    return s * std::pow(a.grid.spacing(), a.grid.dim);
}

WaveFunction normalize(const WaveFunction& wf) {
    const double nrm = l2_norm(wf);
    if (nrm <= 0.0) throw InvalidFieldError("cannot normalize a zero wave function");
    WaveFunction out = wf;
    for (complex& v : out.psi.values) v /= nrm;
    return out;
}

// ---- FFT -------------------------------------------------------------------

std::vector<complex> fft_forward(const ComplexField& f) {
    if (f.grid.boundary != Boundary::periodic)
        throw ConfigError("FFT requires a periodic grid");
    std::vector<complex> out(f.size());
    std::vector<complex> in(f.values);
    auto dims = grid_dims(f.grid);
    fftw_plan plan = fftw_plan_dft(f.grid.dim, dims.data(),
                                   reinterpret_cast<fftw_complex*>(in.data()),
                                   reinterpret_cast<fftw_complex*>(out.data()),
                                   FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

ComplexField fft_inverse(const GridSpec& grid, std::vector<complex> spectrum) {
    ComplexField out(grid);
    auto dims = grid_dims(grid);
    fftw_plan plan = fftw_plan_dft(grid.dim, dims.data(),
                                   reinterpret_cast<fftw_complex*>(spectrum.data()),
                                   reinterpret_cast<fftw_complex*>(out.values.data()),
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    const double norm = 1.0 / static_cast<double>(grid.size());
    for (complex& v : out.values) v *= norm;
    return out;
}

// ---- differential operators --------------------------------------------------

ComplexField laplacian(const ComplexField& f) {
    check_finite(f, "laplacian input");
    const GridSpec& g = f.grid;
    if (g.boundary == Boundary::periodic) {
        auto spec = fft_forward(f);
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
            spec[p++] *= -s;
        } while (advance(idx, n));
        return fft_inverse(g, std::move(spec));
    }
    ComplexField out(g);
    for (int a = 0; a < g.dim; ++a) fd_second_derivative_axis_accum(f, a, out);
    return out;
}

RealField laplacian(const RealField& f) {
    check_finite(f, "laplacian input");
    if (f.grid.boundary == Boundary::periodic) return real_part(laplacian(to_complex(f)));
    RealField out(f.grid);
    for (int a = 0; a < f.grid.dim; ++a) fd_second_derivative_axis_accum(f, a, out);
    return out;
}

std::vector<ComplexField> gradient_c(const ComplexField& f) {
    check_finite(f, "gradient input");
    const GridSpec& g = f.grid;
    std::vector<ComplexField> out;
    out.reserve(g.dim);
    if (g.boundary == Boundary::periodic) {
        auto spec = fft_forward(f);
        const int n = g.points;
        std::vector<complex> ik(static_cast<std::size_t>(n));
        for (int m = 0; m < n; ++m) {
            const int s = signed_mode(m, n);
            // Nyquist derivative set to zero (odd operator on an even grid)
            ik[m] = (std::abs(s) == n / 2) ? complex(0.0)
                                           : complex(0.0, M_PI * s / g.extent);
        }
        for (int axis = 0; axis < g.dim; ++axis) {
            std::vector<complex> sp = spec;
            std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
            std::size_t p = 0;
            do {
                sp[p++] *= ik[idx[axis]];
            } while (advance(idx, n));
            out.push_back(fft_inverse(g, std::move(sp)));
        }
        return out;
    }
    for (int axis = 0; axis < g.dim; ++axis) {
        ComplexField dfa(g);
        fd_derivative_axis(f, axis, dfa);
        out.push_back(std::move(dfa));
    }
    return out;
}

VectorField gradient(const RealField& f) {
    check_finite(f, "gradient input");
    const GridSpec& g = f.grid;
    VectorField out(g);
    if (g.boundary == Boundary::periodic) {
        auto grads = gradient_c(to_complex(f));
        for (int a = 0; a < g.dim; ++a) out.comps[a] = real_part(grads[a]);
        return out;
    }
    for (int a = 0; a < g.dim; ++a) fd_derivative_axis(f, a, out.comps[a]);
    return out;
}

RealField divergence(const VectorField& v) {
    v.check();
    const GridSpec& g = v.grid;
    RealField out(g);
    for (int a = 0; a < g.dim; ++a) {
        require_same_grid(g, v.comps[a].grid, "divergence");
        if (g.boundary == Boundary::periodic) {
            auto grads = gradient_c(to_complex(v.comps[a]));
            for (std::size_t i = 0; i < out.size(); ++i)
                out.values[i] += grads[a].values[i].real();
        } else {
            RealField d(g);
            fd_derivative_axis(v.comps[a], a, d);
            for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += d.values[i];
        }
    }
    return out;
}

// ---- interpolation -------------------------------------------------------------

Interpolant::Interpolant(const ComplexField& f) : field_(f) {
    check_finite(f, "interpolant input");
    if (f.grid.boundary == Boundary::periodic) spectrum_ = fft_forward(f);
}

Interpolant::Interpolant(const RealField& f) : Interpolant(to_complex(f)) {
    from_real_ = true;
}

complex Interpolant::operator()(std::span<const double> x) const {
    const GridSpec& g = field_.grid;
    if (static_cast<int>(x.size()) != g.dim)
        throw ShapeError("sample point dimension does not match grid");

    // exact node hit -> stored sample
    std::vector<int> node(static_cast<std::size_t>(g.dim));
    bool on_node = true;
    for (int a = 0; a < g.dim; ++a) {
        if (!snap_to_node(g, x[a], node[a])) { on_node = false; break; }
    }
    if (on_node) return field_.values[g.flat(node)];

    const int n = g.points;
    if (g.boundary == Boundary::periodic) {
        // separable contraction of the spectrum against per-axis weights
        std::vector<complex> work = spectrum_;
        std::vector<complex> w;
        std::size_t len = work.size();
        for (int axis = g.dim - 1; axis >= 0; --axis) {
            trig_weights(g, x[axis], w);
            len /= n;
            for (std::size_t b = 0; b < len; ++b) {
                complex acc = 0.0;
                for (int m = 0; m < n; ++m) acc += work[b * n + m] * w[m];
                work[b] = acc;
            }
        }
        return work[0] / static_cast<double>(g.size());
    }

    // multilinear
    const double h = g.spacing();
    std::vector<int> base(static_cast<std::size_t>(g.dim));
    std::vector<double> frac(static_cast<std::size_t>(g.dim));
    for (int a = 0; a < g.dim; ++a) {
        const double u = (x[a] + g.extent) / h;
        if (u < -node_snap_tol || u > n - 1 + node_snap_tol)
            throw OutOfDomainError("sample point outside non-periodic domain");
        double cu = std::clamp(u, 0.0, static_cast<double>(n - 1));
        int i0 = std::min(static_cast<int>(cu), n - 2);
        base[a] = i0;
        frac[a] = cu - i0;
    }
    complex acc = 0.0;
    const int corners = 1 << g.dim;
    std::vector<int> idx(static_cast<std::size_t>(g.dim));
    for (int cbits = 0; cbits < corners; ++cbits) {
        double wgt = 1.0;
        for (int a = 0; a < g.dim; ++a) {
            const int bit = (cbits >> a) & 1;
            idx[a] = base[a] + bit;
            wgt *= bit ? frac[a] : (1.0 - frac[a]);
        }
        if (wgt != 0.0) acc += wgt * field_.values[g.flat(idx)];
    }
    return acc;
}

double Interpolant::real_at(std::span<const double> x) const {
    return (*this)(x).real();
}

complex sample_at(const ComplexField& f, std::span<const double> x) {
    return Interpolant(f)(x);
}

double sample_at(const RealField& f, std::span<const double> x) {
    return Interpolant(f).real_at(x);
}

// ---- bulk resampling ------------------------------------------------------------

ComplexField resample_affine(const ComplexField& f, std::span<const double> scale,
                             std::span<const double> shift) {
    const GridSpec& g = f.grid;
    if (static_cast<int>(scale.size()) != g.dim || static_cast<int>(shift.size()) != g.dim)
        throw ShapeError("resample_affine argument dimension mismatch");

    if (g.boundary == Boundary::periodic) {
        bool trivial = true;
        for (int a = 0; a < g.dim; ++a)
            if (scale[a] != 1.0 || shift[a] != 0.0) trivial = false;
        if (trivial) return f;

        std::vector<complex> work = fft_forward(f);
        const int n = g.points;
        std::vector<complex> M(static_cast<std::size_t>(n) * n);
        std::vector<complex> w;
        for (int axis = 0; axis < g.dim; ++axis) {
            for (int j = 0; j < n; ++j) {
                trig_weights(g, scale[axis] * g.coord(j) + shift[axis], w);
                std::copy(w.begin(), w.end(), M.begin() + static_cast<std::size_t>(j) * n);
            }
            apply_axis_matrix(work, g, axis, M);
        }
        ComplexField out(g);
        const double norm = 1.0 / static_cast<double>(g.size());
        for (std::size_t i = 0; i < work.size(); ++i) out.values[i] = work[i] * norm;
        return out;
    }

    Interpolant interp(f);
    ComplexField out(g);
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
    std::vector<double> x(static_cast<std::size_t>(g.dim));
    std::size_t p = 0;
    do {
        for (int a = 0; a < g.dim; ++a) x[a] = scale[a] * g.coord(idx[a]) + shift[a];
        out.values[p++] = interp(x);
    } while (advance(idx, g.points));
    return out;
}

RealField resample_affine(const RealField& f, std::span<const double> scale,
                          std::span<const double> shift) {
    auto out = resample_affine(to_complex(f), scale, shift);
    return real_part(out);
}

ComplexField resample_map(const ComplexField& f,
                          const std::function<void(std::span<const double>, std::span<double>)>& map) {
    const GridSpec& g = f.grid;
    Interpolant interp(f);
    ComplexField out(g);
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
    std::vector<double> x(static_cast<std::size_t>(g.dim)), y(static_cast<std::size_t>(g.dim));
    std::size_t p = 0;
    do {
        g.node_coords(idx, x);
        map(x, y);
        out.values[p++] = interp(y);
    } while (advance(idx, g.points));
    return out;
}

RealField resample_map(const RealField& f,
                       const std::function<void(std::span<const double>, std::span<double>)>& map) {
    return real_part(resample_map(to_complex(f), map));
}

} // namespace snlab
