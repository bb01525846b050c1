#ifndef SNLAB_GRID_OPS_HPP
#define SNLAB_GRID_OPS_HPP

#include <functional>
#include <span>
#include <vector>

#include "snlab/grid.hpp"

namespace snlab {

// ---- quadrature -----------------------------------------------------------

/// (sum_j |psi_j|^2 h^d)^{1/2}.  Throws on NaN-bearing fields.
double l2_norm(const WaveFunction& wf);
double l2_norm(const ComplexField& f);
double l2_norm(const RealField& f);

double inner_product_re(const RealField& a, const RealField& b);
complex inner_product(const ComplexField& a, const ComplexField& b);

/// Rescale to unit L2 norm; zero field -> InvalidFieldError.
WaveFunction normalize(const WaveFunction& wf);

// ---- differential operators ------------------------------------------------
// Backend follows the grid boundary: periodic grids use Fourier
// differentiation (exact below Nyquist), zero-padded grids use 2nd-order
// central differences with one-sided closures at the two boundary layers.
// The spectral first derivative zeroes the Nyquist mode; the spectral
// laplacian keeps -k^2 on it.

RealField laplacian(const RealField& f);
ComplexField laplacian(const ComplexField& f);

VectorField gradient(const RealField& f);
RealField divergence(const VectorField& v);

/// Spectral gradient of a complex field (needed by the Coriolis term).
std::vector<ComplexField> gradient_c(const ComplexField& f);

// ---- FFT helpers (periodic grids) -------------------------------------------

/// Unnormalized forward DFT of the samples (FFTW sign convention,
/// exp(-i k.x) analysis); inverse applies 1/n^d.
std::vector<complex> fft_forward(const ComplexField& f);
ComplexField fft_inverse(const GridSpec& grid, std::vector<complex> spectrum);

/// Signed integer mode for DFT bin m on an n-point axis: m <= n/2 keeps m,
/// else m - n.  k = pi/L * mode.
int signed_mode(int m, int n);

/// Sharp spectral low-pass: zero every mode with |signed mode| > frac * n/2
/// on any axis (periodic grids only).  The residual certificates use this to
/// de-alias near-Nyquist content before differentiating.
ComplexField band_limit(const ComplexField& f, double frac);
RealField band_limit(const RealField& f, double frac);

// ---- interpolation -----------------------------------------------------------

/// Point samplers.  Periodic grids use trigonometric interpolation (exact
/// for band-limited data, periodic wrap of the argument); zero-padded grids
/// use multilinear interpolation and refuse points outside [-L, L-h].
/// Arguments that land on a node (within 1e-9 h) return the stored sample
/// unchanged, so node queries are bit-exact.
class Interpolant {
  public:
    explicit Interpolant(const ComplexField& f);
    explicit Interpolant(const RealField& f);

    complex operator()(std::span<const double> x) const;
    double real_at(std::span<const double> x) const;

    const GridSpec& grid() const { return field_.grid; }

  private:
    ComplexField field_;
    std::vector<complex> spectrum_;   // periodic mode only
    bool from_real_ = false;
};

complex sample_at(const ComplexField& f, std::span<const double> x);
double sample_at(const RealField& f, std::span<const double> x);

/// out(x_j) = f(scale .* x_j + shift) for every node x_j, evaluated through
/// the grid's interpolation rule.  On periodic grids this runs separably per
/// axis in O(d n^{d+1}) instead of O(n^{2d}).
ComplexField resample_affine(const ComplexField& f, std::span<const double> scale,
                             std::span<const double> shift);
RealField resample_affine(const RealField& f, std::span<const double> scale,
                          std::span<const double> shift);

/// General resampling through an arbitrary point map x -> y(x) (used for
/// rotations).  O(n^{2d}) on periodic grids; prefer resample_affine when the
/// map is diagonal.
ComplexField resample_map(const ComplexField& f,
                          const std::function<void(std::span<const double>, std::span<double>)>& map);
RealField resample_map(const RealField& f,
                       const std::function<void(std::span<const double>, std::span<double>)>& map);

} // namespace snlab

#endif
