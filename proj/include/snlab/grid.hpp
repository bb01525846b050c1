#ifndef SNLAB_GRID_HPP
#define SNLAB_GRID_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "snlab/errors.hpp"

namespace snlab {

using complex = std::complex<double>;

enum class Boundary { periodic, zero_padded };

/// Uniform Cartesian grid over [-L, L)^d with n nodes per axis,
/// x_i = -L + i*h, h = 2L/n.  n must be even and >= 4 (spectral
/// operators and domain doubling both need that).
struct GridSpec {
    int dim = 3;
    double extent = 1.0;
    int points = 8;
    Boundary boundary = Boundary::periodic;

    GridSpec() = default;
    GridSpec(int dim_, double extent_, int points_, Boundary boundary_);

    double spacing() const { return 2.0 * extent / points; }
    double coord(int i) const { return -extent + i * spacing(); }
    std::size_t size() const;

    std::size_t flat(std::span<const int> idx) const;
    void unflatten(std::size_t flat_idx, std::span<int> idx) const;
    void node_coords(std::span<const int> idx, std::span<double> x) const;

    bool operator==(const GridSpec&) const = default;
};

/// Odometer-style multi-index increment; returns false once idx wraps
/// back to all zeros.  for (idx = {0,..}; ; ) { ...; if (!advance(idx, n)) break; }
bool advance(std::vector<int>& idx, int n);

template <class T>
struct Field {
    GridSpec grid;
    std::vector<T> values;

    Field() = default;
    explicit Field(const GridSpec& g) : grid(g), values(g.size(), T{}) {}
    Field(const GridSpec& g, std::vector<T> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size())
            throw ShapeError("field value count does not match grid size");
    }

    T& operator[](std::size_t i) { return values[i]; }
    const T& operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

using RealField = Field<double>;
using ComplexField = Field<complex>;

struct VectorField {
    GridSpec grid;
    std::vector<RealField> comps;

    VectorField() = default;
    explicit VectorField(const GridSpec& g) : grid(g), comps(g.dim, RealField(g)) {}

    void check() const {
        if (static_cast<int>(comps.size()) != grid.dim)
            throw ShapeError("vector field component count does not match grid dimension");
    }
};

/// psi together with the particle mass and the time stamp of the slice.
struct WaveFunction {
    ComplexField psi;
    double mass = 1.0;
    double time = 0.0;
};

/// hbar, G and the kernel/weight constants derived from the spatial
/// dimension: C_d = Gamma(d/2) / (2 pi^{d/2} (d-2)), N = d+2,
/// w = (N-2)/(2N) = d/(2d+4).
struct PhysicalConstants {
    double hbar = 1.0;
    double G = 1.0;
    int dim = 3;

    PhysicalConstants() = default;
    PhysicalConstants(double hbar_, double G_, int dim_);

    double kernel_constant() const;          // C_d, requires dim > 2
    int bargmann_dim() const { return dim + 2; }
    double density_weight() const { return static_cast<double>(dim) / (2.0 * dim + 4.0); }
};

/// Throws InvalidFieldError if any sample is NaN/Inf or the field is empty.
void check_finite(const RealField& f, const char* what = "field");
void check_finite(const ComplexField& f, const char* what = "field");

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

} // namespace snlab

#endif
