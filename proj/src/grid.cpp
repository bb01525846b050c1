#include "snlab/grid.hpp"

#include <cmath>
#include <string>

namespace snlab {

GridSpec::GridSpec(int dim_, double extent_, int points_, Boundary boundary_)
    : dim(dim_), extent(extent_), points(points_), boundary(boundary_) {
    if (dim < 1) throw ShapeError("grid dimension must be >= 1");
    if (extent <= 0.0) throw ShapeError("grid extent must be positive");
    if (points < 4 || points % 2 != 0)
        throw ShapeError("points per axis must be even and >= 4, got " + std::to_string(points));
}

std::size_t GridSpec::size() const {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(points);
    return s;
}

std::size_t GridSpec::flat(std::span<const int> idx) const {
    std::size_t f = 0;
    for (int a = 0; a < dim; ++a) f = f * points + static_cast<std::size_t>(idx[a]);
    return f;
}

void GridSpec::unflatten(std::size_t flat_idx, std::span<int> idx) const {
    for (int a = dim - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(flat_idx % points);
        flat_idx /= points;
    }
}

void GridSpec::node_coords(std::span<const int> idx, std::span<double> x) const {
    for (int a = 0; a < dim; ++a) x[a] = coord(idx[a]);
}

bool advance(std::vector<int>& idx, int n) {
    for (int a = static_cast<int>(idx.size()) - 1; a >= 0; --a) {
        if (++idx[a] < n) return true;
        idx[a] = 0;
    }
    return false;
}

PhysicalConstants::PhysicalConstants(double hbar_, double G_, int dim_)
    : hbar(hbar_), G(G_), dim(dim_) {
    if (hbar <= 0.0) throw ConfigError("hbar must be positive");
    if (G < 0.0) throw ConfigError("G must be non-negative");
    if (dim < 1) throw ConfigError("spatial dimension must be >= 1");
}

double PhysicalConstants::kernel_constant() const {
    if (dim <= 2)
        throw UnsupportedDimensionError("kernel constant C_d needs d > 2, got d = " + std::to_string(dim));
    return std::tgamma(dim / 2.0) / (2.0 * std::pow(M_PI, dim / 2.0) * (dim - 2.0));
}

void check_finite(const RealField& f, const char* what) {
    if (f.values.empty()) throw InvalidFieldError(std::string(what) + " is empty");
    for (double v : f.values)
        if (!std::isfinite(v)) throw InvalidFieldError(std::string(what) + " contains NaN/Inf");
}

void check_finite(const ComplexField& f, const char* what) {
    if (f.values.empty()) throw InvalidFieldError(std::string(what) + " is empty");
    for (const complex& v : f.values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw InvalidFieldError(std::string(what) + " contains NaN/Inf");
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
    if (!(a == b)) throw ShapeError(std::string("grid mismatch in ") + what);
}

} // namespace snlab
