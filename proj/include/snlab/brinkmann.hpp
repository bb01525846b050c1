#ifndef SNLAB_BRINKMANN_HPP
#define SNLAB_BRINKMANN_HPP

#include <functional>
#include <vector>

#include "snlab/grid.hpp"

namespace snlab {

/// Newtonian potential U and Coriolis covector omega of a spatially flat
/// Brinkmann metric, sampled on one spatial grid over a uniform set of
/// time slices.  Coordinate order everywhere: (x^1..x^d, t, s).
struct BrinkmannData {
    GridSpec grid;
    std::vector<double> times;
    std::vector<RealField> potential;      // U, one per time sample
    std::vector<VectorField> coriolis;     // omega, one per time sample
    PhysicalConstants constants;

    BrinkmannData() = default;
    BrinkmannData(GridSpec g, std::vector<double> ts, std::vector<RealField> U,
                  std::vector<VectorField> om, PhysicalConstants pc);

    int n_times() const { return static_cast<int>(times.size()); }
    double time_step() const;

    /// Static (single-slice) data: time derivatives are treated as zero.
    static BrinkmannData statics(RealField U, VectorField omega, PhysicalConstants pc);

    /// Sample analytic U(x, t), omega_i(x, t) over grid x time lattice.
    static BrinkmannData from_functions(
        const GridSpec& g, PhysicalConstants pc, double t0, double dt, int n_times,
        const std::function<double(std::span<const double>, double)>& U,
        const std::function<void(std::span<const double>, double, std::span<double>)>& omega);
};

/// Spacetime sample point: a spatial node plus a time index.
struct SpacetimePoint {
    std::vector<int> node;
    int time_index = 0;
};

/// Christoffel symbols Gamma^a_{mu nu} of the (d+2)-metric at one point,
/// dense storage, symmetric in the lower pair.
class ChristoffelTable {
  public:
    explicit ChristoffelTable(int bargmann_dim);
    double& at(int a, int mu, int nu);
    double at(int a, int mu, int nu) const;
    int dim() const { return n_; }

  private:
    int n_;
    std::vector<double> v_;
};

/// The nonzero symbols of the spatially flat Brinkmann metric, assembled
/// from the closed-form expressions with 4th-order finite differences of
/// the stored samples.  Point must be at least 2 nodes from every edge
/// (stencil radius), else StencilError.
ChristoffelTable christoffel_closed(const BrinkmannData& bd, const SpacetimePoint& p);

/// Residual pair of the Newton-Coriolis field equations at the stored
/// slices: (|delta Omega|, |lap U + d_t(delta omega) + 1/2 |Omega|^2
/// - 4 pi G rho - Lambda|), both in discrete L2 over interior nodes.
/// rho is the mass density m |psi~|^2 supplied by the caller; pass one
/// field per time slice.
struct NCResidual {
    double coriolis_divergence = 0.0;
    double potential_equation = 0.0;
};

NCResidual nc_residual(const BrinkmannData& bd, const std::vector<RealField>& rho,
                       double Lambda = 0.0);
NCResidual nc_residual(const BrinkmannData& bd, const RealField& rho, double Lambda = 0.0);

/// ||Omega||^2 = 1/2 sum_{ij} Omega_ij^2 with Omega = d(omega), evaluated
/// with the grid backend; used by the solver's potential term as well.
RealField coriolis_intensity(const VectorField& omega);

/// 1/2 |omega|^2 pointwise (the potential term's centrifugal completion).
RealField omega_half_square(const VectorField& omega);

} // namespace snlab

#endif
