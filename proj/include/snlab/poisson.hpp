#ifndef SNLAB_POISSON_HPP
#define SNLAB_POISSON_HPP

#include "snlab/grid.hpp"

namespace snlab {

/// Kernel choice for the free-space convolution solve.
///
/// fd_consistent: free-space lattice Green function of the 2nd-order
/// (2d+1)-point laplacian, built once per grid by a DST-based Dirichlet
/// solve with the continuum asymptotics -4 pi G C_d / r^{d-2} imposed on
/// the outer shell.  The discrete Poisson equation then holds to roundoff
/// on interior nodes, and the kernel tracks the continuum one to
/// O((h/r)^2) in the far field.
///
/// continuum: the continuum kernel sampled at the nodes, with the
/// self-cell replaced by the cell-averaged kernel integral.  Node values
/// are exact Green-function values (best far-field fidelity), at the price
/// of an O(h^2) discrete Poisson residual.
///
/// spectral: truncated-kernel solve in Fourier space on the doubled grid,
/// symbol -4 pi G (1 - cos(R|k|))/|k|^2 with R twice the half-width.
/// Spectrally accurate for densities that are resolved and concentrated
/// away from the corners; the covariance certificates use it because its
/// quadrature error commutes with the group rescalings.
enum class PoissonKernel { fd_consistent, continuum, spectral };

/// Newtonian potential of a compactly supported source: the zero-padded
/// (domain-doubled) discrete convolution of rho with the selected kernel,
/// so U -> 0 at infinity.  Requires d > 2.
RealField greens_potential(const RealField& rho, const PhysicalConstants& pc,
                           PoissonKernel kernel = PoissonKernel::fd_consistent);

/// Discrete L2 norm (h^d weights) of lap(U) - 4 pi G rho - Lambda over
/// interior nodes, with the central 2nd-order laplacian.
double poisson_residual(const RealField& U, const RealField& rho,
                        const PhysicalConstants& pc, double Lambda = 0.0);

/// Same residual divided by the interior norm of the source 4 pi G rho + Lambda
/// (absolute value returned if the source vanishes).
double poisson_residual_relative(const RealField& U, const RealField& rho,
                                 const PhysicalConstants& pc, double Lambda = 0.0);

/// int_{[-1/2,1/2]^d} ||z||^{2-d} dz, evaluated once per dimension by a
/// self-similar subdivision (the central subcell rescales onto the whole
/// integral) with Richardson extrapolation; cached.
double unit_cell_kernel_integral(int dim);

/// Direct O(n^{2d}) summation with the identical discrete kernel; the
/// oracle for the convolution path.
RealField greens_potential_direct(const RealField& rho, const PhysicalConstants& pc,
                                  PoissonKernel kernel = PoissonKernel::fd_consistent);

} // namespace snlab

#endif
