#ifndef SNLAB_EVOLVE_HPP
#define SNLAB_EVOLVE_HPP

#include <optional>
#include <vector>

#include "snlab/brinkmann.hpp"
#include "snlab/poisson.hpp"

namespace snlab {

enum class Scheme { strang_spectral, crank_nicolson_fd };
enum class SelfConsistency { frozen_half_step, midpoint_recompute };

struct SolverConfig {
    double dt = 1e-3;
    int steps = 100;
    Scheme scheme = Scheme::strang_spectral;
    SelfConsistency self_consistency = SelfConsistency::midpoint_recompute;
    PhysicalConstants constants;
    double Lambda = 0.0;                 // cosmological term in the field equation
    PoissonKernel kernel = PoissonKernel::fd_consistent;
    int record_stride = 1;
    double cn_tol = 1e-12;
    int cn_max_iter = 4000;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<WaveFunction> states;
    std::vector<RealField> potentials;   // U used at each recorded state

    std::size_t size() const { return states.size(); }
};

/// One step of the Schrodinger equation with potential energy m(U + |omega|^2/2)
/// and the symmetrized Coriolis drift term.  The Strang path needs a periodic
/// grid and omega = 0; the Crank-Nicolson path (Cayley form, CGNR inner solve)
/// accepts a static omega discretized with centered differences.
WaveFunction schrodinger_step(const WaveFunction& wf, const RealField& U,
                              const VectorField* omega, const SolverConfig& cfg);

/// Self-consistent evolution: at every step rho = m |psi~|^2, U is the
/// free-space potential of rho plus the Lambda background r^2 Lambda/(2d),
/// then one schrodinger_step.  psi is kept unnormalized; the coupling always
/// uses the normalized density.  Records (t, psi, U) every record_stride steps.
TrajectoryRecord evolve(const WaveFunction& wf0, const SolverConfig& cfg,
                        const VectorField* omega = nullptr);

/// The potential the coupling assigns to a state: the free-space solve of
/// m |psi~|^2 (when G > 0) plus the Lambda background.
RealField self_consistent_potential(const ComplexField& psi, double mass,
                                    const SolverConfig& cfg);

/// Imaginary-time split-step relaxation on the grid itself (normalize after
/// every step, potential refreshed from the current density).  Converges to
/// the discrete ground state of the self-consistent system; the radial
/// profile is a good starting point and this removes its O(h_r^2) bias.
WaveFunction imaginary_time_ground_state(const WaveFunction& init, const SolverConfig& cfg,
                                         int iterations, double dtau);

/// Scale-normalized defect of the generalized Schrodinger equation between
/// two consecutive states (midpoint discretization), plus the Newton-Coriolis
/// residual pair.  certificate() is the solution quality number used by the
/// covariance checks: every term of the equation rescales with the same
/// conformal weight under the group, so the normalized form is comparable
/// across transformed trajectories.
struct SnResidual {
    double schrodinger_defect = 0.0;   // absolute L2
    double schrodinger_scale = 0.0;    // sum of term norms
    double nc_coriolis = 0.0;
    double nc_potential = 0.0;
    double nc_scale = 0.0;

    double certificate() const {
        const double schr = schrodinger_scale > 0 ? schrodinger_defect / schrodinger_scale
                                                  : schrodinger_defect;
        const double nc = nc_scale > 0 ? (nc_coriolis + nc_potential) / nc_scale
                                       : nc_coriolis + nc_potential;
        return schr + nc;
    }
};

/// Residual for one stored pair (k, k+1).
SnResidual sn_residual(const WaveFunction& a, const WaveFunction& b,
                       const RealField& U_a, const RealField& U_b,
                       const VectorField* omega, const SolverConfig& cfg);

/// Residual from an analytic time derivative at a single state.
SnResidual sn_residual(const WaveFunction& wf, const ComplexField& dpsi_dt,
                       const RealField& U, const VectorField* omega,
                       const SolverConfig& cfg);

/// RMS certificate over all consecutive recorded pairs.
double trajectory_residual(const TrajectoryRecord& traj, const VectorField* omega,
                           const SolverConfig& cfg);

/// Gaussian packet (pi sigma^2)^{-d/4} exp(-|x-x0|^2/(2 sigma^2) + i m v.(x-x0)/hbar).
WaveFunction gaussian_packet(const GridSpec& grid, double sigma,
                             std::span<const double> center, std::span<const double> velocity,
                             double mass, double hbar, double time = 0.0);

} // namespace snlab

#endif
