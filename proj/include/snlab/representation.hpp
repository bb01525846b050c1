#ifndef SNLAB_REPRESENTATION_HPP
#define SNLAB_REPRESENTATION_HPP

#include <optional>
#include <string>

#include "snlab/evolve.hpp"
#include "snlab/sn_group.hpp"

namespace snlab {

/// The unitary action of a group element on one wave-function slice.
/// The slice time maps forward to (d t + e)/(f t + g); the returned state
/// carries mass nu * m.  For dim != 4
///   [rho(Phi) psi](x, t) = g^{d/2} exp(i theta) psi(A^{-1}[g x - (g t - e) b / d - c],
///                                           (g t - e)/d),
///   theta = (m/hbar) (g<b,x> - g|b|^2 t/(2d) + e|b|^2/(2d) - <b,c> - h)
/// (the phase coefficient is the slice mass over hbar; with the transformed
/// mass nu m written for m this is the m/(nu hbar) form).  For dim == 4 the
/// projective formula with prefactor (-f t + d)^{-d/2} and the quadratic
/// phase applies; -f t + d = 0 raises ProjectiveSingularityError.
WaveFunction rho_apply(const SNElement& el, const WaveFunction& wf, double hbar = 1.0);

/// | ||rho(el) psi|| - ||psi|| |.
double unitarity_defect(const SNElement& el, const WaveFunction& wf, double hbar = 1.0);

/// How the hatted potentials entering the residual are obtained.
/// regenerated: re-derive U from the transformed density m_hat |psi_hat~|^2
/// exactly as the solver would (the self-consistency closes the loop, so an
/// equation-violating transformation shows up directly).  transported: use
/// transform_potentials on the stored fields; faithful to the transport law
/// but subject to resampling noise of the potential's free-space tails.
enum class PotentialMode { regenerated, transported };

struct CovarianceOptions {
    /// Negative control: evaluate the transformed system with the input mass
    /// instead of nu * m (deliberate violation of the mass-dilation law).
    bool control_run = true;
    PotentialMode potentials = PotentialMode::regenerated;
};

struct CovarianceReport {
    int dim = 3;
    double nu = 1.0;
    std::string element_note;
    double residual_base = 0.0;
    double residual_transformed = 0.0;
    double residual_control = 0.0;     // mass left untransformed
    double transport_defect = 0.0;     // |U_transported - U_regenerated| / |U_regenerated|
    int clipped_states = 0;            // states skipped near projective singularities
    bool control_meaningful = false;   // nu != 1

    double ratio_transformed() const {
        return residual_base > 0 ? residual_transformed / residual_base : 0.0;
    }
    double ratio_control() const {
        return residual_base > 0 ? residual_control / residual_base : 0.0;
    }
};

/// Transform the whole trajectory (states through rho_apply, potentials and
/// Coriolis form through transform_potentials, mass through transform_mass)
/// and certify that the transformed data satisfies the transformed equations:
/// residual_transformed should be O(discretization) when the group constraint
/// holds, and the mass-violating control should be far larger.
CovarianceReport covariance_check(const SNElement& el, const TrajectoryRecord& traj,
                                  const VectorField* omega, const SolverConfig& cfg,
                                  const CovarianceOptions& opts = {});

} // namespace snlab

#endif
