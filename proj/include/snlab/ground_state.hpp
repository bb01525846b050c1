#ifndef SNLAB_GROUND_STATE_HPP
#define SNLAB_GROUND_STATE_HPP

#include <functional>
#include <optional>
#include <vector>

#include "snlab/grid.hpp"

namespace snlab {

/// Spherically symmetric ground-state solve (d = 3): imaginary-time
/// Crank-Nicolson relaxation on u(r) = r psi(r) over r_j = j h_r,
/// j = 0..n_r, with u(0) = u(R) = 0, the gravitational potential from the
/// radial shell integral, and normalization 4 pi int |u|^2 dr = 1.
struct RadialConfig {
    double radius = 10.0;
    int points = 1024;              // interior resolution; h_r = radius / points
    double dtau = 2e-3;
    int max_iter = 200000;
    double tol = 1e-10;             // on ||H u - mu u|| / ||u||
    bool self_gravity = true;
    /// Optional external potential U_ext(r) added to the gravitational one
    /// (test hook; the oscillator oracle uses U_ext = r^2/2 with G = 0).
    std::function<double(double)> external_potential;
};

struct RadialProfile {
    std::vector<double> r;          // n_r + 1 nodes including the origin
    std::vector<double> u;          // u = r psi
    std::vector<double> psi;        // psi(0) extrapolated
    std::vector<double> potential;  // U(r)
    double mu = 0.0;                // chemical potential <H>
    int iterations = 0;
    double residual = 0.0;          // ||H u - mu u|| / ||u|| at exit
};

RadialProfile ground_state_radial(const PhysicalConstants& pc, double mass,
                                  const RadialConfig& cfg);

/// Sample a radial profile onto a 3d grid (linear interpolation in r;
/// psi = 0 and U continued as U(R) R / r beyond the radial range).
WaveFunction lift_radial_state(const RadialProfile& prof, const GridSpec& grid, double mass);
RealField lift_radial_potential(const RadialProfile& prof, const GridSpec& grid);

} // namespace snlab

#endif
