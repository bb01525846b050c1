#ifndef SNLAB_CURVATURE_HPP
#define SNLAB_CURVATURE_HPP

#include <Eigen/Dense>

#include <map>
#include <string>

#include "snlab/brinkmann.hpp"
#include "snlab/time_reparam.hpp"

namespace snlab {

// Finite-difference curvature oracle for the full (d+2)-metric, independent
// of the closed-form Christoffel route: generic symbols from 4th-order
// differences of the sampled metric, Ricci from 4th-order differences of
// those symbols.  Convention
//   Ric_{mu nu} = d_a Gamma^a_{mu nu} - d_nu Gamma^a_{mu a}
//                 + Gamma^a_{a b} Gamma^b_{mu nu} - Gamma^a_{nu b} Gamma^b_{mu a},
// chosen so the Newton source term enters with +4 pi G rho.
// Points need a 4-node margin in space, and in time unless the data is a
// single static slice.

/// (d+2)x(d+2) metric matrix at a stored sample.
Eigen::MatrixXd metric_at(const BrinkmannData& bd, std::span<const int> node, int time_index);

/// Ricci tensor by nested finite differences of the sampled metric.
Eigen::MatrixXd ricci_fd(const BrinkmannData& bd, const SpacetimePoint& p);

/// Ricci assembled from the closed-form Christoffel symbols (same nested
/// outer differences, different inner route); the agreement target for
/// ricci_fd.
Eigen::MatrixXd ricci_from_closed(const BrinkmannData& bd, const SpacetimePoint& p);

/// Scalar curvature g^{mu nu} Ric_{mu nu} at the point.
double scalar_fd(const BrinkmannData& bd, const SpacetimePoint& p);

/// Ricci of the conformally scaled metric lambda(t) g with lambda = phi'.
Eigen::MatrixXd ricci_fd_scaled(const BrinkmannData& bd, const TimeReparam& tp,
                                const SpacetimePoint& p);
double scalar_fd_scaled(const BrinkmannData& bd, const TimeReparam& tp, const SpacetimePoint& p);

/// ricci_fd(phi'(t) g) - ricci_fd(g); for Bargmann data this must equal
/// -(N-2)/2 S(phi) dt(x)dt with N = d+2.
Eigen::MatrixXd conformal_ricci_shift(const BrinkmannData& bd, const TimeReparam& tp,
                                      const SpacetimePoint& p);

/// Point diagnostics for reporting: Ricci entries, scalar curvature and
/// named residual norms.
struct CurvatureReport {
    SpacetimePoint point;
    Eigen::MatrixXd ricci;
    double scalar = 0.0;
    std::map<std::string, double> residual_norms;
};

} // namespace snlab

#endif
