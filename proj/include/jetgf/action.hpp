#pragma once

#include <vector>

#include "jetgf/flow.hpp"
#include "jetgf/types.hpp"

// Action functionals on sampled paths in the jet space.
//
// For a path gamma on [0, 1] the Hamiltonian action is
//   A_H(gamma) = int_0^1 exp(g_{phi_t^-1}(gamma(t))) (lambda(gamma') + H_t(gamma)) dt,
// the conformal weight making the functional invariant under the gauge
// transformation gamma_bar(t) = phi_t^-1(gamma(t)), which satisfies
// A_H(gamma) = A_0(gamma_bar) with A_0 the plain integral of gamma^* lambda.
// The effective action is A~_H = -A_H + z(gamma(1)); on paths satisfying the
// pointwise constraint lambda(gamma') + H = 0 it reduces to z(gamma(1)).

namespace jetgf {
namespace action {

// m+1 samples at uniform times on [0, 1], m >= 8.  Derivatives of sampled
// paths are estimated by centered differences (one-sided at the ends).
struct Path {
  std::vector<double> t;
  std::vector<ContactPoint> y;

  int segments() const { return static_cast<int>(t.size()) - 1; }
};

void validate(const Path& path);

// Builds the uniform time grid for the given samples (size >= 9).
Path make_uniform_path(std::vector<ContactPoint> samples);

// Converts a trajectory integrated over [0, 1] into a Path (sample times must
// already be uniform, which flow::integrate guarantees).
Path path_from_trajectory(const flow::Trajectory& traj);

// Integrates the Hamiltonian flow from y0 over [0, 1] with m steps and
// returns it as a Path (so quadrature nodes coincide with flow samples).
Path hamiltonian_trajectory_path(const HamiltonianExpr& h, const ContactPoint& y0, int m);

// Centered-difference derivative estimate at sample i (one-sided at ends).
TangentVector path_derivative(const Path& path, int i);

// A_0 = integral of gamma^* lambda, trapezoid rule.
double action_a0(const Path& path);

// A_H with per-sample conformal weights exp(g_{phi_t^-1}(gamma(t))).
double action_ah(const HamiltonianExpr& h, const Path& path, const flow::FlowSpec& spec);

// gamma_bar(t) = phi_t^-1(gamma(t)), sampled at the same times.
Path gauge_transform(const HamiltonianExpr& h, const Path& path, const flow::FlowSpec& spec);

// A~_H = -A_H + z of the final sample.
double effective_action(const HamiltonianExpr& h, const Path& path, const flow::FlowSpec& spec);

// max over interior samples of | lambda(gamma') + H_t(gamma) |.
double carnot_residual(const HamiltonianExpr& h, const Path& path);

struct FirstVariationResult {
  double fd = 0.0;       // (A_H(gamma + h eta) - A_H(gamma - h eta)) / (2h)
  double formula = 0.0;  // first-variation formula, see below
};

// Compares the finite-difference derivative of A_H along the variation eta
// (a vector field along gamma, sampled at the same times) with
//   int_0^1 dlambda( dphi_t^-1 eta, dphi_t^-1 (gamma' - X_H) ) dt
//   + lambda(eta(1)) - exp(g_{psi_1}(gamma(0))) lambda(eta(0)),
// the linearised maps dphi_t^-1 computed by central differences.
FirstVariationResult first_variation_check(const HamiltonianExpr& h, const Path& gamma,
                                           const Path& eta, const flow::FlowSpec& spec,
                                           double fd_step = 1e-5);

// Classical action int (p . q' - Hbar(t, q, p)) dt of the (q, p) projection;
// Hbar must not depend on z (its z value is fed the path's z samples, which
// by assumption does not matter).
double classical_action(const HamiltonianExpr& hbar, const Path& path);

}  // namespace action
}  // namespace jetgf
