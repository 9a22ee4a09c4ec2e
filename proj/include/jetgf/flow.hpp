#pragma once

#include <utility>
#include <vector>

#include "jetgf/expr.hpp"
#include "jetgf/types.hpp"

// Contact Hamiltonian flows by fixed-step classical Runge-Kutta (RK4).
//
// Along the flow of X_H the contact form is rescaled: (psi_t)^* lambda =
// exp(g_t) lambda, and the exponent solves dg/dt = -dH/dz along trajectories
// with g_0 = 0.  The integrator carries g as an extra state component.
//
// Exponents of composed maps follow from
//   g_{psi o phi} = g_psi o phi + g_phi      and      g_{psi^-1} = -g_psi o psi^-1,
// so for the time-normalised maps phi_t = psi_t o psi_1^-1 (phi_1 = id):
//   g_{phi_t}(y)      = g_{psi_t}(w) - g_{psi_1}(w),  w = psi_1^-1(y),
//   g_{phi_t^-1}(y)   = g_{psi_1}(w) - g_{psi_t}(w),  w = psi_t^-1(y),
// i.e. in both cases an integral of -dH/dz over [t, 1] along the Hamiltonian
// trajectory passing through the given point.

namespace jetgf {
namespace flow {

struct FlowSpec {
  int steps_per_unit_time = 200;  // uniform RK4 steps per unit of time, >= 10
};

void validate(const FlowSpec& spec);

// Sampled solution of dy/dt = X_H(t, y), dg/dt = -dH/dz(t, y); one sample per
// RK4 step, times strictly monotone (decreasing when integrated backwards).
struct Trajectory {
  std::vector<double> t;
  std::vector<ContactPoint> y;
  std::vector<double> g;  // g[0] = 0

  const ContactPoint& back() const { return y.back(); }
};

// Integrates from (t0, y0) to t1 (either direction; t0 != t1).  Throws
// FlowBlowupError when the state stops being finite.
Trajectory integrate(const HamiltonianExpr& h, const ContactPoint& y0, double t0, double t1,
                     const FlowSpec& spec);

// Time-t flow map from time 0 and its conformal exponent.
std::pair<ContactPoint, double> psi(const HamiltonianExpr& h, double t, const ContactPoint& y,
                                    const FlowSpec& spec);

// phi_t = psi_t o psi_1^-1: backward integration 1 -> 0, then forward 0 -> t.
ContactPoint phi(const HamiltonianExpr& h, double t, const ContactPoint& y, const FlowSpec& spec);

// phi_t^-1 = psi_1 o psi_t^-1: backward integration t -> 0, then forward 0 -> 1.
ContactPoint phi_inverse(const HamiltonianExpr& h, double t, const ContactPoint& y,
                         const FlowSpec& spec);

struct MapWithExponent {
  ContactPoint y;
  double g = 0.0;
};

// phi_t^-1 together with its conformal exponent at y, in one pass.
MapWithExponent phi_inverse_with_exponent(const HamiltonianExpr& h, double t,
                                          const ContactPoint& y, const FlowSpec& spec);

enum class ConformalMap { PsiT, PhiT, PhiTInverse };

double conformal_exponent(const HamiltonianExpr& h, ConformalMap map, double t,
                          const ContactPoint& y, const FlowSpec& spec);

// Jacobian of y -> psi-flow from t0 to t1 at y0 by central differences in the
// packed (q, p, z) coordinates; h <= 0 picks 1e-6 * (1 + |y0|).
Mat linearized_flow(const HamiltonianExpr& h, const ContactPoint& y0, double t0, double t1,
                    const FlowSpec& spec, double fd_step = -1.0);

// Residual | lambda(d(psi_t) v) - exp(g_t) lambda(v) | of the conformal
// identity at (t, y) applied to v.
double conformal_identity_check(const HamiltonianExpr& h, double t, const ContactPoint& y,
                                const TangentVector& v, const FlowSpec& spec,
                                double fd_step = -1.0);

}  // namespace flow
}  // namespace jetgf
