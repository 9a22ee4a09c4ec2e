#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jetgf/action.hpp"
#include "jetgf/flow.hpp"
#include "jetgf/types.hpp"

// Generating function built from broken Hamiltonian trajectories.
//
// Fix a uniform partition t_k = k/N of [0, 1].  A fiber point e = (q0, X, P)
// with X, P in R^{(N-1) x n} determines a broken curve: segment k flows under
// X_H over [t_{k-1}, t_k]; at the junction t_k (k < N) the curve jumps by the
// saturated variables
//   Xt_k = rho(|X_k|) X_k,   Pt_k = P_k / rho(|X_k|),
//   q_k^+ = q_k^- + Xt_k,    p_k^+ = Pt_k,    z_k^+ = z_k^- + <Pt_k, Xt_k>,
// the jump realised by a horizontal straight line in (q, p).  The generating
// function is
//   S(e) = sum_k <P_k, X_k> + sum_k (z_k^- - z_{k-1}^+),
// which telescopes to the final height z_N^- because the saturation preserves
// the pairing.  In the mixed coordinates ((q_k^-, pt_k)_{k<N}, q_N^-) the
// differential of S is
//   dS = sum_k e^{g_k} ( <d pt_k, xt_k> - <y_k, d q_k^-> ) + <p_N^-, d q_N^->,
// with y_k = p_k^+ - p_k^- and g_k the accumulated conformal exponent of the
// remaining segment maps, so critical points of the fiber part are exactly
// the e whose segments join into one smooth Hamiltonian trajectory, and there
// S equals the trajectory's final height.

namespace jetgf {
namespace genfun {

struct Partition {
  explicit Partition(int segments);
  int N;  // number of segments, >= 2
  double t(int k) const { return static_cast<double>(k) / N; }
};

// Saturation profile: m(r) = r * rho(r) equals r below delta, then increases
// strictly and saturates below eps0.  Requires 0 < delta < eps0.
struct CutoffParams {
  double delta = 0.2;
  double eps0 = 0.5;
};

void validate(const CutoffParams& c);

// rho(r) = m(r)/r with m(r) = r for r <= delta and
// m(r) = delta + (eps0 - delta) tanh((r - delta)/(eps0 - delta)) above; C^1 at
// the knee, rho(0) = 1.  Throws on r < 0.
double rho(double r, const CutoffParams& c);

// Fiber data over a base point: rows k = 1..N-1 of X and P are the jump
// parameters at junction k.
struct FiberPoint {
  Vec q0;
  Mat X;  // (N-1) x n
  Mat P;  // (N-1) x n
};

FiberPoint zero_fiber_point(const Vec& q0, const Partition& part);

// Packing order used by every vector view of a fiber point:
// (q0, X row-major by junction, P row-major by junction).
Vec pack(const FiberPoint& e);
FiberPoint unpack(const Vec& v, int n, const Partition& part);

struct TildeVars {
  Mat X;  // saturated jumps, |row| < eps0
  Mat P;  // rescaled momenta; <Pt_k, Xt_k> = <P_k, X_k> exactly
};

TildeVars tilde_vars(const FiberPoint& e, const CutoffParams& c);

struct BrokenTrajectory {
  int n = 0;
  int N = 0;
  ContactPoint start;                     // (q0, 0, 0)
  std::vector<flow::Trajectory> segments; // N of them; segments[k-1] covers [t_{k-1}, t_k]
  std::vector<ContactPoint> y_minus;      // y_k^-, k = 1..N (index k-1)
  std::vector<ContactPoint> y_plus;       // y_k^+, k = 1..N-1 (index k-1)
  std::vector<action::Path> jumps;        // horizontal junction paths, own parameter on [0,1]
  Mat x_tilde, p_tilde;                   // (N-1) x n saturated jump data
  Vec g_increment;                        // k = 1..N-1: exponent of segment map k+1 at y_k^+
  Vec g_cumulative;                       // g_k = sum_{j >= k} g_increment_j

  const ContactPoint& end() const { return y_minus.back(); }
};

BrokenTrajectory build_broken_trajectory(const HamiltonianExpr& h, const FiberPoint& e,
                                         const Partition& part, const CutoffParams& c,
                                         const flow::FlowSpec& spec);

// Mixed coordinates ((q_k^-, pt_k)_{k<N}, q_N^-) of a broken trajectory,
// stacked in that order; dimension (2N-1) n.
Vec mixed_coordinates(const BrokenTrajectory& bt);

struct SEvalDetail {
  double value = 0.0;        // z_N^-
  double sum_formula = 0.0;  // sum of pairings plus segment height increments
  double scale = 0.0;        // 1 + sum of term magnitudes, conditioning of the identity
};

// Evaluates S both ways and checks the telescoping identity to 1e-12 relative
// to `scale` (throws NumericError on violation).
SEvalDetail s_eval_detail(const HamiltonianExpr& h, const FiberPoint& e, const Partition& part,
                          const CutoffParams& c, const flow::FlowSpec& spec);

double s_eval(const HamiltonianExpr& h, const FiberPoint& e, const Partition& part,
              const CutoffParams& c, const flow::FlowSpec& spec);

// Partials of S in the mixed coordinates, evaluated from the broken
// trajectory alone (no finite differences).
struct VerticalGradient {
  Mat dS_dq_minus;  // (N-1) x n: -e^{g_k} (p_k^+ - p_k^-)
  Mat dS_dp_tilde;  // (N-1) x n:  e^{g_k} xt_k
  Vec dS_dq_base;   // n: p_N^-
};

VerticalGradient vertical_gradient_analytic(const BrokenTrajectory& bt);

// Central-difference gradient of S in the raw packed coordinates (q0, X, P);
// h <= 0 picks 1e-5 * (1 + |e|_inf).
Vec gradient_fd(const HamiltonianExpr& h, const FiberPoint& e, const Partition& part,
                const CutoffParams& c, const flow::FlowSpec& spec, double fd_step = -1.0);

// Jacobian of (q0, X, P) -> ((q_k^-, pt_k)_{k<N}, q_N^-) by central
// differences.  `structure_violation` measures the entries that the chain
// ordering says must vanish: with rows blocked as (q_1^-, pt_1, ..., q_N^-)
// and columns permuted to (q0, P_1, X_1, ..., P_{N-1}, X_{N-1}), the Jacobian
// is block lower triangular (q_k^- depends only on earlier junctions, pt_k
// only on (X_k, P_k), and inside the saturation plateau not on X_k at all);
// the measure is the largest upper-block entry relative to the largest
// diagonal-block entry.
struct CoordinateJacobianReport {
  Mat J;  // natural orderings: rows mixed, columns packed (q0, X, P)
  double det = 0.0;
  double condition = 0.0;
  double structure_violation = 0.0;
};

CoordinateJacobianReport coordinate_jacobian(const HamiltonianExpr& h, const FiberPoint& e,
                                             const Partition& part, const CutoffParams& c,
                                             const flow::FlowSpec& spec, double fd_step = -1.0);

// D^k = d(q-part of segment map k+1)/dq + d(q-part)/dz * pt_k^T at y_k^+,
// the linearisation that transports base variations across junction k
// (the base is flat: d exp = identity).  k is 1-based, 1 <= k <= N-1.
Mat dk_matrix(const HamiltonianExpr& h, const BrokenTrajectory& bt, const Partition& part, int k,
              const flow::FlowSpec& spec, double fd_step = -1.0);

enum class CriticalResidualForm {
  Plain,               // (X_k, Pt_k - p_k^-)
  WeightedGradient,    // (e^{g_k} xt_k, e^{g_k} y_k)
  UnweightedGradient,  // (xt_k, y_k)
};

struct CriticalSolveOptions {
  double tolerance = 1e-10;  // on |residual|_inf
  int max_iterations = 50;
  CriticalResidualForm form = CriticalResidualForm::Plain;
  double fd_step = -1.0;  // Jacobian step; <= 0 picks 1e-6 * (1 + |v|_inf)
};

struct CriticalSolveResult {
  FiberPoint e;
  int iterations = 0;
  double residual = 0.0;
};

// Newton iteration over the fiber (X, P) with q0 held fixed, dense
// finite-difference Jacobian, seeded at `seed` (zero fiber when omitted).
// Throws ConvergenceError when the tolerance is not reached.
CriticalSolveResult critical_solve(const HamiltonianExpr& h, const Vec& q0, const Partition& part,
                                   const CutoffParams& c, const flow::FlowSpec& spec,
                                   const CriticalSolveOptions& opts = {});
CriticalSolveResult critical_solve(const HamiltonianExpr& h, const FiberPoint& seed,
                                   const Partition& part, const CutoffParams& c,
                                   const flow::FlowSpec& spec,
                                   const CriticalSolveOptions& opts = {});

struct IotaOptions {
  bool verify_base_gradient = true;  // check dS/dq_N^- = p_N^- by re-solving at q0 +- h
  double tolerance = 1e-4;
  double fd_step = 1e-4;
  double residual_tolerance = 1e-8;  // how critical e must be on entry
};

// Evaluation map at a critical fiber point: returns (q_N^-, p_N^-, z_N^-),
// the jet-space point the generating function attaches over q_N^-.
ContactPoint iota_s(const HamiltonianExpr& h, const FiberPoint& e_star, const Partition& part,
                    const CutoffParams& c, const flow::FlowSpec& spec,
                    const IotaOptions& opts = {});

struct GenerationPoint {
  Vec q0;
  bool ok = false;
  std::string error;
  double gap = 0.0;
  ContactPoint via_generating_function;
  ContactPoint via_flow;
  int iterations = 0;
};

struct GenerationReport {
  double max_gap = 0.0;
  int failures = 0;
  std::vector<GenerationPoint> points;
};

// For each base grid point: solve the critical equations, evaluate iota, and
// compare against the time-1 flow of the zero section.  Failures are recorded
// per point; the base-gradient identity is additionally verified at the
// middle grid point.
GenerationReport generation_check(const HamiltonianExpr& h, const std::vector<Vec>& grid,
                                  const Partition& part, const CutoffParams& c,
                                  const flow::FlowSpec& spec, int jobs = 1);

struct QiProbeReport {
  std::vector<double> radii;                // sorted copy of the probe radii
  std::vector<double> sup_fiber_gradient;   // sup over rays of |grad_fiber A|_inf
  double ratio_largest_to_median = 0.0;
  bool bounded = false;                     // ratio <= ratio_tolerance
  std::vector<double> sup_fiber_gradient_q; // same probe applied to Q alone (control)
};

// Probes A = S - Q, Q = sum <P_k, X_k>, along random fiber rays: the fiber
// gradient of A must stay bounded as the radius grows (S is quadratic at
// infinity), while the control gradient of Q grows linearly.
QiProbeReport almost_qi_probe(const HamiltonianExpr& h, const Vec& q0, const Partition& part,
                              const CutoffParams& c, const flow::FlowSpec& spec, int rays,
                              std::vector<double> radii, std::uint64_t seed,
                              double ratio_tolerance = 2.0);

struct SymplecticReductionReport {
  double max_abs_dz = 0.0;        // sampled |dH/dz| along the tested trajectories
  double max_abs_g = 0.0;         // conformal increments at critical points
  double max_action_mismatch = 0.0;  // |S - classical action|
  int points = 0;
};

// For z-independent H the conformal factors collapse to 1 and S reduces to
// the classical action of the (q, p) projection; checked per grid point.
// Throws NumericError if a conformal increment fails to vanish to roundoff.
SymplecticReductionReport symplectic_reduction_check(const HamiltonianExpr& h,
                                                     const std::vector<Vec>& grid,
                                                     const Partition& part, const CutoffParams& c,
                                                     const flow::FlowSpec& spec);

}  // namespace genfun
}  // namespace jetgf
