#include "jetgf/genfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "jetgf/errors.hpp"
#include "jetgf/parallel.hpp"
#include "jetgf/rng.hpp"

namespace jetgf {
namespace genfun {

Partition::Partition(int segments) : N(segments) {
  if (N < 2) throw ConfigError("partition must have at least 2 segments");
}

void validate(const CutoffParams& c) {
  if (!(c.delta > 0.0) || !(c.eps0 > c.delta))
    throw ConfigError("cutoff parameters must satisfy 0 < delta < eps0");
}

double rho(double r, const CutoffParams& c) {
  validate(c);
  if (r < 0.0) throw Error("rho: negative radius");
  if (r <= c.delta) return 1.0;
  const double span = c.eps0 - c.delta;
  const double m = c.delta + span * std::tanh((r - c.delta) / span);
  return m / r;
}

FiberPoint zero_fiber_point(const Vec& q0, const Partition& part) {
  const int n = static_cast<int>(q0.size());
  return FiberPoint{q0, Mat::Zero(part.N - 1, n), Mat::Zero(part.N - 1, n)};
}

namespace {

int fiber_dim(int n, const Partition& part) { return 2 * (part.N - 1) * n; }

// Fiber part of the packing: X rows then P rows, each row-major by junction.
Vec fiber_pack(const FiberPoint& e) {
  const int rows = static_cast<int>(e.X.rows());
  const int n = static_cast<int>(e.X.cols());
  Vec v(2 * rows * n);
  for (int k = 0; k < rows; ++k)
    for (int j = 0; j < n; ++j) {
      v(k * n + j) = e.X(k, j);
      v(rows * n + k * n + j) = e.P(k, j);
    }
  return v;
}

FiberPoint fiber_unpack(const Vec& f, const Vec& q0, const Partition& part) {
  const int n = static_cast<int>(q0.size());
  const int rows = part.N - 1;
  if (f.size() != 2 * rows * n) throw Error("fiber_unpack: size mismatch");
  FiberPoint e;
  e.q0 = q0;
  e.X.resize(rows, n);
  e.P.resize(rows, n);
  for (int k = 0; k < rows; ++k)
    for (int j = 0; j < n; ++j) {
      e.X(k, j) = f(k * n + j);
      e.P(k, j) = f(rows * n + k * n + j);
    }
  return e;
}

// C^1 ramp with flat ends, used to parametrise junction jumps smoothly.
double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

// Horizontal path realising the junction jump: first slide p to its new
// value with q frozen (trivially horizontal), then translate q at constant
// momentum, z following so that lambda(gamma') = 0 identically.
action::Path junction_jump_path(const ContactPoint& from, const Vec& x_tilde, const Vec& p_tilde) {
  constexpr int kSamples = 16;
  const double dz = p_tilde.dot(x_tilde);
  std::vector<ContactPoint> samples;
  samples.reserve(kSamples + 1);
  for (int i = 0; i <= kSamples; ++i) {
    const double s = static_cast<double>(i) / kSamples;
    const double a = smoothstep(2.0 * s);        // p-slide progress
    const double b = smoothstep(2.0 * s - 1.0);  // q-translate progress
    samples.emplace_back(from.q + b * x_tilde, from.p + a * (p_tilde - from.p), from.z + b * dz);
  }
  return action::make_uniform_path(std::move(samples));
}

}  // namespace

Vec pack(const FiberPoint& e) {
  const int n = static_cast<int>(e.q0.size());
  const Vec f = fiber_pack(e);
  Vec v(n + f.size());
  v.head(n) = e.q0;
  v.tail(f.size()) = f;
  return v;
}

FiberPoint unpack(const Vec& v, int n, const Partition& part) {
  if (v.size() != n + fiber_dim(n, part)) throw Error("unpack: size mismatch");
  return fiber_unpack(v.tail(fiber_dim(n, part)), v.head(n), part);
}

TildeVars tilde_vars(const FiberPoint& e, const CutoffParams& c) {
  const int rows = static_cast<int>(e.X.rows());
  TildeVars out;
  out.X.resizeLike(e.X);
  out.P.resizeLike(e.P);
  for (int k = 0; k < rows; ++k) {
    const double r = e.X.row(k).norm();
    const double s = rho(r, c);
    out.X.row(k) = s * e.X.row(k);
    out.P.row(k) = e.P.row(k) / s;
  }
  return out;
}

BrokenTrajectory build_broken_trajectory(const HamiltonianExpr& h, const FiberPoint& e,
                                         const Partition& part, const CutoffParams& c,
                                         const flow::FlowSpec& spec) {
  const int n = h.dim();
  const int N = part.N;
  if (e.q0.size() != n) throw Error("build_broken_trajectory: base dimension mismatch");
  if (e.X.rows() != N - 1 || e.X.cols() != n || e.P.rows() != N - 1 || e.P.cols() != n)
    throw Error("build_broken_trajectory: fiber shape mismatch");

  const TildeVars tv = tilde_vars(e, c);

  BrokenTrajectory bt;
  bt.n = n;
  bt.N = N;
  bt.start = ContactPoint(e.q0, Vec::Zero(n), 0.0);
  bt.x_tilde = tv.X;
  bt.p_tilde = tv.P;
  bt.segments.reserve(N);
  bt.y_minus.reserve(N);
  bt.y_plus.reserve(N - 1);
  bt.jumps.reserve(N - 1);

  ContactPoint cur = bt.start;
  for (int k = 1; k <= N; ++k) {
    bt.segments.push_back(flow::integrate(h, cur, part.t(k - 1), part.t(k), spec));
    const ContactPoint& ym = bt.segments.back().y.back();
    bt.y_minus.push_back(ym);
    if (k < N) {
      const Vec xt = tv.X.row(k - 1).transpose();
      const Vec pt = tv.P.row(k - 1).transpose();
      ContactPoint yp(ym.q + xt, pt, ym.z + pt.dot(xt));
      bt.jumps.push_back(junction_jump_path(ym, xt, pt));
      bt.y_plus.push_back(yp);
      cur = std::move(yp);
    }
  }

  bt.g_increment.resize(N - 1);
  for (int k = 1; k <= N - 1; ++k) bt.g_increment(k - 1) = bt.segments[k].g.back();
  bt.g_cumulative.resize(N - 1);
  double acc = 0.0;
  for (int k = N - 1; k >= 1; --k) {
    acc += bt.g_increment(k - 1);
    bt.g_cumulative(k - 1) = acc;
  }
  return bt;
}

Vec mixed_coordinates(const BrokenTrajectory& bt) {
  const int n = bt.n;
  const int N = bt.N;
  Vec v((2 * N - 1) * n);
  for (int k = 1; k <= N - 1; ++k) {
    v.segment(2 * (k - 1) * n, n) = bt.y_minus[k - 1].q;
    v.segment((2 * (k - 1) + 1) * n, n) = bt.p_tilde.row(k - 1).transpose();
  }
  v.tail(n) = bt.y_minus[N - 1].q;
  return v;
}

SEvalDetail s_eval_detail(const HamiltonianExpr& h, const FiberPoint& e, const Partition& part,
                          const CutoffParams& c, const flow::FlowSpec& spec) {
  const BrokenTrajectory bt = build_broken_trajectory(h, e, part, c, spec);
  const int N = part.N;

  SEvalDetail out;
  out.value = bt.end().z;
  out.scale = 1.0;
  double sum = 0.0;
  for (int k = 1; k <= N - 1; ++k) {
    const double pairing = e.P.row(k - 1).dot(e.X.row(k - 1));
    sum += pairing;
    out.scale += std::abs(pairing);
  }
  for (int k = 1; k <= N; ++k) {
    const double z_prev_plus = (k == 1) ? bt.start.z : bt.y_plus[k - 2].z;
    const double inc = bt.y_minus[k - 1].z - z_prev_plus;
    sum += inc;
    out.scale += std::abs(inc);
  }
  out.sum_formula = sum;
  if (std::abs(out.value - out.sum_formula) > 1e-12 * out.scale)
    throw NumericError("generating function telescoping identity violated");
  return out;
}

double s_eval(const HamiltonianExpr& h, const FiberPoint& e, const Partition& part,
              const CutoffParams& c, const flow::FlowSpec& spec) {
  return s_eval_detail(h, e, part, c, spec).value;
}

VerticalGradient vertical_gradient_analytic(const BrokenTrajectory& bt) {
  const int n = bt.n;
  const int N = bt.N;
  VerticalGradient g;
  g.dS_dq_minus.resize(N - 1, n);
  g.dS_dp_tilde.resize(N - 1, n);
  for (int k = 1; k <= N - 1; ++k) {
    const double w = std::exp(bt.g_cumulative(k - 1));
    const Vec y_k = bt.y_plus[k - 1].p - bt.y_minus[k - 1].p;
    g.dS_dq_minus.row(k - 1) = (-w) * y_k.transpose();
    g.dS_dp_tilde.row(k - 1) = w * bt.x_tilde.row(k - 1);
  }
  g.dS_dq_base = bt.y_minus[N - 1].p;
  return g;
}

Vec gradient_fd(const HamiltonianExpr& h, const FiberPoint& e, const Partition& part,
                const CutoffParams& c, const flow::FlowSpec& spec, double fd_step) {
  const int n = h.dim();
  const Vec base = pack(e);
  const double step =
      fd_step > 0.0 ? fd_step : 1e-5 * (1.0 + base.lpNorm<Eigen::Infinity>());
  Vec grad(base.size());
  Vec v = base;
  for (int j = 0; j < base.size(); ++j) {
    v(j) = base(j) + step;
    const double fp = s_eval(h, unpack(v, n, part), part, c, spec);
    v(j) = base(j) - step;
    const double fm = s_eval(h, unpack(v, n, part), part, c, spec);
    v(j) = base(j);
    grad(j) = (fp - fm) / (2.0 * step);
  }
  return grad;
}

CoordinateJacobianReport coordinate_jacobian(const HamiltonianExpr& h, const FiberPoint& e,
                                             const Partition& part, const CutoffParams& c,
                                             const flow::FlowSpec& spec, double fd_step) {
  const int n = h.dim();
  const int N = part.N;
  const Vec base = pack(e);
  const int dim = static_cast<int>(base.size());
  const double step =
      fd_step > 0.0 ? fd_step : 1e-6 * (1.0 + base.lpNorm<Eigen::Infinity>());

  CoordinateJacobianReport rep;
  rep.J.resize(dim, dim);
  Vec v = base;
  for (int j = 0; j < dim; ++j) {
    v(j) = base(j) + step;
    const Vec fp = mixed_coordinates(build_broken_trajectory(h, unpack(v, n, part), part, c, spec));
    v(j) = base(j) - step;
    const Vec fm = mixed_coordinates(build_broken_trajectory(h, unpack(v, n, part), part, c, spec));
    v(j) = base(j);
    rep.J.col(j) = (fp - fm) / (2.0 * step);
  }

  rep.det = Eigen::PartialPivLU<Mat>(rep.J).determinant();
  Eigen::JacobiSVD<Mat> svd(rep.J);
  const double smin = svd.singularValues().minCoeff();
  rep.condition = smin > 0.0 ? svd.singularValues().maxCoeff() / smin
                             : std::numeric_limits<double>::infinity();

  // Block permutation exposing the chain ordering.  Row blocks are already
  // (q_1^-, pt_1, ..., q_{N-1}^-, pt_{N-1}, q_N^-); columns are rearranged
  // from (q0, X_1..X_{N-1}, P_1..P_{N-1}) to (q0, P_1, X_1, ..., P_{N-1},
  // X_{N-1}).  Everything strictly above the block diagonal must vanish up to
  // finite-difference noise (and exactly, inside the saturation plateau).
  std::vector<int> col_block;
  col_block.push_back(0);
  for (int k = 1; k <= N - 1; ++k) {
    col_block.push_back(N - 1 + k);  // P_k
    col_block.push_back(k);          // X_k
  }
  const int blocks = 2 * N - 1;
  double max_diag = 0.0, max_upper = 0.0;
  for (int rb = 0; rb < blocks; ++rb) {
    for (int cb = 0; cb < blocks; ++cb) {
      const double blockmax =
          rep.J.block(rb * n, col_block[cb] * n, n, n).cwiseAbs().maxCoeff();
      if (cb == rb) max_diag = std::max(max_diag, blockmax);
      if (cb > rb) max_upper = std::max(max_upper, blockmax);
    }
  }
  rep.structure_violation = max_diag > 0.0 ? max_upper / max_diag : max_upper;
  return rep;
}

Mat dk_matrix(const HamiltonianExpr& h, const BrokenTrajectory& bt, const Partition& part, int k,
              const flow::FlowSpec& spec, double fd_step) {
  const int n = bt.n;
  if (k < 1 || k > bt.N - 1) throw Error("dk_matrix: junction index out of range");
  const ContactPoint& y = bt.y_plus[k - 1];
  const double ta = part.t(k), tb = part.t(k + 1);
  const double step = fd_step > 0.0 ? fd_step : 1e-6 * (1.0 + y.packed().norm());

  auto q_of_flow = [&](const ContactPoint& start) {
    return flow::integrate(h, start, ta, tb, spec).y.back().q;
  };

  Mat d1(n, n);
  for (int j = 0; j < n; ++j) {
    ContactPoint yp = y, ym = y;
    yp.q(j) += step;
    ym.q(j) -= step;
    d1.col(j) = (q_of_flow(yp) - q_of_flow(ym)) / (2.0 * step);
  }
  ContactPoint zp = y, zm = y;
  zp.z += step;
  zm.z -= step;
  const Vec d3 = (q_of_flow(zp) - q_of_flow(zm)) / (2.0 * step);

  return d1 + d3 * bt.p_tilde.row(k - 1);
}

namespace {

Vec critical_residual(const BrokenTrajectory& bt, const FiberPoint& e,
                      CriticalResidualForm form) {
  const int n = bt.n;
  const int rows = bt.N - 1;
  Vec r(2 * rows * n);
  for (int k = 0; k < rows; ++k) {
    const Vec y_k = bt.y_plus[k].p - bt.y_minus[k].p;
    Eigen::RowVectorXd xpart;
    Vec ppart;
    switch (form) {
      case CriticalResidualForm::Plain:
        xpart = e.X.row(k);
        ppart = y_k;
        break;
      case CriticalResidualForm::WeightedGradient: {
        const double w = std::exp(bt.g_cumulative(k));
        xpart = w * bt.x_tilde.row(k);
        ppart = w * y_k;
        break;
      }
      case CriticalResidualForm::UnweightedGradient:
        xpart = bt.x_tilde.row(k);
        ppart = y_k;
        break;
    }
    r.segment(k * n, n) = xpart.transpose();
    r.segment(rows * n + k * n, n) = ppart;
  }
  return r;
}

}  // namespace

CriticalSolveResult critical_solve(const HamiltonianExpr& h, const FiberPoint& seed,
                                   const Partition& part, const CutoffParams& c,
                                   const flow::FlowSpec& spec, const CriticalSolveOptions& opts) {
  const Vec q0 = seed.q0;
  Vec v = fiber_pack(seed);
  const int dim = static_cast<int>(v.size());

  auto residual_at = [&](const Vec& fiber) {
    const FiberPoint e = fiber_unpack(fiber, q0, part);
    return critical_residual(build_broken_trajectory(h, e, part, c, spec), e, opts.form);
  };

  Vec resid = residual_at(v);
  double rnorm = resid.lpNorm<Eigen::Infinity>();
  int iters = 0;
  while (rnorm > opts.tolerance) {
    if (iters >= opts.max_iterations)
      throw ConvergenceError("critical point iteration did not converge", rnorm, iters);
    const double step =
        opts.fd_step > 0.0 ? opts.fd_step : 1e-6 * (1.0 + v.lpNorm<Eigen::Infinity>());
    Mat J(dim, dim);
    Vec w = v;
    for (int j = 0; j < dim; ++j) {
      w(j) = v(j) + step;
      const Vec fp = residual_at(w);
      w(j) = v(j) - step;
      const Vec fm = residual_at(w);
      w(j) = v(j);
      J.col(j) = (fp - fm) / (2.0 * step);
    }
    v += Eigen::PartialPivLU<Mat>(J).solve(-resid);
    resid = residual_at(v);
    rnorm = resid.lpNorm<Eigen::Infinity>();
    ++iters;
  }

  CriticalSolveResult out;
  out.e = fiber_unpack(v, q0, part);
  out.iterations = iters;
  out.residual = rnorm;
  return out;
}

CriticalSolveResult critical_solve(const HamiltonianExpr& h, const Vec& q0, const Partition& part,
                                   const CutoffParams& c, const flow::FlowSpec& spec,
                                   const CriticalSolveOptions& opts) {
  return critical_solve(h, zero_fiber_point(q0, part), part, c, spec, opts);
}

ContactPoint iota_s(const HamiltonianExpr& h, const FiberPoint& e_star, const Partition& part,
                    const CutoffParams& c, const flow::FlowSpec& spec, const IotaOptions& opts) {
  const BrokenTrajectory bt = build_broken_trajectory(h, e_star, part, c, spec);
  const double resid =
      critical_residual(bt, e_star, CriticalResidualForm::Plain).lpNorm<Eigen::Infinity>();
  if (resid > opts.residual_tolerance)
    throw Error("iota_s: fiber point is not critical (residual " + std::to_string(resid) + ")");
  const ContactPoint out = bt.end();

  if (opts.verify_base_gradient) {
    // d/dq0 of S along the critical branch must reproduce p_N^-.
    const int n = h.dim();
    for (int j = 0; j < n; ++j) {
      Vec qp = e_star.q0, qm = e_star.q0;
      qp(j) += opts.fd_step;
      qm(j) -= opts.fd_step;
      FiberPoint seed_p = e_star, seed_m = e_star;
      seed_p.q0 = qp;
      seed_m.q0 = qm;
      const CriticalSolveResult rp = critical_solve(h, seed_p, part, c, spec);
      const CriticalSolveResult rm = critical_solve(h, seed_m, part, c, spec);
      const double sp = s_eval(h, rp.e, part, c, spec);
      const double sm = s_eval(h, rm.e, part, c, spec);
      const double fd = (sp - sm) / (2.0 * opts.fd_step);
      if (std::abs(fd - out.p(j)) > opts.tolerance)
        throw NumericError("iota_s: base gradient mismatch (got " + std::to_string(fd) +
                           ", expected " + std::to_string(out.p(j)) + ")");
    }
  }
  return out;
}

GenerationReport generation_check(const HamiltonianExpr& h, const std::vector<Vec>& grid,
                                  const Partition& part, const CutoffParams& c,
                                  const flow::FlowSpec& spec, int jobs) {
  GenerationReport rep;
  rep.points.resize(grid.size());
  const std::size_t verify_at = grid.size() / 2;

  parallel_for(jobs, grid.size(), [&](std::size_t i) {
    GenerationPoint& pt = rep.points[i];
    pt.q0 = grid[i];
    try {
      const CriticalSolveResult sol = critical_solve(h, grid[i], part, c, spec);
      IotaOptions opts;
      opts.verify_base_gradient = (i == verify_at);
      pt.via_generating_function = iota_s(h, sol.e, part, c, spec, opts);
      pt.via_flow =
          flow::psi(h, 1.0, ContactPoint(grid[i], Vec::Zero(grid[i].size()), 0.0), spec).first;
      pt.gap = (pt.via_generating_function.packed() - pt.via_flow.packed())
                   .lpNorm<Eigen::Infinity>();
      pt.iterations = sol.iterations;
      pt.ok = true;
    } catch (const std::exception& ex) {
      pt.ok = false;
      pt.error = ex.what();
    }
  });

  for (const GenerationPoint& pt : rep.points) {
    if (pt.ok)
      rep.max_gap = std::max(rep.max_gap, pt.gap);
    else
      ++rep.failures;
  }
  return rep;
}

QiProbeReport almost_qi_probe(const HamiltonianExpr& h, const Vec& q0, const Partition& part,
                              const CutoffParams& c, const flow::FlowSpec& spec, int rays,
                              std::vector<double> radii, std::uint64_t seed,
                              double ratio_tolerance) {
  if (rays < 1) throw ConfigError("qi probe needs at least one ray");
  if (radii.size() < 2) throw ConfigError("qi probe needs at least two radii");
  std::sort(radii.begin(), radii.end());

  const int n = h.dim();
  const int dim = fiber_dim(n, part);
  const int rows = part.N - 1;
  const CounterRng rng(seed, "qi-probe");

  // Q is the quadratic-at-infinity reference form sum_k <P_k, X_k>.
  auto q_form = [&](const Vec& fiber) {
    double acc = 0.0;
    for (int k = 0; k < rows; ++k)
      acc += fiber.segment(k * n, n).dot(fiber.segment(rows * n + k * n, n));
    return acc;
  };
  auto a_value = [&](const Vec& fiber) {
    return s_eval(h, fiber_unpack(fiber, q0, part), part, c, spec) - q_form(fiber);
  };

  QiProbeReport rep;
  rep.radii = radii;
  rep.sup_fiber_gradient.assign(radii.size(), 0.0);
  rep.sup_fiber_gradient_q.assign(radii.size(), 0.0);

  for (int ray = 0; ray < rays; ++ray) {
    const Vec u = rng.unit_vector(static_cast<std::uint64_t>(ray), dim);
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      const Vec center = radii[ri] * u;
      const double step = 1e-5 * (1.0 + center.lpNorm<Eigen::Infinity>());
      double worst_a = 0.0, worst_q = 0.0;
      Vec v = center;
      for (int j = 0; j < dim; ++j) {
        v(j) = center(j) + step;
        const double ap = a_value(v);
        const double qp = q_form(v);
        v(j) = center(j) - step;
        const double am = a_value(v);
        const double qm = q_form(v);
        v(j) = center(j);
        worst_a = std::max(worst_a, std::abs((ap - am) / (2.0 * step)));
        worst_q = std::max(worst_q, std::abs((qp - qm) / (2.0 * step)));
      }
      rep.sup_fiber_gradient[ri] = std::max(rep.sup_fiber_gradient[ri], worst_a);
      rep.sup_fiber_gradient_q[ri] = std::max(rep.sup_fiber_gradient_q[ri], worst_q);
    }
  }

  const double median = rep.sup_fiber_gradient[radii.size() / 2];
  const double largest = rep.sup_fiber_gradient.back();
  rep.ratio_largest_to_median = median > 0.0 ? largest / median
                                             : (largest > 0.0
                                                    ? std::numeric_limits<double>::infinity()
                                                    : 1.0);
  rep.bounded = rep.ratio_largest_to_median <= ratio_tolerance;
  return rep;
}

SymplecticReductionReport symplectic_reduction_check(const HamiltonianExpr& h,
                                                     const std::vector<Vec>& grid,
                                                     const Partition& part, const CutoffParams& c,
                                                     const flow::FlowSpec& spec) {
  SymplecticReductionReport rep;
  rep.points = static_cast<int>(grid.size());
  flow::FlowSpec fine = spec;
  fine.steps_per_unit_time = std::max(spec.steps_per_unit_time, 2000);

  for (const Vec& q0 : grid) {
    const CriticalSolveResult sol = critical_solve(h, q0, part, c, spec);
    const BrokenTrajectory bt = build_broken_trajectory(h, sol.e, part, c, spec);
    for (const flow::Trajectory& seg : bt.segments) {
      for (std::size_t i = 0; i < seg.t.size(); ++i) {
        const JetValue j = h.eval_with_partials(seg.t[i], seg.y[i]);
        rep.max_abs_dz = std::max(rep.max_abs_dz, std::abs(j.d_z));
      }
      rep.max_abs_g = std::max(rep.max_abs_g, std::abs(seg.g.back()));
    }
    if (rep.max_abs_g > 1e-13)
      throw NumericError("symplectic reduction: conformal increment did not vanish");

    const double s = s_eval(h, sol.e, part, c, spec);
    const ContactPoint start(q0, Vec::Zero(q0.size()), 0.0);
    const action::Path traj = action::path_from_trajectory(flow::integrate(h, start, 0.0, 1.0, fine));
    const double classical = action::classical_action(h, traj);
    rep.max_action_mismatch = std::max(rep.max_action_mismatch, std::abs(s - classical));
  }
  return rep;
}

}  // namespace genfun
}  // namespace jetgf
