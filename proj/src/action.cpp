#include "jetgf/action.hpp"

#include <cmath>
#include <utility>

#include "jetgf/contact.hpp"
#include "jetgf/errors.hpp"

namespace jetgf {
namespace action {

void validate(const Path& path) {
  const int m = path.segments();
  if (m < 8) throw Error("Path: at least 8 segments required");
  if (path.y.size() != path.t.size()) throw Error("Path: sample count mismatch");
  const int n = path.y[0].dim();
  for (const ContactPoint& y : path.y) require_dim(y, n, "Path");
  for (int i = 0; i <= m; ++i) {
    if (std::abs(path.t[i] - static_cast<double>(i) / m) > 1e-12)
      throw Error("Path: sample times must be uniform on [0, 1]");
  }
}

Path make_uniform_path(std::vector<ContactPoint> samples) {
  Path path;
  const int m = static_cast<int>(samples.size()) - 1;
  path.t.resize(samples.size());
  for (int i = 0; i <= m; ++i) path.t[i] = static_cast<double>(i) / m;
  path.y = std::move(samples);
  validate(path);
  return path;
}

Path path_from_trajectory(const flow::Trajectory& traj) {
  Path path;
  path.t = traj.t;
  path.y = traj.y;
  validate(path);
  return path;
}

Path hamiltonian_trajectory_path(const HamiltonianExpr& h, const ContactPoint& y0, int m) {
  flow::FlowSpec spec;
  spec.steps_per_unit_time = m;
  return path_from_trajectory(flow::integrate(h, y0, 0.0, 1.0, spec));
}

TangentVector path_derivative(const Path& path, int i) {
  const int m = path.segments();
  const double dt = 1.0 / m;
  const ContactPoint *a, *b;
  double denom;
  if (i == 0) {
    a = &path.y[0];
    b = &path.y[1];
    denom = dt;
  } else if (i == m) {
    a = &path.y[m - 1];
    b = &path.y[m];
    denom = dt;
  } else {
    a = &path.y[i - 1];
    b = &path.y[i + 1];
    denom = 2.0 * dt;
  }
  return TangentVector((b->q - a->q) / denom, (b->p - a->p) / denom, (b->z - a->z) / denom);
}

namespace {

// Trapezoid rule over the uniform sample times.
double trapezoid(const std::vector<double>& f, double dt) {
  double acc = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += f[i];
  return acc * dt;
}

}  // namespace

double action_a0(const Path& path) {
  validate(path);
  const int m = path.segments();
  std::vector<double> f(m + 1);
  for (int i = 0; i <= m; ++i) f[i] = lambda_eval(path.y[i], path_derivative(path, i));
  return trapezoid(f, 1.0 / m);
}

double action_ah(const HamiltonianExpr& h, const Path& path, const flow::FlowSpec& spec) {
  validate(path);
  const int m = path.segments();
  std::vector<double> f(m + 1);
  for (int i = 0; i <= m; ++i) {
    const double integrand =
        lambda_eval(path.y[i], path_derivative(path, i)) + h.eval(path.t[i], path.y[i]);
    const double g =
        flow::conformal_exponent(h, flow::ConformalMap::PhiTInverse, path.t[i], path.y[i], spec);
    f[i] = std::exp(g) * integrand;
  }
  return trapezoid(f, 1.0 / m);
}

Path gauge_transform(const HamiltonianExpr& h, const Path& path, const flow::FlowSpec& spec) {
  validate(path);
  Path out;
  out.t = path.t;
  out.y.reserve(path.y.size());
  for (std::size_t i = 0; i < path.y.size(); ++i)
    out.y.push_back(flow::phi_inverse(h, path.t[i], path.y[i], spec));
  return out;
}

double effective_action(const HamiltonianExpr& h, const Path& path, const flow::FlowSpec& spec) {
  return -action_ah(h, path, spec) + path.y.back().z;
}

double carnot_residual(const HamiltonianExpr& h, const Path& path) {
  validate(path);
  const int m = path.segments();
  double worst = 0.0;
  for (int i = 1; i < m; ++i) {
    const double r =
        std::abs(lambda_eval(path.y[i], path_derivative(path, i)) + h.eval(path.t[i], path.y[i]));
    worst = std::max(worst, r);
  }
  return worst;
}

namespace {

Path shifted_path(const Path& gamma, const Path& eta, double h) {
  Path out;
  out.t = gamma.t;
  out.y.reserve(gamma.y.size());
  for (std::size_t i = 0; i < gamma.y.size(); ++i) {
    out.y.emplace_back(gamma.y[i].q + h * eta.y[i].q, gamma.y[i].p + h * eta.y[i].p,
                       gamma.y[i].z + h * eta.y[i].z);
  }
  return out;
}

// Differential of y -> phi_t^-1(y) at y by central differences in packed
// coordinates; this is the transport entering the first-variation integrand.
Mat phi_inverse_differential(const HamiltonianExpr& h, double t, const ContactPoint& y,
                             const flow::FlowSpec& spec, double step) {
  const int m = 2 * h.dim() + 1;
  const Vec base = y.packed();
  Mat J(m, m);
  Vec vp(m), vm(m);
  for (int j = 0; j < m; ++j) {
    vp = base;
    vm = base;
    vp(j) += step;
    vm(j) -= step;
    const Vec fp = flow::phi_inverse(h, t, ContactPoint::from_packed(vp), spec).packed();
    const Vec fm = flow::phi_inverse(h, t, ContactPoint::from_packed(vm), spec).packed();
    J.col(j) = (fp - fm) / (2.0 * step);
  }
  return J;
}

}  // namespace

FirstVariationResult first_variation_check(const HamiltonianExpr& h, const Path& gamma,
                                           const Path& eta, const flow::FlowSpec& spec,
                                           double fd_step) {
  validate(gamma);
  if (eta.t.size() != gamma.t.size()) throw Error("first_variation_check: eta sample mismatch");

  FirstVariationResult out;
  out.fd = (action_ah(h, shifted_path(gamma, eta, fd_step), spec) -
            action_ah(h, shifted_path(gamma, eta, -fd_step), spec)) /
           (2.0 * fd_step);

  const int m = gamma.segments();
  std::vector<double> f(m + 1);
  for (int i = 0; i <= m; ++i) {
    const double t = gamma.t[i];
    const ContactPoint& y = gamma.y[i];
    const Mat J = phi_inverse_differential(h, t, y, spec, 1e-6 * (1.0 + y.packed().norm()));
    const TangentVector speed = path_derivative(gamma, i);
    const TangentVector xh = hamiltonian_vector_field(h, t, y);
    const Vec a = J * eta.y[i].packed();
    const Vec b = J * (speed.packed() - xh.packed());
    const ContactPoint yb = flow::phi_inverse(h, t, y, spec);
    f[i] = dlambda_eval(yb, TangentVector::from_packed(a), TangentVector::from_packed(b));
  }
  const double integral = trapezoid(f, 1.0 / m);

  const auto eta_vec = [&](int i) {
    return TangentVector(eta.y[i].q, eta.y[i].p, eta.y[i].z);
  };
  const double g1 = flow::conformal_exponent(h, flow::ConformalMap::PsiT, 1.0, gamma.y.front(), spec);
  out.formula = integral + lambda_eval(gamma.y.back(), eta_vec(m)) -
                std::exp(g1) * lambda_eval(gamma.y.front(), eta_vec(0));
  return out;
}

double classical_action(const HamiltonianExpr& hbar, const Path& path) {
  validate(path);
  const int m = path.segments();
  std::vector<double> f(m + 1);
  for (int i = 0; i <= m; ++i) {
    const TangentVector speed = path_derivative(path, i);
    f[i] = path.y[i].p.dot(speed.dq) - hbar.eval(path.t[i], path.y[i]);
  }
  return trapezoid(f, 1.0 / m);
}

}  // namespace action
}  // namespace jetgf
