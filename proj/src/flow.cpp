#include "jetgf/flow.hpp"

#include <cmath>

#include "jetgf/contact.hpp"
#include "jetgf/errors.hpp"

namespace jetgf {
namespace flow {

void validate(const FlowSpec& spec) {
  if (spec.steps_per_unit_time < 10)
    throw ConfigError("flow.steps_per_unit_time must be at least 10");
}

namespace {

// Right-hand side of the extended system: state s = (q, p, z, g) with
//   q' = dH/dp,  p' = -dH/dq - p dH/dz,  z' = p . dH/dp - H,  g' = -dH/dz.
class ExtendedField {
 public:
  ExtendedField(const HamiltonianExpr& h, int n) : h_(h), n_(n), grad_(2 * n + 1) {}

  void operator()(double t, const Vec& s, Vec& out) {
    const double* q = s.data();
    const double* p = s.data() + n_;
    const double H = h_.eval_jet_raw(t, q, p, s(2 * n_), grad_.data());
    const double Hz = grad_(2 * n_);
    double p_dot_Hp = 0.0;
    for (int i = 0; i < n_; ++i) {
      const double Hqi = grad_(i);
      const double Hpi = grad_(n_ + i);
      out(i) = Hpi;
      out(n_ + i) = -Hqi - p[i] * Hz;
      p_dot_Hp += p[i] * Hpi;
    }
    out(2 * n_) = p_dot_Hp - H;
    out(2 * n_ + 1) = -Hz;
  }

 private:
  const HamiltonianExpr& h_;
  int n_;
  Vec grad_;
};

}  // namespace

Trajectory integrate(const HamiltonianExpr& h, const ContactPoint& y0, double t0, double t1,
                     const FlowSpec& spec) {
  validate(spec);
  if (!h.valid()) throw Error("flow::integrate: empty Hamiltonian");
  const int n = h.dim();
  require_dim(y0, n, "flow::integrate");
  if (t0 == t1) throw Error("flow::integrate: empty time interval");

  const double span = std::abs(t1 - t0);
  const int steps =
      std::max(1, static_cast<int>(std::ceil(span * spec.steps_per_unit_time - 1e-9)));
  const double dt = (t1 - t0) / steps;

  const int dim = 2 * n + 2;
  Vec s(dim), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  s.head(n) = y0.q;
  s.segment(n, n) = y0.p;
  s(2 * n) = y0.z;
  s(2 * n + 1) = 0.0;

  ExtendedField f(h, n);

  Trajectory out;
  out.t.reserve(steps + 1);
  out.y.reserve(steps + 1);
  out.g.reserve(steps + 1);
  auto record = [&](double t) {
    out.t.push_back(t);
    out.y.emplace_back(s.head(n), s.segment(n, n), s(2 * n));
    out.g.push_back(s(2 * n + 1));
  };
  record(t0);

  for (int i = 0; i < steps; ++i) {
    const double ta = t0 + i * dt;
    const double tb = (i == steps - 1) ? t1 : t0 + (i + 1) * dt;
    const double hstep = tb - ta;
    f(ta, s, k1);
    tmp = s + (hstep / 2) * k1;
    f(ta + hstep / 2, tmp, k2);
    tmp = s + (hstep / 2) * k2;
    f(ta + hstep / 2, tmp, k3);
    tmp = s + hstep * k3;
    f(tb, tmp, k4);
    s += (hstep / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!s.allFinite())
      throw FlowBlowupError("flow state became non-finite", ta);
    record(tb);
  }
  return out;
}

std::pair<ContactPoint, double> psi(const HamiltonianExpr& h, double t, const ContactPoint& y,
                                    const FlowSpec& spec) {
  if (t == 0.0) return {y, 0.0};
  Trajectory tr = integrate(h, y, 0.0, t, spec);
  return {tr.y.back(), tr.g.back()};
}

ContactPoint phi(const HamiltonianExpr& h, double t, const ContactPoint& y, const FlowSpec& spec) {
  Trajectory back = integrate(h, y, 1.0, 0.0, spec);
  if (t == 0.0) return back.y.back();
  return integrate(h, back.y.back(), 0.0, t, spec).y.back();
}

MapWithExponent phi_inverse_with_exponent(const HamiltonianExpr& h, double t,
                                          const ContactPoint& y, const FlowSpec& spec) {
  // Backward leg t -> 0 lands at w = psi_t^-1(y) and accumulates
  // -g_{psi_t}(w); the forward leg 0 -> 1 adds g_{psi_1}(w).
  ContactPoint w = y;
  double g_back = 0.0;
  if (t != 0.0) {
    Trajectory back = integrate(h, y, t, 0.0, spec);
    w = back.y.back();
    g_back = back.g.back();
  }
  Trajectory fwd = integrate(h, w, 0.0, 1.0, spec);
  return {fwd.y.back(), fwd.g.back() + g_back};
}

ContactPoint phi_inverse(const HamiltonianExpr& h, double t, const ContactPoint& y,
                         const FlowSpec& spec) {
  return phi_inverse_with_exponent(h, t, y, spec).y;
}

double conformal_exponent(const HamiltonianExpr& h, ConformalMap map, double t,
                          const ContactPoint& y, const FlowSpec& spec) {
  switch (map) {
    case ConformalMap::PsiT: {
      if (t == 0.0) return 0.0;
      return integrate(h, y, 0.0, t, spec).g.back();
    }
    case ConformalMap::PhiT: {
      Trajectory back = integrate(h, y, 1.0, 0.0, spec);  // g = -g_{psi_1}(w)
      if (t == 0.0) return back.g.back();
      Trajectory fwd = integrate(h, back.y.back(), 0.0, t, spec);
      return fwd.g.back() + back.g.back();
    }
    case ConformalMap::PhiTInverse: {
      ContactPoint w = y;
      double g_back = 0.0;
      if (t != 0.0) {
        Trajectory back = integrate(h, y, t, 0.0, spec);
        w = back.y.back();
        g_back = back.g.back();
      }
      return integrate(h, w, 0.0, 1.0, spec).g.back() + g_back;
    }
  }
  throw Error("conformal_exponent: unknown map tag");
}

Mat linearized_flow(const HamiltonianExpr& h, const ContactPoint& y0, double t0, double t1,
                    const FlowSpec& spec, double fd_step) {
  const int n = h.dim();
  require_dim(y0, n, "flow::linearized_flow");
  const int m = 2 * n + 1;
  if (t0 == t1) return Mat::Identity(m, m);
  const Vec base = y0.packed();
  const double step = fd_step > 0.0 ? fd_step : 1e-6 * (1.0 + base.norm());
  Mat J(m, m);
  Vec vp(m), vm(m);
  for (int j = 0; j < m; ++j) {
    vp = base;
    vm = base;
    vp(j) += step;
    vm(j) -= step;
    const Vec fp = integrate(h, ContactPoint::from_packed(vp), t0, t1, spec).back().packed();
    const Vec fm = integrate(h, ContactPoint::from_packed(vm), t0, t1, spec).back().packed();
    J.col(j) = (fp - fm) / (2.0 * step);
  }
  return J;
}

double conformal_identity_check(const HamiltonianExpr& h, double t, const ContactPoint& y,
                                const TangentVector& v, const FlowSpec& spec, double fd_step) {
  require_dim(v, h.dim(), "flow::conformal_identity_check");
  const auto [yt, g] = psi(h, t, y, spec);
  const Mat J = linearized_flow(h, y, 0.0, t, spec, fd_step);
  const TangentVector dv = TangentVector::from_packed(J * v.packed());
  return std::abs(lambda_eval(yt, dv) - std::exp(g) * lambda_eval(y, v));
}

}  // namespace flow
}  // namespace jetgf
