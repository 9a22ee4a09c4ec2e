#pragma once

#include "jetgf/expr.hpp"
#include "jetgf/types.hpp"

// Pointwise contact geometry of the 1-jet space with lambda = dz - p . dq.
// Conventions fixed here and used everywhere else:
//   * d(lambda) = dq ^ dp, i.e. d(lambda)(d/dq_i, d/dp_i) = +1;
//   * the Reeb field is d/dz;
//   * a contact vector field X corresponds to the Hamiltonian H = -lambda(X).
// Under these signs the Hamiltonian vector field of H comes out as
//   X_H = ( dH/dp, -dH/dq - p dH/dz, p . dH/dp - H ).
// Derivation: writing X = a d/dq + b d/dp + c d/dz, the defining relations
// dH = X -| d(lambda) + (dH/dz) lambda and H = -lambda(X) give, component by
// component, a = dH/dp (dp terms), b = -dH/dq - p dH/dz (dq terms) and
// c = p . a - H (from lambda(X) = c - p . a = -H).  H == -1 recovers the Reeb
// field, the Hamiltonian of the constant -1.

namespace jetgf {

inline double lambda_eval(const ContactPoint& y, const TangentVector& v) {
  require_dim(v, y.dim(), "lambda_eval");
  return v.dz - y.p.dot(v.dq);
}

// d(lambda) = dq ^ dp evaluated on a pair of tangent vectors.  The base point
// only fixes the dimension: the form has constant coefficients in these
// coordinates.
inline double dlambda_eval(const ContactPoint& y, const TangentVector& v, const TangentVector& w) {
  require_dim(v, y.dim(), "dlambda_eval");
  require_dim(w, y.dim(), "dlambda_eval");
  return v.dq.dot(w.dp) - v.dp.dot(w.dq);
}

inline TangentVector reeb(const ContactPoint& y) {
  return TangentVector(Vec::Zero(y.dim()), Vec::Zero(y.dim()), 1.0);
}

inline TangentVector hamiltonian_vector_field(const HamiltonianExpr& h, double t,
                                              const ContactPoint& y) {
  require_dim(y, h.dim(), "hamiltonian_vector_field");
  const JetValue j = h.eval_with_partials(t, y);
  Vec dq = j.d_p;
  Vec dp = -j.d_q - y.p * j.d_z;
  const double dz = y.p.dot(j.d_p) - j.value;
  return TangentVector(std::move(dq), std::move(dp), dz);
}

// Projection onto the contact hyperplane ker(lambda) along the Reeb field.
inline TangentVector xi_projection(const ContactPoint& y, const TangentVector& v) {
  require_dim(v, y.dim(), "xi_projection");
  TangentVector out = v;
  out.dz -= lambda_eval(y, v);
  return out;
}

}  // namespace jetgf
