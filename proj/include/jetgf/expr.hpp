#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jetgf/types.hpp"

namespace jetgf {

// Value of a Hamiltonian together with its first partials in (q, p, z).
// Time is a passive parameter: no t-derivative is carried.
struct JetValue {
  double value = 0.0;
  Vec d_q;
  Vec d_p;
  double d_z = 0.0;
};

namespace detail {
struct Program;  // flat post-order instruction tape, defined in expr.cpp
}

// A scalar function H(t, q, p, z) given by an expression over the variables
// t, q1..qn, p1..pn, z.  Immutable and cheap to copy; evaluation is
// thread-safe.  Grammar (documented in full in the README):
//
//   expr   = term { ("+" | "-") term }
//   term   = unary { ("*" | "/") unary }
//   unary  = { "+" | "-" } power
//   power  = atom [ "^" unary ]                      right-associative
//   atom   = number | variable | "pi" | call | "(" expr ")"
//   call   = fn "(" expr ")" | "cutoff" "(" expr "," number "," number ")"
//   fn     = "sin" | "cos" | "exp" | "log" | "tanh" | "sqrt" | "sabs"
//
// sabs is the smoothed absolute value sqrt(x^2 + 1e-6).  cutoff(e, R0, w)
// multiplies e by a bump that is exactly 1 for |(q,p,z)| <= R0 and exactly 0
// for |(q,p,z)| >= R0 + w (see compactify below).
class HamiltonianExpr {
 public:
  HamiltonianExpr() = default;

  int dim() const { return dim_; }
  const std::string& source() const { return source_; }

  // Radius beyond which the function vanishes identically, when known.
  std::optional<double> support_radius() const { return support_radius_; }

  double eval(double t, const ContactPoint& y) const;
  JetValue eval_with_partials(double t, const ContactPoint& y) const;

  // Allocation-free evaluation path used by the flow integrator.  grad must
  // point at 2n+1 doubles and receives (dH/dq, dH/dp, dH/dz); returns H.
  double eval_jet_raw(double t, const double* q, const double* p, double z, double* grad) const;

  bool valid() const { return prog_ != nullptr; }

 private:
  friend HamiltonianExpr parse_hamiltonian(const std::string&, int);
  friend HamiltonianExpr compactify(const HamiltonianExpr&, double, double);
  friend std::string pretty_print(const HamiltonianExpr&);

  std::shared_ptr<const detail::Program> prog_;
  int dim_ = 0;
  std::string source_;
  std::optional<double> support_radius_;
};

// Parses source over dimension n.  Throws ParseError with a byte offset on
// syntax errors, unknown identifiers, bad arity, or out-of-range coordinate
// indices.
HamiltonianExpr parse_hamiltonian(const std::string& source, int dim);

// Canonical fully-parenthesised rendering.  Reparsing the result yields an
// expression with bit-identical evaluation.
std::string pretty_print(const HamiltonianExpr& h);

// Multiplies H by the radial bump chi(r), r = |(q,p,z)|, where
//   chi = s(u1) / (s(u1) + s(u2)),  u1 = (R0+w-r)/w,  u2 = (r-R0)/w,
//   s(u) = exp(-1/u) for u > 0 and 0 otherwise.
// chi is smooth, identically 1 for r <= R0 and identically 0 for r >= R0+w,
// so all partials of the product vanish exactly outside radius R0+w.
HamiltonianExpr compactify(const HamiltonianExpr& h, double R0, double w);

}  // namespace jetgf
