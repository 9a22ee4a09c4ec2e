#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "jetgf/expr.hpp"
#include "jetgf/rng.hpp"

using namespace jetgf;

namespace {

ContactPoint pt(double q, double p, double z) {
  return ContactPoint(Vec::Constant(1, q), Vec::Constant(1, p), z);
}

}  // namespace

TEST_CASE("polynomial value and partials") {
  auto h = parse_hamiltonian("q1^2 + 2*p1 - z", 1);
  CHECK(h.dim() == 1);
  CHECK(h.valid());
  CHECK(!h.support_radius().has_value());

  const ContactPoint y = pt(3.0, 2.0, 5.0);
  CHECK(h.eval(0.0, y) == 8.0);

  const JetValue j = h.eval_with_partials(0.0, y);
  CHECK(j.value == 8.0);
  CHECK(j.d_q(0) == 6.0);
  CHECK(j.d_p(0) == 2.0);
  CHECK(j.d_z == -1.0);
}

TEST_CASE("precedence and associativity") {
  const ContactPoint y = pt(0.0, 0.0, 0.0);
  CHECK(parse_hamiltonian("2 + 3 * 4", 1).eval(0, y) == 14.0);
  CHECK(parse_hamiltonian("2 - 3 - 4", 1).eval(0, y) == -5.0);
  CHECK(parse_hamiltonian("8 / 4 / 2", 1).eval(0, y) == 1.0);
  CHECK(parse_hamiltonian("2^3^2", 1).eval(0, y) == 512.0);  // right-associative
  CHECK(parse_hamiltonian("-2^2", 1).eval(0, y) == -4.0);    // unary binds looser than ^
  CHECK(parse_hamiltonian("(1 + 2) * (3 - 5)", 1).eval(0, y) == -6.0);
  CHECK(parse_hamiltonian("--3", 1).eval(0, y) == 3.0);
}

TEST_CASE("builtin functions and pi") {
  const ContactPoint y = pt(0.0, 0.0, 0.0);
  CHECK(parse_hamiltonian("sin(pi/2)", 1).eval(0, y) == 1.0);
  CHECK(parse_hamiltonian("cos(0)", 1).eval(0, y) == 1.0);
  CHECK(parse_hamiltonian("exp(0)", 1).eval(0, y) == 1.0);
  CHECK(parse_hamiltonian("tanh(0)", 1).eval(0, y) == 0.0);
  CHECK(parse_hamiltonian("sqrt(4)", 1).eval(0, y) == 2.0);
  CHECK(parse_hamiltonian("pi", 1).eval(0, y) == std::numbers::pi);
  CHECK(parse_hamiltonian("log(exp(1))", 1).eval(0, y) == doctest::Approx(1.0).epsilon(1e-15));
  // sabs(x) = sqrt(x^2 + 1e-6): smooth at 0, close to |x| away from it
  CHECK(parse_hamiltonian("sabs(0)", 1).eval(0, y) == 1e-3);
  CHECK(parse_hamiltonian("sabs(q1)", 1).eval(0, pt(2.0, 0, 0)) ==
        doctest::Approx(2.0).epsilon(1e-6));
  const JetValue js = parse_hamiltonian("sabs(q1)", 1).eval_with_partials(0, pt(0.0, 0, 0));
  CHECK(js.d_q(0) == 0.0);
}

TEST_CASE("time is a passive variable") {
  auto h = parse_hamiltonian("t * q1 + t^2", 1);
  const ContactPoint y = pt(3.0, 0.0, 0.0);
  CHECK(h.eval(0.5, y) == 1.75);
  const JetValue j = h.eval_with_partials(0.5, y);
  CHECK(j.d_q(0) == 0.5);  // no t-derivative is carried
  CHECK(j.d_p(0) == 0.0);
}

TEST_CASE("integer powers handle negative bases") {
  auto cube = parse_hamiltonian("q1^3", 1);
  CHECK(cube.eval(0, pt(-2.0, 0, 0)) == -8.0);
  CHECK(cube.eval_with_partials(0, pt(-2.0, 0, 0)).d_q(0) == 12.0);

  auto inv2 = parse_hamiltonian("q1^-2", 1);
  CHECK(inv2.eval(0, pt(2.0, 0, 0)) == 0.25);
  CHECK(inv2.eval_with_partials(0, pt(2.0, 0, 0)).d_q(0) == -0.25);
  CHECK(inv2.eval(0, pt(-2.0, 0, 0)) == 0.25);

  // written with a decimal point the exponent still folds to the integer path
  CHECK(parse_hamiltonian("q1^2.0", 1).eval(0, pt(-3.0, 0, 0)) == 9.0);
  CHECK(parse_hamiltonian("q1^10", 1).eval(0, pt(1.5, 0, 0)) ==
        doctest::Approx(std::pow(1.5, 10)).epsilon(1e-15));
}

TEST_CASE("domain errors carry source offsets") {
  const ContactPoint origin = pt(0.0, 0.0, 0.0);

  CHECK_THROWS_AS(parse_hamiltonian("1 / q1", 1).eval(0, origin), EvalDomainError);
  CHECK_THROWS_AS(parse_hamiltonian("log(q1 - 1)", 1).eval(0, origin), EvalDomainError);
  CHECK_THROWS_AS(parse_hamiltonian("sqrt(q1 - 1)", 1).eval(0, origin), EvalDomainError);
  CHECK_THROWS_AS(parse_hamiltonian("q1 ^ -1", 1).eval(0, origin), EvalDomainError);
  // non-integer exponent requires a positive base
  CHECK_THROWS_AS(parse_hamiltonian("q1 ^ 0.5", 1).eval(0, pt(-4.0, 0, 0)), EvalDomainError);
  CHECK(parse_hamiltonian("q1 ^ 0.5", 1).eval(0, pt(4.0, 0, 0)) == 2.0);

  try {
    parse_hamiltonian("1 + 1 / q1", 1).eval(0, origin);
    FAIL("expected EvalDomainError");
  } catch (const EvalDomainError& e) {
    CHECK(e.offset == 6);  // points at the division operator, not the whole expression
    CHECK(std::string(e.what()).find("division by zero") != std::string::npos);
  }
}

TEST_CASE("parse errors carry source offsets") {
  CHECK_THROWS_AS(parse_hamiltonian("q1 +", 1), ParseError);
  CHECK_THROWS_AS(parse_hamiltonian("", 1), ParseError);
  CHECK_THROWS_AS(parse_hamiltonian("q2", 1), ParseError);  // index out of range for dim 1
  CHECK_THROWS_AS(parse_hamiltonian("p3", 2), ParseError);
  CHECK_THROWS_AS(parse_hamiltonian("foo(3)", 1), ParseError);
  CHECK_THROWS_AS(parse_hamiltonian("sin 3", 1), ParseError);
  CHECK_THROWS_AS(parse_hamiltonian("(1 + 2", 1), ParseError);
  CHECK_THROWS_AS(parse_hamiltonian("1 2", 1), ParseError);
  CHECK_THROWS_AS(parse_hamiltonian("1 & 2", 1), ParseError);
  CHECK_NOTHROW(parse_hamiltonian("q2 + p2", 2));

  try {
    parse_hamiltonian("q1 * q9", 1);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset == 5);
  }
}

TEST_CASE("cutoff arguments must be positive numeric literals") {
  CHECK_THROWS_AS(parse_hamiltonian("cutoff(q1, -1, 1)", 1), ParseError);
  CHECK_THROWS_AS(parse_hamiltonian("cutoff(q1, 1, 0)", 1), ParseError);
  CHECK_THROWS_AS(parse_hamiltonian("cutoff(q1, p1, 1)", 1), ParseError);
  CHECK_THROWS_AS(parse_hamiltonian("cutoff(q1, 1)", 1), ParseError);
  CHECK_NOTHROW(parse_hamiltonian("cutoff(q1, 2, 0.5)", 1));
}

TEST_CASE("partials agree with central differences on a dense expression") {
  auto h = parse_hamiltonian(
      "sin(q1*p2) + exp(0.3*z)*cos(q2) + tanh(p1 - q1^3) + p2^2/(2 + q1^2)"
      " + log(2 + sin(z)) + sqrt(1 + p1^2) + sabs(q2 - p1)",
      2);
  CounterRng rng(2024, "expr-fuzz");
  const double fd = 1e-6;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Vec q(2), p(2);
    for (int c = 0; c < 2; ++c) {
      q(c) = rng.uniform_in(i, c, -2.0, 2.0);
      p(c) = rng.uniform_in(i, 2 + c, -2.0, 2.0);
    }
    const double z = rng.uniform_in(i, 4, -2.0, 2.0);
    const double t = rng.uniform_in(i, 5, 0.0, 1.0);
    const ContactPoint y(q, p, z);
    const JetValue j = h.eval_with_partials(t, y);

    Vec packed = y.packed();
    Vec grad(5);
    grad.head(2) = j.d_q;
    grad.segment(2, 2) = j.d_p;
    grad(4) = j.d_z;
    for (int c = 0; c < 5; ++c) {
      Vec lo = packed, hi = packed;
      lo(c) -= fd;
      hi(c) += fd;
      const double est = (h.eval(t, ContactPoint::from_packed(hi)) -
                          h.eval(t, ContactPoint::from_packed(lo))) /
                         (2 * fd);
      worst = std::max(worst, std::abs(est - grad(c)) / (1.0 + std::abs(grad(c))));
    }
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("compactify is exact inside and outside the collar") {
  auto h = parse_hamiltonian("q1^2 + p1*z + cos(q1)", 1);
  auto hc = compactify(h, 2.0, 1.0);
  REQUIRE(hc.support_radius().has_value());
  CHECK(*hc.support_radius() == 3.0);

  // |(q,p,z)| <= R0: bit-identical values and partials
  for (const ContactPoint& y : {pt(1.0, 0.5, -0.3), pt(-1.2, 0.9, 1.0), pt(0.0, 0.0, 0.0)}) {
    REQUIRE(y.packed().norm() <= 2.0);
    CHECK(hc.eval(0.3, y) == h.eval(0.3, y));
    const JetValue a = h.eval_with_partials(0.3, y);
    const JetValue b = hc.eval_with_partials(0.3, y);
    CHECK(a.d_q(0) == b.d_q(0));
    CHECK(a.d_p(0) == b.d_p(0));
    CHECK(a.d_z == b.d_z);
  }

  // |(q,p,z)| >= R0 + w: exactly zero, including all partials
  for (const ContactPoint& y : {pt(3.0, 0.0, 0.0), pt(2.0, 2.0, 2.0), pt(0.0, -8.0, 1.0)}) {
    REQUIRE(y.packed().norm() >= 3.0);
    const JetValue b = hc.eval_with_partials(0.3, y);
    CHECK(b.value == 0.0);
    CHECK(b.d_q(0) == 0.0);
    CHECK(b.d_p(0) == 0.0);
    CHECK(b.d_z == 0.0);
  }

  // inside the collar the bump decreases with the radius
  auto one = compactify(parse_hamiltonian("1", 1), 2.0, 1.0);
  double prev = 1.0;
  for (double r : {2.1, 2.3, 2.5, 2.7, 2.9}) {
    const double chi = one.eval(0.0, pt(r, 0.0, 0.0));
    CHECK(chi < prev);
    CHECK(chi > 0.0);
    prev = chi;
  }

  // chain rule through the collar
  CounterRng rng(5, "collar");
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double r = rng.uniform_in(i, 0, 2.05, 2.95);
    Vec dir = rng.unit_vector(i, 3);
    const ContactPoint y = ContactPoint::from_packed(r * dir);
    const JetValue j = hc.eval_with_partials(0.0, y);
    Vec grad(3);
    grad << j.d_q(0), j.d_p(0), j.d_z;
    for (int c = 0; c < 3; ++c) {
      Vec lo = y.packed(), hi = y.packed();
      lo(c) -= 1e-6;
      hi(c) += 1e-6;
      const double est = (hc.eval(0, ContactPoint::from_packed(hi)) -
                          hc.eval(0, ContactPoint::from_packed(lo))) /
                         2e-6;
      worst = std::max(worst, std::abs(est - grad(c)) / (1.0 + std::abs(grad(c))));
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("pretty_print reparses to bit-identical evaluation") {
  const char* sources[] = {
      "q1^2 + 2*p1 - z",
      "-q1^3 * sin(p1) / (1 + z^2)",
      "2^3^2 - p1^-2",
      "exp(0.3*z)*cos(q1) + tanh(p1) + sabs(q1)*sqrt(1 + p1^2) + pi",
      "cutoff(cos(q1) + p1^2/2, 3, 0.5)",
  };
  CounterRng rng(11, "roundtrip");
  for (const char* src : sources) {
    auto h = parse_hamiltonian(src, 1);
    auto h2 = parse_hamiltonian(pretty_print(h), 1);
    for (int i = 0; i < 100; ++i) {
      const ContactPoint y = pt(rng.uniform_in(i, 0, 0.1, 2.0), rng.uniform_in(i, 1, 0.1, 2.0),
                                rng.uniform_in(i, 2, -2.0, 2.0));
      const double t = rng.uniform(i, 3);
      CHECK(h.eval(t, y) == h2.eval(t, y));
      const JetValue a = h.eval_with_partials(t, y);
      const JetValue b = h2.eval_with_partials(t, y);
      CHECK(a.d_q(0) == b.d_q(0));
      CHECK(a.d_p(0) == b.d_p(0));
      CHECK(a.d_z == b.d_z);
    }
  }

  // compactify reports the pretty form as its source
  auto hc = compactify(parse_hamiltonian("cos(q1)", 1), 10.0, 1.0);
  auto h3 = parse_hamiltonian(hc.source(), 1);
  CHECK(hc.eval(0.0, pt(0.7, 0.2, 0.1)) == h3.eval(0.0, pt(0.7, 0.2, 0.1)));
}

TEST_CASE("evaluation is reproducible") {
  auto h = parse_hamiltonian("sin(q1*p1) + exp(0.1*z) - q1^7", 1);
  const ContactPoint y = pt(1.234567890123, -0.98765432109, 0.5555);
  const double a = h.eval(0.25, y);
  const double b = h.eval(0.25, y);
  CHECK(a == b);
  HamiltonianExpr copy = h;  // shared tape
  CHECK(copy.eval(0.25, y) == a);
}

TEST_CASE("eval_jet_raw matches eval_with_partials") {
  auto h = parse_hamiltonian("q1*p2 + z^2 - sin(p1)", 2);
  Vec q(2), p(2);
  q << 0.3, -0.7;
  p << 1.1, 0.4;
  const ContactPoint y(q, p, -0.2);
  const JetValue j = h.eval_with_partials(0.6, y);
  double grad[5];
  const double v = h.eval_jet_raw(0.6, q.data(), p.data(), -0.2, grad);
  CHECK(v == j.value);
  CHECK(grad[0] == j.d_q(0));
  CHECK(grad[1] == j.d_q(1));
  CHECK(grad[2] == j.d_p(0));
  CHECK(grad[3] == j.d_p(1));
  CHECK(grad[4] == j.d_z);
}
