#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "jetgf/genfun.hpp"
#include "jetgf/legendrian.hpp"

using namespace jetgf;
using namespace legendrian;
using flow::FlowSpec;

namespace {
const FlowSpec kSpec{};

GridSpec grid1d(double lo, double hi, int count) {
  return GridSpec{Vec::Constant(1, lo), Vec::Constant(1, hi), {count}};
}
}  // namespace

TEST_CASE("grid validation") {
  CHECK_NOTHROW(validate(grid1d(-3, 3, 101)));
  CHECK_THROWS_AS(validate(grid1d(-3, 3, 1)), Error);   // an interval needs two nodes
  CHECK_THROWS_AS(validate(grid1d(-3, 3, 0)), Error);
  CHECK_THROWS_AS(validate(grid1d(3, -3, 11)), Error);
  CHECK_NOTHROW(validate(GridSpec{Vec::Constant(1, 2.0), Vec::Constant(1, 2.0), {1}}));
  CHECK_THROWS_AS(validate(GridSpec{Vec::Zero(2), Vec::Ones(2), {5}}), Error);  // count per axis
  CHECK_THROWS_AS(validate(GridSpec{Vec::Zero(2), Vec::Ones(1), {5, 5}}), Error);
}

TEST_CASE("axis nodes refine bit-identically") {
  const auto coarse = axis_nodes(-3.0, 3.0, 101);
  const auto fine = axis_nodes(-3.0, 3.0, 201);
  REQUIRE(coarse.size() == 101);
  REQUIRE(fine.size() == 201);
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    CHECK(fine[2 * i] == coarse[i]);  // shared nodes must not drift
  }
  CHECK(coarse.front() == -3.0);
  CHECK(std::abs(coarse.back() - 3.0) < 1e-12);
  CHECK(axis_nodes(2.0, 2.0, 1) == std::vector<double>{2.0});

  const auto nodes = grid_nodes(GridSpec{Vec::Zero(2), Vec::Ones(2), {2, 3}});
  REQUIRE(nodes.size() == 6);
  CHECK(nodes[0](0) == 0.0);
  CHECK(nodes[0](1) == 0.0);  // last axis varies fastest
  CHECK(nodes[1](1) == 0.5);
  CHECK(nodes[2](1) == 1.0);
  CHECK(nodes[3](0) == 1.0);
}

TEST_CASE("legendrian samples are the time-1 flow of the zero section") {
  auto h = parse_hamiltonian("cos(q1)", 1);
  const auto samples = sample_legendrian(h, grid1d(-2, 2, 21), kSpec, 2);
  REQUIRE(samples.size() == 21);
  for (const auto& s : samples) {
    REQUIRE(s.ok);
    CHECK(s.error.empty());
    CHECK(std::abs(s.y.q(0) - s.q0(0)) < 1e-12);
    CHECK(std::abs(s.y.p(0) - std::sin(s.q0(0))) < 1e-10);
    CHECK(std::abs(s.y.z + std::cos(s.q0(0))) < 1e-10);
    CHECK(s.g == 0.0);
  }

  const auto front = wave_front(samples);
  REQUIRE(front.size() == samples.size());
  for (std::size_t i = 0; i < front.size(); ++i) {
    CHECK(front[i].q(0) == samples[i].y.q(0));
    CHECK(front[i].z == samples[i].y.z);
  }
}

TEST_CASE("failed samples are reported, not silently dropped") {
  auto h = parse_hamiltonian("-2*(z^2) - 2", 1);  // blows up before t = 1
  const auto samples = sample_legendrian(h, grid1d(-1, 1, 5), kSpec, 1);
  REQUIRE(samples.size() == 5);
  for (const auto& s : samples) {
    CHECK(!s.ok);
    CHECK(!s.error.empty());
  }
  CHECK(wave_front(samples).empty());
}

TEST_CASE("the pendulum-type front folds twice") {
  // q0 -> q(1) for H = p^2 + 2 cos(q) reverses direction at two caustic
  // points inside [-4, 4]
  auto h = parse_hamiltonian("p1^2 + 2*cos(q1)", 1);
  const auto samples = sample_legendrian(h, grid1d(-4, 4, 161), kSpec, 2);
  std::vector<double> qs;
  for (const auto& s : samples) {
    REQUIRE(s.ok);
    qs.push_back(s.y.q(0));
  }
  int folds = 0;
  for (std::size_t i = 1; i + 1 < qs.size(); ++i) {
    const double left = qs[i] - qs[i - 1];
    const double right = qs[i + 1] - qs[i];
    if (left * right < 0.0) ++folds;
  }
  CHECK(folds == 2);
}

TEST_CASE("spectrum of the cosine potential") {
  auto h = parse_hamiltonian("cos(q1)", 1);
  const auto rep = spectrum(h, grid1d(-4, 4, 101), kSpec);

  REQUIRE(rep.roots.size() == 3);
  const double pi = std::numbers::pi;
  CHECK(std::abs(rep.roots[0].q0(0) + pi) < 1e-8);
  CHECK(std::abs(rep.roots[1].q0(0)) < 1e-8);
  CHECK(std::abs(rep.roots[2].q0(0) - pi) < 1e-8);
  CHECK(!rep.roots[0].degenerate);
  CHECK(!rep.roots[1].degenerate);
  CHECK(!rep.roots[2].degenerate);
  for (std::size_t i = 1; i < rep.roots.size(); ++i)
    CHECK(rep.roots[i].q0(0) > rep.roots[i - 1].q0(0));

  REQUIRE(rep.values.size() == 2);  // +1 appears twice but is reported once
  CHECK(std::abs(rep.values[0] + 1.0) < 1e-6);
  CHECK(std::abs(rep.values[1] - 1.0) < 1e-6);
}

TEST_CASE("a frozen hamiltonian yields one degenerate root") {
  auto h = parse_hamiltonian("0", 1);
  const auto rep = spectrum(h, grid1d(-3, 3, 101), kSpec);
  REQUIRE(rep.roots.size() == 1);
  CHECK(rep.roots[0].degenerate);
  CHECK(rep.roots[0].value == 0.0);
  REQUIRE(rep.values.size() == 1);
  CHECK(rep.values[0] == 0.0);
}

TEST_CASE("a front that never crosses the wall has empty spectrum") {
  // time-1 momentum of H = q1 is identically -1 on the zero section
  auto h = compactify(parse_hamiltonian("q1", 1), 10.0, 1.0);
  const auto rep = spectrum(h, grid1d(-3, 3, 51), kSpec);
  CHECK(rep.roots.empty());
  CHECK(rep.values.empty());
}

TEST_CASE("zero wall crossings sit on the wall") {
  auto h = parse_hamiltonian("cos(q1)", 1);
  const auto pts = zero_wall_crossings(h, grid1d(-4, 4, 101), kSpec);
  REQUIRE(pts.size() == 3);
  const double pi = std::numbers::pi;
  CHECK(std::abs(pts[0].q(0) + pi) < 1e-8);
  CHECK(std::abs(pts[1].q(0)) < 1e-8);
  CHECK(std::abs(pts[2].q(0) - pi) < 1e-8);
  for (const auto& y : pts) {
    CHECK(y.p(0) == 0.0);
    CHECK(std::abs(std::abs(y.z) - 1.0) < 1e-6);
  }
}

TEST_CASE("two-dimensional spectrum by newton sweep") {
  auto h = parse_hamiltonian("cos(q1) + cos(q2)", 2);
  GridSpec grid{Vec::Constant(2, -4.0), Vec::Constant(2, 4.0), {21, 21}};
  const auto rep = spectrum(h, grid, kSpec);
  CHECK(rep.roots.size() == 9);  // (k pi, l pi) for k, l in {-1, 0, 1}
  REQUIRE(rep.values.size() == 3);
  CHECK(std::abs(rep.values[0] + 2.0) < 1e-6);
  CHECK(std::abs(rep.values[1]) < 1e-6);
  CHECK(std::abs(rep.values[2] - 2.0) < 1e-6);
}

TEST_CASE("spectrum values are the critical values of the generating function") {
  auto h = parse_hamiltonian("cos(q1)", 1);
  const auto rep = spectrum(h, grid1d(-4, 4, 101), kSpec);
  genfun::Partition part(8);
  genfun::CutoffParams cut;
  for (const auto& root : rep.roots) {
    const auto sol = genfun::critical_solve(h, root.q0, part, cut, kSpec);
    const double s = genfun::s_eval(h, sol.e, part, cut, kSpec);
    CHECK(std::abs(s - root.value) < 1e-6);
  }
}
