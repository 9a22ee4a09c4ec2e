#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "jetgf/action.hpp"
#include "jetgf/rng.hpp"

using namespace jetgf;
using flow::FlowSpec;

namespace {

const FlowSpec kSpec{};

ContactPoint pt(double q, double p, double z) {
  return ContactPoint(Vec::Constant(1, q), Vec::Constant(1, p), z);
}

// smooth closed-form path gamma(t) = (q(t), p(t), z(t)) sampled on m+1 nodes
template <class Fq, class Fp, class Fz>
action::Path sampled(int m, Fq q, Fp p, Fz z) {
  std::vector<ContactPoint> ys;
  for (int i = 0; i <= m; ++i) {
    const double t = double(i) / m;
    ys.push_back(pt(q(t), p(t), z(t)));
  }
  return action::make_uniform_path(std::move(ys));
}

action::Path fourier_path(const CounterRng& rng, std::uint64_t idx, int m) {
  std::vector<ContactPoint> ys;
  for (int i = 0; i <= m; ++i) {
    const double t = double(i) / m;
    const double basis[5] = {1.0, t, std::sin(M_PI * t), std::cos(M_PI * t),
                             std::sin(2 * M_PI * t)};
    double c[3] = {0, 0, 0};
    for (int coord = 0; coord < 3; ++coord)
      for (int b = 0; b < 5; ++b)
        c[coord] += rng.uniform_in(idx, coord * 5 + b, -0.3, 0.3) * basis[b];
    ys.push_back(pt(c[0], c[1], c[2]));
  }
  return action::make_uniform_path(std::move(ys));
}

}  // namespace

TEST_CASE("path validation") {
  CHECK_THROWS_AS(action::make_uniform_path(std::vector<ContactPoint>(8, pt(0, 0, 0))), Error);
  CHECK_NOTHROW(action::make_uniform_path(std::vector<ContactPoint>(9, pt(0, 0, 0))));

  action::Path bad = sampled(10, [](double t) { return t; }, [](double) { return 0.0; },
                             [](double) { return 0.0; });
  bad.t[3] += 1e-6;  // knock one node off the uniform grid
  CHECK_THROWS_AS(action::validate(bad), Error);

  // a trajectory over a sub-interval is not a unit-time path
  auto h = parse_hamiltonian("cos(q1)", 1);
  auto traj = flow::integrate(h, pt(0.2, 0, 0), 0.0, 0.5, kSpec);
  CHECK_THROWS_AS(action::path_from_trajectory(traj), Error);
  CHECK_NOTHROW(action::path_from_trajectory(flow::integrate(h, pt(0.2, 0, 0), 0.0, 1.0, kSpec)));
}

TEST_CASE("plain action of linear paths is exact") {
  // gamma = (t, 1/2, 3t):  A_0 = int (3 - 1/2) dt = 5/2, and both the
  // difference quotients and the trapezoid rule are exact on linear data
  auto path = sampled(50, [](double t) { return t; }, [](double) { return 0.5; },
                      [](double t) { return 3 * t; });
  CHECK(std::abs(action::action_a0(path) - 2.5) < 1e-13);
}

TEST_CASE("plain action converges at second order") {
  // gamma = (sin t, t^2, t^3): A_0 = int (3t^2 - t^2 cos t) dt over [0,1]
  const double exact = 1.0 - (2 * std::cos(1.0) + (1.0 * 1.0 - 2.0) * std::sin(1.0));
  auto val = [&](int m) {
    return action::action_a0(sampled(m, [](double t) { return std::sin(t); },
                                     [](double t) { return t * t; },
                                     [](double t) { return t * t * t; }));
  };
  const double e100 = std::abs(val(100) - exact);
  const double e200 = std::abs(val(200) - exact);
  CHECK(e200 < 1e-4);
  CHECK(e100 / e200 > 3.0);  // 4 in the limit
}

TEST_CASE("hamiltonian trajectories have vanishing action") {
  const ContactPoint y0 = pt(0.4, 0.2, 0.1);
  for (const char* src : {"-1", "cos(q1)", "p1^2/2", "0.3*z"}) {
    auto h = parse_hamiltonian(src, 1);
    auto path = action::hamiltonian_trajectory_path(h, y0, 200);
    CHECK(std::abs(action::action_ah(h, path, kSpec)) < 1e-6);
    // and the effective action reduces to the final height
    CHECK(std::abs(action::effective_action(h, path, kSpec) - path.y.back().z) < 1e-6);
  }
  // stiffer z-coupled case needs a finer grid for the same bound
  auto h = parse_hamiltonian("cos(q1) + 0.7*z", 1);
  auto path = action::hamiltonian_trajectory_path(h, y0, 600);
  CHECK(std::abs(action::action_ah(h, path, kSpec)) < 1e-6);
}

TEST_CASE("gauge transform of the Reeb hamiltonian is a vertical shift") {
  auto h = parse_hamiltonian("-1", 1);
  CounterRng rng(5, "reeb-gauge");
  auto gamma = fourier_path(rng, 0, 100);
  auto bar = action::gauge_transform(h, gamma, kSpec);
  // phi_t^-1 translates z by 1 - t
  for (std::size_t i = 0; i < gamma.t.size(); ++i) {
    CHECK(std::abs(bar.y[i].z - gamma.y[i].z - (1.0 - gamma.t[i])) < 1e-9);
    CHECK((bar.y[i].q - gamma.y[i].q).norm() < 1e-12);
    CHECK((bar.y[i].p - gamma.y[i].p).norm() < 1e-12);
  }
  CHECK(std::abs(action::action_ah(h, gamma, kSpec) - action::action_a0(bar)) < 1e-12);
}

TEST_CASE("action is gauge invariant") {
  CounterRng rng(7, "gauge");
  for (const char* src : {"cos(q1)", "cos(q1) + 0.7*z", "p1^2/2 + cos(q1)", "0.3*z"}) {
    auto h = parse_hamiltonian(src, 1);
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      auto gamma = fourier_path(rng, i, 300);
      const double ah = action::action_ah(h, gamma, kSpec);
      const double a0 = action::action_a0(action::gauge_transform(h, gamma, kSpec));
      worst = std::max(worst, std::abs(ah - a0) / (1.0 + std::abs(a0)));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("gauge transform collapses trajectories to their endpoint") {
  auto h = parse_hamiltonian("cos(q1) + 0.7*z", 1);
  auto path = action::hamiltonian_trajectory_path(h, pt(0.8, -0.1, 0.3), 150);
  auto bar = action::gauge_transform(h, path, kSpec);
  const Vec target = path.y.back().packed();
  double spread = 0.0;
  for (const auto& y : bar.y)
    spread = std::max(spread, (y.packed() - target).lpNorm<Eigen::Infinity>());
  CHECK(spread < 1e-8);
}

TEST_CASE("carnot residual measures the constraint violation") {
  // gamma = (t, 1, 0) under H = 0 has lambda(gamma') = -1 at every sample
  auto zero = parse_hamiltonian("0", 1);
  auto bad = sampled(60, [](double t) { return t; }, [](double) { return 1.0; },
                     [](double) { return 0.0; });
  CHECK(std::abs(action::carnot_residual(zero, bad) - 1.0) < 1e-12);

  // trajectories satisfy it to quadrature accuracy, improving at second order
  auto h = parse_hamiltonian("p1^2/2 + cos(q1)", 1);
  const ContactPoint y0 = pt(0.4, 0.2, 0.1);
  const double r200 = action::carnot_residual(h, action::hamiltonian_trajectory_path(h, y0, 200));
  const double r600 = action::carnot_residual(h, action::hamiltonian_trajectory_path(h, y0, 600));
  CHECK(r600 < 1e-5);
  CHECK(r200 / r600 > 6.0);  // 9 in the limit

  auto hz = parse_hamiltonian("cos(q1) + 0.7*z", 1);
  CHECK(action::carnot_residual(hz, action::hamiltonian_trajectory_path(hz, y0, 600)) < 1e-6);
}

TEST_CASE("first variation matches finite differences") {
  CounterRng g1(7, "variation-gamma"), g2(7, "variation-eta");
  for (const char* src : {"cos(q1) + 0.7*z", "p1^2/2 + cos(q1)"}) {
    auto h = parse_hamiltonian(src, 1);
    for (int i = 0; i < 2; ++i) {
      auto gamma = fourier_path(g1, i, 200);
      auto eta = fourier_path(g2, i, 200);
      const auto r = action::first_variation_check(h, gamma, eta, kSpec);
      CHECK(std::abs(r.fd - r.formula) / (1.0 + std::abs(r.fd)) < 1e-3);
    }
  }
}

TEST_CASE("first variation of a pure vertical ramp is its boundary term") {
  // eta = (0, 0, t) under H = -1: the interior term drops (dlambda kills
  // vertical directions) leaving lambda(eta(1)) = 1; the finite difference
  // sees d/dh [ int d/dt(h t) dt ] = 1 as well.
  auto h = parse_hamiltonian("-1", 1);
  CounterRng rng(9, "ramp");
  auto gamma = fourier_path(rng, 0, 200);
  auto eta = sampled(200, [](double) { return 0.0; }, [](double) { return 0.0; },
                     [](double t) { return t; });
  const auto r = action::first_variation_check(h, gamma, eta, kSpec);
  CHECK(std::abs(r.formula - 1.0) < 1e-6);
  CHECK(std::abs(r.fd - 1.0) < 1e-6);
}

TEST_CASE("classical action of the free particle") {
  auto h = parse_hamiltonian("p1^2/2", 1);
  auto path = action::hamiltonian_trajectory_path(h, pt(0.4, 0.7, 0.0), 200);
  // p is conserved, q moves linearly: int (p q' - H) dt = p0^2 / 2
  CHECK(std::abs(action::classical_action(h, path) - 0.5 * 0.7 * 0.7) < 1e-10);
}
