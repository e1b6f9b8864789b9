#include "rsc/maxprinciple.hpp"
#include "rsc/optimizer.hpp"

#include "toy_problems.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rsc;

namespace {

// Two actions, one Brownian component, h = a_j + x^2 / 2.
struct SliceFixture {
  CoefficientTable table = CoefficientTable::zero(2, 1);
  StandardObjective objective;

  SliceFixture() : objective(make_running(), TerminalCost{}, Eigen::MatrixXd::Zero(1, 1)) {
    table.upsilon << 0.5, -0.2;
    table.phi << 0.1, 0.3;
    table.chi << 0.2, 0.0;
    table.psi << 0.05, 0.4;
  }

  static RunningCost make_running() {
    RunningCost r;
    r.action_cost = Eigen::RowVector2d(1.0, 2.0);
    r.xx = 1.0;
    return r;
  }
};

}  // namespace

TEST_CASE("Hamiltonian slice matches the hand-assembled formula") {
  SliceFixture f;
  const double x = 1.5, p = 0.8;
  NoiseVector P(1);
  P << -0.6;
  const Eigen::Vector2d mu(0.25, 0.75);
  const HamiltonianSlice h = hamiltonian_slice(0.0, x, 0.0, p, P, f.table, f.objective, mu);
  const double h0 = -p * (0.5 + 0.1 * x) - P(0) * (0.2 + 0.05 * x) - (1.0 + 0.5 * x * x);
  const double h1 = -p * (-0.2 + 0.3 * x) - P(0) * (0.0 + 0.4 * x) - (2.0 + 0.5 * x * x);
  CHECK(h.values(0) == doctest::Approx(h0).epsilon(1e-14));
  CHECK(h.values(1) == doctest::Approx(h1).epsilon(1e-14));
  CHECK(h.value_mu == doctest::Approx(0.25 * h0 + 0.75 * h1).epsilon(1e-14));
  const Maximizer m = pointwise_maximizer(h);
  CHECK(m.index == (h0 >= h1 ? 0 : 1));
  CHECK(m.gap == doctest::Approx(std::max(h0, h1) - h.value_mu));
  CHECK_THROWS_AS(hamiltonian_slice(0.0, NAN, 0.0, p, P, f.table, f.objective, mu), std::invalid_argument);
}

TEST_CASE("Hamiltonian is affine in the measure and maximized at a grid point (property)") {
  SliceFixture f;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    NoiseVector P(1);
    P << n(rng);
    const double x = n(rng), p = n(rng), w1 = uni(rng), w2 = uni(rng), theta = uni(rng);
    const Eigen::Vector2d mu(w1, 1.0 - w1), q(w2, 1.0 - w2);
    const Eigen::Vector2d mix = theta * q + (1.0 - theta) * mu;
    const double hm = hamiltonian_slice(0.3, x, 0.0, p, P, f.table, f.objective, mu).value_mu;
    const double hq = hamiltonian_slice(0.3, x, 0.0, p, P, f.table, f.objective, q).value_mu;
    const HamiltonianSlice hx = hamiltonian_slice(0.3, x, 0.0, p, P, f.table, f.objective, mix);
    CHECK(hx.value_mu == doctest::Approx(theta * hq + (1.0 - theta) * hm).epsilon(1e-12));
    CHECK(pointwise_maximizer(hx).gap >= -1e-12);
  }
}

TEST_CASE("argmax ties go to the lowest index") {
  CHECK(argmax_lowest(Eigen::RowVector4d(1.0, 3.0, 3.0, 2.0)) == 1);
  CHECK(argmax_lowest(Eigen::RowVector3d(5.0, 5.0, 5.0)) == 0);
  CHECK(argmax_lowest(Eigen::RowVector3d(-1.0, -2.0, 0.0)) == 2);
}

TEST_CASE("slack sign follows the gain inside and outside the window") {
  const ControlProblem p = toy::slack_window(50);
  const ScenarioSet set = sample_scenarios(p, 200, 3);
  const TrajectoryBundle b = simulate_forward(p, set, p.uniform_control(), p.zero_singular());
  const AdjointSolution a = solve_adjoint_regression(p, set, b);
  for (Index k = 0; k < 50; ++k) {
    const double expected = p.coefficients.gain_x(k, 0);
    CHECK(singular_slack(p, a, 17, k)(0) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("the integral-form derivative vanishes along the null direction and matches finite differences") {
  const ControlProblem p = toy::gradient(30);
  const ScenarioSet set = sample_scenarios(p, 3000, 6);
  std::mt19937_64 rng(9);
  const RelaxedControl mu = toy::random_relaxed(rng, 30, p.actions.count());
  const SingularControl xi = toy::random_singular(rng, 30, 2, p.cap, 0.5);
  const TrajectoryBundle b = simulate_forward(p, set, mu, xi);
  const AdjointSolution a = solve_adjoint_regression(p, set, b);
  const DerivativeEstimate zero = variational_derivative(p, set, b, a, {mu, xi});
  CHECK(std::abs(zero.total) < 1e-12);

  const Direction dir{toy::random_relaxed(rng, 30, p.actions.count()), toy::random_singular(rng, 30, 2, p.cap, 0.8)};
  const DerivativeEstimate adj = variational_derivative(p, set, b, a, dir);
  const DerivativeEstimate fd = finite_difference_derivative(p, set, b, dir);
  CHECK(adj.total == doctest::Approx(adj.singular + adj.relaxed));
  CHECK(std::abs(adj.total - fd.total) <= 3.0 * std::hypot(adj.total_se, fd.total_se));
  CHECK(adj.per_scenario.size() == 3000);
}

TEST_CASE("maximum principle report separates optimal and perturbed controls") {
  const ControlProblem p = toy::fixed_point(40);
  const ScenarioSet set = sample_scenarios(p, 1000, 2);
  const RelaxedControl opt = RelaxedControl::constant_action(40, 16, toy::kFixedPointOptimum);
  const TrajectoryBundle good = simulate_forward(p, set, opt, p.zero_singular());
  const OptimalityReport r = check_max_principle(p, set, good, solve_adjoint_regression(p, set, good));
  CHECK(r.hamiltonian_ok);
  CHECK(r.slack_ok);
  CHECK(r.complementarity_ok);
  CHECK(r.passed());
  CHECK(r.maximizers.size() == 40);
  CHECK(r.maximizers.front() == toy::kFixedPointOptimum);

  const RelaxedControl off = RelaxedControl::constant_action(40, 16, toy::kFixedPointOptimum + 1);
  const TrajectoryBundle bad = simulate_forward(p, set, off, p.zero_singular());
  const OptimalityReport rb = check_max_principle(p, set, bad, solve_adjoint_regression(p, set, bad));
  CHECK_FALSE(rb.hamiltonian_ok);
  CHECK(rb.hamiltonian_gap == doctest::Approx(0.04).epsilon(1e-6));  // (0.3-0.6)^2+0.3 - ((0.1-0.6)^2+0.1), over T = 1
  CHECK_FALSE(rb.passed());

  const Eigen::MatrixXd H = mean_hamiltonians(p, set, good, solve_adjoint_regression(p, set, good));
  CHECK(H.rows() == 40);
  CHECK(H.cols() == 16);
}

TEST_CASE("singular mass where the slack is positive violates complementarity") {
  const ControlProblem p = toy::slack_window(50);
  const ScenarioSet set = sample_scenarios(p, 300, 4);
  Eigen::MatrixXd inside = Eigen::MatrixXd::Zero(50, 1), outside = inside;
  inside(22, 0) = 0.5;   // t = 0.44, slack -1
  outside(5, 0) = 0.5;   // t = 0.10, slack +1
  const TrajectoryBundle bi = simulate_forward(p, set, p.uniform_control(), SingularControl(inside, p.cap));
  const OptimalityReport ri = check_max_principle(p, set, bi, solve_adjoint_regression(p, set, bi));
  CHECK(ri.complementarity_ok);
  CHECK_FALSE(ri.slack_ok);  // the window keeps the slack negative
  const TrajectoryBundle bo = simulate_forward(p, set, p.uniform_control(), SingularControl(outside, p.cap));
  const OptimalityReport ro = check_max_principle(p, set, bo, solve_adjoint_regression(p, set, bo));
  CHECK_FALSE(ro.complementarity_ok);
  CHECK(ro.complementarity_violation == doctest::Approx(0.5));
}

TEST_CASE("sample mean and standard error") {
  double m = 0.0, se = 0.0;
  sample_mean_se(Eigen::Vector4d(1.0, 2.0, 3.0, 4.0), m, se);
  CHECK(m == 2.5);
  CHECK(se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK_THROWS_AS(sample_mean_se(Eigen::VectorXd(0), m, se), DimensionError);
}
