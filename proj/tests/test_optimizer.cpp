#include "rsc/optimizer.hpp"

#include "toy_problems.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rsc;

TEST_CASE("cost of a constant control on the fixed-point problem") {
  const ControlProblem p = toy::fixed_point(20);
  const ScenarioSet set = sample_scenarios(p, 100, 3);
  const Index j = 11;
  const double u = -1.5 + 0.2 * j;
  Eigen::MatrixXd inc = Eigen::MatrixXd::Zero(20, 1);
  inc(4, 0) = 0.3;
  const TrajectoryBundle b = simulate_forward(p, set, RelaxedControl::constant_action(20, 16, j), SingularControl(inc, p.cap));
  const CostEstimate c = evaluate_cost(p, b);
  CHECK(c.excluded == 0);
  for (Index s = 0; s < 100; s += 9) {
    // x_T + sum h dt + k dxi, with h = (u - 0.6)^2 and k = 0.5.
    CHECK(c.per_scenario(s) == doctest::Approx(b.x(s, 20) + (u - 0.6) * (u - 0.6) + 0.5 * 0.3).epsilon(1e-12));
    double noise = 0.0;
    for (Index k = 0; k < 20; ++k) noise += 0.3 * (*set.noise)(s, k, 0);
    CHECK(b.x(s, 20) == doctest::Approx(u + 0.3 + noise).epsilon(1e-12));
  }
}

TEST_CASE("first variation is linear in the direction and zero along the null direction") {
  const ControlProblem p = toy::gradient(20);
  const ScenarioSet set = sample_scenarios(p, 200, 5);
  std::mt19937_64 rng(3);
  const RelaxedControl mu = toy::random_relaxed(rng, 20, 4);
  const SingularControl xi = toy::random_singular(rng, 20, 2, p.cap, 0.5);
  const TrajectoryBundle b = simulate_forward(p, set, mu, xi);
  const FirstVariation none = solve_first_variation(p, set, b, {mu, xi});
  CHECK(none.alpha_x.cwiseAbs().maxCoeff() == 0.0);
  CHECK(none.beta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(first_variation_derivative(p, b, none, {mu, xi}).total == 0.0);

  const Direction d{toy::random_relaxed(rng, 20, 4), toy::random_singular(rng, 20, 2, p.cap, 0.9)};
  const FirstVariation v = solve_first_variation(p, set, b, d);
  CHECK(v.alpha_x.col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(v.beta.col(0).cwiseAbs().maxCoeff() == 0.0);
  // The half-way direction halves the response.
  const Direction half{convex_combine(mu, d.q, 0.5), combine_singular(xi, d.eta, 0.5)};
  const FirstVariation vh = solve_first_variation(p, set, b, half);
  CHECK((vh.alpha_x - 0.5 * v.alpha_x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((vh.beta - 0.5 * v.beta).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("first-variation derivative is the limit of finite differences pathwise") {
  const ControlProblem p = toy::gradient(25);
  const ScenarioSet set = sample_scenarios(p, 300, 8);
  std::mt19937_64 rng(12);
  const RelaxedControl mu = toy::random_relaxed(rng, 25, 4);
  const SingularControl xi = toy::random_singular(rng, 25, 2, p.cap, 0.4);
  const Direction d{toy::random_relaxed(rng, 25, 4), toy::random_singular(rng, 25, 2, p.cap, 0.6)};
  const TrajectoryBundle b = simulate_forward(p, set, mu, xi);
  const DerivativeEstimate fv = first_variation_derivative(p, b, solve_first_variation(p, set, b, d), d);
  const DerivativeEstimate fd3 = finite_difference_derivative(p, set, b, d, 1e-3);
  const DerivativeEstimate fd4 = finite_difference_derivative(p, set, b, d, 1e-4);
  const double e3 = (fd3.per_scenario - fv.per_scenario).cwiseAbs().maxCoeff();
  const double e4 = (fd4.per_scenario - fv.per_scenario).cwiseAbs().maxCoeff();
  CHECK(e4 < e3);
  CHECK(e4 / e3 == doctest::Approx(0.1).epsilon(0.2));  // O(theta) bias
  CHECK(std::isnan(fd3.singular));
  CHECK_THROWS_AS(finite_difference_derivative(p, set, b, d, 0.0), std::invalid_argument);
}

TEST_CASE("linear minimizer picks Hamiltonian maximizers and negative-slack cells") {
  const ControlProblem fp = toy::fixed_point(30);
  const ScenarioSet s1 = sample_scenarios(fp, 200, 1);
  const TrajectoryBundle b1 = simulate_forward(fp, s1, fp.uniform_control(), fp.zero_singular());
  const LinearMinimizer l1 = linear_minimizer(fp, s1, b1, solve_adjoint_regression(fp, s1, b1));
  for (Index a : l1.actions) CHECK(a == toy::kFixedPointOptimum);
  CHECK(l1.direction.eta.total_variation() == 0.0);

  const ControlProblem w = toy::slack_window(50);
  const ScenarioSet s2 = sample_scenarios(w, 200, 1);
  const TrajectoryBundle b2 = simulate_forward(w, s2, w.uniform_control(), w.zero_singular());
  const LinearMinimizer l2 = linear_minimizer(w, s2, b2, solve_adjoint_regression(w, s2, b2));
  const Eigen::MatrixXd& eta = l2.direction.eta.increments();
  CHECK(l2.direction.eta.total_variation() == doctest::Approx(w.cap));
  for (Index k = 0; k < 50; ++k) {
    CHECK(eta(k, 0) <= w.rate_cap * w.time.dt() + 1e-15);
    if (w.coefficients.gain_x(k, 0) > 0.0) CHECK(eta(k, 0) == 0.0);
  }
}

TEST_CASE("optimizer reaches the fixed point and records its trace") {
  const ControlProblem p = toy::fixed_point(30);
  const ScenarioSet set = sample_scenarios(p, 500, 2);
  OptimizerOptions opts;
  opts.phi_check_every = 1;
  const OptimizationResult r = optimize(p, set, p.uniform_control(), p.zero_singular(), opts);
  CHECK(r.state.converged);
  CHECK(r.trace.size() == 2);
  CHECK(r.trace.front().accepted);
  CHECK(r.trace.front().theta == 1.0);
  CHECK(r.trace.front().phi_drift.has_value());
  CHECK(r.trace.back().gap <= 1e-12);
  CHECK(r.trace.back().cost < r.trace.front().cost);
  CHECK((r.state.mu.weights() - RelaxedControl::constant_action(30, 16, toy::kFixedPointOptimum).weights())
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("zero iterations returns the initial state with its cost") {
  const ControlProblem p = toy::fixed_point(10);
  const ScenarioSet set = sample_scenarios(p, 50, 2);
  OptimizerOptions opts;
  opts.max_iterations = 0;
  const OptimizationResult r = optimize(p, set, p.uniform_control(), p.zero_singular(), opts);
  CHECK(r.trace.empty());
  CHECK_FALSE(r.state.converged);
  CHECK(r.state.mu.weights() == p.uniform_control().weights());
  CHECK(r.state.cost == evaluate_cost(p, simulate_forward(p, set, p.uniform_control(), p.zero_singular())).mean);
}

TEST_CASE("costs decrease monotonically along accepted iterations") {
  const ControlProblem p = toy::gradient(20);
  const ScenarioSet set = sample_scenarios(p, 500, 7);
  OptimizerOptions opts;
  opts.max_iterations = 15;
  const OptimizationResult r = optimize(p, set, p.uniform_control(), p.zero_singular(), opts);
  REQUIRE(r.trace.size() >= 2);
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    if (r.trace[i - 1].accepted) CHECK(r.trace[i].cost <= r.trace[i - 1].cost);
  CHECK(r.state.xi.total_variation() <= p.cap * (1 + 1e-12));
}

TEST_CASE("relative path difference") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(4, 3), b = a;
  CHECK(relative_path_difference(a, b) == 0.0);
  a(2, 1) = 3.0;  // RMS of column 1 difference: sqrt(4 / 4) = 1
  CHECK(relative_path_difference(a, b) == doctest::Approx(1.0));
  CHECK_THROWS_AS(relative_path_difference(a, Eigen::MatrixXd::Ones(4, 2)), DimensionError);
}
