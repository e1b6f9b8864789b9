#pragma once

// Cost evaluation, first-variation sensitivities, finite-difference derivatives and the
// conditional-gradient (Frank-Wolfe) iteration over (mu, xi) built on the convex perturbation
//   mu^theta = mu + theta (q - mu),  xi^theta = xi + theta (eta - xi).

#include "rsc/adjoint.hpp"
#include "rsc/dynamics.hpp"
#include "rsc/maxprinciple.hpp"
#include "rsc/problem.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace rsc {

struct CostEstimate {
  double mean = 0.0;
  double se = 0.0;
  Index excluded = 0;  // scenarios dropped because a summand was not finite
  Eigen::VectorXd per_scenario;  // NaN for excluded scenarios
};

// E[ sum_k h(t_k, x_k+, y_k+, mu_k) dt + sum_k k_k . dxi_k + g(x_N, y_N) ].
CostEstimate evaluate_cost(const ControlProblem& problem, const TrajectoryBundle& bundle);

// Linearized state response to the direction (q - mu, eta - xi); all paths scenarios x (steps + 1)
// and zero at t_0. alpha_* respond to the singular direction, beta to the measure direction.
struct FirstVariation {
  Eigen::MatrixXd alpha_x;
  Eigen::MatrixXd alpha_y;
  Eigen::MatrixXd beta;
};

FirstVariation solve_first_variation(const ControlProblem& problem, const ScenarioSet& set,
                                     const TrajectoryBundle& bundle, const Direction& direction);

// d/dtheta J(mu^theta, xi^theta) at theta = 0 assembled from the first variation.
DerivativeEstimate first_variation_derivative(const ControlProblem& problem, const TrajectoryBundle& bundle,
                                              const FirstVariation& variation, const Direction& direction);

// (J(mu^theta, xi^theta) - J(mu, xi)) / theta on common noise.
DerivativeEstimate finite_difference_derivative(const ControlProblem& problem, const ScenarioSet& set,
                                                const TrajectoryBundle& bundle, const Direction& direction,
                                                double theta = 1e-3);

struct OptimizerOptions {
  Index max_iterations = 50;
  double gap_tolerance = 1e-8;     // absolute floor of the convergence test on the gap
  double gap_se_multiplier = 3.0;
  double armijo_c1 = 1e-4;
  Index max_backtracks = 20;
  Index phi_check_every = 5;       // phi-construction drift check period; 0 disables
  AdjointOptions adjoint;
};

// Minimizer of the linearized cost over Dirac rows and the capped singular direction set.
struct LinearMinimizer {
  Direction direction;
  std::vector<Index> actions;      // maximizing grid index per step
  Eigen::MatrixXd mean_slack;      // steps x m
};

LinearMinimizer linear_minimizer(const ControlProblem& problem, const ScenarioSet& set,
                                 const TrajectoryBundle& bundle, const AdjointSolution& adjoint);

struct IterationState {
  RelaxedControl mu;
  SingularControl xi;
  Index iteration = 0;
  double cost = 0.0;
  double cost_se = 0.0;
  double gap = 0.0;
  double gap_se = 0.0;
  double theta = 0.0;
  bool converged = false;
  bool stalled = false;  // no step length passed the descent test
};

struct IterationRecord {
  Index iteration = 0;
  double cost = 0.0;
  double cost_se = 0.0;
  double gap = 0.0;
  double gap_se = 0.0;
  double theta = 0.0;
  bool accepted = false;
  std::optional<double> phi_drift;  // max_k RMS(p_phi - p_reg)_k / RMS(p_reg)
};

struct IterationOutcome {
  IterationState state;
  IterationRecord record;
};

// One conditional-gradient step from state.
IterationOutcome frank_wolfe_iterate(const IterationState& state, const ControlProblem& problem,
                                     const ScenarioSet& set, const OptimizerOptions& options);

struct OptimizationResult {
  IterationState state;
  std::vector<IterationRecord> trace;
};

// Iterates until convergence, a stalled line search, or max_iterations steps.
OptimizationResult optimize(const ControlProblem& problem, const ScenarioSet& set, const RelaxedControl& mu,
                            const SingularControl& xi, const OptimizerOptions& options = {});

// max over steps of the scenario RMS of (a - b), divided by the overall RMS of b.
double relative_path_difference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace rsc
