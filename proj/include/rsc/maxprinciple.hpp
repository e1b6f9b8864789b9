#pragma once

// Hamiltonian H(t, x, y, mu, p, P) = -p (upsilon(mu) + phi(mu) x) - P . (chi(mu) + psi(mu) x) - h(t, x, y, mu),
// its maximization over measures on the action grid, the integral-form directional
// derivative of the cost, and the three optimality conditions of the relaxed maximum principle.

#include "rsc/adjoint.hpp"
#include "rsc/coefficients.hpp"
#include "rsc/dynamics.hpp"
#include "rsc/objective.hpp"
#include "rsc/problem.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rsc {

struct HamiltonianSlice {
  Eigen::RowVectorXd values;  // H at each grid point
  double value_mu = 0.0;      // H at the current measure
};

HamiltonianSlice hamiltonian_slice(double t, double x, double y, double p, const NoiseVector& P,
                                   const CoefficientTable& coefficients, const Objective& objective,
                                   const Eigen::Ref<const Eigen::VectorXd>& mu_row);

struct Maximizer {
  Index index = 0;
  double gap = 0.0;  // H(u*) - H(mu)
};

// Ties go to the lowest index.
Maximizer pointwise_maximizer(const HamiltonianSlice& slice);
Index argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& values);

// Per-scenario Hamiltonian at every grid point for step k (scenarios x count), evaluated
// at the post-jump state with the continuation adjoint E[p_{k+1} | F_k] and P_k.
void step_hamiltonians(const ControlProblem& problem, const ScenarioSet& set, const TrajectoryBundle& bundle,
                       const AdjointSolution& adjoint, Index k, Eigen::MatrixXd& out);

// Scenario mean of step_hamiltonians for every step (steps x count).
Eigen::MatrixXd mean_hamiltonians(const ControlProblem& problem, const ScenarioSet& set,
                                  const TrajectoryBundle& bundle, const AdjointSolution& adjoint);

// k_k + G^x_k p^x_k + G^y_k p^y_k for one scenario (length m).
Eigen::RowVectorXd singular_slack(const ControlProblem& problem, const AdjointSolution& adjoint, Index s, Index k);

struct Direction {
  RelaxedControl q;
  SingularControl eta;
};

struct DerivativeEstimate {
  double total = 0.0;
  double total_se = 0.0;
  double singular = 0.0;  // E sum_k slack_k . (d eta - d xi)_k
  double singular_se = 0.0;
  double relaxed = 0.0;   // E sum_k (H(mu_k) - H(q_k)) dt
  double relaxed_se = 0.0;
  Eigen::VectorXd per_scenario;
};

// Mean and standard error of a per-scenario sample.
void sample_mean_se(const Eigen::Ref<const Eigen::VectorXd>& v, double& mean, double& se);

// Directional derivative of the cost at the bundle's (mu, xi) towards (q, eta) in integral form.
DerivativeEstimate variational_derivative(const ControlProblem& problem, const ScenarioSet& set,
                                          const TrajectoryBundle& bundle, const AdjointSolution& adjoint,
                                          const Direction& direction);

struct Tolerances {
  double gap_se_multiplier = 3.0;
  // Floor for the gap tolerance, relative to scale(p), so exact zero-variance gaps are not
  // judged against a zero tolerance.
  double gap_floor = 1e-10;
  double slack_relative = 1e-6;
  double complementarity_relative = 1e-6;
};

struct OptimalityReport {
  double hamiltonian_gap = 0.0;      // E sum_k (max_j mean H_j - H(mu_k)) dt
  double hamiltonian_gap_se = 0.0;
  double pathwise_gap = 0.0;         // E sum_k (max_j H_j - H(mu_k)) dt, scenario by scenario
  double slack_min = 0.0;            // min over steps, components and scenarios
  double expected_slack_min = 0.0;   // min over steps and components of the scenario-mean slack
  double complementarity_violation = 0.0;
  double adjoint_scale = 1.0;
  double tol_gap = 0.0;
  double tol_slack = 0.0;
  double tol_comp = 0.0;
  bool hamiltonian_ok = false;
  bool slack_ok = false;
  bool complementarity_ok = false;
  std::vector<Index> maximizers;  // grid index maximizing the mean Hamiltonian per step

  bool passed() const { return hamiltonian_ok && slack_ok && complementarity_ok; }
};

OptimalityReport check_max_principle(const ControlProblem& problem, const ScenarioSet& set,
                                     const TrajectoryBundle& bundle, const AdjointSolution& adjoint,
                                     const Tolerances& tolerances = {});

}  // namespace rsc
