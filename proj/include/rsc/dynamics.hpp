#pragma once

// Euler-Maruyama simulation of the controlled pair (x, y). At step k the singular jump is
// applied first (left-continuous path), then one diffusion step from the post-jump state:
//   x_k+     = x_k + G^x_k . dxi_k
//   x_{k+1}  = x_k+ + (upsilon_k(mu_k) + phi_k(mu_k) x_k+) dt + (chi_k(mu_k) + psi_k(mu_k) x_k+) . dB_k
// and likewise for y with the second-state dynamics and G^y.

#include "rsc/coefficients.hpp"
#include "rsc/measures.hpp"
#include "rsc/noise.hpp"
#include "rsc/problem.hpp"

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace rsc {

struct TrajectoryBundle {
  TimeGrid time;
  std::shared_ptr<const BrownianIncrements> noise;
  RelaxedControl mu;
  SingularControl xi;
  Eigen::MatrixXd x;       // scenarios x (steps + 1), values at t_k before the step-k jump
  Eigen::MatrixXd y;
  Eigen::MatrixXd x_post;  // scenarios x steps, values right after the step-k jump
  Eigen::MatrixXd y_post;

  Index scenarios() const { return x.rows(); }
  Index steps() const { return time.steps(); }
};

TrajectoryBundle simulate_forward(const CoefficientField& field, std::shared_ptr<const BrownianIncrements> noise,
                                  const SecondStateDynamics& second, const RelaxedControl& mu,
                                  const SingularControl& xi, double x0, double y0);

TrajectoryBundle simulate_forward(const ControlProblem& problem, const ScenarioSet& set, const RelaxedControl& mu,
                                  const SingularControl& xi);

// Strict control: actions[k] is the grid index used at step k. The returned bundle records
// the equivalent Dirac relaxed control.
TrajectoryBundle simulate_strict(const CoefficientField& field, std::shared_ptr<const BrownianIncrements> noise,
                                 const SecondStateDynamics& second, const std::vector<Index>& actions,
                                 const SingularControl& xi, double x0, double y0);

struct MomentReport {
  double order = 2.0;
  double sup_x = 0.0;  // E sup_k |x_k|^p
  double sup_x_se = 0.0;
  double sup_y = 0.0;
  double sup_y_se = 0.0;
  double terminal_x = 0.0;  // E |x_N|^p
  double terminal_y = 0.0;
  // max over grid points u and signs of log E exp(+-p sum_k phi_k(u) dt)
  double log_exp_moment_phi = 0.0;
  Index clamp_events = 0;
  bool finite = true;
  bool exploding = false;
};

inline constexpr double kExplosionThreshold = 1e12;

MomentReport moment_diagnostics(const TrajectoryBundle& bundle, const CoefficientField& field, double p);

}  // namespace rsc
