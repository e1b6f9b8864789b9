#pragma once

// Small problems with known structure shared by the unit tests and the acceptance suite.

#include "rsc/problem.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

namespace rsc::toy {

inline std::shared_ptr<const Objective> objective(RunningCost running, TerminalCost terminal,
                                                  Eigen::MatrixXd singular_cost) {
  return std::make_shared<StandardObjective>(std::move(running), terminal, std::move(singular_cost));
}

inline RunningCost zero_running(Index actions) {
  RunningCost r;
  r.action_cost = Eigen::RowVectorXd::Zero(actions);
  return r;
}

// dx = a x dt from x0 = 1, no noise, no singular control.
inline ControlProblem deterministic_growth(double a, double horizon, Index steps) {
  const ActionGrid grid = ActionGrid::line(Eigen::VectorXd::Zero(1));
  CoefficientModel m;
  CoefficientTable t = CoefficientTable::zero(1, 1);
  t.phi.setConstant(a);
  m.base.push_back(t);
  m.gain_x = Eigen::RowVectorXd::Ones(1);
  m.gain_y = Eigen::RowVectorXd::Zero(1);
  TerminalCost g;
  g.x_linear = 1.0;
  ControlProblem p{TimeGrid(horizon, steps), grid, m, SecondStateDynamics::constant(1),
                   objective(zero_running(1), g, Eigen::MatrixXd::Zero(1, 1)), 1.0, 0.0};
  p.validate();
  return p;
}

// y is a geometric Brownian motion dy = b y dt + s y dB; x is inert.
inline ControlProblem geometric_second_state(double b, double s, double y0, double horizon, Index steps) {
  ControlProblem p = deterministic_growth(0.0, horizon, steps);
  p.second = SecondStateDynamics::geometric(b, Eigen::VectorXd::Constant(1, s));
  p.y0 = y0;
  p.validate();
  return p;
}

// Smooth problem with control-dependent drift and volatility, a GBM second state and
// quadratic costs coupling x and y. Used to cross-validate the two adjoint estimators.
inline ControlProblem smooth(Index steps = 100, double horizon = 1.0) {
  Eigen::VectorXd u(5);
  u << 0.0, 0.25, 0.5, 0.75, 1.0;
  const ActionGrid grid = ActionGrid::line(u);
  CoefficientModel m;
  CoefficientTable t = CoefficientTable::zero(5, 2);
  t.upsilon = 0.1 * u.transpose();
  t.phi = (0.05 + 0.1 * u.array()).matrix().transpose();
  t.chi.setConstant(0.05);
  t.psi.row(0) = (0.1 + 0.1 * u.array()).matrix().transpose();
  m.base.push_back(t);
  m.gain_x = Eigen::RowVectorXd::Ones(1);
  m.gain_y = Eigen::RowVectorXd::Zero(1);
  RunningCost h = zero_running(5);
  h.action_cost = 0.1 * u.transpose().array().square().matrix();
  h.xx = 0.2;
  TerminalCost g;
  g.xx = 1.0;
  g.xy = 0.3;
  g.yy = 0.4;
  g.x_linear = -0.5;
  ControlProblem p{TimeGrid(horizon, steps), grid, m,
                   SecondStateDynamics::geometric(0.05, Eigen::Vector2d(0.0, 0.2)),
                   objective(h, g, Eigen::MatrixXd::Constant(1, 1, 0.5)), 1.0, 1.0};
  p.validate();
  return p;
}

// 16-point grid u_j = -1.5 + 0.2 j with drift u, cost x_T + sum (u - 0.6)^2 dt and
// control-free noise. The pointwise minimizer of u + (u - 0.6)^2 is u = 0.1 (index 8); the
// singular control only adds cost.
inline constexpr Index kFixedPointOptimum = 8;

inline ControlProblem fixed_point(Index steps = 50) {
  Eigen::VectorXd u(16);
  for (Index j = 0; j < 16; ++j) u(j) = -1.5 + 0.2 * static_cast<double>(j);
  const ActionGrid grid = ActionGrid::line(u);
  CoefficientModel m;
  CoefficientTable t = CoefficientTable::zero(16, 1);
  t.upsilon = u.transpose();
  t.chi.setConstant(0.3);
  m.base.push_back(t);
  m.gain_x = Eigen::RowVectorXd::Ones(1);
  m.gain_y = Eigen::RowVectorXd::Zero(1);
  RunningCost h = zero_running(16);
  h.action_cost = (u.array() - 0.6).square().matrix().transpose();
  TerminalCost g;
  g.x_linear = 1.0;
  ControlProblem p{TimeGrid(1.0, steps), grid, m, SecondStateDynamics::geometric(0.02, Eigen::VectorXd::Constant(1, 0.1)),
                   objective(h, g, Eigen::MatrixXd::Constant(1, 1, 0.5)), 0.0, 1.0, 1.0, 5.0};
  p.validate();
  return p;
}

// Control enters drift level, drift slope and volatility; two singular directions act on
// both states with positive cost.
inline ControlProblem gradient(Index steps = 50) {
  Eigen::VectorXd u(4);
  u << -1.0, -0.3, 0.4, 1.0;
  const ActionGrid grid = ActionGrid::line(u);
  CoefficientModel m;
  CoefficientTable t = CoefficientTable::zero(4, 2);
  t.upsilon = (0.2 * u.array()).matrix().transpose();
  t.phi = (0.1 - 0.2 * u.array()).matrix().transpose();
  t.chi.row(0).setConstant(0.1);
  t.chi.row(1).setConstant(0.05);
  t.psi.row(0) = (0.15 + 0.1 * u.array()).matrix().transpose();
  t.psi.row(1).setConstant(0.05);
  m.base.push_back(t);
  m.gain_x = Eigen::RowVector2d(0.9, -1.0);
  m.gain_y = Eigen::RowVector2d(-1.0, 0.95);
  RunningCost h = zero_running(4);
  h.action_cost = 0.3 * u.transpose().array().square().matrix();
  h.xx = 0.1;
  h.y_linear = -0.05;
  TerminalCost g;
  g.xx = 1.0;
  g.xy = 0.2;
  g.yy = 0.5;
  g.x_linear = -1.0;
  g.y_linear = -0.8;
  ControlProblem p{TimeGrid(1.0, steps), grid, m,
                   SecondStateDynamics::geometric(0.04, Eigen::Vector2d(0.05, 0.25)),
                   objective(h, g, Eigen::MatrixXd(Eigen::RowVector2d(0.05, 0.08))), 1.0, 1.0, 2.0, 4.0};
  p.validate();
  return p;
}

// k = 0, g = x, constant coefficients, G^x = -1 on [window_begin, window_end) and +1
// elsewhere: the singular slack is negative exactly inside the window.
inline ControlProblem slack_window(Index steps = 50, double window_begin = 0.4, double window_end = 0.6) {
  const ActionGrid grid = ActionGrid::line(Eigen::Vector2d(0.0, 1.0));
  CoefficientModel m;
  CoefficientTable t = CoefficientTable::zero(2, 1);
  t.upsilon << 0.0, 0.1;
  t.chi.setConstant(0.2);
  m.base.push_back(t);
  const TimeGrid time(1.0, steps);
  m.gain_x = Eigen::MatrixXd::Ones(steps, 1);
  for (Index k = 0; k < steps; ++k) {
    const double tk = time.time(k);
    if (tk >= window_begin - 1e-12 && tk < window_end - 1e-12) m.gain_x(k, 0) = -1.0;
  }
  m.gain_y = Eigen::MatrixXd::Zero(1, 1);
  TerminalCost g;
  g.x_linear = 1.0;
  ControlProblem p{time, grid, m, SecondStateDynamics::constant(1),
                   objective(zero_running(2), g, Eigen::MatrixXd::Zero(1, 1)), 0.0, 0.0, 1.0, 20.0};
  p.validate();
  return p;
}

// Random problem on a small grid with optional factors, per-step tables and several
// Brownian and singular dimensions.
inline ControlProblem random_problem(std::mt19937_64& rng, Index steps) {
  std::uniform_int_distribution<int> count(2, 6), dim(1, 3), sdim(1, 2), coin(0, 1);
  std::normal_distribution<double> n(0.0, 1.0);
  auto random_matrix = [&](Index rows, Index cols, double scale) {
    Eigen::MatrixXd out(rows, cols);
    for (Index i = 0; i < out.size(); ++i) out(i) = scale * n(rng);
    return out;
  };
  const Index J = count(rng), d = dim(rng), m = sdim(rng);
  Eigen::VectorXd u(J);
  for (Index j = 0; j < J; ++j) u(j) = (j == 0 ? 0.0 : u(j - 1)) + 0.2 + 0.5 * std::abs(n(rng));
  const ActionGrid grid = ActionGrid::line(u);
  auto table = [&](double scale) {
    CoefficientTable t = CoefficientTable::zero(J, d);
    for (Index j = 0; j < J; ++j) {
      t.upsilon(j) = scale * n(rng);
      t.phi(j) = 0.3 * scale * n(rng);
      for (Index i = 0; i < d; ++i) {
        t.chi(i, j) = 0.2 * scale * n(rng);
        t.psi(i, j) = 0.2 * scale * n(rng);
      }
    }
    return t;
  };
  CoefficientModel model;
  const bool per_step = coin(rng) == 1;
  for (Index k = 0; k < (per_step ? steps : 1); ++k) model.base.push_back(table(1.0));
  if (coin(rng) == 1) {
    FactorSpec f;
    f.name = "f";
    f.dynamics.initial = n(rng);
    f.dynamics.drift = 0.1 * n(rng);
    f.dynamics.mean_reversion = 0.5;
    f.dynamics.volatility = random_matrix(d, 1, 0.3).col(0);
    f.loadings.push_back(table(0.2));
    model.factors.push_back(f);
  }
  model.gain_x = random_matrix(1, m, 0.5);
  model.gain_y = random_matrix(1, m, 0.5);
  SecondStateDynamics second = SecondStateDynamics::geometric(0.1 * n(rng), Eigen::VectorXd(random_matrix(d, 1, 0.2)));
  second.drift_intercept = 0.1 * n(rng);
  RunningCost h = zero_running(J);
  h.action_cost = Eigen::RowVectorXd(random_matrix(1, J, 1.0));
  h.xx = 0.1;
  TerminalCost g;
  g.xx = 1.0;
  ControlProblem p{TimeGrid(1.0, steps), grid, model, second,
                   objective(h, g, Eigen::MatrixXd::Constant(1, m, 0.1)), n(rng), n(rng), 3.0, 5.0};
  p.validate();
  return p;
}

// Random measure rows drawn from a flat Dirichlet distribution.
inline RelaxedControl random_relaxed(std::mt19937_64& rng, Index steps, Index count) {
  std::exponential_distribution<double> e(1.0);
  Eigen::MatrixXd w(steps, count);
  for (Index k = 0; k < steps; ++k) {
    for (Index j = 0; j < count; ++j) w(k, j) = e(rng);
    w.row(k) /= w.row(k).sum();
    w(k, count - 1) = 1.0 - w.row(k).head(count - 1).sum();
    if (w(k, count - 1) < 0.0) w(k, count - 1) = 0.0;
  }
  return RelaxedControl(w);
}

// Random increments with total variation `fraction` of the cap, spread over random cells.
inline SingularControl random_singular(std::mt19937_64& rng, Index steps, Index dim, double cap, double fraction) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::MatrixXd inc(steps, dim);
  for (Index k = 0; k < steps; ++k)
    for (Index i = 0; i < dim; ++i) inc(k, i) = uni(rng) < 0.2 ? uni(rng) : 0.0;
  const double tv = inc.sum();
  if (tv > 0.0) inc *= fraction * cap / tv;
  return SingularControl(inc, cap);
}

}  // namespace rsc::toy
