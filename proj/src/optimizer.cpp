#include "rsc/optimizer.hpp"

#include "rsc/errors.hpp"
#include "rsc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rsc {

namespace {

Eigen::MatrixXd gains(const Eigen::MatrixXd& table, Index steps) {
  Eigen::MatrixXd g(steps, table.cols());
  for (Index k = 0; k < steps; ++k) g.row(k) = table.row(table.rows() == 1 ? 0 : k);
  return g;
}

Eigen::MatrixXd singular_costs(const Objective& objective, Index steps) {
  Eigen::MatrixXd c(steps, objective.singular_dim());
  for (Index k = 0; k < steps; ++k) c.row(k) = objective.singular_cost(k);
  return c;
}

}  // namespace

CostEstimate evaluate_cost(const ControlProblem& problem, const TrajectoryBundle& bundle) {
  const Index S = bundle.scenarios();
  const Index N = bundle.steps();
  const double dt = problem.time.dt();
  const Objective& objective = *problem.objective;
  const double singular = stieltjes_integral(singular_costs(objective, N), bundle.xi);

  std::vector<Eigen::VectorXd> weights;
  weights.reserve(static_cast<std::size_t>(N));
  for (Index k = 0; k < N; ++k) weights.push_back(bundle.mu.row(k).transpose());

  CostEstimate c;
  c.per_scenario.resize(S);
  parallel_for(S, [&](Index s) {
    double running = 0.0;
    for (Index k = 0; k < N; ++k)
      running += objective.running(problem.time.time(k), bundle.x_post(s, k), bundle.y_post(s, k),
                                   weights[static_cast<std::size_t>(k)]);
    const double total = running * dt + singular + objective.terminal(bundle.x(s, N), bundle.y(s, N));
    c.per_scenario(s) = std::isfinite(total) ? total : std::numeric_limits<double>::quiet_NaN();
  });

  std::vector<double> kept;
  kept.reserve(static_cast<std::size_t>(S));
  for (Index s = 0; s < S; ++s)
    if (std::isfinite(c.per_scenario(s))) kept.push_back(c.per_scenario(s));
  c.excluded = S - static_cast<Index>(kept.size());
  if (kept.empty()) throw NumericalError("cost is non-finite in every scenario", N, 0);
  sample_mean_se(Eigen::Map<const Eigen::VectorXd>(kept.data(), static_cast<Index>(kept.size())), c.mean, c.se);
  return c;
}

FirstVariation solve_first_variation(const ControlProblem& problem, const ScenarioSet& set,
                                     const TrajectoryBundle& bundle, const Direction& direction) {
  const CoefficientField& field = *set.field;
  const BrownianIncrements& noise = *set.noise;
  const Index S = bundle.scenarios();
  const Index N = bundle.steps();
  const Index d = noise.dim();
  const double dt = problem.time.dt();
  if (direction.q.steps() != N || direction.q.count() != bundle.mu.count() || direction.eta.steps() != N ||
      direction.eta.dim() != bundle.xi.dim())
    throw DimensionError("direction does not match the current control");
  if (bundle.noise != set.noise) throw std::invalid_argument("trajectory bundle was simulated with different noise");

  const Eigen::MatrixXd dxi = direction.eta.increments() - bundle.xi.increments();
  const Eigen::MatrixXd gx = gains(problem.coefficients.gain_x, N);
  const Eigen::MatrixXd gy = gains(problem.coefficients.gain_y, N);
  const Eigen::VectorXd jump_x = (gx.cwiseProduct(dxi)).rowwise().sum();
  const Eigen::VectorXd jump_y = (gy.cwiseProduct(dxi)).rowwise().sum();

  std::vector<ReducedStep> at_mu, delta;
  for (Index k = 0; k < N; ++k) {
    at_mu.push_back(field.reduce(k, bundle.mu.row(k).transpose()));
    const Eigen::VectorXd dw = (direction.q.row(k) - bundle.mu.row(k)).transpose();
    delta.push_back(field.reduce(k, dw));
  }
  const double by = problem.second.drift_dy();
  const NoiseVector sy = problem.second.diffusion_dy();

  FirstVariation v{Eigen::MatrixXd(S, N + 1), Eigen::MatrixXd(S, N + 1), Eigen::MatrixXd(S, N + 1)};
  parallel_for(S, [&](Index s) {
    double ax = 0.0, ay = 0.0, b = 0.0;
    v.alpha_x(s, 0) = v.alpha_y(s, 0) = v.beta(s, 0) = 0.0;
    for (Index k = 0; k < N; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const StepCoefficients c = field.evaluate(at_mu[kk], s, k);
      const StepCoefficients dc = field.evaluate(delta[kk], s, k);
      const double x = bundle.x_post(s, k);
      ax += jump_x(k);
      ay += jump_y(k);
      double Ax = 1.0 + c.phi * dt, Ay = 1.0 + by * dt;
      double forcing = dc.drift(x) * dt;
      for (Index i = 0; i < d; ++i) {
        const double db = noise(s, k, i);
        Ax += c.psi(i) * db;
        Ay += sy(i) * db;
        forcing += (dc.chi(i) + dc.psi(i) * x) * db;
      }
      ax *= Ax;
      ay *= Ay;
      b = b * Ax + forcing;
      v.alpha_x(s, k + 1) = ax;
      v.alpha_y(s, k + 1) = ay;
      v.beta(s, k + 1) = b;
    }
  });
  return v;
}

DerivativeEstimate first_variation_derivative(const ControlProblem& problem, const TrajectoryBundle& bundle,
                                              const FirstVariation& v, const Direction& direction) {
  const Index S = bundle.scenarios();
  const Index N = bundle.steps();
  const double dt = problem.time.dt();
  const Objective& objective = *problem.objective;
  const Eigen::MatrixXd dxi = direction.eta.increments() - bundle.xi.increments();
  const Eigen::MatrixXd gx = gains(problem.coefficients.gain_x, N);
  const Eigen::MatrixXd gy = gains(problem.coefficients.gain_y, N);
  const Eigen::VectorXd jump_x = (gx.cwiseProduct(dxi)).rowwise().sum();
  const Eigen::VectorXd jump_y = (gy.cwiseProduct(dxi)).rowwise().sum();
  const double singular_cost = (singular_costs(objective, N).cwiseProduct(dxi)).sum();

  Eigen::VectorXd singular(S), relaxed(S);
  parallel_for(S, [&](Index s) {
    const double xN = bundle.x(s, N), yN = bundle.y(s, N);
    const double gxN = objective.terminal_dx(xN, yN), gyN = objective.terminal_dy(xN, yN);
    double sing = gxN * v.alpha_x(s, N) + gyN * v.alpha_y(s, N) + singular_cost;
    double rel = gxN * v.beta(s, N);
    for (Index k = 0; k < N; ++k) {
      const double t = problem.time.time(k);
      const double x = bundle.x_post(s, k), y = bundle.y_post(s, k);
      const Eigen::VectorXd w = bundle.mu.row(k).transpose();
      const double hx = objective.running_dx(t, x, y, w), hy = objective.running_dy(t, x, y, w);
      const double axp = v.alpha_x(s, k) + jump_x(k), ayp = v.alpha_y(s, k) + jump_y(k);
      sing += (hx * axp + hy * ayp) * dt;
      rel += hx * v.beta(s, k) * dt;
      const Eigen::VectorXd q = direction.q.row(k).transpose();
      if ((q - w).squaredNorm() > 0.0) rel += (objective.running(t, x, y, q) - objective.running(t, x, y, w)) * dt;
    }
    singular(s) = sing;
    relaxed(s) = rel;
  });

  DerivativeEstimate e;
  e.per_scenario = singular + relaxed;
  sample_mean_se(singular, e.singular, e.singular_se);
  sample_mean_se(relaxed, e.relaxed, e.relaxed_se);
  sample_mean_se(e.per_scenario, e.total, e.total_se);
  return e;
}

DerivativeEstimate finite_difference_derivative(const ControlProblem& problem, const ScenarioSet& set,
                                                const TrajectoryBundle& bundle, const Direction& direction,
                                                double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("finite-difference step must lie in (0, 1]");
  const CostEstimate base = evaluate_cost(problem, bundle);
  const TrajectoryBundle moved =
      simulate_forward(problem, set, convex_combine(bundle.mu, direction.q, theta),
                       combine_singular(bundle.xi, direction.eta, theta));
  const CostEstimate shifted = evaluate_cost(problem, moved);
  DerivativeEstimate e;
  e.per_scenario = (shifted.per_scenario - base.per_scenario) / theta;
  if (!e.per_scenario.allFinite()) throw NumericalError("finite difference of the cost is not finite", -1, -1);
  sample_mean_se(e.per_scenario, e.total, e.total_se);
  // The split into singular and relaxed parts is not identified by a joint difference.
  e.singular = e.relaxed = std::numeric_limits<double>::quiet_NaN();
  e.singular_se = e.relaxed_se = std::numeric_limits<double>::quiet_NaN();
  return e;
}

LinearMinimizer linear_minimizer(const ControlProblem& problem, const ScenarioSet& set,
                                 const TrajectoryBundle& bundle, const AdjointSolution& adjoint) {
  const Index S = bundle.scenarios();
  const Index N = bundle.steps();
  const Index m = bundle.xi.dim();
  const Index J = problem.actions.count();

  LinearMinimizer lm{Direction{RelaxedControl::uniform(N, J), SingularControl::zero(N, m, problem.cap)}, {},
                     Eigen::MatrixXd::Zero(N, m)};

  // Relaxed part: Dirac at the maximizer of the scenario-mean Hamiltonian.
  const Eigen::MatrixXd Hbar = mean_hamiltonians(problem, set, bundle, adjoint);
  lm.actions.resize(static_cast<std::size_t>(N));
  for (Index k = 0; k < N; ++k) lm.actions[static_cast<std::size_t>(k)] = argmax_lowest(Hbar.row(k));
  lm.direction.q = RelaxedControl::from_actions(lm.actions, J);

  // Singular part: the linearized cost sum_k slack_k . eta_k is minimized bang-bang by
  // loading the most negative mean-slack cells up to rate_cap * dt until the cap runs out.
  for (Index s = 0; s < S; ++s)
    for (Index k = 0; k < N; ++k) lm.mean_slack.row(k) += singular_slack(problem, adjoint, s, k);
  lm.mean_slack /= static_cast<double>(S);

  std::vector<Index> cells;
  for (Index c = 0; c < N * m; ++c)
    if (lm.mean_slack(c / m, c % m) < 0.0) cells.push_back(c);
  std::stable_sort(cells.begin(), cells.end(),
                   [&](Index a, Index b) { return lm.mean_slack(a / m, a % m) < lm.mean_slack(b / m, b % m); });
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(N, m);
  const double per_cell = problem.rate_cap * problem.time.dt();
  double remaining = problem.cap;
  for (Index c : cells) {
    if (remaining <= 0.0) break;
    const double amount = std::min(per_cell, remaining);
    eta(c / m, c % m) = amount;
    remaining -= amount;
  }
  lm.direction.eta = SingularControl(std::move(eta), problem.cap);
  return lm;
}

double relative_path_difference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("paths have different shapes");
  const double signal = std::sqrt(b.array().square().mean());
  double worst = 0.0;
  for (Index k = 0; k < a.cols(); ++k)
    worst = std::max(worst, std::sqrt((a.col(k) - b.col(k)).array().square().mean()));
  return signal > 0.0 ? worst / signal : worst;
}

IterationOutcome frank_wolfe_iterate(const IterationState& state, const ControlProblem& problem,
                                     const ScenarioSet& set, const OptimizerOptions& options) {
  IterationOutcome out{state, {}};
  IterationState& next = out.state;
  IterationRecord& rec = out.record;
  rec.iteration = state.iteration;

  const TrajectoryBundle bundle = simulate_forward(problem, set, state.mu, state.xi);
  const CostEstimate cost = evaluate_cost(problem, bundle);
  next.cost = rec.cost = cost.mean;
  next.cost_se = rec.cost_se = cost.se;

  const AdjointSolution adjoint = solve_adjoint_regression(problem, set, bundle, options.adjoint);
  if (options.phi_check_every > 0 && state.iteration % options.phi_check_every == 0) {
    const AdjointSolution phi = solve_adjoint_phi(problem, set, bundle, options.adjoint);
    rec.phi_drift = relative_path_difference(phi.px, adjoint.px);
  }

  const LinearMinimizer lm = linear_minimizer(problem, set, bundle, adjoint);
  const DerivativeEstimate slope = variational_derivative(problem, set, bundle, adjoint, lm.direction);
  next.gap = rec.gap = -slope.total;
  next.gap_se = rec.gap_se = slope.total_se;

  if (next.gap <= std::max(options.gap_tolerance, options.gap_se_multiplier * next.gap_se)) {
    next.converged = true;
    next.theta = rec.theta = 0.0;
    return out;
  }

  double theta = 2.0 / (static_cast<double>(state.iteration) + 2.0);
  for (Index attempt = 0; attempt <= options.max_backtracks; ++attempt, theta *= 0.5) {
    RelaxedControl mu = convex_combine(state.mu, lm.direction.q, theta);
    SingularControl xi = combine_singular(state.xi, lm.direction.eta, theta);
    const CostEstimate trial = evaluate_cost(problem, simulate_forward(problem, set, mu, xi));
    if (trial.mean <= cost.mean - options.armijo_c1 * theta * next.gap) {
      next.mu = std::move(mu);
      next.xi = std::move(xi);
      next.theta = rec.theta = theta;
      rec.accepted = true;
      next.iteration = state.iteration + 1;
      return out;
    }
  }
  next.stalled = true;
  next.theta = rec.theta = 0.0;
  return out;
}

OptimizationResult optimize(const ControlProblem& problem, const ScenarioSet& set, const RelaxedControl& mu,
                            const SingularControl& xi, const OptimizerOptions& options) {
  OptimizationResult result{IterationState{mu, xi}, {}};
  if (options.max_iterations <= 0) {
    const CostEstimate cost = evaluate_cost(problem, simulate_forward(problem, set, mu, xi));
    result.state.cost = cost.mean;
    result.state.cost_se = cost.se;
    return result;
  }
  // One extra pass measures the gap at the final iterate.
  for (Index n = 0; n <= options.max_iterations; ++n) {
    IterationOutcome step = frank_wolfe_iterate(result.state, problem, set, options);
    const bool last = n == options.max_iterations;
    if (last && step.record.accepted) {
      // Out of budget: keep the state that was measured, not the untested next iterate.
      IterationState measured = result.state;
      measured.cost = step.record.cost;
      measured.cost_se = step.record.cost_se;
      measured.gap = step.record.gap;
      measured.gap_se = step.record.gap_se;
      step.record.accepted = false;
      step.record.theta = 0.0;
      result.trace.push_back(step.record);
      result.state = std::move(measured);
      break;
    }
    result.trace.push_back(step.record);
    result.state = std::move(step.state);
    if (result.state.converged || result.state.stalled) break;
  }
  return result;
}

}  // namespace rsc
