#include "rsc/dynamics.hpp"

#include "rsc/errors.hpp"
#include "rsc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsc {

namespace {

void check_shapes(const CoefficientField& field, const BrownianIncrements& noise, const SecondStateDynamics& second,
                  Index mu_steps, Index mu_count, const SingularControl& xi) {
  if (noise.steps() != field.steps() || noise.scenarios() != field.scenarios())
    throw DimensionError("noise does not match the coefficient field");
  if (noise.dim() != field.brownian_dim()) throw DimensionError("noise dimension does not match the coefficients");
  if (mu_steps != field.steps() || mu_count != field.actions())
    throw DimensionError("relaxed control does not match the time grid or action grid");
  if (xi.steps() != field.steps() || xi.dim() != field.singular_dim())
    throw DimensionError("singular control does not match the time grid or singular gains");
  second.validate(noise.dim());
}

TrajectoryBundle run(const CoefficientField& field, std::shared_ptr<const BrownianIncrements> noise,
                     const SecondStateDynamics& second, const std::vector<ReducedStep>& reduced,
                     RelaxedControl mu, const SingularControl& xi, double x0, double y0) {
  const Index S = noise->scenarios();
  const Index N = field.steps();
  const Index d = noise->dim();
  const double dt = field.time().dt();

  // Jump sizes per step are deterministic.
  Eigen::VectorXd jump_x(N), jump_y(N);
  for (Index k = 0; k < N; ++k) {
    jump_x(k) = field.gain_x(k).dot(xi.increment(k));
    jump_y(k) = field.gain_y(k).dot(xi.increment(k));
  }

  TrajectoryBundle b{field.time(), noise, std::move(mu), xi, Eigen::MatrixXd(S, N + 1), Eigen::MatrixXd(S, N + 1),
                     Eigen::MatrixXd(S, N), Eigen::MatrixXd(S, N)};
  const BrownianIncrements& dB = *noise;
  parallel_for(S, [&](Index s) {
    double x = x0, y = y0;
    b.x(s, 0) = x;
    b.y(s, 0) = y;
    for (Index k = 0; k < N; ++k) {
      x += jump_x(k);
      y += jump_y(k);
      b.x_post(s, k) = x;
      b.y_post(s, k) = y;
      const StepCoefficients c = field.evaluate(reduced[static_cast<std::size_t>(k)], s, k);
      const NoiseVector sy = second.diffusion(y);
      double nx = x + c.drift(x) * dt;
      double ny = y + second.drift(y) * dt;
      for (Index i = 0; i < d; ++i) {
        const double db = dB(s, k, i);
        nx += (c.chi(i) + c.psi(i) * x) * db;
        ny += sy(i) * db;
      }
      if (!std::isfinite(nx)) throw NumericalError("state x became non-finite", k + 1, s);
      if (!std::isfinite(ny)) throw NumericalError("state y became non-finite", k + 1, s);
      x = nx;
      y = ny;
      b.x(s, k + 1) = x;
      b.y(s, k + 1) = y;
    }
  });
  return b;
}

}  // namespace

TrajectoryBundle simulate_forward(const CoefficientField& field, std::shared_ptr<const BrownianIncrements> noise,
                                  const SecondStateDynamics& second, const RelaxedControl& mu,
                                  const SingularControl& xi, double x0, double y0) {
  check_shapes(field, *noise, second, mu.steps(), mu.count(), xi);
  std::vector<ReducedStep> reduced;
  reduced.reserve(static_cast<std::size_t>(field.steps()));
  for (Index k = 0; k < field.steps(); ++k) reduced.push_back(field.reduce(k, mu.row(k).transpose()));
  return run(field, std::move(noise), second, reduced, mu, xi, x0, y0);
}

TrajectoryBundle simulate_forward(const ControlProblem& problem, const ScenarioSet& set, const RelaxedControl& mu,
                                  const SingularControl& xi) {
  return simulate_forward(*set.field, set.noise, problem.second, mu, xi, problem.x0, problem.y0);
}

TrajectoryBundle simulate_strict(const CoefficientField& field, std::shared_ptr<const BrownianIncrements> noise,
                                 const SecondStateDynamics& second, const std::vector<Index>& actions,
                                 const SingularControl& xi, double x0, double y0) {
  check_shapes(field, *noise, second, static_cast<Index>(actions.size()), field.actions(), xi);
  std::vector<ReducedStep> reduced;
  reduced.reserve(actions.size());
  for (Index k = 0; k < field.steps(); ++k) reduced.push_back(field.reduce_at(k, actions[static_cast<std::size_t>(k)]));
  return run(field, std::move(noise), second, reduced, RelaxedControl::from_actions(actions, field.actions()), xi,
             x0, y0);
}

namespace {

double log_mean_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().mean());
}

void mean_and_se(const Eigen::VectorXd& v, double& mean, double& se) {
  mean = v.mean();
  const Index n = v.size();
  se = n > 1 ? std::sqrt((v.array() - mean).square().sum() / static_cast<double>(n - 1) / static_cast<double>(n))
             : 0.0;
}

}  // namespace

MomentReport moment_diagnostics(const TrajectoryBundle& bundle, const CoefficientField& field, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("moment order must be at least 1");
  const Index S = bundle.scenarios();
  const Index N = bundle.steps();
  if (S < 1) throw DimensionError("empty trajectory bundle");
  MomentReport r;
  r.order = p;
  r.clamp_events = field.clamp_events();

  Eigen::VectorXd sx(S), sy(S), tx(S), ty(S);
  for (Index s = 0; s < S; ++s) {
    double mx = 0.0, my = 0.0;
    for (Index k = 0; k <= N; ++k) {
      mx = std::max(mx, std::abs(bundle.x(s, k)));
      my = std::max(my, std::abs(bundle.y(s, k)));
    }
    for (Index k = 0; k < N; ++k) {
      mx = std::max(mx, std::abs(bundle.x_post(s, k)));
      my = std::max(my, std::abs(bundle.y_post(s, k)));
    }
    sx(s) = std::pow(mx, p);
    sy(s) = std::pow(my, p);
    tx(s) = std::pow(std::abs(bundle.x(s, N)), p);
    ty(s) = std::pow(std::abs(bundle.y(s, N)), p);
  }
  mean_and_se(sx, r.sup_x, r.sup_x_se);
  mean_and_se(sy, r.sup_y, r.sup_y_se);
  r.terminal_x = tx.mean();
  r.terminal_y = ty.mean();

  // Integrated phi per grid point and scenario.
  const double dt = field.time().dt();
  const Index S_field = field.scenarios();
  Eigen::MatrixXd integral = Eigen::MatrixXd::Zero(S_field, field.actions());
  for (Index k = 0; k < N; ++k) {
    const Eigen::RowVectorXd base = field.base(k).phi * dt;
    integral.rowwise() += base;
    for (Index f = 0; f < field.factor_count(); ++f)
      integral.noalias() += field.factor_path(f).col(k) * (field.loading(f, k).phi * dt);
  }
  r.log_exp_moment_phi = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < field.actions(); ++j)
    for (double sign : {1.0, -1.0})
      r.log_exp_moment_phi = std::max(r.log_exp_moment_phi, log_mean_exp(sign * p * integral.col(j)));

  r.finite = std::isfinite(r.sup_x) && std::isfinite(r.sup_y) && std::isfinite(r.log_exp_moment_phi);
  r.exploding = !r.finite || r.sup_x > kExplosionThreshold || r.sup_y > kExplosionThreshold ||
                r.log_exp_moment_phi > std::log(kExplosionThreshold);
  return r;
}

}  // namespace rsc
