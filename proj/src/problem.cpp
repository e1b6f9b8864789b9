#include "rsc/problem.hpp"

#include "rsc/errors.hpp"

#include <cmath>

namespace rsc {

SecondStateDynamics SecondStateDynamics::geometric(double rate, Eigen::VectorXd vol) {
  SecondStateDynamics s;
  s.drift_slope = rate;
  s.vol_intercept = Eigen::VectorXd::Zero(vol.size());
  s.vol_slope = std::move(vol);
  return s;
}

SecondStateDynamics SecondStateDynamics::constant(Index dim) {
  SecondStateDynamics s;
  s.vol_intercept = Eigen::VectorXd::Zero(dim);
  s.vol_slope = Eigen::VectorXd::Zero(dim);
  return s;
}

NoiseVector SecondStateDynamics::diffusion(double y) const {
  NoiseVector v(dim());
  for (Index i = 0; i < dim(); ++i) v(i) = vol_intercept(i) + vol_slope(i) * y;
  return v;
}

void SecondStateDynamics::validate(Index d) const {
  if (vol_intercept.size() != d || vol_slope.size() != d)
    throw DimensionError("second-state volatility does not match the Brownian dimension");
  if (!std::isfinite(drift_intercept) || !std::isfinite(drift_slope) || !vol_intercept.allFinite() ||
      !vol_slope.allFinite())
    throw ModelError("second-state coefficients must be finite");
}

void ControlProblem::validate() const {
  coefficients.validate(time, actions.count());
  second.validate(brownian_dim());
  if (!objective) throw ModelError("problem has no objective");
  if (objective->actions() != actions.count()) throw DimensionError("running cost does not match the action grid");
  if (objective->singular_dim() != singular_dim())
    throw DimensionError("singular cost does not match the number of singular components");
  if (!std::isfinite(x0) || !std::isfinite(y0)) throw ModelError("initial state must be finite");
  if (!(cap >= 0.0) || !std::isfinite(cap)) throw ModelError("singular cap must be finite and nonnegative");
  if (!(rate_cap >= 0.0) || !std::isfinite(rate_cap)) throw ModelError("singular rate cap must be finite and nonnegative");
}

ScenarioSet sample_scenarios(const ControlProblem& problem, Index scenarios, std::uint64_t seed) {
  problem.validate();
  auto noise = std::make_shared<const BrownianIncrements>(
      BrownianIncrements::generate(problem.time, problem.brownian_dim(), scenarios, seed));
  auto field = std::make_shared<const CoefficientField>(
      sample_coefficients(problem.coefficients, problem.time, problem.actions, *noise));
  return {std::move(noise), std::move(field)};
}

}  // namespace rsc
