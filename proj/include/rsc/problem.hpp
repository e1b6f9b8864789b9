#pragma once

#include "rsc/coefficients.hpp"
#include "rsc/measures.hpp"
#include "rsc/noise.hpp"
#include "rsc/objective.hpp"
#include "rsc/time_grid.hpp"

#include <cstdint>
#include <memory>

namespace rsc {

// Second state component, independent of the relaxed control:
//   dy = (drift_intercept + drift_slope y) dt + (vol_intercept + vol_slope y) . dB + G^y . dxi
struct SecondStateDynamics {
  double drift_intercept = 0.0;
  double drift_slope = 0.0;
  Eigen::VectorXd vol_intercept;
  Eigen::VectorXd vol_slope;

  // dy = rate y dt + y vol . dB
  static SecondStateDynamics geometric(double rate, Eigen::VectorXd vol);
  static SecondStateDynamics constant(Index dim);

  Index dim() const { return vol_intercept.size(); }
  double drift(double y) const { return drift_intercept + drift_slope * y; }
  double drift_dy() const { return drift_slope; }
  NoiseVector diffusion(double y) const;
  NoiseVector diffusion_dy() const { return vol_slope; }

  void validate(Index dim) const;
};

struct ControlProblem {
  TimeGrid time;
  ActionGrid actions;
  CoefficientModel coefficients;
  SecondStateDynamics second;
  std::shared_ptr<const Objective> objective;
  double x0 = 0.0;
  double y0 = 0.0;
  double cap = 10.0;       // total-variation cap M on the singular control
  double rate_cap = 10.0;  // per-step increments of search directions stay below rate_cap * dt

  Index brownian_dim() const { return coefficients.brownian_dim(); }
  Index singular_dim() const { return coefficients.singular_dim(); }
  void validate() const;

  RelaxedControl uniform_control() const { return RelaxedControl::uniform(time.steps(), actions.count()); }
  SingularControl zero_singular() const { return SingularControl::zero(time.steps(), singular_dim(), cap); }
};

// Noise and sampled coefficients shared by every evaluation of one optimization run.
struct ScenarioSet {
  std::shared_ptr<const BrownianIncrements> noise;
  std::shared_ptr<const CoefficientField> field;

  Index scenarios() const { return noise->scenarios(); }
};

ScenarioSet sample_scenarios(const ControlProblem& problem, Index scenarios, std::uint64_t seed);

}  // namespace rsc
