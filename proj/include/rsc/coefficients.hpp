#pragma once

// Random coefficients of the linear state equation
//   dx = (upsilon(u) + phi(u) x) dt + (chi(u) + psi(u) x) . dB + G^x . dxi
// sampled on the action grid. Each coefficient is an affine combination of a deterministic
// table and Gaussian factor paths driven by the same Brownian increments as the state:
//   c_t(u_j) = base_t(u_j) + sum_f F^f_t * loading^f_t(u_j).
// Deterministic models have no factors.

#include "rsc/measures.hpp"
#include "rsc/noise.hpp"
#include "rsc/time_grid.hpp"

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <vector>

namespace rsc {

// Grid-sampled coefficients at one time; column j belongs to action u_j.
struct CoefficientTable {
  Eigen::RowVectorXd upsilon;  // 1 x J
  Eigen::RowVectorXd phi;      // 1 x J
  Eigen::MatrixXd chi;         // d x J
  Eigen::MatrixXd psi;         // d x J

  static CoefficientTable zero(Index actions, Index dim);
  Index actions() const { return phi.size(); }
  Index dim() const { return chi.rows(); }
  // this += a * other
  void add_scaled(double a, const CoefficientTable& other);
};

// Coefficients at one step after reduction over the action (picked at a grid point or
// integrated against a measure).
struct StepCoefficients {
  double upsilon = 0.0;
  double phi = 0.0;
  NoiseVector chi;
  NoiseVector psi;

  double drift(double x) const { return upsilon + phi * x; }
};

// dF = (drift - mean_reversion F) dt + volatility . dB, F_0 = initial.
struct FactorDynamics {
  double initial = 0.0;
  double drift = 0.0;
  double mean_reversion = 0.0;
  Eigen::VectorXd volatility;
};

struct FactorSpec {
  std::string name;
  FactorDynamics dynamics;
  std::vector<CoefficientTable> loadings;  // one table (time-constant) or one per step
};

struct CoefficientModel {
  std::vector<CoefficientTable> base;  // one table (time-constant) or one per step
  std::vector<FactorSpec> factors;
  Eigen::MatrixXd gain_x;  // 1 x m (time-constant) or steps x m
  Eigen::MatrixXd gain_y;
  double psi_bound = std::numeric_limits<double>::infinity();
  // Two-sided tail probability at which factor samples are clamped to their Gaussian
  // quantiles; 0 disables clamping.
  double clamp_tail = 0.0;

  Index actions() const { return base.front().actions(); }
  Index brownian_dim() const { return base.front().dim(); }
  Index singular_dim() const { return gain_x.cols(); }
  bool deterministic() const { return factors.empty(); }

  // Shape and bound checks against a time grid and grid size.
  void validate(const TimeGrid& grid, Index actions) const;
};

// Coefficients at one step reduced over actions, before scenario factors are applied.
struct ReducedStep {
  StepCoefficients base;
  std::vector<StepCoefficients> loadings;
};

class CoefficientField {
 public:
  // factor_paths[f] is scenarios x steps, holding F^f at t_0 .. t_{N-1}.
  CoefficientField(CoefficientModel model, TimeGrid grid, Index scenarios,
                   std::vector<Eigen::MatrixXd> factor_paths, Index clamp_events);

  const CoefficientModel& model() const { return model_; }
  const TimeGrid& time() const { return grid_; }
  Index steps() const { return grid_.steps(); }
  Index scenarios() const { return scenarios_; }
  Index actions() const { return model_.actions(); }
  Index brownian_dim() const { return model_.brownian_dim(); }
  Index singular_dim() const { return model_.singular_dim(); }
  Index factor_count() const { return static_cast<Index>(factor_paths_.size()); }
  bool deterministic() const { return factor_paths_.empty(); }
  Index clamp_events() const { return clamp_events_; }

  const CoefficientTable& base(Index k) const;
  const CoefficientTable& loading(Index f, Index k) const;
  const Eigen::MatrixXd& factor_path(Index f) const { return factor_paths_[static_cast<std::size_t>(f)]; }
  double factor(Index f, Index s, Index k) const { return factor_paths_[static_cast<std::size_t>(f)](s, k); }

  auto gain_x(Index k) const { return model_.gain_x.row(model_.gain_x.rows() == 1 ? 0 : k); }
  auto gain_y(Index k) const { return model_.gain_y.row(model_.gain_y.rows() == 1 ? 0 : k); }
  // steps x m gain matrices with time-constant gains expanded.
  Eigen::MatrixXd gain_x_matrix() const;
  Eigen::MatrixXd gain_y_matrix() const;

  // Tables integrated against the measure `weights` at step k.
  ReducedStep reduce(Index k, const Eigen::Ref<const Eigen::VectorXd>& weights) const;
  // Tables read at a single grid point.
  ReducedStep reduce_at(Index k, Index action) const;
  // Applies scenario s's factor values at step k.
  StepCoefficients evaluate(const ReducedStep& reduced, Index s, Index k) const;
  // Full per-action table for scenario s at step k (factors applied); out is resized as needed.
  void slice(Index s, Index k, CoefficientTable& out) const;

 private:
  CoefficientModel model_;
  TimeGrid grid_;
  Index scenarios_;
  std::vector<Eigen::MatrixXd> factor_paths_;
  Index clamp_events_;
};

// Samples factor paths from the shared Brownian increments. Values at step k use increments
// before k only. Throws NumericalError on non-finite samples and ModelError if psi leaves
// its declared bound.
CoefficientField sample_coefficients(const CoefficientModel& model, const TimeGrid& grid,
                                     const ActionGrid& actions, const BrownianIncrements& noise);

// Mean and variance of the Euler-discretized Gaussian factor at each step (steps entries).
void factor_moments(const FactorDynamics& dynamics, const TimeGrid& grid, Eigen::VectorXd& mean,
                    Eigen::VectorXd& variance);

}  // namespace rsc
