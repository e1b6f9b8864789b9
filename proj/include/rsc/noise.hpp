#pragma once

#include "rsc/time_grid.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace rsc {

using Eigen::Index;

// Largest Brownian dimension supported; vectors of this size live on the stack.
inline constexpr int kMaxBrownianDim = 8;
using NoiseVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxBrownianDim, 1>;

// Seed of scenario `scenario` derived from the master seed (splitmix64 finalizer).
std::uint64_t scenario_seed(std::uint64_t master, Index scenario);

// Brownian increments dB_k = B_{t_{k+1}} - B_{t_k} for every scenario, step and component.
// Shared read-only between the forward pass, adjoint regressions and gradient evaluation.
class BrownianIncrements {
 public:
  // components[i] is scenarios x steps.
  BrownianIncrements(std::vector<Eigen::MatrixXd> components, double dt);

  // Scenario s draws from its own generator seeded with scenario_seed(seed, s), so the
  // result does not depend on how scenarios are distributed over threads.
  static BrownianIncrements generate(const TimeGrid& grid, Index dim, Index scenarios, std::uint64_t seed);

  Index scenarios() const { return components_.front().rows(); }
  Index steps() const { return components_.front().cols(); }
  Index dim() const { return static_cast<Index>(components_.size()); }
  double dt() const { return dt_; }

  const Eigen::MatrixXd& component(Index i) const { return components_[static_cast<std::size_t>(i)]; }
  double operator()(Index s, Index k, Index i) const { return components_[static_cast<std::size_t>(i)](s, k); }
  NoiseVector at(Index s, Index k) const;

  // Same Brownian paths on a grid with half as many steps (pairs of increments summed).
  BrownianIncrements coarsened() const;

 private:
  std::vector<Eigen::MatrixXd> components_;
  double dt_;
};

}  // namespace rsc
