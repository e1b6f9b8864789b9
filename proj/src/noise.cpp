#include "rsc/noise.hpp"

#include "rsc/errors.hpp"
#include "rsc/parallel.hpp"

#include <cmath>
#include <random>

namespace rsc {

std::uint64_t scenario_seed(std::uint64_t master, Index scenario) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(scenario) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

BrownianIncrements::BrownianIncrements(std::vector<Eigen::MatrixXd> components, double dt)
    : components_(std::move(components)), dt_(dt) {
  if (components_.empty()) throw DimensionError("Brownian motion needs at least one component");
  if (static_cast<int>(components_.size()) > kMaxBrownianDim)
    throw DimensionError("Brownian dimension exceeds " + std::to_string(kMaxBrownianDim));
  for (const auto& c : components_)
    if (c.rows() != components_.front().rows() || c.cols() != components_.front().cols())
      throw DimensionError("Brownian components have different shapes");
  if (!(dt_ > 0.0)) throw ModelError("Brownian increments need a positive time step");
}

BrownianIncrements BrownianIncrements::generate(const TimeGrid& grid, Index dim, Index scenarios,
                                                std::uint64_t seed) {
  if (dim < 1 || dim > kMaxBrownianDim) throw DimensionError("unsupported Brownian dimension");
  if (scenarios < 1) throw ModelError("need at least one scenario");
  const Index steps = grid.steps();
  const double sd = std::sqrt(grid.dt());
  std::vector<Eigen::MatrixXd> comps(static_cast<std::size_t>(dim), Eigen::MatrixXd(scenarios, steps));
  parallel_for(scenarios, [&](Index s) {
    std::mt19937_64 rng(scenario_seed(seed, s));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index k = 0; k < steps; ++k)
      for (Index i = 0; i < dim; ++i) comps[static_cast<std::size_t>(i)](s, k) = sd * normal(rng);
  });
  return BrownianIncrements(std::move(comps), grid.dt());
}

NoiseVector BrownianIncrements::at(Index s, Index k) const {
  NoiseVector v(dim());
  for (Index i = 0; i < dim(); ++i) v(i) = components_[static_cast<std::size_t>(i)](s, k);
  return v;
}

BrownianIncrements BrownianIncrements::coarsened() const {
  if (steps() % 2 != 0) throw DimensionError("coarsening needs an even number of steps");
  std::vector<Eigen::MatrixXd> comps;
  for (const auto& c : components_) {
    Eigen::MatrixXd coarse(c.rows(), c.cols() / 2);
    for (Index k = 0; k < coarse.cols(); ++k) coarse.col(k) = c.col(2 * k) + c.col(2 * k + 1);
    comps.push_back(std::move(coarse));
  }
  return BrownianIncrements(std::move(comps), 2.0 * dt_);
}

}  // namespace rsc
