#pragma once

#include "rsc/errors.hpp"

#include <Eigen/Core>

#include <cmath>

namespace rsc {

class TimeGrid {
 public:
  TimeGrid(double horizon, Eigen::Index steps) : horizon_(horizon), steps_(steps) {
    if (steps_ < 1) throw ModelError("time grid needs at least one step");
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw ModelError("time horizon must be positive");
  }

  double horizon() const { return horizon_; }
  Eigen::Index steps() const { return steps_; }
  double dt() const { return horizon_ / static_cast<double>(steps_); }
  // t_k; exact at k = steps.
  double time(Eigen::Index k) const { return horizon_ * static_cast<double>(k) / static_cast<double>(steps_); }

  bool operator==(const TimeGrid& other) const { return horizon_ == other.horizon_ && steps_ == other.steps_; }

 private:
  double horizon_;
  Eigen::Index steps_;
};

}  // namespace rsc
