#include "rsc/objective.hpp"

#include "rsc/errors.hpp"

#include <cmath>

namespace rsc {

double Objective::running(double t, double x, double y, const Eigen::Ref<const Eigen::VectorXd>& weights) const {
  Eigen::RowVectorXd row(actions());
  running_row(t, x, y, row);
  return integrate_against(row, weights);
}

double TerminalCost::value(double x, double y) const {
  if (kind == Kind::saturating) return -scale * std::tanh(rate * (x + y));
  return constant + x_linear * x + y_linear * y + 0.5 * xx * x * x + 0.5 * yy * y * y + xy * x * y;
}

double TerminalCost::dx(double x, double y) const {
  if (kind == Kind::saturating) {
    const double c = std::cosh(rate * (x + y));
    return -scale * rate / (c * c);
  }
  return x_linear + xx * x + xy * y;
}

double TerminalCost::dy(double x, double y) const {
  if (kind == Kind::saturating) return dx(x, y);
  return y_linear + yy * y + xy * x;
}

StandardObjective::StandardObjective(RunningCost running, TerminalCost terminal, Eigen::MatrixXd singular_cost)
    : running_(std::move(running)), terminal_(terminal), singular_cost_(std::move(singular_cost)) {
  if (running_.action_cost.size() < 1) throw DimensionError("running cost needs one value per grid point");
  if (singular_cost_.rows() < 1 || singular_cost_.cols() < 1) throw DimensionError("singular cost table is empty");
  if (!running_.action_cost.allFinite() || !singular_cost_.allFinite())
    throw ModelError("cost tables must be finite");
  for (double v : {running_.discount, running_.x_linear, running_.y_linear, running_.xx, running_.yy, running_.xy,
                   terminal_.constant, terminal_.x_linear, terminal_.y_linear, terminal_.xx, terminal_.yy,
                   terminal_.xy, terminal_.scale, terminal_.rate})
    if (!std::isfinite(v)) throw ModelError("cost coefficients must be finite");
}

double StandardObjective::state_part(double x, double y) const {
  const RunningCost& r = running_;
  return r.x_linear * x + r.y_linear * y + 0.5 * r.xx * x * x + 0.5 * r.yy * y * y + r.xy * x * y;
}

void StandardObjective::running_row(double t, double x, double y, Eigen::Ref<Eigen::RowVectorXd> out) const {
  const double disc = std::exp(-running_.discount * t);
  out = disc * (running_.action_cost.array() + state_part(x, y)).matrix();
}

double StandardObjective::running(double t, double x, double y,
                                  const Eigen::Ref<const Eigen::VectorXd>& weights) const {
  // Weights sum to one, so the action-free part comes out of the integral.
  const double disc = std::exp(-running_.discount * t);
  return disc * (integrate_against(running_.action_cost, weights) + state_part(x, y));
}

double StandardObjective::running_dx(double t, double x, double y, const Eigen::Ref<const Eigen::VectorXd>&) const {
  return std::exp(-running_.discount * t) * (running_.x_linear + running_.xx * x + running_.xy * y);
}

double StandardObjective::running_dy(double t, double x, double y, const Eigen::Ref<const Eigen::VectorXd>&) const {
  return std::exp(-running_.discount * t) * (running_.y_linear + running_.yy * y + running_.xy * x);
}

Eigen::RowVectorXd StandardObjective::singular_cost(Index step) const {
  return singular_cost_.row(singular_cost_.rows() == 1 ? 0 : step);
}

StandardObjective StandardObjective::scaled(double factor) const {
  RunningCost r = running_;
  r.action_cost *= factor;
  r.x_linear *= factor;
  r.y_linear *= factor;
  r.xx *= factor;
  r.yy *= factor;
  r.xy *= factor;
  TerminalCost g = terminal_;
  if (g.kind == TerminalCost::Kind::saturating) {
    g.scale *= factor;
  } else {
    g.constant *= factor;
    g.x_linear *= factor;
    g.y_linear *= factor;
    g.xx *= factor;
    g.yy *= factor;
    g.xy *= factor;
  }
  return StandardObjective(std::move(r), g, factor * singular_cost_);
}

}  // namespace rsc
