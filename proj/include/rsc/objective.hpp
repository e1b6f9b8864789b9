#pragma once

// Cost functional J = E[ sum_k h(t_k, x_k+, y_k+, mu_k) dt + sum_k k_k . dxi_k + g(x_N, y_N) ].
// Running costs are given per grid point and integrated against the measure.

#include "rsc/measures.hpp"

#include <Eigen/Dense>

namespace rsc {

class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index actions() const = 0;
  virtual Index singular_dim() const = 0;

  // h(t, x, y, u_j) for every grid point j.
  virtual void running_row(double t, double x, double y, Eigen::Ref<Eigen::RowVectorXd> out) const = 0;
  // h(t, x, y, mu) for a weight vector.
  virtual double running(double t, double x, double y, const Eigen::Ref<const Eigen::VectorXd>& weights) const;
  virtual double running_dx(double t, double x, double y, const Eigen::Ref<const Eigen::VectorXd>& weights) const = 0;
  virtual double running_dy(double t, double x, double y, const Eigen::Ref<const Eigen::VectorXd>& weights) const = 0;

  virtual double terminal(double x, double y) const = 0;
  virtual double terminal_dx(double x, double y) const = 0;
  virtual double terminal_dy(double x, double y) const = 0;

  // k at step k (length m).
  virtual Eigen::RowVectorXd singular_cost(Index step) const = 0;
};

// h = e^{-discount t} (a_j + lx x + ly y + xx x^2/2 + yy y^2/2 + xy x y)
struct RunningCost {
  Eigen::RowVectorXd action_cost;
  double discount = 0.0;
  double x_linear = 0.0;
  double y_linear = 0.0;
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;
};

// quadratic:  g = c + lx x + ly y + xx x^2/2 + yy y^2/2 + xy x y
// saturating: g = -scale tanh(rate (x + y))
struct TerminalCost {
  enum class Kind { quadratic, saturating };
  Kind kind = Kind::quadratic;
  double constant = 0.0;
  double x_linear = 0.0;
  double y_linear = 0.0;
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;
  double scale = 1.0;
  double rate = 1.0;

  double value(double x, double y) const;
  double dx(double x, double y) const;
  double dy(double x, double y) const;
};

class StandardObjective : public Objective {
 public:
  // singular_cost is 1 x m (time-constant) or steps x m.
  StandardObjective(RunningCost running, TerminalCost terminal, Eigen::MatrixXd singular_cost);

  Index actions() const override { return running_.action_cost.size(); }
  Index singular_dim() const override { return singular_cost_.cols(); }

  void running_row(double t, double x, double y, Eigen::Ref<Eigen::RowVectorXd> out) const override;
  double running(double t, double x, double y, const Eigen::Ref<const Eigen::VectorXd>& weights) const override;
  double running_dx(double t, double x, double y, const Eigen::Ref<const Eigen::VectorXd>& weights) const override;
  double running_dy(double t, double x, double y, const Eigen::Ref<const Eigen::VectorXd>& weights) const override;

  double terminal(double x, double y) const override { return terminal_.value(x, y); }
  double terminal_dx(double x, double y) const override { return terminal_.dx(x, y); }
  double terminal_dy(double x, double y) const override { return terminal_.dy(x, y); }

  Eigen::RowVectorXd singular_cost(Index step) const override;

  const RunningCost& running_cost() const { return running_; }
  const TerminalCost& terminal_cost() const { return terminal_; }
  const Eigen::MatrixXd& singular_cost_table() const { return singular_cost_; }

  // Same objective with h, g and k multiplied by factor.
  StandardObjective scaled(double factor) const;

 private:
  double state_part(double x, double y) const;

  RunningCost running_;
  TerminalCost terminal_;
  Eigen::MatrixXd singular_cost_;
};

}  // namespace rsc
