#pragma once

// Cross-sectional least squares used to estimate conditional expectations E[Y | F_k] from
// one step of simulated scenarios. Regressors are standardized, expanded into polynomials
// of total degree <= degree, and fitted by ridge-regularized normal equations.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace rsc {

class CrossSectionRegression {
 public:
  // regressors: scenarios x r raw state variables. Columns without spread are dropped.
  CrossSectionRegression(const Eigen::MatrixXd& regressors, int degree = 2, double ridge = 1e-8);

  // Fitted values of every target column (scenarios x q in, scenarios x q out).
  Eigen::MatrixXd fit(const Eigen::MatrixXd& targets) const;

  // Degree actually used after any fallback for an ill-conditioned design.
  int degree() const { return degree_; }
  Eigen::Index basis_size() const { return basis_.cols(); }
  const std::vector<std::string>& warnings() const { return warnings_; }

  // Number of monomials of total degree <= degree in r variables.
  static Eigen::Index monomial_count(Eigen::Index variables, int degree);

 private:
  void build(const Eigen::MatrixXd& z, int degree);

  int degree_ = 0;
  double ridge_;
  Eigen::MatrixXd basis_;
  Eigen::LDLT<Eigen::MatrixXd> gram_;
  std::vector<std::string> warnings_;
};

// Smallest / largest eigenvalue ratio below which a design is treated as singular.
inline constexpr double kMinDesignConditioning = 1e-12;

}  // namespace rsc
