#include "rsc/regression.hpp"

#include "rsc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace rsc {

using Eigen::Index;

namespace {

std::string format_ratio(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

Index CrossSectionRegression::monomial_count(Index variables, int degree) {
  Index n = 1;
  if (degree >= 1) n += variables;
  if (degree >= 2) n += variables * (variables + 1) / 2;
  return n;
}

CrossSectionRegression::CrossSectionRegression(const Eigen::MatrixXd& regressors, int degree, double ridge)
    : ridge_(ridge) {
  if (degree < 0 || degree > 2) throw std::invalid_argument("regression degree must be 0, 1 or 2");
  if (regressors.rows() < 1) throw DimensionError("regression needs at least one scenario");
  if (!regressors.allFinite()) throw NumericalError("non-finite regressor", -1, -1);
  const Index S = regressors.rows();

  // Standardize; drop columns that do not vary across scenarios (e.g. the initial step).
  std::vector<Index> keep;
  Eigen::RowVectorXd mean = regressors.colwise().mean();
  Eigen::RowVectorXd sd(regressors.cols());
  for (Index c = 0; c < regressors.cols(); ++c) {
    sd(c) = std::sqrt((regressors.col(c).array() - mean(c)).square().sum() / static_cast<double>(S));
    if (sd(c) > 1e-12 * (1.0 + std::abs(mean(c)))) keep.push_back(c);
  }
  Eigen::MatrixXd z(S, static_cast<Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const Index c = keep[i];
    z.col(static_cast<Index>(i)) = (regressors.col(c).array() - mean(c)) / sd(c);
  }
  // Drop regressors that are linear combinations of the others (the state and a factor can be
  // driven by the same single increment early on).
  if (z.cols() > 1) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
    qr.setThreshold(1e-8);
    if (qr.rank() < z.cols()) {
      std::vector<Index> independent;
      for (Index i = 0; i < qr.rank(); ++i) independent.push_back(qr.colsPermutation().indices()(i));
      std::sort(independent.begin(), independent.end());
      Eigen::MatrixXd reduced(S, static_cast<Index>(independent.size()));
      for (std::size_t i = 0; i < independent.size(); ++i) reduced.col(static_cast<Index>(i)) = z.col(independent[i]);
      z = std::move(reduced);
    }
  }

  for (int deg = degree; deg >= 0; --deg) {
    build(z, deg);
    Eigen::MatrixXd gram = basis_.transpose() * basis_ / static_cast<double>(S);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double hi = eig.eigenvalues().maxCoeff();
    const double lo = eig.eigenvalues().minCoeff();
    const bool well_posed = basis_.cols() <= S && hi > 0.0 && lo / hi > kMinDesignConditioning;
    if (well_posed || deg == 0) {
      gram.diagonal().tail(gram.rows() - 1).array() += ridge_;
      gram_.compute(gram);
      degree_ = deg;
      if (gram_.info() != Eigen::Success) throw NumericalError("regression normal equations failed", -1, -1);
      return;
    }
    warnings_.push_back("ill-conditioned degree-" + std::to_string(deg) + " regression design (conditioning " +
                        format_ratio(lo / hi) + "); falling back to degree " + std::to_string(deg - 1));
  }
}

void CrossSectionRegression::build(const Eigen::MatrixXd& z, int degree) {
  const Index S = z.rows();
  const Index r = z.cols();
  basis_.resize(S, monomial_count(r, degree));
  basis_.col(0).setOnes();
  Index c = 1;
  if (degree >= 1)
    for (Index i = 0; i < r; ++i) basis_.col(c++) = z.col(i);
  if (degree >= 2)
    for (Index i = 0; i < r; ++i)
      for (Index j = i; j < r; ++j) basis_.col(c++) = z.col(i).cwiseProduct(z.col(j));
}

Eigen::MatrixXd CrossSectionRegression::fit(const Eigen::MatrixXd& targets) const {
  if (targets.rows() != basis_.rows()) throw DimensionError("regression targets do not match the scenario count");
  const Eigen::MatrixXd rhs = basis_.transpose() * targets / static_cast<double>(basis_.rows());
  const Eigen::MatrixXd coef = gram_.solve(rhs);
  return basis_ * coef;
}

}  // namespace rsc
