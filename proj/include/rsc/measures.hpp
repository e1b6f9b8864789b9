#pragma once

// Probability measures on a finite action grid and nondecreasing singular paths.
//
// Every measure is atomic on the grid, so a relaxed control is a steps x count matrix whose
// rows are probability vectors, and a strict control is the special case of one-hot rows.
// Integration against a measure reduces to a weighted sum over grid points.

#include "rsc/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsc {

using Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Row sums of a relaxed control must match 1 to this tolerance.
inline constexpr double kRowSumTolerance = 1e-12;

template <typename Scalar>
class BasicActionGrid {
 public:
  // points: count x dim, strictly increasing in lexicographic order and inside [lower, upper].
  BasicActionGrid(MatrixX<Scalar> points, VectorX<Scalar> lower, VectorX<Scalar> upper)
      : points_(std::move(points)), lower_(std::move(lower)), upper_(std::move(upper)) {
    if (points_.rows() < 1 || points_.cols() < 1)
      throw ModelError("action grid needs at least one point of positive dimension");
    if (lower_.size() != points_.cols() || upper_.size() != points_.cols())
      throw DimensionError("action grid bounding box dimension does not match the points");
    for (Index j = 0; j < points_.rows(); ++j) {
      for (Index c = 0; c < points_.cols(); ++c) {
        const Scalar v = points_(j, c);
        if (!std::isfinite(static_cast<double>(v)) || v < lower_(c) || v > upper_(c))
          throw ModelError("action grid point " + std::to_string(j) + " lies outside the bounding box");
      }
      if (j > 0 && !lexicographically_less(points_.row(j - 1), points_.row(j)))
        throw ModelError("action grid points must be strictly increasing in lexicographic order");
    }
  }

  // One-dimensional grid; the bounding box is the hull of the points.
  static BasicActionGrid line(const VectorX<Scalar>& values) {
    MatrixX<Scalar> pts = values;
    VectorX<Scalar> lo(1), hi(1);
    lo(0) = values.size() ? values.minCoeff() : Scalar(0);
    hi(0) = values.size() ? values.maxCoeff() : Scalar(0);
    return BasicActionGrid(std::move(pts), std::move(lo), std::move(hi));
  }

  // count evenly spaced points on [lo, hi].
  static BasicActionGrid uniform(Scalar lo, Scalar hi, Index count) {
    if (count < 1) throw ModelError("action grid needs at least one point");
    VectorX<Scalar> v(count);
    for (Index j = 0; j < count; ++j)
      v(j) = count == 1 ? lo : lo + (hi - lo) * Scalar(j) / Scalar(count - 1);
    VectorX<Scalar> b_lo(1), b_hi(1);
    b_lo(0) = lo;
    b_hi(0) = hi;
    return BasicActionGrid(MatrixX<Scalar>(v), b_lo, b_hi);
  }

  // Cartesian product a x b, ordered with a as the outer (slowest) coordinate block.
  static BasicActionGrid product(const BasicActionGrid& a, const BasicActionGrid& b) {
    MatrixX<Scalar> pts(a.count() * b.count(), a.dim() + b.dim());
    for (Index i = 0; i < a.count(); ++i)
      for (Index j = 0; j < b.count(); ++j) {
        pts.row(i * b.count() + j) << a.points_.row(i), b.points_.row(j);
      }
    VectorX<Scalar> lo(a.dim() + b.dim()), hi(a.dim() + b.dim());
    lo << a.lower_, b.lower_;
    hi << a.upper_, b.upper_;
    return BasicActionGrid(std::move(pts), std::move(lo), std::move(hi));
  }

  Index count() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  const MatrixX<Scalar>& points() const { return points_; }
  const VectorX<Scalar>& lower() const { return lower_; }
  const VectorX<Scalar>& upper() const { return upper_; }
  auto point(Index j) const { return points_.row(j); }
  // Coordinate c of every point, i.e. the grid-sampled function u -> u_c.
  VectorX<Scalar> coordinate(Index c) const { return points_.col(c); }

 private:
  template <typename A, typename B>
  static bool lexicographically_less(const A& a, const B& b) {
    for (Index c = 0; c < a.size(); ++c) {
      if (a(c) < b(c)) return true;
      if (b(c) < a(c)) return false;
    }
    return false;
  }

  MatrixX<Scalar> points_;
  VectorX<Scalar> lower_;
  VectorX<Scalar> upper_;
};

template <typename Scalar>
class BasicRelaxedControl {
 public:
  // weights: steps x count; rows are probability vectors.
  explicit BasicRelaxedControl(MatrixX<Scalar> weights) : weights_(std::move(weights)) {
    if (weights_.rows() < 1 || weights_.cols() < 1)
      throw DimensionError("relaxed control needs at least one step and one grid point");
    for (Index k = 0; k < weights_.rows(); ++k) {
      Scalar sum(0);
      for (Index j = 0; j < weights_.cols(); ++j) {
        const Scalar w = weights_(k, j);
        if (!(w >= Scalar(0)) || !std::isfinite(static_cast<double>(w)))
          throw ModelError("relaxed control weight at step " + std::to_string(k) + " is negative or non-finite");
        sum += w;
      }
      if (std::abs(static_cast<double>(sum) - 1.0) > row_sum_tolerance(weights_.cols()))
        throw ModelError("relaxed control row " + std::to_string(k) + " does not sum to 1");
    }
  }

  // kRowSumTolerance for double; scaled up for scalars with coarser rounding.
  static double row_sum_tolerance(Index count) {
    return std::max(kRowSumTolerance,
                    16.0 * static_cast<double>(std::numeric_limits<Scalar>::epsilon()) * static_cast<double>(count));
  }

  static BasicRelaxedControl uniform(Index steps, Index count) {
    return BasicRelaxedControl(MatrixX<Scalar>::Constant(steps, count, Scalar(1) / Scalar(count)));
  }

  // Strict control embedded as Dirac rows; actions[k] is the grid index used at step k.
  static BasicRelaxedControl from_actions(const std::vector<Index>& actions, Index count) {
    MatrixX<Scalar> w = MatrixX<Scalar>::Zero(static_cast<Index>(actions.size()), count);
    for (std::size_t k = 0; k < actions.size(); ++k) {
      if (actions[k] < 0 || actions[k] >= count) throw std::out_of_range("action index out of range");
      w(static_cast<Index>(k), actions[k]) = Scalar(1);
    }
    return BasicRelaxedControl(std::move(w));
  }

  static BasicRelaxedControl constant_action(Index steps, Index count, Index action) {
    return from_actions(std::vector<Index>(static_cast<std::size_t>(steps), action), count);
  }

  Index steps() const { return weights_.rows(); }
  Index count() const { return weights_.cols(); }
  const MatrixX<Scalar>& weights() const { return weights_; }
  auto row(Index k) const { return weights_.row(k); }

 private:
  MatrixX<Scalar> weights_;
};

template <typename Scalar>
class BasicSingularControl {
 public:
  // increments: steps x dim, nonnegative. Row k is the jump applied at the start of step k,
  // so the implied path starts at 0 and is left-continuous on the time grid.
  BasicSingularControl(MatrixX<Scalar> increments, Scalar cap)
      : increments_(std::move(increments)), cap_(cap) {
    if (increments_.rows() < 1 || increments_.cols() < 1)
      throw DimensionError("singular control needs at least one step and one component");
    if (!(cap_ >= Scalar(0))) throw ModelError("singular control cap must be nonnegative");
    for (Index k = 0; k < increments_.rows(); ++k)
      for (Index i = 0; i < increments_.cols(); ++i) {
        const Scalar v = increments_(k, i);
        if (!(v >= Scalar(0)) || !std::isfinite(static_cast<double>(v)))
          throw ModelError("singular increment at step " + std::to_string(k) + " is negative or non-finite");
      }
    // Relative slack so convex combinations of two at-cap controls stay admissible.
    const double slack = std::max(1e-12, 16.0 * static_cast<double>(std::numeric_limits<Scalar>::epsilon()) *
                                             static_cast<double>(increments_.size()));
    if (static_cast<double>(total_variation()) > static_cast<double>(cap_) * (1.0 + slack) + 1e-300)
      throw ModelError("singular control total variation exceeds the cap");
  }

  static BasicSingularControl zero(Index steps, Index dim, Scalar cap) {
    return BasicSingularControl(MatrixX<Scalar>::Zero(steps, dim), cap);
  }

  Index steps() const { return increments_.rows(); }
  Index dim() const { return increments_.cols(); }
  Scalar cap() const { return cap_; }
  const MatrixX<Scalar>& increments() const { return increments_; }
  auto increment(Index k) const { return increments_.row(k); }

  // |xi_T|: sum of all increments (the path is componentwise nondecreasing).
  Scalar total_variation() const { return increments_.sum(); }

  // (steps + 1) x dim cumulative path; row k is the value at t_k, before the step-k jump.
  MatrixX<Scalar> path() const {
    MatrixX<Scalar> p = MatrixX<Scalar>::Zero(steps() + 1, dim());
    for (Index k = 0; k < steps(); ++k) p.row(k + 1) = p.row(k) + increments_.row(k);
    return p;
  }

 private:
  MatrixX<Scalar> increments_;
  Scalar cap_;
};

using ActionGrid = BasicActionGrid<double>;
using RelaxedControl = BasicRelaxedControl<double>;
using SingularControl = BasicSingularControl<double>;

// Sum_j f(u_j) w_j for a grid-sampled scalar function f.
template <typename DerivedF, typename DerivedW>
typename DerivedF::Scalar integrate_against(const Eigen::MatrixBase<DerivedF>& f,
                                            const Eigen::MatrixBase<DerivedW>& weights) {
  if (f.size() != weights.size())
    throw DimensionError("integrand has " + std::to_string(f.size()) + " grid values, measure has " +
                         std::to_string(weights.size()));
  typename DerivedF::Scalar acc(0);
  for (Index j = 0; j < f.size(); ++j) acc += f(j) * weights(j);
  return acc;
}

// Vector-valued integrand: f is dim x count (one column per grid point); returns a dim vector.
template <typename DerivedF, typename DerivedW>
VectorX<typename DerivedF::Scalar> integrate_columns_against(const Eigen::MatrixBase<DerivedF>& f,
                                                             const Eigen::MatrixBase<DerivedW>& weights) {
  if (f.cols() != weights.size())
    throw DimensionError("integrand has " + std::to_string(f.cols()) + " grid columns, measure has " +
                         std::to_string(weights.size()));
  VectorX<typename DerivedF::Scalar> out(f.rows());
  for (Index r = 0; r < f.rows(); ++r) out(r) = integrate_against(f.row(r), weights);
  return out;
}

// Dirac measure at grid point index, as a weight vector.
template <typename Scalar>
VectorX<Scalar> dirac(const BasicActionGrid<Scalar>& grid, Index index) {
  if (index < 0 || index >= grid.count())
    throw std::out_of_range("dirac index " + std::to_string(index) + " outside grid of " +
                            std::to_string(grid.count()));
  VectorX<Scalar> w = VectorX<Scalar>::Zero(grid.count());
  w(index) = Scalar(1);
  return w;
}

inline void check_theta(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0))
    throw std::invalid_argument("convex weight theta must lie in [0, 1]");
}

// mu + theta (q - mu), row by row.
template <typename Scalar>
BasicRelaxedControl<Scalar> convex_combine(const BasicRelaxedControl<Scalar>& mu,
                                           const BasicRelaxedControl<Scalar>& q, Scalar theta) {
  check_theta(static_cast<double>(theta));
  if (mu.steps() != q.steps() || mu.count() != q.count())
    throw DimensionError("relaxed controls have different shapes");
  return BasicRelaxedControl<Scalar>((Scalar(1) - theta) * mu.weights() + theta * q.weights());
}

// Row-level variant for a single measure.
template <typename DerivedA, typename DerivedB>
VectorX<typename DerivedA::Scalar> convex_combine_rows(const Eigen::MatrixBase<DerivedA>& mu,
                                                       const Eigen::MatrixBase<DerivedB>& q,
                                                       typename DerivedA::Scalar theta) {
  check_theta(static_cast<double>(theta));
  if (mu.size() != q.size()) throw DimensionError("measures have different grid sizes");
  VectorX<typename DerivedA::Scalar> out(mu.size());
  for (Index j = 0; j < mu.size(); ++j) out(j) = (1 - theta) * mu(j) + theta * q(j);
  return out;
}

// xi + theta (eta - xi) on the increments; the cap of xi is kept.
template <typename Scalar>
BasicSingularControl<Scalar> combine_singular(const BasicSingularControl<Scalar>& xi,
                                              const BasicSingularControl<Scalar>& eta, Scalar theta) {
  check_theta(static_cast<double>(theta));
  if (xi.steps() != eta.steps() || xi.dim() != eta.dim())
    throw DimensionError("singular controls have different shapes");
  MatrixX<Scalar> inc = (Scalar(1) - theta) * xi.increments() + theta * eta.increments();
  return BasicSingularControl<Scalar>(std::move(inc), std::max(xi.cap(), eta.cap()));
}

// Sum_k f(t_k) . dxi_k with f sampled per step (steps x dim); left-point convention.
template <typename Derived, typename Scalar>
Scalar stieltjes_integral(const Eigen::MatrixBase<Derived>& f, const BasicSingularControl<Scalar>& xi) {
  if (f.rows() != xi.steps() || f.cols() != xi.dim())
    throw DimensionError("Stieltjes integrand shape does not match the singular control");
  Scalar acc(0);
  for (Index k = 0; k < xi.steps(); ++k)
    for (Index i = 0; i < xi.dim(); ++i) acc += f(k, i) * xi.increments()(k, i);
  return acc;
}

}  // namespace rsc
