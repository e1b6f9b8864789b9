#include "rsc/maxprinciple.hpp"

#include "rsc/errors.hpp"
#include "rsc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsc {

HamiltonianSlice hamiltonian_slice(double t, double x, double y, double p, const NoiseVector& P,
                                   const CoefficientTable& c, const Objective& objective,
                                   const Eigen::Ref<const Eigen::VectorXd>& mu_row) {
  if (!std::isfinite(t) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(p) || !P.allFinite())
    throw std::invalid_argument("Hamiltonian inputs must be finite");
  if (P.size() != c.dim()) throw DimensionError("P does not match the Brownian dimension");
  if (mu_row.size() != c.actions() || objective.actions() != c.actions())
    throw DimensionError("measure, coefficients and running cost disagree on the grid size");
  HamiltonianSlice slice;
  slice.values.resize(c.actions());
  objective.running_row(t, x, y, slice.values);
  for (Index j = 0; j < c.actions(); ++j) {
    double h = -p * (c.upsilon(j) + c.phi(j) * x) - slice.values(j);
    for (Index i = 0; i < c.dim(); ++i) h -= P(i) * (c.chi(i, j) + c.psi(i, j) * x);
    slice.values(j) = h;
  }
  slice.value_mu = integrate_against(slice.values, mu_row);
  return slice;
}

Index argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& values) {
  Index best = 0;
  for (Index j = 1; j < values.size(); ++j)
    if (values(j) > values(best)) best = j;
  return best;
}

Maximizer pointwise_maximizer(const HamiltonianSlice& slice) {
  Maximizer m;
  m.index = argmax_lowest(slice.values);
  m.gap = std::max(0.0, slice.values(m.index) - slice.value_mu);
  return m;
}

void step_hamiltonians(const ControlProblem& problem, const ScenarioSet& set, const TrajectoryBundle& bundle,
                       const AdjointSolution& adjoint, Index k, Eigen::MatrixXd& out) {
  const CoefficientField& field = *set.field;
  const Index S = bundle.scenarios();
  const Index J = field.actions();
  const Index d = field.brownian_dim();
  if (adjoint.scenarios() != S || adjoint.steps() != bundle.steps())
    throw DimensionError("adjoint solution does not match the trajectory bundle");
  const Eigen::VectorXd p = adjoint.px_next.col(k);
  const Eigen::VectorXd x = bundle.x_post.col(k);
  const Eigen::VectorXd px = p.cwiseProduct(x);

  // Coefficients are affine in the factors, so H is a sum of outer products
  // (scenario weights) x (grid-point tables).
  out.resize(S, J);
  out.setZero();
  auto accumulate = [&](const CoefficientTable& t, const Eigen::VectorXd* factor) {
    Eigen::VectorXd w0 = p, w1 = px;
    if (factor) {
      w0 = w0.cwiseProduct(*factor);
      w1 = w1.cwiseProduct(*factor);
    }
    out.noalias() -= w0 * t.upsilon;
    out.noalias() -= w1 * t.phi;
    for (Index i = 0; i < d; ++i) {
      Eigen::VectorXd P = adjoint.Px[static_cast<std::size_t>(i)].col(k);
      if (factor) P = P.cwiseProduct(*factor);
      out.noalias() -= P * t.chi.row(i);
      out.noalias() -= P.cwiseProduct(x) * t.psi.row(i);
    }
  };
  accumulate(field.base(k), nullptr);
  for (Index f = 0; f < field.factor_count(); ++f) {
    const Eigen::VectorXd F = field.factor_path(f).col(k);
    accumulate(field.loading(f, k), &F);
  }

  const double t = problem.time.time(k);
  const Objective& objective = *problem.objective;
  parallel_for(S, [&](Index s) {
    Eigen::RowVectorXd h(J);
    objective.running_row(t, bundle.x_post(s, k), bundle.y_post(s, k), h);
    out.row(s) -= h;
  });
}

Eigen::MatrixXd mean_hamiltonians(const ControlProblem& problem, const ScenarioSet& set,
                                  const TrajectoryBundle& bundle, const AdjointSolution& adjoint) {
  const Index N = bundle.steps();
  Eigen::MatrixXd mean(N, set.field->actions());
  Eigen::MatrixXd H;
  for (Index k = 0; k < N; ++k) {
    step_hamiltonians(problem, set, bundle, adjoint, k, H);
    mean.row(k) = H.colwise().mean();
  }
  return mean;
}

Eigen::RowVectorXd singular_slack(const ControlProblem& problem, const AdjointSolution& adjoint, Index s, Index k) {
  const CoefficientModel& m = problem.coefficients;
  const auto gx = m.gain_x.row(m.gain_x.rows() == 1 ? 0 : k);
  const auto gy = m.gain_y.row(m.gain_y.rows() == 1 ? 0 : k);
  return problem.objective->singular_cost(k) + adjoint.px(s, k) * gx + adjoint.py(s, k) * gy;
}

void sample_mean_se(const Eigen::Ref<const Eigen::VectorXd>& v, double& mean, double& se) {
  const Index n = v.size();
  if (n < 1) throw DimensionError("empty sample");
  mean = v.mean();
  se = n > 1 ? std::sqrt((v.array() - mean).square().sum() / static_cast<double>(n - 1) / static_cast<double>(n))
             : 0.0;
}

DerivativeEstimate variational_derivative(const ControlProblem& problem, const ScenarioSet& set,
                                          const TrajectoryBundle& bundle, const AdjointSolution& adjoint,
                                          const Direction& direction) {
  const Index S = bundle.scenarios();
  const Index N = bundle.steps();
  const RelaxedControl& mu = bundle.mu;
  if (direction.q.steps() != N || direction.q.count() != mu.count())
    throw DimensionError("relaxed direction does not match the current control");
  if (direction.eta.steps() != N || direction.eta.dim() != bundle.xi.dim())
    throw DimensionError("singular direction does not match the current control");
  if (adjoint.scenarios() != S || adjoint.steps() != N)
    throw DimensionError("adjoint solution does not match the trajectory bundle");
  const double dt = problem.time.dt();
  const Eigen::MatrixXd dxi = direction.eta.increments() - bundle.xi.increments();

  Eigen::VectorXd singular = Eigen::VectorXd::Zero(S), relaxed = Eigen::VectorXd::Zero(S);
  parallel_for(S, [&](Index s) {
    double acc = 0.0;
    for (Index k = 0; k < N; ++k)
      if (dxi.row(k).squaredNorm() > 0.0) acc += singular_slack(problem, adjoint, s, k).dot(dxi.row(k));
    singular(s) = acc;
  });
  Eigen::MatrixXd H;
  for (Index k = 0; k < N; ++k) {
    const Eigen::VectorXd dw = (mu.row(k) - direction.q.row(k)).transpose();
    if (dw.squaredNorm() == 0.0) continue;
    step_hamiltonians(problem, set, bundle, adjoint, k, H);
    relaxed.noalias() += (H * dw) * dt;
  }

  DerivativeEstimate e;
  e.per_scenario = singular + relaxed;
  sample_mean_se(singular, e.singular, e.singular_se);
  sample_mean_se(relaxed, e.relaxed, e.relaxed_se);
  sample_mean_se(e.per_scenario, e.total, e.total_se);
  return e;
}

OptimalityReport check_max_principle(const ControlProblem& problem, const ScenarioSet& set,
                                     const TrajectoryBundle& bundle, const AdjointSolution& adjoint,
                                     const Tolerances& tol) {
  const Index S = bundle.scenarios();
  const Index N = bundle.steps();
  const Index m = bundle.xi.dim();
  const double dt = problem.time.dt();
  OptimalityReport r;

  const double rms_x = std::sqrt(adjoint.px.array().square().mean());
  const double rms_y = std::sqrt(adjoint.py.array().square().mean());
  r.adjoint_scale = std::max({1.0, rms_x, rms_y});

  // Hamiltonian condition: the controls are deterministic, so the supremum is taken over measures per step
  // against the scenario-mean Hamiltonian; the scenario-by-scenario version is a diagnostic.
  Eigen::VectorXd gap = Eigen::VectorXd::Zero(S), pathwise = Eigen::VectorXd::Zero(S);
  Eigen::MatrixXd H;
  r.maximizers.resize(static_cast<std::size_t>(N));
  for (Index k = 0; k < N; ++k) {
    step_hamiltonians(problem, set, bundle, adjoint, k, H);
    const Eigen::VectorXd w = bundle.mu.row(k).transpose();
    const Eigen::VectorXd Hmu = H * w;
    const Index best = argmax_lowest(H.colwise().mean());
    r.maximizers[static_cast<std::size_t>(k)] = best;
    gap += (H.col(best) - Hmu) * dt;
    pathwise += (H.rowwise().maxCoeff() - Hmu) * dt;
  }
  sample_mean_se(gap, r.hamiltonian_gap, r.hamiltonian_gap_se);
  r.pathwise_gap = pathwise.mean();
  r.tol_gap = std::max(tol.gap_se_multiplier * r.hamiltonian_gap_se, tol.gap_floor * r.adjoint_scale);
  r.hamiltonian_ok = std::isfinite(r.hamiltonian_gap) && r.hamiltonian_gap <= r.tol_gap;

  // Slack sign and complementarity.
  r.tol_slack = tol.slack_relative * r.adjoint_scale;
  r.tol_comp = tol.complementarity_relative * bundle.xi.total_variation();
  Eigen::MatrixXd slack_sum = Eigen::MatrixXd::Zero(N, m);
  double slack_min = std::numeric_limits<double>::infinity();
  Eigen::VectorXd violation = Eigen::VectorXd::Zero(S);
  for (Index s = 0; s < S; ++s)
    for (Index k = 0; k < N; ++k) {
      const Eigen::RowVectorXd sl = singular_slack(problem, adjoint, s, k);
      slack_sum.row(k) += sl;
      slack_min = std::min(slack_min, sl.minCoeff());
      for (Index i = 0; i < m; ++i)
        if (sl(i) > r.tol_slack) violation(s) += bundle.xi.increments()(k, i);
    }
  r.slack_min = slack_min;
  r.expected_slack_min = (slack_sum / static_cast<double>(S)).minCoeff();
  r.complementarity_violation = violation.mean();
  r.slack_ok = std::isfinite(r.slack_min) && r.slack_min >= -r.tol_slack;
  r.complementarity_ok = std::isfinite(r.complementarity_violation) && r.complementarity_violation <= r.tol_comp;
  return r;
}

}  // namespace rsc
