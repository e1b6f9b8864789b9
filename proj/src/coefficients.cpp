#include "rsc/coefficients.hpp"

#include "rsc/errors.hpp"
#include "rsc/parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>

namespace rsc {

CoefficientTable CoefficientTable::zero(Index actions, Index dim) {
  return {Eigen::RowVectorXd::Zero(actions), Eigen::RowVectorXd::Zero(actions), Eigen::MatrixXd::Zero(dim, actions),
          Eigen::MatrixXd::Zero(dim, actions)};
}

void CoefficientTable::add_scaled(double a, const CoefficientTable& other) {
  upsilon += a * other.upsilon;
  phi += a * other.phi;
  chi += a * other.chi;
  psi += a * other.psi;
}

namespace {

void check_table(const CoefficientTable& t, Index actions, Index dim, const std::string& what) {
  if (t.upsilon.size() != actions || t.phi.size() != actions || t.chi.cols() != actions ||
      t.psi.cols() != actions)
    throw DimensionError(what + ": table does not have one column per grid point");
  if (t.chi.rows() != dim || t.psi.rows() != dim)
    throw DimensionError(what + ": diffusion tables do not match the Brownian dimension");
  if (!t.upsilon.allFinite() || !t.phi.allFinite() || !t.chi.allFinite() || !t.psi.allFinite())
    throw ModelError(what + ": table has non-finite entries");
}

void check_tables(const std::vector<CoefficientTable>& tables, const TimeGrid& grid, Index actions, Index dim,
                  const std::string& what) {
  if (tables.size() != 1 && static_cast<Index>(tables.size()) != grid.steps())
    throw DimensionError(what + ": expected one table or one per step");
  for (const auto& t : tables) check_table(t, actions, dim, what);
}

const CoefficientTable& pick(const std::vector<CoefficientTable>& tables, Index k) {
  return tables.size() == 1 ? tables.front() : tables[static_cast<std::size_t>(k)];
}

StepCoefficients reduce_table(const CoefficientTable& t, const Eigen::Ref<const Eigen::VectorXd>& w) {
  StepCoefficients c;
  c.upsilon = integrate_against(t.upsilon, w);
  c.phi = integrate_against(t.phi, w);
  c.chi.resize(t.dim());
  c.psi.resize(t.dim());
  for (Index i = 0; i < t.dim(); ++i) {
    c.chi(i) = integrate_against(t.chi.row(i), w);
    c.psi(i) = integrate_against(t.psi.row(i), w);
  }
  return c;
}

StepCoefficients pick_table(const CoefficientTable& t, Index j) {
  StepCoefficients c;
  c.upsilon = t.upsilon(j);
  c.phi = t.phi(j);
  c.chi = t.chi.col(j);
  c.psi = t.psi.col(j);
  return c;
}

}  // namespace

void CoefficientModel::validate(const TimeGrid& grid, Index grid_actions) const {
  if (base.empty()) throw ModelError("coefficient model has no base table");
  const Index d = brownian_dim();
  if (d < 1 || d > kMaxBrownianDim) throw DimensionError("unsupported Brownian dimension");
  if (actions() != grid_actions) throw DimensionError("coefficient tables do not match the action grid size");
  check_tables(base, grid, grid_actions, d, "base coefficients");
  for (const auto& f : factors) {
    check_tables(f.loadings, grid, grid_actions, d, "factor '" + f.name + "' loadings");
    if (f.dynamics.volatility.size() != d)
      throw DimensionError("factor '" + f.name + "' volatility does not match the Brownian dimension");
    if (!std::isfinite(f.dynamics.initial) || !std::isfinite(f.dynamics.drift) ||
        !std::isfinite(f.dynamics.mean_reversion) || !f.dynamics.volatility.allFinite())
      throw ModelError("factor '" + f.name + "' has non-finite parameters");
  }
  if (gain_x.cols() < 1 || gain_x.cols() != gain_y.cols())
    throw DimensionError("singular gains G^x and G^y need the same positive number of components");
  for (const auto* g : {&gain_x, &gain_y}) {
    if (g->rows() != 1 && g->rows() != grid.steps())
      throw DimensionError("singular gains need one row or one row per step");
    if (!g->allFinite()) throw ModelError("singular gains must be finite");
  }
  if (!(psi_bound > 0.0)) throw ModelError("psi bound must be positive");
  for (const auto& t : base)
    if (t.psi.cwiseAbs().maxCoeff() > psi_bound && deterministic())
      throw ModelError("psi exceeds its declared bound");
  if (!(clamp_tail >= 0.0 && clamp_tail < 1.0)) throw ModelError("clamp tail probability must lie in [0, 1)");
}

CoefficientField::CoefficientField(CoefficientModel model, TimeGrid grid, Index scenarios,
                                   std::vector<Eigen::MatrixXd> factor_paths, Index clamp_events)
    : model_(std::move(model)),
      grid_(grid),
      scenarios_(scenarios),
      factor_paths_(std::move(factor_paths)),
      clamp_events_(clamp_events) {
  if (factor_paths_.size() != model_.factors.size())
    throw DimensionError("one factor path matrix per factor is required");
  for (const auto& p : factor_paths_)
    if (p.rows() != scenarios_ || p.cols() != grid_.steps())
      throw DimensionError("factor paths must be scenarios x steps");
}

const CoefficientTable& CoefficientField::base(Index k) const { return pick(model_.base, k); }

const CoefficientTable& CoefficientField::loading(Index f, Index k) const {
  return pick(model_.factors[static_cast<std::size_t>(f)].loadings, k);
}

Eigen::MatrixXd CoefficientField::gain_x_matrix() const {
  Eigen::MatrixXd g(steps(), singular_dim());
  for (Index k = 0; k < steps(); ++k) g.row(k) = gain_x(k);
  return g;
}

Eigen::MatrixXd CoefficientField::gain_y_matrix() const {
  Eigen::MatrixXd g(steps(), singular_dim());
  for (Index k = 0; k < steps(); ++k) g.row(k) = gain_y(k);
  return g;
}

ReducedStep CoefficientField::reduce(Index k, const Eigen::Ref<const Eigen::VectorXd>& weights) const {
  if (weights.size() != actions()) throw DimensionError("measure does not match the action grid");
  ReducedStep r;
  r.base = reduce_table(base(k), weights);
  r.loadings.reserve(static_cast<std::size_t>(factor_count()));
  for (Index f = 0; f < factor_count(); ++f) r.loadings.push_back(reduce_table(loading(f, k), weights));
  return r;
}

ReducedStep CoefficientField::reduce_at(Index k, Index action) const {
  if (action < 0 || action >= actions()) throw std::out_of_range("action index out of range");
  ReducedStep r;
  r.base = pick_table(base(k), action);
  r.loadings.reserve(static_cast<std::size_t>(factor_count()));
  for (Index f = 0; f < factor_count(); ++f) r.loadings.push_back(pick_table(loading(f, k), action));
  return r;
}

StepCoefficients CoefficientField::evaluate(const ReducedStep& reduced, Index s, Index k) const {
  StepCoefficients c = reduced.base;
  for (Index f = 0; f < factor_count(); ++f) {
    const double F = factor(f, s, k);
    const StepCoefficients& l = reduced.loadings[static_cast<std::size_t>(f)];
    c.upsilon += F * l.upsilon;
    c.phi += F * l.phi;
    c.chi += F * l.chi;
    c.psi += F * l.psi;
  }
  return c;
}

void CoefficientField::slice(Index s, Index k, CoefficientTable& out) const {
  out = base(k);
  for (Index f = 0; f < factor_count(); ++f) out.add_scaled(factor(f, s, k), loading(f, k));
}

void factor_moments(const FactorDynamics& dyn, const TimeGrid& grid, Eigen::VectorXd& mean,
                    Eigen::VectorXd& variance) {
  const Index n = grid.steps();
  const double dt = grid.dt();
  const double vol2 = dyn.volatility.squaredNorm();
  mean.resize(n);
  variance.resize(n);
  mean(0) = dyn.initial;
  variance(0) = 0.0;
  const double decay = 1.0 - dyn.mean_reversion * dt;
  for (Index k = 1; k < n; ++k) {
    mean(k) = mean(k - 1) + (dyn.drift - dyn.mean_reversion * mean(k - 1)) * dt;
    variance(k) = decay * decay * variance(k - 1) + vol2 * dt;
  }
}

CoefficientField sample_coefficients(const CoefficientModel& model, const TimeGrid& grid, const ActionGrid& actions,
                                     const BrownianIncrements& noise) {
  model.validate(grid, actions.count());
  if (noise.steps() != grid.steps() || noise.dim() != model.brownian_dim())
    throw DimensionError("Brownian increments do not match the time grid or Brownian dimension");
  const Index S = noise.scenarios();
  const Index N = grid.steps();
  const double dt = grid.dt();

  double z = 0.0;
  if (model.clamp_tail > 0.0) {
    boost::math::normal standard;
    z = boost::math::quantile(boost::math::complement(standard, model.clamp_tail / 2.0));
  }

  std::vector<Eigen::MatrixXd> paths;
  Index clamp_events = 0;
  for (const auto& f : model.factors) {
    Eigen::VectorXd mean, var;
    factor_moments(f.dynamics, grid, mean, var);
    Eigen::MatrixXd path(S, N);
    std::vector<Index> clamps(static_cast<std::size_t>(S), 0);
    const FactorDynamics& dyn = f.dynamics;
    parallel_for(S, [&](Index s) {
      double F = dyn.initial;
      for (Index k = 0; k < N; ++k) {
        if (k > 0) {
          double shock = 0.0;
          for (Index i = 0; i < noise.dim(); ++i) shock += dyn.volatility(i) * noise(s, k - 1, i);
          F += (dyn.drift - dyn.mean_reversion * F) * dt + shock;
        }
        if (z > 0.0) {
          const double half = z * std::sqrt(var(k));
          const double clamped = std::clamp(F, mean(k) - half, mean(k) + half);
          if (clamped != F) ++clamps[static_cast<std::size_t>(s)];
          F = clamped;
        }
        if (!std::isfinite(F)) throw NumericalError("non-finite factor '" + f.name + "' sample", k, s);
        path(s, k) = F;
      }
    });
    for (Index c : clamps) clamp_events += c;
    paths.push_back(std::move(path));
  }

  CoefficientField field(model, grid, S, std::move(paths), clamp_events);

  // psi bound: only factor loadings can move psi away from the (already checked) base.
  bool psi_random = false;
  for (Index f = 0; f < field.factor_count(); ++f)
    for (const auto& t : model.factors[static_cast<std::size_t>(f)].loadings)
      if (t.psi.cwiseAbs().maxCoeff() > 0.0) psi_random = true;
  if (psi_random) {
    CoefficientTable buf;
    for (Index s = 0; s < S; ++s)
      for (Index k = 0; k < N; ++k) {
        field.slice(s, k, buf);
        if (!buf.psi.allFinite()) throw NumericalError("non-finite psi sample", k, s);
        if (buf.psi.cwiseAbs().maxCoeff() > model.psi_bound)
          throw ModelError("sampled psi exceeds its declared bound at step " + std::to_string(k) + ", scenario " +
                           std::to_string(s));
      }
  }
  return field;
}

}  // namespace rsc
