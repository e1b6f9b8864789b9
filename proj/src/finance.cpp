#include "rsc/finance.hpp"

#include "rsc/errors.hpp"
#include "rsc/noise.hpp"
#include "rsc/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace rsc {

void VolatilityModel::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ModelError("volatility sigma must be positive");
  if (kind == Kind::hull_white && (!(mean_reversion > 0.0) || !std::isfinite(mean_reversion)))
    throw ModelError("Hull-White mean reversion c must be positive");
}

double VolatilityModel::integrated(double u) const {
  if (kind == Kind::ho_lee) return -sigma * u;
  if (mean_reversion == 0.0) throw ModelError("Hull-White mean reversion c must be nonzero");
  return sigma / mean_reversion * std::expm1(-mean_reversion * u);
}

const char* to_string(VolatilityModel::Kind kind) {
  return kind == VolatilityModel::Kind::ho_lee ? "ho-lee" : "hull-white";
}

VolatilityModel::Kind volatility_kind_from_string(const std::string& name) {
  if (name == "ho-lee") return VolatilityModel::Kind::ho_lee;
  if (name == "hull-white") return VolatilityModel::Kind::hull_white;
  throw ModelError("unknown volatility model '" + name + "' (expected ho-lee or hull-white)");
}

void MarketModel::validate(const TimeGrid& grid) const {
  volatility.validate();
  if (maturities.empty()) throw ModelError("maturity grid is empty");
  if (consumption.empty()) throw ModelError("consumption grid is empty");
  for (std::size_t i = 0; i < maturities.size(); ++i) {
    if (!(maturities[i] >= 0.0) || !std::isfinite(maturities[i])) throw ModelError("maturities must be nonnegative");
    if (i > 0 && !(maturities[i] > maturities[i - 1])) throw ModelError("maturities must be strictly increasing");
  }
  for (std::size_t i = 0; i < consumption.size(); ++i) {
    if (!(consumption[i] >= 0.0) || !std::isfinite(consumption[i]))
      throw ModelError("consumption rates must be nonnegative");
    if (i > 0 && !(consumption[i] > consumption[i - 1]))
      throw ModelError("consumption rates must be strictly increasing");
  }
  if (market_price_of_risk.size() != 1 && market_price_of_risk.size() != grid.steps())
    throw DimensionError("market price of risk needs one value or one per step");
  if (!market_price_of_risk.allFinite()) throw ModelError("market price of risk must be finite");
  if (short_rate_path) {
    if (short_rate_path->size() != grid.steps()) throw DimensionError("short-rate path needs one value per step");
    if (!short_rate_path->allFinite()) throw ModelError("short-rate path must be finite");
  }
  if (!std::isfinite(initial_short_rate) || !std::isfinite(short_rate_drift))
    throw ModelError("short-rate parameters must be finite");
}

double MarketModel::market_price_of_risk_at(Index k) const {
  return market_price_of_risk(market_price_of_risk.size() == 1 ? 0 : k);
}

double MarketModel::short_rate_mean_reversion() const {
  return volatility.kind == VolatilityModel::Kind::hull_white ? volatility.mean_reversion : 0.0;
}

Eigen::MatrixXd volatility_field(const VolatilityModel& model, const std::vector<double>& maturities,
                                 const TimeGrid& grid) {
  model.validate();
  Eigen::MatrixXd v(grid.steps(), static_cast<Index>(maturities.size()));
  for (Index j = 0; j < v.cols(); ++j) v.col(j).setConstant(model.integrated(maturities[static_cast<std::size_t>(j)]));
  return v;
}

void PortfolioParams::validate() const {
  if (!(bond_cost >= 0.0 && bond_cost < 1.0) || !(stock_cost >= 0.0 && stock_cost < 1.0))
    throw ModelError("transaction costs K1, K2 must lie in [0, 1)");
  for (double v : {x0, y0, stock_drift, stock_volatility, discount, utility_power, terminal_scale, terminal_rate, cap,
                   rate_cap})
    if (!std::isfinite(v)) throw ModelError("portfolio parameters must be finite");
  if (transfer_cost.size() != 2 || !transfer_cost.allFinite())
    throw ModelError("transfer cost needs two finite values");
  if (!(cap >= 0.0) || !(rate_cap >= 0.0)) throw ModelError("singular caps must be nonnegative");
  if (utility == Utility::power && !(utility_power > 0.0 && utility_power < 1.0))
    throw ModelError("power utility exponent must lie in (0, 1)");
}

double PortfolioParams::utility_value(double c) const {
  switch (utility) {
    case Utility::sqrt:
      return std::sqrt(c);
    case Utility::log:
      if (!(c > 0.0)) throw ModelError("log utility needs strictly positive consumption rates");
      return std::log(c);
    case Utility::power:
      return std::pow(c, utility_power) / utility_power;
  }
  return 0.0;
}

const char* to_string(PortfolioParams::Utility utility) {
  switch (utility) {
    case PortfolioParams::Utility::sqrt:
      return "sqrt";
    case PortfolioParams::Utility::log:
      return "log";
    case PortfolioParams::Utility::power:
      return "power";
  }
  return "sqrt";
}

PortfolioParams::Utility utility_from_string(const std::string& name) {
  if (name == "sqrt") return PortfolioParams::Utility::sqrt;
  if (name == "log") return PortfolioParams::Utility::log;
  if (name == "power") return PortfolioParams::Utility::power;
  throw ModelError("unknown utility '" + name + "' (expected sqrt, log or power)");
}

PortfolioProblem build_portfolio_problem(const MarketModel& market, const PortfolioParams& params,
                                         const TimeGrid& grid) {
  market.validate(grid);
  params.validate();
  const Index U = static_cast<Index>(market.maturities.size());
  const Index C = static_cast<Index>(market.consumption.size());
  const ActionGrid actions = ActionGrid::product(
      ActionGrid::line(Eigen::Map<const Eigen::VectorXd>(market.maturities.data(), U)),
      ActionGrid::line(Eigen::Map<const Eigen::VectorXd>(market.consumption.data(), C)));
  const Index J = actions.count();
  constexpr Index d = 2;

  Eigen::RowVectorXd v(J), c(J);
  for (Index j = 0; j < J; ++j) {
    v(j) = market.volatility.integrated(actions.point(j)(0));
    c(j) = actions.point(j)(1);
  }

  // phi = r0 - v(u) Theta - c, psi = (v(u), 0), upsilon = chi = 0.
  const bool per_step = market.market_price_of_risk.size() > 1 || market.short_rate_path.has_value();
  const Index tables = per_step ? grid.steps() : 1;
  CoefficientModel model;
  for (Index k = 0; k < tables; ++k) {
    CoefficientTable t = CoefficientTable::zero(J, d);
    t.phi = -v * market.market_price_of_risk_at(k) - c;
    if (market.short_rate_path) t.phi.array() += (*market.short_rate_path)(k);
    t.psi.row(0) = v;
    model.base.push_back(std::move(t));
  }
  if (!market.short_rate_path) {
    FactorSpec r0;
    r0.name = "short_rate";
    r0.dynamics.initial = market.initial_short_rate;
    r0.dynamics.drift = market.short_rate_drift;
    r0.dynamics.mean_reversion = market.short_rate_mean_reversion();
    r0.dynamics.volatility = Eigen::Vector2d(market.volatility.sigma, 0.0);
    CoefficientTable loading = CoefficientTable::zero(J, d);
    loading.phi.setOnes();
    r0.loadings.push_back(std::move(loading));
    model.factors.push_back(std::move(r0));
  }
  model.gain_x = Eigen::RowVector2d(1.0 - params.bond_cost, -1.0);
  model.gain_y = Eigen::RowVector2d(-1.0, 1.0 - params.stock_cost);
  model.psi_bound = std::max(1.0, 2.0 * v.cwiseAbs().maxCoeff());
  model.clamp_tail = params.clamp_tail;

  RunningCost running;
  running.discount = params.discount;
  running.action_cost.resize(J);
  const double sign = params.maximize_utility ? -1.0 : 1.0;
  for (Index j = 0; j < J; ++j) running.action_cost(j) = sign * params.utility_value(c(j));
  TerminalCost terminal;
  terminal.kind = TerminalCost::Kind::saturating;
  terminal.scale = params.terminal_scale;
  terminal.rate = params.terminal_rate;

  ControlProblem problem{grid,
                         actions,
                         std::move(model),
                         SecondStateDynamics::geometric(params.stock_drift,
                                                        Eigen::Vector2d(0.0, params.stock_volatility)),
                         std::make_shared<StandardObjective>(std::move(running), terminal, params.transfer_cost),
                         params.x0,
                         params.y0,
                         params.cap,
                         params.rate_cap};
  problem.validate();
  return {market, params, std::move(problem)};
}

ForwardRateFunction flat_forward_rate() {
  return [](double, double, double r0) { return r0; };
}

ForwardRateFunction tabulated_forward_rate(std::vector<double> maturities, std::vector<double> rates) {
  if (maturities.empty() || maturities.size() != rates.size())
    throw DimensionError("forward curve needs matching, nonempty maturity and rate lists");
  for (std::size_t i = 1; i < maturities.size(); ++i)
    if (!(maturities[i] > maturities[i - 1])) throw ModelError("forward curve maturities must increase");
  return [m = std::move(maturities), r = std::move(rates)](double, double u, double) {
    if (u <= m.front()) return r.front();
    if (u >= m.back()) return r.back();
    const auto it = std::upper_bound(m.begin(), m.end(), u);
    const std::size_t i = static_cast<std::size_t>(it - m.begin());
    const double w = (u - m[i - 1]) / (m[i] - m[i - 1]);
    return (1.0 - w) * r[i - 1] + w * r[i];
  };
}

BondPricePath bond_price_path(const MarketModel& market, double maturity, const TimeGrid& grid, Index scenarios,
                              std::uint64_t seed, const ForwardRateFunction& forward_rate, bool log_euler) {
  market.validate(grid);
  if (!(maturity >= 0.0)) throw ModelError("maturity must be nonnegative");
  const BrownianIncrements noise = BrownianIncrements::generate(grid, 2, scenarios, seed);
  const Index N = grid.steps();
  const double dt = grid.dt();
  const double v = market.volatility.integrated(maturity);
  const double kappa = market.short_rate_mean_reversion();

  BondPricePath out{Eigen::MatrixXd(scenarios, N + 1), Eigen::MatrixXd(scenarios, N), 0, log_euler};
  std::vector<Index> negatives(static_cast<std::size_t>(scenarios), 0);
  parallel_for(scenarios, [&](Index s) {
    double r0 = market.initial_short_rate;
    double p = 1.0;
    out.price(s, 0) = p;
    for (Index k = 0; k < N; ++k) {
      if (market.short_rate_path) {
        r0 = (*market.short_rate_path)(k);
      } else if (k > 0) {
        r0 += (market.short_rate_drift - kappa * r0) * dt + market.volatility.sigma * noise(s, k - 1, 0);
      }
      out.short_rate(s, k) = r0;
      const double t = grid.time(k);
      const double drift = r0 - forward_rate(t, maturity, r0) - v * market.market_price_of_risk_at(k);
      const double db = noise(s, k, 0);
      if (log_euler) {
        p *= std::exp((drift - 0.5 * v * v) * dt + v * db);
      } else {
        p += p * (drift * dt + v * db);
      }
      if (!std::isfinite(p)) throw NumericalError("bond price became non-finite", k + 1, s);
      if (p < 0.0) ++negatives[static_cast<std::size_t>(s)];
      out.price(s, k + 1) = p;
    }
  });
  for (Index n : negatives) out.negative_prices += n;
  return out;
}

double market_price_of_risk_energy(const MarketModel& market, const TimeGrid& grid) {
  double e = 0.0;
  for (Index k = 0; k < grid.steps(); ++k) {
    const double th = market.market_price_of_risk_at(k);
    e += th * th * grid.dt();
  }
  return e;
}

}  // namespace rsc
