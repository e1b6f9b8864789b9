#include "rsc/finance.hpp"

#include "rsc/dynamics.hpp"
#include "rsc/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace rsc;

TEST_CASE("integrated volatility closed forms") {
  VolatilityModel hl;
  hl.sigma = 0.02;
  CHECK(hl.integrated(0.0) == 0.0);
  CHECK(hl.integrated(5.0) == doctest::Approx(-0.1));
  VolatilityModel hw;
  hw.kind = VolatilityModel::Kind::hull_white;
  hw.sigma = 0.02;
  hw.mean_reversion = 0.1;
  CHECK(hw.integrated(5.0) == doctest::Approx(0.2 * (std::exp(-0.5) - 1.0)).epsilon(1e-14));
  // Small mean reversion approaches the Ho-Lee value.
  hw.mean_reversion = 1e-6;
  CHECK(hw.integrated(5.0) == doctest::Approx(-0.1).epsilon(1e-5));
  hw.mean_reversion = 0.0;
  CHECK_THROWS_AS(hw.validate(), ModelError);
  CHECK(volatility_kind_from_string("hull-white") == VolatilityModel::Kind::hull_white);
  CHECK_THROWS_AS(volatility_kind_from_string("vasicek"), ModelError);

  const Eigen::MatrixXd field = volatility_field(hl, {1.0, 2.0}, TimeGrid(1.0, 3));
  CHECK(field.rows() == 3);
  CHECK(field(2, 1) == doctest::Approx(-0.04));
}

TEST_CASE("portfolio problem layout") {
  MarketModel market;
  market.maturities = {1.0, 5.0};
  market.consumption = {0.0, 0.04};
  market.market_price_of_risk = Eigen::VectorXd::Constant(1, 0.2);
  PortfolioParams params;
  params.bond_cost = 0.02;
  params.stock_cost = 0.03;
  const TimeGrid grid(1.0, 10);
  const PortfolioProblem pp = build_portfolio_problem(market, params, grid);
  const ControlProblem& p = pp.problem;
  REQUIRE(p.actions.count() == 4);
  // Maturity-major ordering of (maturity, consumption).
  CHECK(p.actions.point(1)(0) == 1.0);
  CHECK(p.actions.point(1)(1) == 0.04);
  CHECK(p.actions.point(2)(0) == 5.0);
  const CoefficientTable& t = p.coefficients.base.front();
  const double v5 = market.volatility.integrated(5.0);
  CHECK(t.phi(3) == doctest::Approx(-0.2 * v5 - 0.04));
  CHECK(t.psi(0, 2) == v5);
  CHECK(t.psi(1, 2) == 0.0);
  CHECK(t.upsilon.cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.coefficients.gain_x(0, 0) == doctest::Approx(0.98));
  CHECK(p.coefficients.gain_x(0, 1) == -1.0);
  CHECK(p.coefficients.gain_y(0, 0) == -1.0);
  CHECK(p.coefficients.gain_y(0, 1) == doctest::Approx(0.97));
  REQUIRE(p.coefficients.factors.size() == 1);
  CHECK(p.coefficients.factors[0].dynamics.initial == market.initial_short_rate);

  Eigen::RowVectorXd h(4);
  p.objective->running_row(0.0, 1.0, 1.0, h);
  CHECK(h(1) == doctest::Approx(-0.2));  // -sqrt(0.04)
  params.maximize_utility = false;
  const PortfolioProblem flipped = build_portfolio_problem(market, params, grid);
  flipped.problem.objective->running_row(0.0, 1.0, 1.0, h);
  CHECK(h(1) == doctest::Approx(0.2));
}

TEST_CASE("tabulated short-rate path gives per-step tables without a factor") {
  MarketModel market;
  market.maturities = {1.0};
  market.consumption = {0.0};
  market.short_rate_path = Eigen::VectorXd::LinSpaced(4, 0.01, 0.04);
  const PortfolioProblem pp = build_portfolio_problem(market, PortfolioParams{}, TimeGrid(1.0, 4));
  CHECK(pp.problem.coefficients.factors.empty());
  REQUIRE(pp.problem.coefficients.base.size() == 4);
  const double v = market.volatility.integrated(1.0);
  CHECK(pp.problem.coefficients.base[2].phi(0) == doctest::Approx(0.03 - 0.1 * v));
  market.short_rate_path = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(build_portfolio_problem(market, PortfolioParams{}, TimeGrid(1.0, 4)), DimensionError);
}

TEST_CASE("market and portfolio validation") {
  const TimeGrid grid(1.0, 5);
  MarketModel m;
  m.maturities = {2.0, 1.0};
  CHECK_THROWS_AS(m.validate(grid), ModelError);
  m.maturities = {1.0};
  m.consumption = {};
  CHECK_THROWS_AS(m.validate(grid), ModelError);
  m.consumption = {0.0};
  m.market_price_of_risk = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(m.validate(grid), DimensionError);

  PortfolioParams p;
  p.bond_cost = 1.0;
  CHECK_THROWS_AS(p.validate(), ModelError);
  p = PortfolioParams{};
  p.utility = PortfolioParams::Utility::power;
  p.utility_power = 1.5;
  CHECK_THROWS_AS(p.validate(), ModelError);
  p = PortfolioParams{};
  p.cap = -1.0;
  CHECK_THROWS_AS(p.validate(), ModelError);
  CHECK_THROWS_AS(utility_from_string("exp"), ModelError);
}

TEST_CASE("utility functions") {
  PortfolioParams p;
  CHECK(p.utility_value(0.25) == doctest::Approx(0.5));
  p.utility = PortfolioParams::Utility::log;
  CHECK(p.utility_value(std::exp(-2.0)) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(p.utility_value(0.0), ModelError);
  p.utility = PortfolioParams::Utility::power;
  p.utility_power = 0.25;
  CHECK(p.utility_value(16.0) == doctest::Approx(8.0));
}

TEST_CASE("bond prices") {
  MarketModel m;
  m.volatility.sigma = 1e-300;
  m.market_price_of_risk = Eigen::VectorXd::Zero(1);
  m.initial_short_rate = 0.05;
  const TimeGrid grid(1.0, 20);
  // Flat curve, no volatility and no risk premium: the price stays at one.
  const BondPricePath flat = bond_price_path(m, 2.0, grid, 8, 1, flat_forward_rate());
  CHECK((flat.price.array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(flat.negative_prices == 0);
  // A fixed forward rate of 1% under a 5% short rate grows at 4% per unit of time.
  const BondPricePath grow = bond_price_path(m, 2.0, grid, 3, 1, tabulated_forward_rate({1.0, 3.0}, {0.0, 0.02}));
  CHECK(grow.price(1, 20) == doctest::Approx(std::pow(1.0 + 0.04 * 0.05, 20)));
  const BondPricePath logp =
      bond_price_path(m, 2.0, grid, 3, 1, tabulated_forward_rate({1.0, 3.0}, {0.0, 0.02}), true);
  CHECK(logp.price(1, 20) == doctest::Approx(std::exp(0.04)));

  // With volatility the expected price under this drift is exp((r0 - f - v Theta) T).
  MarketModel noisy;
  noisy.short_rate_path = Eigen::VectorXd::Constant(20, 0.03);
  const BondPricePath p = bond_price_path(noisy, 5.0, grid, 20000, 4, flat_forward_rate(), true);
  const double v = noisy.volatility.integrated(5.0);
  CHECK(p.price.col(20).mean() == doctest::Approx(std::exp(-v * 0.1)).epsilon(3e-3));
}

TEST_CASE("tabulated forward curve interpolation") {
  const ForwardRateFunction f = tabulated_forward_rate({1.0, 2.0, 4.0}, {0.01, 0.03, 0.02});
  CHECK(f(0.0, 0.5, 9.0) == 0.01);
  CHECK(f(0.0, 1.5, 9.0) == doctest::Approx(0.02));
  CHECK(f(0.0, 3.0, 9.0) == doctest::Approx(0.025));
  CHECK(f(0.0, 7.0, 9.0) == 0.02);
  CHECK_THROWS_AS(tabulated_forward_rate({1.0, 1.0}, {0.0, 0.0}), ModelError);
  CHECK_THROWS_AS(tabulated_forward_rate({1.0}, {}), DimensionError);
}

TEST_CASE("market price of risk energy") {
  MarketModel m;
  m.market_price_of_risk = Eigen::Vector4d(0.0, 1.0, 2.0, 3.0);
  CHECK(market_price_of_risk_energy(m, TimeGrid(2.0, 4)) == doctest::Approx(14.0 * 0.5));
  m.market_price_of_risk = Eigen::VectorXd::Constant(1, 0.3);
  CHECK(market_price_of_risk_energy(m, TimeGrid(2.0, 4)) == doctest::Approx(0.18));
}
