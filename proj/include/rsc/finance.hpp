#pragma once

// Bond/stock portfolio with consumption and proportional transaction costs, assembled into
// the generic problem form. The action is a pair (time to maturity u, consumption rate c):
//   x: bond wealth,  dx = x (r0 - v(u) Theta - c) dt + x v(u) dB^x + (1 - K1) dxi^x - dxi^y
//   y: stock wealth, dy = lambda y dt + rho y dB^y - dxi^x + (1 - K2) dxi^y
// with the integrated volatility v of a Ho-Lee or Hull-White forward-rate model.

#include "rsc/measures.hpp"
#include "rsc/problem.hpp"
#include "rsc/time_grid.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rsc {

struct VolatilityModel {
  enum class Kind { ho_lee, hull_white };
  Kind kind = Kind::ho_lee;
  double sigma = 0.02;
  double mean_reversion = 0.1;  // Hull-White c

  void validate() const;
  // Ho-Lee: -sigma u. Hull-White: (sigma / c)(exp(-c u) - 1).
  double integrated(double maturity) const;
};

const char* to_string(VolatilityModel::Kind kind);
VolatilityModel::Kind volatility_kind_from_string(const std::string& name);

struct MarketModel {
  VolatilityModel volatility;
  // Gaussian short rate dr0 = (short_rate_drift - kappa r0) dt + sigma dB^x, with kappa = 0
  // for Ho-Lee and kappa = c for Hull-White. A tabulated path (one value per step) replaces it.
  double initial_short_rate = 0.03;
  double short_rate_drift = 0.0;
  std::optional<Eigen::VectorXd> short_rate_path;
  // Market price of risk: one value (constant) or one per step.
  Eigen::VectorXd market_price_of_risk = Eigen::VectorXd::Constant(1, 0.1);
  std::vector<double> maturities{1.0, 2.0, 5.0, 10.0};
  std::vector<double> consumption{0.0, 0.02, 0.04};

  void validate(const TimeGrid& grid) const;
  double market_price_of_risk_at(Index k) const;
  double short_rate_mean_reversion() const;
};

// v_k(u_j) for every step and maturity (steps x maturities).
Eigen::MatrixXd volatility_field(const VolatilityModel& model, const std::vector<double>& maturities,
                                 const TimeGrid& grid);

struct PortfolioParams {
  enum class Utility { sqrt, log, power };
  double x0 = 1.0;
  double y0 = 1.0;
  double stock_drift = 0.05;       // lambda
  double stock_volatility = 0.2;   // rho
  double bond_cost = 0.01;         // K1
  double stock_cost = 0.01;        // K2
  double discount = 0.05;          // beta
  Utility utility = Utility::sqrt;
  double utility_power = 0.5;
  // Running cost h = -e^{-beta t} f(c) turns utility maximization into cost minimization;
  // false keeps h = +e^{-beta t} f(c).
  bool maximize_utility = true;
  double terminal_scale = 1.0;     // g(x, y) = -scale tanh(rate (x + y))
  double terminal_rate = 1.0;
  Eigen::RowVectorXd transfer_cost = Eigen::RowVectorXd::Zero(2);  // k per unit of (xi^x, xi^y)
  double cap = 10.0;
  double rate_cap = 10.0;
  double clamp_tail = 0.0;

  void validate() const;
  double utility_value(double c) const;
};

const char* to_string(PortfolioParams::Utility utility);
PortfolioParams::Utility utility_from_string(const std::string& name);

struct PortfolioProblem {
  MarketModel market;
  PortfolioParams params;
  ControlProblem problem;
};

// Grid points are (maturity, consumption) pairs in lexicographic order.
PortfolioProblem build_portfolio_problem(const MarketModel& market, const PortfolioParams& params,
                                         const TimeGrid& grid);

// Forward rate r_t(u) as a function of (t, u, r0_t).
using ForwardRateFunction = std::function<double(double t, double maturity, double short_rate)>;

// r(u) = r0: the flat curve.
ForwardRateFunction flat_forward_rate();
// Piecewise-linear interpolation in maturity of a fixed curve, flat beyond the ends.
ForwardRateFunction tabulated_forward_rate(std::vector<double> maturities, std::vector<double> rates);

struct BondPricePath {
  Eigen::MatrixXd price;  // scenarios x (steps + 1)
  Eigen::MatrixXd short_rate;  // scenarios x steps
  Index negative_prices = 0;
  bool log_euler = false;
};

// dp = p (r0 - r(u) - v(u) Theta) dt + p v(u) dB^x from p_0 = 1, on the same Brownian
// increments a portfolio run with this seed would use.
BondPricePath bond_price_path(const MarketModel& market, double maturity, const TimeGrid& grid, Index scenarios,
                              std::uint64_t seed, const ForwardRateFunction& forward_rate, bool log_euler = false);

// sum_k Theta_k^2 dt, the integrability diagnostic for the market price of risk.
double market_price_of_risk_energy(const MarketModel& market, const TimeGrid& grid);

}  // namespace rsc
