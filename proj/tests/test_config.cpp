#include "rsc/config.hpp"

#include <doctest.h>

#include <string>

using namespace rsc;
using nlohmann::json;

namespace {

json canonical() {
  return json::parse(R"({
    "schema": "rsc.scenario.v1",
    "time": {"horizon": 2.0, "steps": 4},
    "problem": {
      "kind": "canonical",
      "brownian_dim": 2,
      "actions": {"values": [0.0, 0.5, 1.0]},
      "coefficients": {"upsilon": {"affine": [0.1, 2.0]}, "phi": [0.0, 0.1, 0.2], "chi": [0.3, 0.0]},
      "terminal_cost": {"x_linear": 1.0}
    }
  })");
}

std::string error_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("canonical config with defaults") {
  const ScenarioConfig c = parse_config(canonical());
  const ControlProblem& p = c.problem;
  CHECK(p.time.steps() == 4);
  CHECK(p.time.horizon() == 2.0);
  CHECK(p.actions.count() == 3);
  CHECK(p.brownian_dim() == 2);
  const CoefficientTable& t = p.coefficients.base.front();
  CHECK(t.upsilon(2) == doctest::Approx(2.1));
  CHECK(t.phi(1) == 0.1);
  CHECK(t.chi(0, 2) == 0.3);
  CHECK(t.chi(1, 2) == 0.0);
  CHECK(c.scenarios == 1000);
  CHECK(c.seed == 1);
  CHECK(c.adjoint_method == AdjointMethod::regression);
  CHECK(p.cap == 10.0);

  // Every default is written back into the resolved document.
  CHECK(c.resolved["monte_carlo"]["scenarios"] == 1000);
  CHECK(c.resolved["problem"]["singular"]["rate_cap"] == 10.0);
  CHECK(c.resolved["optimizer"]["adjoint"]["method"] == "regression");
  CHECK(c.resolved["problem"]["coefficients"]["psi_bound"].is_null());
  // The resolved document parses to the same problem.
  const ScenarioConfig again = parse_config(c.resolved);
  CHECK(again.resolved == c.resolved);
}

TEST_CASE("unknown keys and missing fields are reported with their path") {
  json doc = canonical();
  doc["problem"]["coefficients"]["upsilom"] = 1.0;
  CHECK(error_of(doc).find("problem.coefficients.upsilom") != std::string::npos);

  doc = canonical();
  doc["time"].erase("steps");
  CHECK(error_of(doc).find("time.steps") != std::string::npos);

  doc = canonical();
  doc["schema"] = "rsc.scenario.v0";
  CHECK_FALSE(error_of(doc).empty());

  doc = canonical();
  doc["time"]["steps"] = 0;
  CHECK_FALSE(error_of(doc).empty());

  doc = canonical();
  doc["time"]["steps"] = "four";
  CHECK_FALSE(error_of(doc).empty());

  doc = canonical();
  doc["problem"]["coefficients"]["phi"] = json::array({0.0, 0.1});
  CHECK_FALSE(error_of(doc).empty());

  doc = canonical();
  doc["problem"]["coefficients"]["chi"] = json::array({0.1, 0.2, 0.3});
  CHECK_FALSE(error_of(doc).empty());

  doc = canonical();
  doc["optimizer"] = {{"adjoint", {{"degree", 3}}}};
  CHECK_FALSE(error_of(doc).empty());

  doc = canonical();
  doc["controls"] = {{"initial", "dirac"}, {"action", 7}};
  CHECK_FALSE(error_of(doc).empty());

  CHECK_THROWS_AS(load_config("/nonexistent/rsc/config.json"), ConfigError);
}

TEST_CASE("per-step coefficient tables and time-dependent gains") {
  json doc = canonical();
  doc["problem"]["coefficients"]["phi"] = json::array({json::array({0, 0, 0}), json::array({1, 1, 1}),
                                                       json::array({2, 2, 2}), json::array({3, 3, 3})});
  doc["problem"]["gains"] = {{"x", json::array({json::array({1.0}), json::array({-1.0}), json::array({1.0}),
                                                json::array({1.0})})}};
  doc["problem"]["singular"] = {{"cap", 0.5}};
  const ScenarioConfig c = parse_config(doc);
  REQUIRE(c.problem.coefficients.base.size() == 4);
  CHECK(c.problem.coefficients.base[2].phi(1) == 2.0);
  CHECK(c.problem.coefficients.base[2].upsilon(2) == doctest::Approx(2.1));
  CHECK(c.problem.coefficients.gain_x(1, 0) == -1.0);
  CHECK(c.problem.cap == 0.5);
}

TEST_CASE("factors and second state") {
  json doc = canonical();
  doc["problem"]["coefficients"]["factors"] =
      json::array({{{"name", "r"}, {"initial", 0.02}, {"mean_reversion", 0.5}, {"volatility", {0.01, 0.0}},
                    {"loadings", {{"phi", 1.0}}}}});
  doc["problem"]["second_state"] = {{"drift_slope", 0.05}, {"vol_slope", {0.0, 0.2}}};
  doc["problem"]["y0"] = 2.0;
  const ScenarioConfig c = parse_config(doc);
  REQUIRE(c.problem.coefficients.factors.size() == 1);
  CHECK(c.problem.coefficients.factors[0].name == "r");
  CHECK(c.problem.coefficients.factors[0].loadings.front().phi(1) == 1.0);
  CHECK(c.problem.second.drift_slope == 0.05);
  CHECK(c.problem.second.vol_slope(1) == 0.2);
  CHECK(c.problem.y0 == 2.0);
}

TEST_CASE("finance config") {
  const json doc = json::parse(R"({
    "schema": "rsc.scenario.v1",
    "time": {"horizon": 1.0, "steps": 10},
    "monte_carlo": {"scenarios": 50, "seed": 3},
    "problem": {
      "kind": "finance",
      "market": {"volatility": {"model": "hull-white", "sigma": 0.01, "mean_reversion": 0.2},
                 "maturities": [1.0, 3.0], "consumption": [0.01, 0.02]},
      "portfolio": {"utility": "log", "bond_cost": 0.05, "cap": 1.0}
    },
    "optimizer": {"adjoint": {"method": "phi"}}
  })");
  const ScenarioConfig c = parse_config(doc);
  REQUIRE(c.portfolio.has_value());
  CHECK(c.portfolio->market.volatility.kind == VolatilityModel::Kind::hull_white);
  CHECK(c.problem.actions.count() == 4);
  CHECK(c.problem.cap == 1.0);
  CHECK(c.problem.coefficients.gain_x(0, 0) == doctest::Approx(0.95));
  CHECK(c.adjoint_method == AdjointMethod::phi_construction);
  CHECK(c.resolved["problem"]["portfolio"]["stock_drift"] == 0.05);
  CHECK(parse_config(c.resolved).resolved == c.resolved);

  json bad = doc;
  bad["problem"]["portfolio"]["utility"] = "exp";
  CHECK_THROWS_AS(parse_config(bad), std::invalid_argument);
  bad = doc;
  bad["problem"]["market"]["consumption"] = json::array({0.0, 0.02});
  bad["problem"]["portfolio"]["utility"] = "log";
  CHECK_THROWS_AS(parse_config(bad), std::invalid_argument);
}

TEST_CASE("initial controls") {
  json doc = canonical();
  doc["controls"] = {{"initial", "dirac"}, {"action", 2}};
  const ScenarioConfig c = parse_config(doc);
  CHECK(c.initial_relaxed().weights()(3, 2) == 1.0);
  doc["controls"] = {{"initial", "uniform"}};
  CHECK(parse_config(doc).initial_relaxed().weights()(0, 1) == doctest::Approx(1.0 / 3.0));
}
