#pragma once

// Scenario configuration files. A config is a JSON object with a versioned "schema" field;
// unknown keys anywhere are rejected, and parsing records every value actually used
// (defaults included) in ScenarioConfig::resolved. docs/FORMATS.md lists the keys.

#include "rsc/finance.hpp"
#include "rsc/maxprinciple.hpp"
#include "rsc/optimizer.hpp"
#include "rsc/problem.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace rsc {

inline constexpr const char* kScenarioSchema = "rsc.scenario.v1";

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ScenarioConfig {
  enum class InitialControl { uniform, dirac };

  explicit ScenarioConfig(ControlProblem p) : problem(std::move(p)) {}

  nlohmann::json resolved;
  ControlProblem problem;
  // Set for finance configs.
  std::optional<PortfolioProblem> portfolio;

  Index scenarios = 1000;
  std::uint64_t seed = 1;
  InitialControl initial_control = InitialControl::uniform;
  Index initial_action = 0;

  OptimizerOptions optimizer;
  AdjointMethod adjoint_method = AdjointMethod::regression;
  Tolerances tolerances;

  std::string output_directory = "rsc-out";
  Index trajectory_scenarios = 100;

  RelaxedControl initial_relaxed() const;
};

// Throws ConfigError (or another std::invalid_argument) for invalid documents.
ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config(const std::string& path);

}  // namespace rsc
