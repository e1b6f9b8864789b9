#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rsc {

// Operand shapes do not agree (grid sizes, step counts, dimensions).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A model or configuration violates a structural requirement.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A simulated quantity became non-finite. Carries the offending step and scenario.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::ptrdiff_t step, std::ptrdiff_t scenario)
      : std::runtime_error(what + " (step " + std::to_string(step) + ", scenario " +
                           std::to_string(scenario) + ")"),
        step_(step),
        scenario_(scenario) {}

  std::ptrdiff_t step() const { return step_; }
  std::ptrdiff_t scenario() const { return scenario_; }

 private:
  std::ptrdiff_t step_;
  std::ptrdiff_t scenario_;
};

}  // namespace rsc
