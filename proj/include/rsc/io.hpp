#pragma once

// Serialization of controls (JSON), trajectory and adjoint paths (CSV), a binary cache for
// path matrices, and JSON renderings of the diagnostic reports. docs/FORMATS.md describes
// every layout.

#include "rsc/adjoint.hpp"
#include "rsc/dynamics.hpp"
#include "rsc/maxprinciple.hpp"
#include "rsc/measures.hpp"
#include "rsc/optimizer.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rsc {

inline constexpr const char* kControlsSchema = "rsc-controls/1";

struct ControlsDocument {
  double horizon;
  ActionGrid grid;
  RelaxedControl mu;
  SingularControl xi;
};

nlohmann::json controls_to_json(const TimeGrid& time, const ActionGrid& grid, const RelaxedControl& mu,
                                const SingularControl& xi);
// Throws std::invalid_argument (or a subclass) on malformed documents.
ControlsDocument controls_from_json(const nlohmann::json& doc);
ControlsDocument read_controls(const std::string& path);
void write_controls(const std::string& path, const TimeGrid& time, const ActionGrid& grid, const RelaxedControl& mu,
                    const SingularControl& xi);

// One row per (scenario, step); columns after the jump are empty on the terminal row.
// max_scenarios = 0 writes every scenario.
void write_trajectories_csv(std::ostream& out, const TrajectoryBundle& bundle, Index max_scenarios = 0);
void write_adjoints_csv(std::ostream& out, const AdjointSolution& adjoint, const TimeGrid& time,
                        Index max_scenarios = 0);
void write_iterations_csv(std::ostream& out, const std::vector<IterationRecord>& trace);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

// Binary cache of a list of matrices tagged with a four-byte kind and an input hash.
void write_cache(const std::string& path, std::string_view kind, std::uint64_t key,
                 const std::vector<Eigen::MatrixXd>& matrices);
// Empty when the file is missing or was written for another kind or key.
std::optional<std::vector<Eigen::MatrixXd>> read_cache(const std::string& path, std::string_view kind,
                                                        std::uint64_t key);

// Bundle cache: x, y, x_post, y_post followed by the Brownian components.
void write_bundle_cache(const std::string& path, std::uint64_t key, const TrajectoryBundle& bundle);

nlohmann::json to_json(const OptimalityReport& report);
nlohmann::json to_json(const MomentReport& report);
nlohmann::json to_json(const DerivativeEstimate& estimate);

}  // namespace rsc
