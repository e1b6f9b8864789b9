#include "rsc/cli.hpp"

#include "rsc/adjoint.hpp"
#include "rsc/config.hpp"
#include "rsc/dynamics.hpp"
#include "rsc/errors.hpp"
#include "rsc/io.hpp"
#include "rsc/maxprinciple.hpp"
#include "rsc/optimizer.hpp"
#include "rsc/parallel.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace rsc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view example_bond_scenario() {
  static constexpr std::string_view text =
#include "example_bond.inc"
      ;
  return text;
}

namespace {

struct RunOptions {
  std::string config;
  std::string out;
  std::string controls;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool no_timestamp = false;
};

// Input files that fail validation, reported with exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) throw std::runtime_error("cannot write '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& doc) { write_file(path, doc.dump(2) + "\n"); }

struct Run {
  ScenarioConfig config;
  fs::path dir;
  json outputs = json::array();

  void emit(const std::string& name, const std::string& content) {
    write_file(dir / name, content);
    outputs.push_back(name);
  }
  void emit_json(const std::string& name, const json& doc) { emit(name, doc.dump(2) + "\n"); }
};

Run prepare(const RunOptions& opts) {
  ScenarioConfig config = load_config(opts.config);
  if (opts.seed) {
    config.seed = *opts.seed;
    config.resolved["monte_carlo"]["seed"] = *opts.seed;
  }
  if (opts.threads < 1) throw InputError("--threads must be at least 1");
  set_max_threads(static_cast<unsigned>(opts.threads));
  const fs::path dir = opts.out.empty() ? fs::path(config.output_directory) : fs::path(opts.out);
  fs::create_directories(dir);
  return Run{std::move(config), dir};
}

void write_manifest(Run& run, const std::string& command, const RunOptions& opts) {
  json m;
  m["schema"] = "rsc.manifest.v1";
  m["command"] = command;
  m["config"] = run.config.resolved;
  if (!opts.controls.empty()) m["controls"] = fs::path(opts.controls).filename().string();
  m["outputs"] = run.outputs;
  if (!opts.no_timestamp) m["timestamp"] = utc_timestamp();
  write_json(run.dir / "manifest.json", m);
}

// Controls from a file must live on the config's time grid and action grid.
std::pair<RelaxedControl, SingularControl> load_controls(const std::string& path, const ControlProblem& problem) {
  ControlsDocument doc = [&] {
    try {
      return read_controls(path);
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  }();
  const TimeGrid& time = problem.time;
  if (doc.mu.steps() != time.steps() || std::abs(doc.horizon - time.horizon()) > 1e-12 * time.horizon())
    throw InputError("controls file '" + path + "' was written for another time grid");
  if (doc.grid.count() != problem.actions.count() || doc.grid.dim() != problem.actions.dim() ||
      doc.grid.points() != problem.actions.points())
    throw InputError("controls file '" + path + "' was written for another action grid");
  if (doc.xi.dim() != problem.singular_dim())
    throw InputError("controls file '" + path + "' has the wrong singular dimension");
  if (doc.xi.cap() != problem.cap) doc.xi = SingularControl(doc.xi.increments(), problem.cap);
  return {std::move(doc.mu), std::move(doc.xi)};
}

json cost_json(const CostEstimate& c) { return {{"mean", c.mean}, {"se", c.se}, {"excluded", c.excluded}}; }

json diagnostics_json(const Run& run, const ScenarioSet& set, const TrajectoryBundle& bundle,
                      const MomentReport& moments) {
  json d;
  d["moments"] = to_json(moments);
  d["cost"] = cost_json(evaluate_cost(run.config.problem, bundle));
  d["clamp_events"] = set.field->clamp_events();
  if (run.config.portfolio)
    d["market_price_of_risk_energy"] =
        market_price_of_risk_energy(run.config.portfolio->market, run.config.problem.time);
  return d;
}

std::string trajectories(const Run& run, const TrajectoryBundle& bundle) {
  std::ostringstream os;
  write_trajectories_csv(os, bundle, run.config.trajectory_scenarios);
  return os.str();
}

std::string adjoints(const Run& run, const AdjointSolution& adjoint) {
  std::ostringstream os;
  write_adjoints_csv(os, adjoint, run.config.problem.time, run.config.trajectory_scenarios);
  return os.str();
}

void print_report(const OptimalityReport& r) {
  auto line = [](const char* name, double value, double tol, bool ok) {
    std::cout << std::left << std::setw(22) << name << std::right << std::setw(16) << std::setprecision(6)
              << value << std::setw(16) << tol << "  " << (ok ? "PASS" : "FAIL") << '\n';
  };
  std::cout << std::left << std::setw(22) << "condition" << std::right << std::setw(16) << "value" << std::setw(16)
            << "tolerance" << "  result\n";
  line("hamiltonian gap", r.hamiltonian_gap, r.tol_gap, r.hamiltonian_ok);
  line("singular slack min", r.slack_min, -r.tol_slack, r.slack_ok);
  line("complementarity", r.complementarity_violation, r.tol_comp, r.complementarity_ok);
  std::cout << (r.passed() ? "maximum principle: PASS\n" : "maximum principle: FAIL\n");
}

bool moments_ok(const MomentReport& m) {
  if (m.finite && !m.exploding) return true;
  std::cerr << "error: state paths " << (m.finite ? "exploded" : "became non-finite") << '\n';
  return false;
}

int cmd_simulate(const RunOptions& opts) {
  Run run = prepare(opts);
  const ControlProblem& problem = run.config.problem;
  auto [mu, xi] = opts.controls.empty()
                      ? std::pair{run.config.initial_relaxed(), problem.zero_singular()}
                      : load_controls(opts.controls, problem);
  const ScenarioSet set = sample_scenarios(problem, run.config.scenarios, run.config.seed);
  const TrajectoryBundle bundle = simulate_forward(problem, set, mu, xi);
  const MomentReport moments = moment_diagnostics(bundle, *set.field, 2.0);
  run.emit("trajectories.csv", trajectories(run, bundle));
  run.emit_json("diagnostics.json", diagnostics_json(run, set, bundle, moments));
  write_manifest(run, "simulate", opts);
  if (!moments_ok(moments)) return kExitNumerical;
  std::cout << "simulated " << run.config.scenarios << " scenarios x " << problem.time.steps() << " steps; E[x_T] = "
            << moments.terminal_x << ", E[y_T] = " << moments.terminal_y << '\n';
  return kExitOk;
}

int cmd_optimize(const RunOptions& opts) {
  Run run = prepare(opts);
  const ControlProblem& problem = run.config.problem;
  auto [mu0, xi0] = opts.controls.empty()
                        ? std::pair{run.config.initial_relaxed(), problem.zero_singular()}
                        : load_controls(opts.controls, problem);
  const ScenarioSet set = sample_scenarios(problem, run.config.scenarios, run.config.seed);
  const OptimizationResult result = optimize(problem, set, mu0, xi0, run.config.optimizer);
  const IterationState& s = result.state;

  const TrajectoryBundle bundle = simulate_forward(problem, set, s.mu, s.xi);
  const MomentReport moments = moment_diagnostics(bundle, *set.field, 2.0);
  const AdjointSolution adjoint =
      solve_adjoint(run.config.adjoint_method, problem, set, bundle, run.config.optimizer.adjoint);
  const OptimalityReport report = check_max_principle(problem, set, bundle, adjoint, run.config.tolerances);

  std::ostringstream iterations;
  write_iterations_csv(iterations, result.trace);
  run.emit("iterations.csv", iterations.str());
  run.emit_json("controls.json", controls_to_json(problem.time, problem.actions, s.mu, s.xi));
  json r;
  r["status"] = s.converged ? "converged" : "not-converged";
  r["converged"] = s.converged;
  r["stalled"] = s.stalled;
  r["iterations"] = s.iteration;
  r["cost"] = {{"mean", s.cost}, {"se", s.cost_se}};
  r["gap"] = {{"value", s.gap}, {"se", s.gap_se}};
  r["singular_total_variation"] = s.xi.total_variation();
  r["adjoint_method"] = to_string(adjoint.method);
  r["adjoint_warnings"] = adjoint.warnings;
  r["optimality"] = to_json(report);
  run.emit_json("report.json", r);
  run.emit("adjoints.csv", adjoints(run, adjoint));
  run.emit("trajectories.csv", trajectories(run, bundle));
  run.emit_json("diagnostics.json", diagnostics_json(run, set, bundle, moments));
  write_manifest(run, "optimize", opts);
  if (!moments_ok(moments)) return kExitNumerical;
  std::cout << (s.converged ? "converged" : "not converged") << " after " << s.iteration
            << " iterations; cost = " << s.cost << " +- " << s.cost_se << ", gap = " << s.gap << '\n';
  print_report(report);
  return kExitOk;
}

int cmd_verify(const RunOptions& opts) {
  Run run = prepare(opts);
  const ControlProblem& problem = run.config.problem;
  auto [mu, xi] = load_controls(opts.controls, problem);
  const ScenarioSet set = sample_scenarios(problem, run.config.scenarios, run.config.seed);
  const TrajectoryBundle bundle = simulate_forward(problem, set, mu, xi);
  const MomentReport moments = moment_diagnostics(bundle, *set.field, 2.0);
  if (!moments_ok(moments)) {
    write_manifest(run, "verify", opts);
    return kExitNumerical;
  }
  const AdjointSolution adjoint =
      solve_adjoint(run.config.adjoint_method, problem, set, bundle, run.config.optimizer.adjoint);
  const OptimalityReport report = check_max_principle(problem, set, bundle, adjoint, run.config.tolerances);
  json r = to_json(report);
  r["cost"] = cost_json(evaluate_cost(problem, bundle));
  r["adjoint_method"] = to_string(adjoint.method);
  r["adjoint_warnings"] = adjoint.warnings;
  run.emit_json("report.json", r);
  run.emit("adjoints.csv", adjoints(run, adjoint));
  run.emit("trajectories.csv", trajectories(run, bundle));
  write_manifest(run, "verify", opts);
  print_report(report);
  return report.passed() ? kExitOk : kExitVerifyFailed;
}

int cmd_example_bond(const std::string& out) {
  const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  fs::create_directories(dir);
  write_file(dir / "example-bond.json", std::string(example_bond_scenario()));
  std::cout << "wrote " << (dir / "example-bond.json").string() << '\n';
  return kExitOk;
}

void add_run_options(CLI::App* cmd, RunOptions& opts, bool controls_required) {
  cmd->add_option("--config", opts.config, "scenario config (JSON)")->required();
  cmd->add_option("--seed", opts.seed, "override the Monte Carlo seed");
  cmd->add_option("--threads", opts.threads, "maximum worker threads")->capture_default_str();
  cmd->add_option("--out", opts.out, "output directory (default: output.directory from the config)");
  cmd->add_flag("--no-timestamp", opts.no_timestamp, "omit the timestamp from manifest.json");
  auto* controls = cmd->add_option("--controls", opts.controls, "controls file (JSON) written by optimize");
  if (controls_required) controls->required();
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Relaxed-singular stochastic control solver"};
  app.require_subcommand(1);
  RunOptions opts;
  auto* simulate = app.add_subcommand("simulate", "simulate state paths under given or default controls");
  add_run_options(simulate, opts, false);
  auto* optimize_cmd = app.add_subcommand("optimize", "run the conditional-gradient optimizer");
  add_run_options(optimize_cmd, opts, false);
  auto* verify = app.add_subcommand("verify", "check the maximum principle for a controls file");
  add_run_options(verify, opts, true);
  auto* example = app.add_subcommand("example-bond", "write the packaged bond/stock portfolio scenario");
  example->add_option("--out", opts.out, "directory to write example-bond.json into");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalidInput;
  }

  try {
    if (*simulate) return cmd_simulate(opts);
    if (*optimize_cmd) return cmd_optimize(opts);
    if (*verify) return cmd_verify(opts);
    return cmd_example_bond(opts.out);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace rsc
