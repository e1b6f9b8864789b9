#include "rsc/config.hpp"

#include "rsc/errors.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace rsc {

using nlohmann::json;

namespace {

// Reads one JSON object, recording each value it hands out (or the default it substitutes)
// into the resolved output. finish() rejects keys that were never asked for.
class Section {
 public:
  Section(const json& in, json& out, std::string path) : in_(in), out_(out), path_(std::move(path)) {
    if (!in_.is_null() && !in_.is_object()) fail("", "must be an object");
    if (!out_.is_object()) out_ = json::object();
  }

  bool has(const std::string& key) const { return in_.is_object() && in_.contains(key); }

  const json& raw(const std::string& key) {
    if (!has(key)) fail(key, "is required");
    used_.insert(key);
    out_[key] = in_.at(key);
    return in_.at(key);
  }

  // Raw value, or `fallback` when absent; either way recorded.
  json raw_or(const std::string& key, const json& fallback) {
    if (!has(key)) {
      out_[key] = fallback;
      return fallback;
    }
    return raw(key);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) fail(key, "is required");
      out_[key] = *fallback;
      return *fallback;
    }
    const json& v = raw(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }

  Index integer(const std::string& key, std::optional<Index> fallback = std::nullopt, Index minimum = 0) {
    Index value;
    if (!has(key)) {
      if (!fallback) fail(key, "is required");
      value = *fallback;
      out_[key] = value;
    } else {
      const json& v = raw(key);
      if (!v.is_number_integer()) fail(key, "must be an integer");
      value = v.get<Index>();
    }
    if (value < minimum) fail(key, "must be at least " + std::to_string(minimum));
    return value;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) {
      out_[key] = fallback;
      return fallback;
    }
    const json& v = raw(key);
    if (!v.is_number_unsigned()) fail(key, "must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) {
      out_[key] = fallback;
      return fallback;
    }
    const json& v = raw(key);
    if (!v.is_boolean()) fail(key, "must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) fail(key, "is required");
      out_[key] = *fallback;
      return *fallback;
    }
    const json& v = raw(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }

  // Nested object; absent sections read as empty so their defaults are recorded.
  Section child(const std::string& key) {
    used_.insert(key);
    return Section(has(key) ? in_.at(key) : null_, out_[key], join(key));
  }

  void set(const std::string& key, json value) { out_[key] = std::move(value); }

  void finish() const {
    if (!in_.is_object()) return;
    for (const auto& item : in_.items())
      if (!used_.count(item.key())) throw ConfigError("unknown key '" + join(item.key()) + "'");
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    throw ConfigError((key.empty() ? (path_.empty() ? std::string("config") : path_) : join(key)) + " " + message);
  }

 private:
  static inline const json null_ = nullptr;
  const json& in_;
  json& out_;
  std::string path_;
  std::set<std::string> used_;
};

Eigen::VectorXd number_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + " must be an array of numbers");
  Eigen::VectorXd out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(path + " must be an array of numbers");
    out(static_cast<Index>(i)) = v[i].get<double>();
  }
  return out;
}

// Rows are either one time-constant row or one row per step.
Eigen::MatrixXd row_table(const json& v, Index width, Index steps, const std::string& path) {
  if (v.is_number()) return Eigen::MatrixXd::Constant(1, width, v.get<double>());
  if (!v.is_array() || v.empty()) throw ConfigError(path + " must be a number, a row or a list of rows");
  if (v[0].is_number()) {
    const Eigen::VectorXd row = number_list(v, path);
    if (row.size() != width) throw ConfigError(path + " needs " + std::to_string(width) + " entries");
    return row.transpose();
  }
  if (static_cast<Index>(v.size()) != steps)
    throw ConfigError(path + " needs one row per step (" + std::to_string(steps) + ")");
  Eigen::MatrixXd out(steps, width);
  for (Index k = 0; k < steps; ++k) {
    const Eigen::VectorXd row = number_list(v[static_cast<std::size_t>(k)], path);
    if (row.size() != width) throw ConfigError(path + " rows need " + std::to_string(width) + " entries");
    out.row(k) = row.transpose();
  }
  return out;
}

// Coefficient over the action grid: a number, one value per grid point, one row per step,
// or {"affine": [a0, a1, ..., a_dim]} meaning a0 + sum_c a_c u_c.
Eigen::MatrixXd scalar_spec(const json& v, const ActionGrid& grid, Index steps, const std::string& path) {
  if (v.is_object()) {
    if (v.size() != 1 || !v.contains("affine")) throw ConfigError(path + " object form must be {\"affine\": [...]}");
    const Eigen::VectorXd a = number_list(v.at("affine"), path + ".affine");
    if (a.size() != grid.dim() + 1)
      throw ConfigError(path + ".affine needs " + std::to_string(grid.dim() + 1) + " entries");
    Eigen::MatrixXd out(1, grid.count());
    for (Index j = 0; j < grid.count(); ++j) out(0, j) = a(0) + grid.point(j).dot(a.tail(grid.dim()));
    return out;
  }
  return row_table(v, grid.count(), steps, path);
}

// Vector coefficient: a number for every component or a list with one scalar spec per component.
std::vector<Eigen::MatrixXd> vector_spec(const json& v, Index dim, const ActionGrid& grid, Index steps,
                                         const std::string& path) {
  if (v.is_number()) return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(dim), scalar_spec(v, grid, steps, path));
  if (!v.is_array() || static_cast<Index>(v.size()) != dim)
    throw ConfigError(path + " needs one entry per Brownian component (" + std::to_string(dim) + ")");
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(scalar_spec(v[i], grid, steps, path + "[" + std::to_string(i) + "]"));
  return out;
}

struct TableSpecs {
  Eigen::MatrixXd upsilon, phi;
  std::vector<Eigen::MatrixXd> chi, psi;
};

TableSpecs read_tables(Section& s, Index dim, const ActionGrid& grid, Index steps) {
  TableSpecs t;
  t.upsilon = scalar_spec(s.raw_or("upsilon", 0.0), grid, steps, s.join("upsilon"));
  t.phi = scalar_spec(s.raw_or("phi", 0.0), grid, steps, s.join("phi"));
  t.chi = vector_spec(s.raw_or("chi", 0.0), dim, grid, steps, s.join("chi"));
  t.psi = vector_spec(s.raw_or("psi", 0.0), dim, grid, steps, s.join("psi"));
  return t;
}

std::vector<CoefficientTable> expand(const TableSpecs& t, Index dim, Index actions, Index steps) {
  bool per_step = t.upsilon.rows() > 1 || t.phi.rows() > 1;
  for (const auto& m : t.chi) per_step = per_step || m.rows() > 1;
  for (const auto& m : t.psi) per_step = per_step || m.rows() > 1;
  auto row = [](const Eigen::MatrixXd& m, Index k) { return m.row(m.rows() == 1 ? 0 : k); };
  std::vector<CoefficientTable> out;
  for (Index k = 0; k < (per_step ? steps : 1); ++k) {
    CoefficientTable table = CoefficientTable::zero(actions, dim);
    table.upsilon = row(t.upsilon, k);
    table.phi = row(t.phi, k);
    for (Index i = 0; i < dim; ++i) {
      table.chi.row(i) = row(t.chi[static_cast<std::size_t>(i)], k);
      table.psi.row(i) = row(t.psi[static_cast<std::size_t>(i)], k);
    }
    out.push_back(std::move(table));
  }
  return out;
}

Eigen::VectorXd fixed_vector(Section& s, const std::string& key, Index dim, double fallback) {
  const json v = s.raw_or(key, fallback);
  if (v.is_number()) return Eigen::VectorXd::Constant(dim, v.get<double>());
  const Eigen::VectorXd out = number_list(v, s.join(key));
  if (out.size() != dim) throw ConfigError(s.join(key) + " needs " + std::to_string(dim) + " entries");
  return out;
}

ActionGrid read_actions(Section s) {
  ActionGrid grid = [&] {
    if (s.has("values")) {
      const Eigen::VectorXd v = number_list(s.raw("values"), s.join("values"));
      return ActionGrid::line(v);
    }
    const json& pts = s.raw("points");
    if (!pts.is_array() || pts.empty()) throw ConfigError(s.join("points") + " must be a nonempty list of points");
    Eigen::MatrixXd m;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const Eigen::VectorXd p = number_list(pts[j], s.join("points"));
      if (j == 0) m.resize(static_cast<Index>(pts.size()), p.size());
      if (p.size() != m.cols()) throw ConfigError(s.join("points") + " entries must share one dimension");
      m.row(static_cast<Index>(j)) = p.transpose();
    }
    Eigen::VectorXd lo = m.colwise().minCoeff().transpose(), hi = m.colwise().maxCoeff().transpose();
    return ActionGrid(m, lo, hi);
  }();
  if (s.has("lower") || s.has("upper")) {
    const Eigen::VectorXd lo = fixed_vector(s, "lower", grid.dim(), 0.0);
    const Eigen::VectorXd hi = fixed_vector(s, "upper", grid.dim(), 0.0);
    grid = ActionGrid(grid.points(), lo, hi);
  }
  s.finish();
  return grid;
}

ControlProblem read_canonical(Section& p, const TimeGrid& time, double clamp_tail) {
  const Index N = time.steps();
  const Index d = p.integer("brownian_dim", 1, 1);
  if (d > kMaxBrownianDim) throw ConfigError(p.join("brownian_dim") + " must be at most " + std::to_string(kMaxBrownianDim));
  const ActionGrid grid = read_actions(p.child("actions"));
  const Index J = grid.count();

  CoefficientModel model;
  {
    Section c = p.child("coefficients");
    model.base = expand(read_tables(c, d, grid, N), d, J, N);
    const bool bounded = c.has("psi_bound") && !c.raw("psi_bound").is_null();
    model.psi_bound = bounded ? c.number("psi_bound") : std::numeric_limits<double>::infinity();
    if (!bounded) c.set("psi_bound", nullptr);
    const json factors = c.raw_or("factors", json::array());
    if (!factors.is_array()) throw ConfigError(c.join("factors") + " must be an array");
    json resolved_factors = json::array();
    for (std::size_t i = 0; i < factors.size(); ++i) {
      json out;
      Section f(factors[i], out, c.join("factors[" + std::to_string(i) + "]"));
      FactorSpec spec;
      spec.name = f.string("name", "factor" + std::to_string(i));
      spec.dynamics.initial = f.number("initial", 0.0);
      spec.dynamics.drift = f.number("drift", 0.0);
      spec.dynamics.mean_reversion = f.number("mean_reversion", 0.0);
      spec.dynamics.volatility = fixed_vector(f, "volatility", d, 0.0);
      Section l = f.child("loadings");
      spec.loadings = expand(read_tables(l, d, grid, N), d, J, N);
      l.finish();
      f.finish();
      model.factors.push_back(std::move(spec));
      resolved_factors.push_back(std::move(out));
    }
    c.set("factors", resolved_factors);
    c.finish();
  }
  {
    Section g = p.child("gains");
    const json gx = g.raw_or("x", json::array({1.0}));
    if (!gx.is_array() || gx.empty()) throw ConfigError(g.join("x") + " must be a row or a list of rows");
    const Index m = gx[0].is_array() ? static_cast<Index>(gx[0].size()) : static_cast<Index>(gx.size());
    model.gain_x = row_table(gx, m, N, g.join("x"));
    model.gain_y = row_table(g.raw_or("y", json(std::vector<double>(static_cast<std::size_t>(m), 0.0))), m, N,
                             g.join("y"));
    g.finish();
  }
  model.clamp_tail = clamp_tail;

  SecondStateDynamics second = SecondStateDynamics::constant(d);
  {
    Section y = p.child("second_state");
    second.drift_intercept = y.number("drift_intercept", 0.0);
    second.drift_slope = y.number("drift_slope", 0.0);
    second.vol_intercept = fixed_vector(y, "vol_intercept", d, 0.0);
    second.vol_slope = fixed_vector(y, "vol_slope", d, 0.0);
    y.finish();
  }

  RunningCost running;
  {
    Section r = p.child("running_cost");
    const Eigen::MatrixXd a = scalar_spec(r.raw_or("action_cost", 0.0), grid, 1, r.join("action_cost"));
    if (a.rows() != 1) throw ConfigError(r.join("action_cost") + " must not vary with time");
    running.action_cost = a.row(0);
    running.discount = r.number("discount", 0.0);
    running.x_linear = r.number("x_linear", 0.0);
    running.y_linear = r.number("y_linear", 0.0);
    running.xx = r.number("xx", 0.0);
    running.yy = r.number("yy", 0.0);
    running.xy = r.number("xy", 0.0);
    r.finish();
  }
  TerminalCost terminal;
  {
    Section t = p.child("terminal_cost");
    const std::string kind = t.string("kind", "quadratic");
    if (kind == "quadratic") {
      terminal.kind = TerminalCost::Kind::quadratic;
      terminal.constant = t.number("constant", 0.0);
      terminal.x_linear = t.number("x_linear", 0.0);
      terminal.y_linear = t.number("y_linear", 0.0);
      terminal.xx = t.number("xx", 0.0);
      terminal.yy = t.number("yy", 0.0);
      terminal.xy = t.number("xy", 0.0);
    } else if (kind == "saturating") {
      terminal.kind = TerminalCost::Kind::saturating;
      terminal.scale = t.number("scale", 1.0);
      terminal.rate = t.number("rate", 1.0);
    } else {
      throw ConfigError(t.join("kind") + " must be quadratic or saturating");
    }
    t.finish();
  }
  const Index m = model.singular_dim();
  const Eigen::MatrixXd k = row_table(p.raw_or("singular_cost", 0.0), m, N, p.join("singular_cost"));

  ControlProblem problem{time,
                         grid,
                         std::move(model),
                         std::move(second),
                         std::make_shared<StandardObjective>(std::move(running), terminal, k),
                         p.number("x0", 0.0),
                         p.number("y0", 0.0)};
  Section sing = p.child("singular");
  problem.cap = sing.number("cap", 10.0);
  problem.rate_cap = sing.number("rate_cap", 10.0);
  sing.finish();
  problem.validate();
  return problem;
}

PortfolioProblem read_finance(Section& p, const TimeGrid& time, double clamp_tail) {
  MarketModel market;
  {
    Section m = p.child("market");
    Section v = m.child("volatility");
    market.volatility.kind = volatility_kind_from_string(v.string("model", "ho-lee"));
    market.volatility.sigma = v.number("sigma", market.volatility.sigma);
    market.volatility.mean_reversion = v.number("mean_reversion", market.volatility.mean_reversion);
    v.finish();
    Section r = m.child("short_rate");
    market.initial_short_rate = r.number("initial", market.initial_short_rate);
    market.short_rate_drift = r.number("drift", market.short_rate_drift);
    if (r.has("path") && !r.raw("path").is_null()) market.short_rate_path = number_list(r.raw("path"), r.join("path"));
    else r.set("path", nullptr);
    r.finish();
    const json theta = m.raw_or("market_price_of_risk", 0.1);
    market.market_price_of_risk =
        theta.is_number() ? Eigen::VectorXd::Constant(1, theta.get<double>())
                          : number_list(theta, m.join("market_price_of_risk"));
    auto list = [&](const std::string& key, const std::vector<double>& fallback) {
      const Eigen::VectorXd v = number_list(m.raw_or(key, fallback), m.join(key));
      return std::vector<double>(v.data(), v.data() + v.size());
    };
    market.maturities = list("maturities", market.maturities);
    market.consumption = list("consumption", market.consumption);
    m.finish();
  }
  PortfolioParams params;
  {
    Section q = p.child("portfolio");
    params.x0 = q.number("x0", params.x0);
    params.y0 = q.number("y0", params.y0);
    params.stock_drift = q.number("stock_drift", params.stock_drift);
    params.stock_volatility = q.number("stock_volatility", params.stock_volatility);
    params.bond_cost = q.number("bond_cost", params.bond_cost);
    params.stock_cost = q.number("stock_cost", params.stock_cost);
    params.discount = q.number("discount", params.discount);
    params.utility = utility_from_string(q.string("utility", to_string(params.utility)));
    params.utility_power = q.number("utility_power", params.utility_power);
    params.maximize_utility = q.boolean("maximize_utility", params.maximize_utility);
    params.terminal_scale = q.number("terminal_scale", params.terminal_scale);
    params.terminal_rate = q.number("terminal_rate", params.terminal_rate);
    const json k = q.raw_or("transfer_cost", json::array({0.0, 0.0}));
    params.transfer_cost = k.is_number() ? Eigen::RowVectorXd::Constant(2, k.get<double>())
                                         : Eigen::RowVectorXd(number_list(k, q.join("transfer_cost")).transpose());
    params.cap = q.number("cap", params.cap);
    params.rate_cap = q.number("rate_cap", params.rate_cap);
    q.finish();
  }
  params.clamp_tail = clamp_tail;
  return build_portfolio_problem(market, params, time);
}

}  // namespace

RelaxedControl ScenarioConfig::initial_relaxed() const {
  if (initial_control == InitialControl::uniform) return problem.uniform_control();
  return RelaxedControl::constant_action(problem.time.steps(), problem.actions.count(), initial_action);
}

ScenarioConfig parse_config(const json& doc) {
  try {
    json resolved = json::object();
    Section root(doc, resolved, "");
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    if (root.string("schema") != kScenarioSchema)
      throw ConfigError(std::string("schema must be '") + kScenarioSchema + "'");

    Section t = root.child("time");
    const TimeGrid time(t.number("horizon"), t.integer("steps", std::nullopt, 1));
    t.finish();

    Section mc = root.child("monte_carlo");
    const Index scenarios = mc.integer("scenarios", 1000, 1);
    const std::uint64_t seed = mc.unsigned_integer("seed", 1);
    const double clamp_tail = mc.number("clamp_tail", 0.0);
    mc.finish();

    Section p = root.child("problem");
    const std::string kind = p.string("kind");
    std::optional<PortfolioProblem> portfolio;
    std::optional<ControlProblem> problem;
    if (kind == "canonical") {
      problem = read_canonical(p, time, clamp_tail);
    } else if (kind == "finance") {
      portfolio = read_finance(p, time, clamp_tail);
      problem = portfolio->problem;
    } else {
      throw ConfigError("problem.kind must be canonical or finance");
    }
    p.finish();

    ScenarioConfig config(std::move(*problem));
    config.portfolio = std::move(portfolio);
    config.scenarios = scenarios;
    config.seed = seed;

    Section c = root.child("controls");
    const std::string initial = c.string("initial", "uniform");
    if (initial == "uniform") {
      config.initial_control = ScenarioConfig::InitialControl::uniform;
    } else if (initial == "dirac") {
      config.initial_control = ScenarioConfig::InitialControl::dirac;
      config.initial_action = c.integer("action", 0);
      if (config.initial_action >= config.problem.actions.count())
        throw ConfigError("controls.action must index the action grid");
    } else {
      throw ConfigError("controls.initial must be uniform or dirac");
    }
    c.finish();

    Section o = root.child("optimizer");
    config.optimizer.max_iterations = o.integer("max_iterations", config.optimizer.max_iterations);
    config.optimizer.gap_tolerance = o.number("gap_tolerance", config.optimizer.gap_tolerance);
    config.optimizer.gap_se_multiplier = o.number("gap_se_multiplier", config.optimizer.gap_se_multiplier);
    config.optimizer.armijo_c1 = o.number("armijo_c1", config.optimizer.armijo_c1);
    config.optimizer.max_backtracks = o.integer("max_backtracks", config.optimizer.max_backtracks);
    config.optimizer.phi_check_every = o.integer("phi_check_every", config.optimizer.phi_check_every);
    Section a = o.child("adjoint");
    const std::string method = a.string("method", "regression");
    if (method == "regression") config.adjoint_method = AdjointMethod::regression;
    else if (method == "phi") config.adjoint_method = AdjointMethod::phi_construction;
    else throw ConfigError("optimizer.adjoint.method must be regression or phi");
    config.optimizer.adjoint.degree = static_cast<int>(a.integer("degree", 2));
    if (config.optimizer.adjoint.degree > 2) throw ConfigError("optimizer.adjoint.degree must be 0, 1 or 2");
    config.optimizer.adjoint.ridge = a.number("ridge", config.optimizer.adjoint.ridge);
    a.finish();
    o.finish();

    Section tol = root.child("tolerances");
    config.tolerances.gap_se_multiplier = tol.number("gap_se_multiplier", config.tolerances.gap_se_multiplier);
    config.tolerances.gap_floor = tol.number("gap_floor", config.tolerances.gap_floor);
    config.tolerances.slack_relative = tol.number("slack_relative", config.tolerances.slack_relative);
    config.tolerances.complementarity_relative =
        tol.number("complementarity_relative", config.tolerances.complementarity_relative);
    tol.finish();

    Section out = root.child("output");
    config.output_directory = out.string("directory", config.output_directory);
    config.trajectory_scenarios = out.integer("trajectory_scenarios", config.trajectory_scenarios);
    out.finish();

    root.finish();
    config.resolved = std::move(resolved);
    return config;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace rsc
