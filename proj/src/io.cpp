#include "rsc/io.hpp"

#include "rsc/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace rsc {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ModelError(what + " must be a nonempty array of rows");
  const Index rows = static_cast<Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) throw ModelError(what + " rows must be nonempty arrays");
  const Index cols = static_cast<Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw DimensionError(what + " rows must all have " + std::to_string(cols) + " entries");
    for (Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ModelError(what + " entries must be numbers");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

const json& require(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ModelError(std::string("controls document is missing '") + key + "'");
  return doc.at(key);
}

std::string cell(double v) { return format_double(v); }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json controls_to_json(const TimeGrid& time, const ActionGrid& grid, const RelaxedControl& mu,
                      const SingularControl& xi) {
  if (mu.steps() != time.steps() || xi.steps() != time.steps() || mu.count() != grid.count())
    throw DimensionError("controls do not match the time grid or action grid");
  json doc;
  doc["schema"] = kControlsSchema;
  doc["horizon"] = time.horizon();
  doc["steps"] = time.steps();
  doc["grid"] = {{"points", matrix_to_json(grid.points())},
                 {"lower", std::vector<double>(grid.lower().data(), grid.lower().data() + grid.dim())},
                 {"upper", std::vector<double>(grid.upper().data(), grid.upper().data() + grid.dim())}};
  doc["weights"] = matrix_to_json(mu.weights());
  doc["increments"] = matrix_to_json(xi.increments());
  doc["cap"] = xi.cap();
  return doc;
}

ControlsDocument controls_from_json(const json& doc) {
  try {
    if (!doc.is_object()) throw ModelError("controls document must be a JSON object");
    if (require(doc, "schema") != kControlsSchema)
      throw ModelError(std::string("controls document schema must be '") + kControlsSchema + "'");
    for (const auto& item : doc.items())
      if (item.key() != "schema" && item.key() != "horizon" && item.key() != "steps" && item.key() != "grid" &&
          item.key() != "weights" && item.key() != "increments" && item.key() != "cap")
        throw ModelError("unknown key '" + item.key() + "' in controls document");
    const double horizon = require(doc, "horizon").get<double>();
    const Index steps = require(doc, "steps").get<Index>();
    const json& g = require(doc, "grid");
    const Eigen::MatrixXd points = matrix_from_json(require(g, "points"), "grid points");
    const auto lo = require(g, "lower").get<std::vector<double>>();
    const auto hi = require(g, "upper").get<std::vector<double>>();
    ActionGrid grid(points, Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Index>(lo.size())),
                    Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Index>(hi.size())));
    RelaxedControl mu(matrix_from_json(require(doc, "weights"), "weights"));
    SingularControl xi(matrix_from_json(require(doc, "increments"), "increments"), require(doc, "cap").get<double>());
    TimeGrid time(horizon, steps);
    if (mu.steps() != steps || xi.steps() != steps)
      throw DimensionError("controls document has " + std::to_string(steps) + " steps but matrices with " +
                           std::to_string(mu.steps()) + " and " + std::to_string(xi.steps()) + " rows");
    if (mu.count() != grid.count()) throw DimensionError("weights do not have one column per grid point");
    return {horizon, std::move(grid), std::move(mu), std::move(xi)};
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed controls document: ") + e.what());
  }
}

ControlsDocument read_controls(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open controls file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ModelError("controls file '" + path + "' is not valid JSON: " + e.what());
  }
  return controls_from_json(doc);
}

void write_controls(const std::string& path, const TimeGrid& time, const ActionGrid& grid, const RelaxedControl& mu,
                    const SingularControl& xi) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << controls_to_json(time, grid, mu, xi).dump(2) << '\n';
}

void write_trajectories_csv(std::ostream& out, const TrajectoryBundle& bundle, Index max_scenarios) {
  const Index S = max_scenarios > 0 ? std::min(max_scenarios, bundle.scenarios()) : bundle.scenarios();
  const Index N = bundle.steps();
  const Index d = bundle.noise->dim();
  out << "scenario,step,time,x,y,x_post,y_post";
  for (Index i = 0; i < d; ++i) out << ",dB" << i;
  out << '\n';
  for (Index s = 0; s < S; ++s)
    for (Index k = 0; k <= N; ++k) {
      out << s << ',' << k << ',' << cell(bundle.time.time(k)) << ',' << cell(bundle.x(s, k)) << ','
          << cell(bundle.y(s, k));
      if (k < N) {
        out << ',' << cell(bundle.x_post(s, k)) << ',' << cell(bundle.y_post(s, k));
        for (Index i = 0; i < d; ++i) out << ',' << cell((*bundle.noise)(s, k, i));
      } else {
        out << ",,";
        for (Index i = 0; i < d; ++i) out << ',';
      }
      out << '\n';
    }
}

void write_adjoints_csv(std::ostream& out, const AdjointSolution& adjoint, const TimeGrid& time,
                        Index max_scenarios) {
  const Index S = max_scenarios > 0 ? std::min(max_scenarios, adjoint.scenarios()) : adjoint.scenarios();
  const Index N = adjoint.steps();
  const Index d = adjoint.dim();
  out << "scenario,step,time,px,py";
  for (Index i = 0; i < d; ++i) out << ",Px" << i;
  for (Index i = 0; i < d; ++i) out << ",Py" << i;
  out << '\n';
  for (Index s = 0; s < S; ++s)
    for (Index k = 0; k <= N; ++k) {
      out << s << ',' << k << ',' << cell(time.time(k)) << ',' << cell(adjoint.px(s, k)) << ','
          << cell(adjoint.py(s, k));
      for (Index i = 0; i < 2 * d; ++i) {
        out << ',';
        if (k < N) out << cell(i < d ? adjoint.Px[static_cast<std::size_t>(i)](s, k)
                                     : adjoint.Py[static_cast<std::size_t>(i - d)](s, k));
      }
      out << '\n';
    }
}

void write_iterations_csv(std::ostream& out, const std::vector<IterationRecord>& trace) {
  out << "iteration,cost,cost_se,gap,gap_se,theta,accepted,phi_drift\n";
  for (const auto& r : trace) {
    out << r.iteration << ',' << cell(r.cost) << ',' << cell(r.cost_se) << ',' << cell(r.gap) << ','
        << cell(r.gap_se) << ',' << cell(r.theta) << ',' << (r.accepted ? 1 : 0) << ',';
    if (r.phi_drift) out << cell(*r.phi_drift);
    out << '\n';
  }
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

constexpr char kCacheMagic[4] = {'R', 'S', 'C', 'B'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

void write_cache(const std::string& path, std::string_view kind, std::uint64_t key,
                 const std::vector<Eigen::MatrixXd>& matrices) {
  if (kind.size() != 4) throw std::invalid_argument("cache kind must be four bytes");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write cache '" + path + "'");
  out.write(kCacheMagic, 4);
  put(out, kCacheVersion);
  out.write(kind.data(), 4);
  put(out, key);
  put(out, static_cast<std::uint64_t>(matrices.size()));
  for (const auto& m : matrices) {
    put(out, static_cast<std::int64_t>(m.rows()));
    put(out, static_cast<std::int64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  }
  if (!out) throw std::runtime_error("failed writing cache '" + path + "'");
}

std::optional<std::vector<Eigen::MatrixXd>> read_cache(const std::string& path, std::string_view kind,
                                                        std::uint64_t key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[4], tag[4];
  std::uint32_t version = 0;
  std::uint64_t stored_key = 0, count = 0;
  if (!in.read(magic, 4) || std::memcmp(magic, kCacheMagic, 4) != 0) return std::nullopt;
  if (!get(in, version) || version != kCacheVersion) return std::nullopt;
  if (!in.read(tag, 4) || kind.size() != 4 || std::memcmp(tag, kind.data(), 4) != 0) return std::nullopt;
  if (!get(in, stored_key) || stored_key != key) return std::nullopt;
  if (!get(in, count)) return std::nullopt;
  std::vector<Eigen::MatrixXd> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::int64_t rows = 0, cols = 0;
    if (!get(in, rows) || !get(in, cols) || rows < 0 || cols < 0) return std::nullopt;
    Eigen::MatrixXd m(rows, cols);
    if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size())))
      return std::nullopt;
    out.push_back(std::move(m));
  }
  return out;
}

void write_bundle_cache(const std::string& path, std::uint64_t key, const TrajectoryBundle& bundle) {
  std::vector<Eigen::MatrixXd> mats{bundle.x, bundle.y, bundle.x_post, bundle.y_post};
  for (Index i = 0; i < bundle.noise->dim(); ++i) mats.push_back(bundle.noise->component(i));
  write_cache(path, "TRAJ", key, mats);
}

json to_json(const OptimalityReport& r) {
  json j;
  j["hamiltonian"] = {{"gap", r.hamiltonian_gap},
                      {"gap_se", r.hamiltonian_gap_se},
                      {"pathwise_gap", r.pathwise_gap},
                      {"tolerance", r.tol_gap},
                      {"pass", r.hamiltonian_ok},
                      {"maximizers", r.maximizers}};
  j["slack"] = {{"min", r.slack_min},
                {"expected_min", r.expected_slack_min},
                {"tolerance", r.tol_slack},
                {"pass", r.slack_ok}};
  j["complementarity"] = {{"violation", r.complementarity_violation},
                          {"tolerance", r.tol_comp},
                          {"pass", r.complementarity_ok}};
  j["adjoint_scale"] = r.adjoint_scale;
  j["pass"] = r.passed();
  return j;
}

json to_json(const MomentReport& r) {
  return {{"order", r.order},
          {"sup_x", r.sup_x},
          {"sup_x_se", r.sup_x_se},
          {"sup_y", r.sup_y},
          {"sup_y_se", r.sup_y_se},
          {"terminal_x", r.terminal_x},
          {"terminal_y", r.terminal_y},
          {"log_exp_moment_phi", r.log_exp_moment_phi},
          {"clamp_events", r.clamp_events},
          {"finite", r.finite},
          {"exploding", r.exploding}};
}

json to_json(const DerivativeEstimate& e) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"total", num(e.total)},         {"total_se", num(e.total_se)}, {"singular", num(e.singular)},
          {"singular_se", num(e.singular_se)}, {"relaxed", num(e.relaxed)},   {"relaxed_se", num(e.relaxed_se)}};
}

}  // namespace rsc
