#include "rsc/adjoint.hpp"

#include "rsc/errors.hpp"
#include "rsc/parallel.hpp"
#include "rsc/regression.hpp"

#include <cmath>

namespace rsc {

namespace {

// Coefficients under mu and running-cost gradients along every scenario path.
struct PathCoefficients {
  Eigen::MatrixXd phi;               // S x N
  std::vector<Eigen::MatrixXd> psi;  // d matrices, S x N
  Eigen::MatrixXd hx;                // S x N, at the post-jump state
  Eigen::MatrixXd hy;
};

PathCoefficients path_coefficients(const CoefficientField& field, const RelaxedControl& mu,
                                   const TrajectoryBundle* bundle, const Objective* objective) {
  const Index S = field.scenarios();
  const Index N = field.steps();
  const Index d = field.brownian_dim();
  PathCoefficients pc{Eigen::MatrixXd(S, N), std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(d),
                                                                          Eigen::MatrixXd(S, N)),
                      Eigen::MatrixXd(), Eigen::MatrixXd()};
  if (bundle) {
    pc.hx.resize(S, N);
    pc.hy.resize(S, N);
  }
  for (Index k = 0; k < N; ++k) {
    const Eigen::VectorXd w = mu.row(k).transpose();
    const ReducedStep r = field.reduce(k, w);
    const double t = field.time().time(k);
    parallel_for(S, [&](Index s) {
      const StepCoefficients c = field.evaluate(r, s, k);
      pc.phi(s, k) = c.phi;
      for (Index i = 0; i < d; ++i) pc.psi[static_cast<std::size_t>(i)](s, k) = c.psi(i);
      if (bundle) {
        const double x = bundle->x_post(s, k), y = bundle->y_post(s, k);
        pc.hx(s, k) = objective->running_dx(t, x, y, w);
        pc.hy(s, k) = objective->running_dy(t, x, y, w);
      }
    });
  }
  return pc;
}

void check_inputs(const ControlProblem& problem, const ScenarioSet& set, const TrajectoryBundle& bundle) {
  if (bundle.scenarios() != set.scenarios() || bundle.steps() != problem.time.steps())
    throw DimensionError("trajectory bundle does not match the scenario set");
  if (bundle.noise != set.noise) throw std::invalid_argument("trajectory bundle was simulated with different noise");
}

Eigen::MatrixXd regressors_at(const ScenarioSet& set, const TrajectoryBundle& bundle, Index k) {
  const CoefficientField& field = *set.field;
  Eigen::MatrixXd r(bundle.scenarios(), 2 + field.factor_count());
  r.col(0) = bundle.x_post.col(k);
  r.col(1) = bundle.y_post.col(k);
  for (Index f = 0; f < field.factor_count(); ++f) r.col(2 + f) = field.factor_path(f).col(k);
  return r;
}

void note_warnings(const CrossSectionRegression& reg, Index k, std::vector<std::string>& out) {
  constexpr std::size_t kMaxWarnings = 20;
  for (const auto& w : reg.warnings())
    if (out.size() < kMaxWarnings) out.push_back("step " + std::to_string(k) + ": " + w);
}

void terminal_values(const ControlProblem& problem, const TrajectoryBundle& bundle, AdjointSolution& sol) {
  const Index N = bundle.steps();
  for (Index s = 0; s < bundle.scenarios(); ++s) {
    const double x = bundle.x(s, N), y = bundle.y(s, N);
    sol.px(s, N) = problem.objective->terminal_dx(x, y);
    sol.py(s, N) = problem.objective->terminal_dy(x, y);
    if (!std::isfinite(sol.px(s, N)) || !std::isfinite(sol.py(s, N)))
      throw NumericalError("non-finite terminal gradient", N, s);
  }
}

AdjointSolution allocate(AdjointMethod method, Index S, Index N, Index d) {
  AdjointSolution sol;
  sol.method = method;
  sol.px.resize(S, N + 1);
  sol.py.resize(S, N + 1);
  sol.Px.assign(static_cast<std::size_t>(d), Eigen::MatrixXd(S, N));
  sol.Py.assign(static_cast<std::size_t>(d), Eigen::MatrixXd(S, N));
  sol.px_next.resize(S, N);
  sol.py_next.resize(S, N);
  return sol;
}

void check_step(const AdjointSolution& sol, Index k) {
  for (Index s = 0; s < sol.scenarios(); ++s)
    if (!std::isfinite(sol.px(s, k)) || !std::isfinite(sol.py(s, k)))
      throw NumericalError("adjoint became non-finite", k, s);
}

}  // namespace

const char* to_string(AdjointMethod method) {
  return method == AdjointMethod::phi_construction ? "phi-construction" : "regression";
}

NoiseVector AdjointSolution::Px_at(Index s, Index k) const {
  NoiseVector v(dim());
  for (Index i = 0; i < dim(); ++i) v(i) = Px[static_cast<std::size_t>(i)](s, k);
  return v;
}

NoiseVector AdjointSolution::Py_at(Index s, Index k) const {
  NoiseVector v(dim());
  for (Index i = 0; i < dim(); ++i) v(i) = Py[static_cast<std::size_t>(i)](s, k);
  return v;
}

double adjoint_driver_x(const StepCoefficients& c, double p, const NoiseVector& P, double hx) {
  return -(c.phi * p + c.psi.dot(P) + hx);
}

double adjoint_driver_y(const SecondStateDynamics& second, double p, const NoiseVector& P, double hy) {
  return -(second.drift_dy() * p + second.diffusion_dy().dot(P) + hy);
}

FundamentalPairs solve_fundamental(const CoefficientField& field, const BrownianIncrements& noise,
                                   const SecondStateDynamics& second, const RelaxedControl& mu) {
  if (noise.steps() != field.steps() || noise.scenarios() != field.scenarios() ||
      noise.dim() != field.brownian_dim())
    throw DimensionError("noise does not match the coefficient field");
  if (mu.steps() != field.steps() || mu.count() != field.actions())
    throw DimensionError("relaxed control does not match the coefficient field");
  const Index S = field.scenarios();
  const Index N = field.steps();
  const Index d = noise.dim();
  const double dt = field.time().dt();
  const PathCoefficients pc = path_coefficients(field, mu, nullptr, nullptr);
  const double by = second.drift_dy();
  const NoiseVector sy = second.diffusion_dy();

  FundamentalPairs out;
  for (auto* fp : {&out.x, &out.y}) {
    fp->phi.resize(S, N + 1);
    fp->phi_inv.resize(S, N + 1);
    fp->phi.col(0).setOnes();
    fp->phi_inv.col(0).setOnes();
  }
  parallel_for(S, [&](Index s) {
    for (Index k = 0; k < N; ++k) {
      double ax = pc.phi(s, k), sx_db = 0.0, sx2 = 0.0, sy_db = 0.0;
      for (Index i = 0; i < d; ++i) {
        const double psi = pc.psi[static_cast<std::size_t>(i)](s, k);
        const double db = noise(s, k, i);
        sx_db += psi * db;
        sx2 += psi * psi;
        sy_db += sy(i) * db;
      }
      out.x.phi(s, k + 1) = out.x.phi(s, k) * (1.0 + ax * dt + sx_db);
      out.x.phi_inv(s, k + 1) = out.x.phi_inv(s, k) * (1.0 + (sx2 - ax) * dt - sx_db);
      out.y.phi(s, k + 1) = out.y.phi(s, k) * (1.0 + by * dt + sy_db);
      out.y.phi_inv(s, k + 1) = out.y.phi_inv(s, k) * (1.0 + (sy.squaredNorm() - by) * dt - sy_db);
      if (!std::isfinite(out.x.phi(s, k + 1)) || !std::isfinite(out.x.phi_inv(s, k + 1)) ||
          !std::isfinite(out.y.phi(s, k + 1)) || !std::isfinite(out.y.phi_inv(s, k + 1)))
        throw NumericalError("fundamental solution became non-finite", k + 1, s);
    }
  });
  return out;
}

AdjointSolution solve_adjoint_regression(const ControlProblem& problem, const ScenarioSet& set,
                                         const TrajectoryBundle& bundle, const AdjointOptions& options) {
  check_inputs(problem, set, bundle);
  const CoefficientField& field = *set.field;
  const BrownianIncrements& noise = *set.noise;
  const Index S = bundle.scenarios();
  const Index N = bundle.steps();
  const Index d = noise.dim();
  const double dt = problem.time.dt();
  const PathCoefficients pc = path_coefficients(field, bundle.mu, &bundle, problem.objective.get());
  const double by = problem.second.drift_dy();
  const NoiseVector sy = problem.second.diffusion_dy();

  AdjointSolution sol = allocate(AdjointMethod::regression, S, N, d);
  terminal_values(problem, bundle, sol);

  // Targets per step: [p^x_{k+1}, p^x_{k+1} dB_i / dt, p^y_{k+1}, p^y_{k+1} dB_i / dt].
  Eigen::MatrixXd targets(S, 2 * (1 + d));
  for (Index k = N - 1; k >= 0; --k) {
    for (Index s = 0; s < S; ++s) {
      const double px = sol.px(s, k + 1), py = sol.py(s, k + 1);
      targets(s, 0) = px;
      targets(s, 1 + d) = py;
      for (Index i = 0; i < d; ++i) {
        const double db = noise(s, k, i) / dt;
        targets(s, 1 + i) = px * db;
        targets(s, 2 + d + i) = py * db;
      }
    }
    const CrossSectionRegression reg(regressors_at(set, bundle, k), options.degree, options.ridge);
    note_warnings(reg, k, sol.warnings);
    const Eigen::MatrixXd fitted = reg.fit(targets);
    for (Index s = 0; s < S; ++s) {
      const double pcx = fitted(s, 0), pcy = fitted(s, 1 + d);
      double px = pcx * (1.0 + pc.phi(s, k) * dt) + pc.hx(s, k) * dt;
      double py = pcy * (1.0 + by * dt) + pc.hy(s, k) * dt;
      for (Index i = 0; i < d; ++i) {
        const double Px = fitted(s, 1 + i), Py = fitted(s, 2 + d + i);
        sol.Px[static_cast<std::size_t>(i)](s, k) = Px;
        sol.Py[static_cast<std::size_t>(i)](s, k) = Py;
        px += pc.psi[static_cast<std::size_t>(i)](s, k) * Px * dt;
        py += sy(i) * Py * dt;
      }
      sol.px_next(s, k) = pcx;
      sol.py_next(s, k) = pcy;
      sol.px(s, k) = px;
      sol.py(s, k) = py;
    }
    check_step(sol, k);
  }
  return sol;
}

AdjointSolution solve_adjoint_phi(const ControlProblem& problem, const ScenarioSet& set,
                                  const TrajectoryBundle& bundle, const AdjointOptions& options) {
  check_inputs(problem, set, bundle);
  const CoefficientField& field = *set.field;
  const BrownianIncrements& noise = *set.noise;
  const Index S = bundle.scenarios();
  const Index N = bundle.steps();
  const Index d = noise.dim();
  const double dt = problem.time.dt();
  const PathCoefficients pc = path_coefficients(field, bundle.mu, &bundle, problem.objective.get());
  const NoiseVector sy = problem.second.diffusion_dy();

  AdjointSolution sol = allocate(AdjointMethod::phi_construction, S, N, d);
  terminal_values(problem, bundle, sol);

  PhiConstructionDetail detail;
  detail.fundamental = solve_fundamental(field, noise, problem.second, bundle.mu);
  const FundamentalPair& fx = detail.fundamental.x;
  const FundamentalPair& fy = detail.fundamental.y;

  // Backward partial sums S_k = Phi_N g + sum_{j >= k} Phi_j h_j dt; X = S_0.
  Eigen::MatrixXd Sx(S, N + 1), Sy(S, N + 1);
  Sx.col(N) = fx.phi.col(N).cwiseProduct(sol.px.col(N));
  Sy.col(N) = fy.phi.col(N).cwiseProduct(sol.py.col(N));
  for (Index k = N - 1; k >= 0; --k) {
    Sx.col(k) = Sx.col(k + 1) + fx.phi.col(k).cwiseProduct(pc.hx.col(k)) * dt;
    Sy.col(k) = Sy.col(k + 1) + fy.phi.col(k).cwiseProduct(pc.hy.col(k)) * dt;
  }
  detail.X = Sx.col(0);
  detail.Y = Sy.col(0);
  detail.Xt.resize(S, N + 1);
  detail.Yt.resize(S, N + 1);
  detail.Hx.assign(static_cast<std::size_t>(d), Eigen::MatrixXd(S, N));
  detail.Hy.assign(static_cast<std::size_t>(d), Eigen::MatrixXd(S, N));

  // phat_k estimates E[S_k / Phi_k | F_k]; Phi_k phat_k is the part of E(X | F_k) not yet
  // accumulated by the running sum.
  Eigen::VectorXd phat_x = sol.px.col(N), phat_y = sol.py.col(N);
  detail.Xt.col(N) = Sx.col(N);
  detail.Yt.col(N) = Sy.col(N);

  // Targets per step: [S^x_k / Phi^x_k, A^x_k phat^x_{k+1} dB_i / dt, p^x_{k+1}, and the same for y].
  const Index w = 2 + d;
  Eigen::MatrixXd targets(S, 2 * w);
  for (Index k = N - 1; k >= 0; --k) {
    for (Index s = 0; s < S; ++s) {
      const double ax = fx.phi(s, k + 1) / fx.phi(s, k);
      const double ay = fy.phi(s, k + 1) / fy.phi(s, k);
      targets(s, 0) = Sx(s, k) / fx.phi(s, k);
      targets(s, w) = Sy(s, k) / fy.phi(s, k);
      for (Index i = 0; i < d; ++i) {
        const double db = noise(s, k, i) / dt;
        targets(s, 1 + i) = ax * phat_x(s) * db;
        targets(s, w + 1 + i) = ay * phat_y(s) * db;
      }
      targets(s, 1 + d) = sol.px(s, k + 1);
      targets(s, w + 1 + d) = sol.py(s, k + 1);
    }
    const CrossSectionRegression reg(regressors_at(set, bundle, k), options.degree, options.ridge);
    note_warnings(reg, k, sol.warnings);
    const Eigen::MatrixXd fitted = reg.fit(targets);
    for (Index s = 0; s < S; ++s) {
      phat_x(s) = fitted(s, 0);
      phat_y(s) = fitted(s, w);
      const double Xt = fx.phi(s, k) * phat_x(s);
      const double Yt = fy.phi(s, k) * phat_y(s);
      detail.Xt(s, k) = Xt;
      detail.Yt(s, k) = Yt;
      const double px = fx.phi_inv(s, k) * Xt;
      const double py = fy.phi_inv(s, k) * Yt;
      sol.px(s, k) = px;
      sol.py(s, k) = py;
      for (Index i = 0; i < d; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const double Hx = fx.phi(s, k) * fitted(s, 1 + i);
        const double Hy = fy.phi(s, k) * fitted(s, w + 1 + i);
        detail.Hx[ii](s, k) = Hx;
        detail.Hy[ii](s, k) = Hy;
        sol.Px[ii](s, k) = fx.phi_inv(s, k) * Hx - pc.psi[ii](s, k) * px;
        sol.Py[ii](s, k) = fy.phi_inv(s, k) * Hy - sy(i) * py;
      }
      sol.px_next(s, k) = fitted(s, 1 + d);
      sol.py_next(s, k) = fitted(s, w + 1 + d);
    }
    check_step(sol, k);
  }
  sol.detail = std::move(detail);
  return sol;
}

AdjointSolution solve_adjoint(AdjointMethod method, const ControlProblem& problem, const ScenarioSet& set,
                              const TrajectoryBundle& bundle, const AdjointOptions& options) {
  return method == AdjointMethod::phi_construction ? solve_adjoint_phi(problem, set, bundle, options)
                                                   : solve_adjoint_regression(problem, set, bundle, options);
}

}  // namespace rsc
