#pragma once

// Backward adjoint processes for the discretized problem
//   dp^x = -(phi(mu) p^x + psi(mu) . P^x + h_x) dt + P^x . dB,   p^x_T = g_x(x_T, y_T)
//   dp^y = -(b^y_y p^y + sigma^y_y . P^y + h_y) dt + P^y . dB,   p^y_T = g_y(x_T, y_T)
// solved by two independent estimators: a backward regression sweep and the construction
// through the fundamental solution Phi of the linearized state equation.
//
// Index convention: p_k (k < N) is the sensitivity of the cost to the post-jump state
// x_k+, so slack and Hamiltonian terms at step k pair p with x_k+ and y_k+.

#include "rsc/dynamics.hpp"
#include "rsc/problem.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace rsc {

// Paths are scenarios x (steps + 1), with Phi_0 = PhiInv_0 = 1.
struct FundamentalPair {
  Eigen::MatrixXd phi;
  Eigen::MatrixXd phi_inv;
};

struct FundamentalPairs {
  FundamentalPair x;
  FundamentalPair y;
};

// Euler schemes for dPhi = a Phi dt + s Phi . dB and dPhi^{-1} = (s.s - a) Phi^{-1} dt - s Phi^{-1} . dB,
// with (a, s) = (phi(mu), psi(mu)) for x and (b^y_y, sigma^y_y) for y.
FundamentalPairs solve_fundamental(const CoefficientField& field, const BrownianIncrements& noise,
                                   const SecondStateDynamics& second, const RelaxedControl& mu);

enum class AdjointMethod { phi_construction, regression };

const char* to_string(AdjointMethod method);

// Internal quantities of the Phi construction.
struct PhiConstructionDetail {
  FundamentalPairs fundamental;
  Eigen::VectorXd X;              // Phi^x_N g_x + sum_k Phi^x_k h_x dt
  Eigen::VectorXd Y;
  Eigen::MatrixXd Xt;             // Phi^x_k p^x_k estimate, scenarios x (steps + 1)
  Eigen::MatrixXd Yt;
  std::vector<Eigen::MatrixXd> Hx;  // martingale integrand of E(X | F_k), one scenarios x steps matrix per component
  std::vector<Eigen::MatrixXd> Hy;
};

struct AdjointSolution {
  AdjointMethod method = AdjointMethod::regression;
  Eigen::MatrixXd px;              // scenarios x (steps + 1)
  Eigen::MatrixXd py;
  std::vector<Eigen::MatrixXd> Px;  // one scenarios x steps matrix per Brownian component
  std::vector<Eigen::MatrixXd> Py;
  Eigen::MatrixXd px_next;         // E[p^x_{k+1} | F_k], scenarios x steps
  Eigen::MatrixXd py_next;
  std::optional<PhiConstructionDetail> detail;
  std::vector<std::string> warnings;

  Index scenarios() const { return px.rows(); }
  Index steps() const { return px.cols() - 1; }
  Index dim() const { return static_cast<Index>(Px.size()); }
  NoiseVector Px_at(Index s, Index k) const;
  NoiseVector Py_at(Index s, Index k) const;
};

struct AdjointOptions {
  int degree = 2;
  double ridge = 1e-8;
};

AdjointSolution solve_adjoint_regression(const ControlProblem& problem, const ScenarioSet& set,
                                         const TrajectoryBundle& bundle, const AdjointOptions& options = {});

AdjointSolution solve_adjoint_phi(const ControlProblem& problem, const ScenarioSet& set,
                                  const TrajectoryBundle& bundle, const AdjointOptions& options = {});

AdjointSolution solve_adjoint(AdjointMethod method, const ControlProblem& problem, const ScenarioSet& set,
                              const TrajectoryBundle& bundle, const AdjointOptions& options = {});

// Backward drivers f in dp = f dt + P . dB.
double adjoint_driver_x(const StepCoefficients& c, double p, const NoiseVector& P, double hx);
double adjoint_driver_y(const SecondStateDynamics& second, double p, const NoiseVector& P, double hy);

}  // namespace rsc
