#pragma once

// Structure-preserving gradient descent for the reduced cost: sensitivity
// gradient over the tangent basis, Armijo backtracking, and a retraction
// that keeps J exactly skew and R symmetric (optionally projected onto the
// PSD cone).

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "phsid/sensitivity.hpp"

namespace phsid {

enum class PsdMode { project, none };

inline const char* to_string(PsdMode m) { return m == PsdMode::project ? "project" : "none"; }

struct CalibrationConfig {
  double sigma_init = 10.0;
  double gamma = 1e-4;
  double eps_stop = 1e-4;
  int max_iter = 500;
  int max_halvings = 60;
  BasisStructure structure = BasisStructure::full;
  PsdMode psd_mode = PsdMode::project;

  void validate() const {
    auto fail = [](const std::string& what) { throw InvariantError("calibration-config", what); };
    if (!(sigma_init > 0.0) || !std::isfinite(sigma_init)) fail("sigma_init must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
    if (!(eps_stop > 0.0) || !std::isfinite(eps_stop)) fail("eps_stop must be positive");
    if (max_iter < 0) fail("max_iter must be non-negative");
    if (max_halvings < 0) fail("max_halvings must be non-negative");
  }
};

struct CalibrationResult {
  ParameterPoint v_opt;
  /// Cost of every accepted iterate, starting with the initial guess.
  std::vector<double> cost_history;
  /// Accepted step sizes; step i maps iterate i to iterate i+1.
  std::vector<double> step_sizes;
  /// Squared coefficient norm of the gradient used for step i.
  std::vector<double> gradient_norms_sq;
  /// Every accepted iterate, starting with the initial guess.
  std::vector<ParameterPoint> iterates;
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
  std::optional<Signal> y_opt;

  double final_cost() const { return cost_history.back(); }
};

/// Frobenius-nearest PSD matrix: eigenvalues clipped at zero. PSD input is
/// returned unchanged.
inline PSDMatrix project_psd(const SymmetricMatrix& m) {
  if (!m.dense().allFinite()) throw InvariantError("eigendecomposition", "matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.dense());
  if (es.info() != Eigen::Success) throw InvariantError("eigendecomposition", "symmetric eigensolver did not converge");
  if (es.eigenvalues()(0) >= 0.0) return PSDMatrix(m);
  const Vector clipped = es.eigenvalues().cwiseMax(0.0);
  const Matrix U = es.eigenvectors();
  return PSDMatrix(SymmetricMatrix::symmetrize(U * clipped.asDiagonal() * U.transpose()));
}

/// v - sigma g, mapped back onto the admissible set. With PsdMode::none an
/// R block outside the cone raises InvariantError.
inline ParameterPoint retract(const ParameterPoint& v, const TangentDirection& g, double sigma, PsdMode mode) {
  SymmetricMatrix R = v.R.symmetric() - sigma * g.hR;
  PSDMatrix Rp = mode == PsdMode::project ? project_psd(R) : PSDMatrix(std::move(R));
  return ParameterPoint(v.J - sigma * g.hJ, std::move(Rp), v.w_hat - sigma * g.hx);
}

struct ArmijoStep {
  double sigma;
  ParameterPoint point;
  double cost;
  int halvings;
};

/// Backtracking over sigma_init * 2^-m, m = 0..max_halvings. A candidate is
/// accepted when cost(candidate) - cost_at_v <= -gamma * sigma * |g|^2, with
/// |g|^2 the squared coefficient norm. The cost is taken at the retracted
/// candidate; candidates that diverge or leave the admissible set are
/// rejected like any other.
template <typename CostFn>
ArmijoStep armijo_search(const ParameterPoint& v, const Gradient& g, double cost_at_v, CostFn&& cost_of,
                         const CalibrationConfig& cfg) {
  const double g2 = g.norm_sq();
  double sigma = cfg.sigma_init;
  for (int m = 0;; ++m) {
    try {
      ParameterPoint candidate = retract(v, g.value, sigma, cfg.psd_mode);
      const double c = cost_of(candidate);
      if (std::isfinite(c) && c - cost_at_v <= -cfg.gamma * sigma * g2) {
        return {sigma, std::move(candidate), c, m};
      }
    } catch (const DivergenceError&) {
    } catch (const InvariantError&) {
    }
    if (m >= cfg.max_halvings) break;
    sigma *= 0.5;
  }
  throw LineSearchError(sigma, "Armijo search failed after " + std::to_string(cfg.max_halvings) +
                                   " halvings (last sigma " + std::to_string(sigma) + ")");
}

/// Gradient descent from v0 until cost <= eps_stop or a guard trips.
/// B is fixed; only (J, R, w_hat) are identified.
inline CalibrationResult calibrate(const ParameterPoint& v0, const Signal& u, const Signal& y_data, const Matrix& B,
                                   const CalibrationConfig& cfg, Execution exec = Execution::sequential) {
  cfg.validate();
  detail::check_same_grid(u.grid(), y_data.grid(), "input vs reference output");
  const BasisSet basis = tangent_basis(v0.dim(), cfg.structure);
  auto cost_of = [&](const ParameterPoint& p) { return cost(p.system(B), u, y_data); };

  CalibrationResult res{v0, {}, {}, {}, {}, 0, false, {}, std::nullopt};
  double c = cost_of(v0);
  res.cost_history.push_back(c);
  res.iterates.push_back(v0);

  while (c > cfg.eps_stop && res.iterations < cfg.max_iter) {
    const ReducedPHSystem sys = res.v_opt.system(B);
    const Gradient g = assemble_gradient(sensitivity_coefficients(sys, u, y_data, basis, exec), basis);
    if (g.norm_sq() == 0.0) {
      res.diagnostic = "stationary point: gradient vanishes while cost exceeds eps_stop";
      break;
    }
    try {
      ArmijoStep step = armijo_search(res.v_opt, g, c, cost_of, cfg);
      c = step.cost;
      res.v_opt = std::move(step.point);
      res.step_sizes.push_back(step.sigma);
      res.gradient_norms_sq.push_back(g.norm_sq());
      res.cost_history.push_back(c);
      res.iterates.push_back(res.v_opt);
      ++res.iterations;
    } catch (const LineSearchError& e) {
      res.diagnostic = std::string("line search failure: ") + e.what();
      break;
    }
  }

  res.converged = c <= cfg.eps_stop;
  if (!res.converged && res.diagnostic.empty()) {
    res.diagnostic = "max_iter (" + std::to_string(cfg.max_iter) + ") reached";
  }
  const ReducedPHSystem fitted = res.v_opt.system(B);
  res.y_opt = output(fitted, simulate_euler(fitted, u));
  return res;
}

}  // namespace phsid
