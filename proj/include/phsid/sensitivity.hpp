#pragma once

// Forward sensitivities of the Euler state map with respect to the
// structured parameters v = (J, R, w_hat), and the gradient of the reduced
// cost assembled over the tangent basis of the admissible set.
//
// For a pure direction h the sensitivity s = S'(v) h solves, with the same
// Euler stencil as the state,
//   J-direction:  ds/dt = (J - R) s + h_J w,   s(0) = 0
//   R-direction:  ds/dt = (J - R) s - h_R w,   s(0) = 0
//   x-direction:  ds/dt = (J - R) s,           s(0) = h_x
// so the resulting directional derivative is the exact derivative of the
// discrete cost.

#include <future>
#include <string>
#include <vector>

#include "phsid/cost.hpp"

namespace phsid {

/// A point of the admissible set: J skew, R PSD, initial state.
struct ParameterPoint {
  SkewSymmetricMatrix J;
  PSDMatrix R;
  Vector w_hat;

  ParameterPoint(SkewSymmetricMatrix J_, PSDMatrix R_, Vector w_hat_)
      : J(std::move(J_)), R(std::move(R_)), w_hat(std::move(w_hat_)) {
    if (R.dim() != J.dim() || w_hat.size() != J.dim()) throw DimensionError("parameter blocks disagree in dimension");
  }

  Eigen::Index dim() const noexcept { return J.dim(); }
  ReducedPHSystem system(const Matrix& B) const { return ReducedPHSystem(J, R, B, w_hat); }
};

enum class DirectionBlock { none, J, R, x, mixed };

struct TangentDirection {
  SkewSymmetricMatrix hJ;
  SymmetricMatrix hR;
  Vector hx;

  static TangentDirection zero(Eigen::Index n) {
    return {SkewSymmetricMatrix::zero(n), SymmetricMatrix::zero(n), Vector::Zero(n)};
  }

  Eigen::Index dim() const noexcept { return hJ.dim(); }

  DirectionBlock block() const {
    const int nonzero = int(!hJ.is_zero()) + int(!hR.is_zero()) + int(!hx.isZero(0.0));
    if (nonzero == 0) return DirectionBlock::none;
    if (nonzero > 1) return DirectionBlock::mixed;
    if (!hJ.is_zero()) return DirectionBlock::J;
    return hR.is_zero() ? DirectionBlock::x : DirectionBlock::R;
  }

  friend TangentDirection operator*(double s, const TangentDirection& d) { return {s * d.hJ, s * d.hR, s * d.hx}; }
};

enum class BasisStructure { full, diagonal_R };

inline const char* to_string(BasisStructure s) { return s == BasisStructure::full ? "full" : "diagonal_R"; }

struct BasisSet {
  Eigen::Index n = 0;
  BasisStructure structure = BasisStructure::full;
  std::vector<TangentDirection> directions;

  std::size_t size() const noexcept { return directions.size(); }
  const TangentDirection& operator[](std::size_t i) const { return directions[i]; }
};

/// Canonical basis: skew pairs (strict lower triangle, row-major, +1 below
/// the diagonal), then unit diagonals, then unit symmetric off-diagonal pairs
/// (full structure only), then coordinate vectors. For n = 2 this is
/// J_1 = [[0,-1],[1,0]], diag(1,0), diag(0,1), [[0,1],[1,0]], e_1, e_2.
inline BasisSet tangent_basis(Eigen::Index n, BasisStructure structure) {
  if (n < 1) throw DimensionError("tangent basis needs n >= 1");
  BasisSet basis{n, structure, {}};
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      TangentDirection d = TangentDirection::zero(n);
      Matrix m = Matrix::Zero(n, n);
      m(i, j) = 1.0;
      d.hJ = SkewSymmetricMatrix::from_lower(m);
      basis.directions.push_back(std::move(d));
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    TangentDirection d = TangentDirection::zero(n);
    Matrix m = Matrix::Zero(n, n);
    m(i, i) = 1.0;
    d.hR = SymmetricMatrix::from_lower(m);
    basis.directions.push_back(std::move(d));
  }
  if (structure == BasisStructure::full) {
    for (Eigen::Index i = 1; i < n; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        TangentDirection d = TangentDirection::zero(n);
        Matrix m = Matrix::Zero(n, n);
        m(i, j) = 1.0;
        d.hR = SymmetricMatrix::from_lower(m);
        basis.directions.push_back(std::move(d));
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    TangentDirection d = TangentDirection::zero(n);
    d.hx(i) = 1.0;
    basis.directions.push_back(std::move(d));
  }
  return basis;
}

inline Trajectory solve_sensitivity(const ReducedPHSystem& sys, const Trajectory& traj, const TangentDirection& dir,
                                    const TimeGrid& grid) {
  const Eigen::Index n = sys.states();
  if (traj.dim() != n || dir.dim() != n || dir.hx.size() != n) {
    throw DimensionError("sensitivity direction, trajectory and model disagree in dimension");
  }
  detail::check_same_grid(traj.grid(), grid, "state trajectory vs sensitivity grid");

  const DirectionBlock block = dir.block();
  if (block == DirectionBlock::mixed) {
    throw UnsupportedDirectionError("sensitivity directions must perturb exactly one of J, R or the initial state");
  }

  Matrix source = Matrix::Zero(n, n);
  if (block == DirectionBlock::J) source = dir.hJ.dense();
  if (block == DirectionBlock::R) source = -dir.hR.dense();

  const Matrix A = sys.dynamics();
  const double h = grid.step_size();
  SampleMatrix s(static_cast<Eigen::Index>(grid.nodes()), n);
  Vector cur = block == DirectionBlock::x ? dir.hx : Vector::Zero(n);
  s.row(0) = cur.transpose();
  Vector next(n);
  const bool forced = block == DirectionBlock::J || block == DirectionBlock::R;
  for (std::size_t j = 0; j < grid.steps(); ++j) {
    next.noalias() = cur + h * (A * cur);
    if (forced) next.noalias() += h * (source * traj.row(j).transpose());
    if (!next.allFinite()) throw DivergenceError(j + 1, "non-finite sensitivity");
    s.row(static_cast<Eigen::Index>(j + 1)) = next.transpose();
    cur.swap(next);
  }
  return Trajectory(grid, std::move(s), Scheme::euler);
}

/// sum_{j<K} h <B^T w_j - y_data_j, B^T s_j>.
inline double directional_derivative(const ReducedPHSystem& sys, const Trajectory& traj, const Trajectory& sens,
                                     const Signal& y_data) {
  detail::check_same_grid(traj.grid(), sens.grid(), "state vs sensitivity");
  detail::check_same_grid(traj.grid(), y_data.grid(), "state vs reference output");
  if (traj.dim() != sys.states() || sens.dim() != sys.states()) throw DimensionError("trajectory dimension mismatch");
  if (y_data.channels() != sys.ports()) throw DimensionError("reference output channel count mismatch");
  const auto K = static_cast<Eigen::Index>(traj.grid().steps());
  const double h = traj.grid().step_size();
  const SampleMatrix residual = traj.states().topRows(K) * sys.B - y_data.values().topRows(K);
  const SampleMatrix sens_out = sens.states().topRows(K) * sys.B;
  return h * residual.cwiseProduct(sens_out).sum();
}

struct Gradient {
  TangentDirection value;
  std::vector<double> coefficients;

  /// Squared Euclidean norm of the coefficient vector.
  double norm_sq() const {
    double s = 0.0;
    for (double c : coefficients) s += c * c;
    return s;
  }
};

/// Blockwise sum of coefficient * raw basis element.
inline Gradient assemble_gradient(const std::vector<double>& coefficients, const BasisSet& basis) {
  if (coefficients.size() != basis.size()) {
    throw DimensionError("got " + std::to_string(coefficients.size()) + " coefficients for " +
                         std::to_string(basis.size()) + " basis directions");
  }
  const Eigen::Index n = basis.n;
  Matrix gJ = Matrix::Zero(n, n);
  Matrix gR = Matrix::Zero(n, n);
  Vector gx = Vector::Zero(n);
  for (std::size_t l = 0; l < basis.size(); ++l) {
    gJ += coefficients[l] * basis[l].hJ.dense();
    gR += coefficients[l] * basis[l].hR.dense();
    gx += coefficients[l] * basis[l].hx;
  }
  return {{SkewSymmetricMatrix::from_lower(gJ), SymmetricMatrix::from_lower(gR), gx}, coefficients};
}

enum class Execution { sequential, parallel };

/// Directional derivatives of the cost along every basis direction, in basis
/// order. `traj` must be the Euler state trajectory of `sys` under `u`.
inline std::vector<double> sensitivity_coefficients(const ReducedPHSystem& sys, const Trajectory& traj,
                                                    const Signal& y_data, const BasisSet& basis,
                                                    Execution exec = Execution::sequential) {
  auto one = [&](std::size_t l) {
    const Trajectory s = solve_sensitivity(sys, traj, basis[l], traj.grid());
    return directional_derivative(sys, traj, s, y_data);
  };
  std::vector<double> out(basis.size());
  if (exec == Execution::sequential) {
    for (std::size_t l = 0; l < basis.size(); ++l) out[l] = one(l);
    return out;
  }
  std::vector<std::future<double>> jobs;
  jobs.reserve(basis.size());
  for (std::size_t l = 0; l < basis.size(); ++l) jobs.push_back(std::async(std::launch::async, one, l));
  for (std::size_t l = 0; l < basis.size(); ++l) out[l] = jobs[l].get();
  return out;
}

/// Convenience: simulate, then collect sensitivity coefficients.
inline std::vector<double> sensitivity_coefficients(const ReducedPHSystem& sys, const Signal& u, const Signal& y_data,
                                                    const BasisSet& basis, Execution exec = Execution::sequential) {
  return sensitivity_coefficients(sys, simulate_euler(sys, u), y_data, basis, exec);
}

/// Central differences [cost(v + eps h) - cost(v - eps h)] / (2 eps) per
/// basis direction. The perturbed R is not required to stay PSD.
inline std::vector<double> finite_difference_gradient(const ParameterPoint& v, const Matrix& B, const Signal& u,
                                                      const Signal& y_data, const BasisSet& basis, double eps) {
  if (!(eps > 0.0)) throw Error("finite-difference step must be positive");
  std::vector<double> out;
  out.reserve(basis.size());
  for (const TangentDirection& d : basis.directions) {
    const double plus = detail::cost_dense(v.J.dense() + eps * d.hJ.dense(), v.R.dense() + eps * d.hR.dense(), B,
                                           v.w_hat + eps * d.hx, u, y_data);
    const double minus = detail::cost_dense(v.J.dense() - eps * d.hJ.dense(), v.R.dense() - eps * d.hR.dense(), B,
                                            v.w_hat - eps * d.hx, u, y_data);
    out.push_back((plus - minus) / (2.0 * eps));
  }
  return out;
}

/// Agreement test used by the gradient check: relative error <= rel_tol, or
/// absolute error <= abs_tol when the reference magnitude is below `small`.
inline bool coefficients_agree(double sensitivity, double reference, double rel_tol = 1e-4, double abs_tol = 1e-8,
                               double small = 1e-4) {
  const double err = std::abs(sensitivity - reference);
  if (std::abs(reference) < small) return err <= abs_tol || err <= rel_tol * std::abs(reference);
  return err <= rel_tol * std::abs(reference);
}

}  // namespace phsid
