#pragma once

// Time integrators for linear port-Hamiltonian systems on uniform grids.
//
//  * explicit Euler:   w_{j+1} = w_j + h ((J - R) w_j + B u_j)
//  * discrete gradient (implicit midpoint for H(w) = w^T w / 2):
//      (I - h/2 (J - R)) w_{j+1} = (I + h/2 (J - R)) w_j + h B u_{j+1}
//
// The midpoint scheme satisfies the discrete energy balance
//   H(w_{j+1}) - H(w_j) = h (-g^T R g + y_{j+1}^T u_{j+1}),  g = (w_j + w_{j+1})/2,
// exactly in exact arithmetic.

#include <Eigen/LU>

#include <string>

#include "phsid/signal.hpp"
#include "phsid/system.hpp"

namespace phsid {

namespace detail {

inline void check_input(Eigen::Index ports, const Signal& u) {
  if (u.channels() != ports) {
    throw DimensionError("input has " + std::to_string(u.channels()) + " channels, the model has " +
                         std::to_string(ports) + " ports");
  }
}

/// Euler recursion for dw/dt = A w + B u on the grid of `u`. A need not be
/// structured; the finite-difference oracle perturbs R off the PSD cone.
inline Trajectory euler(const Matrix& A, const Matrix& B, const Vector& w0, const Signal& u) {
  check_input(B.cols(), u);
  const TimeGrid& grid = u.grid();
  const double h = grid.step_size();
  SampleMatrix w(static_cast<Eigen::Index>(grid.nodes()), w0.size());
  w.row(0) = w0.transpose();
  Vector cur = w0;
  Vector next(w0.size());
  for (std::size_t j = 0; j < grid.steps(); ++j) {
    next.noalias() = cur + h * (A * cur + B * u.row(j).transpose());
    if (!next.allFinite()) throw DivergenceError(j + 1, "non-finite state in explicit Euler");
    w.row(static_cast<Eigen::Index>(j + 1)) = next.transpose();
    cur.swap(next);
  }
  return Trajectory(grid, std::move(w), Scheme::euler);
}

}  // namespace detail

inline Trajectory simulate_euler(const ReducedPHSystem& sys, const Signal& u) {
  return detail::euler(sys.dynamics(), sys.B, sys.w_hat, u);
}

/// Euler in the original coordinates: x_{j+1} = x_j + h ((J - R) Q x_j + B u_j).
inline Trajectory simulate_euler(const PHSystem& sys, const Signal& u) {
  return detail::euler((sys.J.dense() - sys.R.dense()) * sys.Q.dense(), sys.B, sys.x_hat, u);
}

/// Node-wise output y_j = B^T w_j.
inline Signal output(const ReducedPHSystem& sys, const Trajectory& traj) {
  if (traj.dim() != sys.states()) throw DimensionError("trajectory dimension does not match the model");
  return Signal(traj.grid(), traj.states() * sys.B);
}

/// Node-wise output of the original form, y_j = B^T Q x_j.
inline Signal output(const PHSystem& sys, const Trajectory& traj) {
  if (traj.dim() != sys.states()) throw DimensionError("trajectory dimension does not match the model");
  return Signal(traj.grid(), traj.states() * (sys.Q.dense() * sys.B));
}

/// Midpoint output y_{j+1} = B^T (w_j + w_{j+1})/2; node 0 carries B^T w_0.
inline Signal discrete_output(const ReducedPHSystem& sys, const Trajectory& traj) {
  if (traj.dim() != sys.states()) throw DimensionError("trajectory dimension does not match the model");
  const auto& w = traj.states();
  SampleMatrix y(w.rows(), sys.ports());
  y.row(0) = w.row(0) * sys.B;
  for (Eigen::Index j = 1; j < w.rows(); ++j) y.row(j) = (0.5 * (w.row(j - 1) + w.row(j))) * sys.B;
  return Signal(traj.grid(), std::move(y));
}

/// Output under the convention of the scheme that produced `traj`.
inline Signal scheme_output(const ReducedPHSystem& sys, const Trajectory& traj) {
  return traj.scheme() == Scheme::euler ? output(sys, traj) : discrete_output(sys, traj);
}

inline Trajectory simulate_discrete_gradient(const ReducedPHSystem& sys, const Signal& u) {
  detail::check_input(sys.ports(), u);
  const TimeGrid& grid = u.grid();
  const double h = grid.step_size();
  const Eigen::Index n = sys.states();
  const Matrix A = sys.dynamics();
  const Matrix I = Matrix::Identity(n, n);
  const Eigen::FullPivLU<Matrix> lhs(I - 0.5 * h * A);
  if (!lhs.isInvertible()) throw SingularStepError("midpoint step matrix is singular");
  const Matrix rhs = I + 0.5 * h * A;

  SampleMatrix w(static_cast<Eigen::Index>(grid.nodes()), n);
  w.row(0) = sys.w_hat.transpose();
  Vector cur = sys.w_hat;
  for (std::size_t j = 0; j < grid.steps(); ++j) {
    Vector next = lhs.solve(rhs * cur + h * (sys.B * u.row(j + 1).transpose()));
    if (!next.allFinite()) throw DivergenceError(j + 1, "non-finite state in discrete-gradient step");
    w.row(static_cast<Eigen::Index>(j + 1)) = next.transpose();
    cur = std::move(next);
  }
  return Trajectory(grid, std::move(w), Scheme::midpoint);
}

/// Quadratic Hamiltonian in reduced coordinates, H(w) = w^T w / 2.
template <typename Derived>
double hamiltonian(const Eigen::MatrixBase<Derived>& w) {
  return 0.5 * w.squaredNorm();
}

/// Per-step residual of the discrete energy balance; entry j belongs to the
/// step t_j -> t_{j+1}.
inline Vector energy_balance_residual(const ReducedPHSystem& sys, const Trajectory& traj, const Signal& u) {
  if (traj.dim() != sys.states()) throw DimensionError("trajectory dimension does not match the model");
  detail::check_input(sys.ports(), u);
  if (!(traj.grid() == u.grid())) throw DimensionError("trajectory and input live on different grids");
  const double h = traj.grid().step_size();
  const auto& w = traj.states();
  const Matrix& R = sys.R.dense();
  Vector res(static_cast<Eigen::Index>(traj.grid().steps()));
  for (Eigen::Index j = 0; j < res.size(); ++j) {
    const Vector g = 0.5 * (w.row(j) + w.row(j + 1)).transpose();
    const Vector y = sys.B.transpose() * g;
    const double supplied = -g.dot(R * g) + y.dot(u.row(j + 1).transpose());
    res(j) = (hamiltonian(w.row(j + 1)) - hamiltonian(w.row(j))) - h * supplied;
  }
  return res;
}

}  // namespace phsid
