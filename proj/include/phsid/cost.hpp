#pragma once

#include "phsid/integrators.hpp"

namespace phsid {

namespace detail {

inline void check_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
  if (!(a == b)) throw DimensionError(std::string("grid mismatch: ") + what);
}

/// 1/2 sum_{j<K} h |y_j - y_data_j|^2 (left-endpoint rule).
inline double tracking_cost(const Signal& y, const Signal& y_data) {
  check_same_grid(y.grid(), y_data.grid(), "model output vs reference output");
  if (y.channels() != y_data.channels()) throw DimensionError("output and reference have different channel counts");
  const double h = y.grid().step_size();
  const auto K = static_cast<Eigen::Index>(y.grid().steps());
  return 0.5 * h * (y.values().topRows(K) - y_data.values().topRows(K)).squaredNorm();
}

/// Cost for unstructured J, R; used where R may leave the PSD cone.
inline double cost_dense(const Matrix& J, const Matrix& R, const Matrix& B, const Vector& w0, const Signal& u,
                         const Signal& y_data) {
  check_same_grid(u.grid(), y_data.grid(), "input vs reference output");
  const Trajectory w = euler(J - R, B, w0, u);
  return tracking_cost(Signal(w.grid(), w.states() * B), y_data);
}

}  // namespace detail

/// Reduced cost 1/2 int |B^T w - y_data|^2 dt, Euler states, left-endpoint rule.
inline double cost(const ReducedPHSystem& sys, const Signal& u, const Signal& y_data) {
  return detail::cost_dense(sys.J.dense(), sys.R.dense(), sys.B, sys.w_hat, u, y_data);
}

}  // namespace phsid
