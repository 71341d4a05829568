#pragma once

#include <string>

#include "phsid/matrix.hpp"

namespace phsid {

namespace detail {

inline void check_model_dims(Eigen::Index n, const Matrix& B, const Vector& x0, Eigen::Index jn, Eigen::Index rn,
                             Eigen::Index qn) {
  auto fail = [](const std::string& what) { throw InvalidModelError("dimension mismatch: " + what); };
  if (jn != n || rn != n || qn != n) fail("J, R and Q must share the state dimension " + std::to_string(n));
  if (B.rows() != n) fail("B has " + std::to_string(B.rows()) + " rows, expected " + std::to_string(n));
  if (B.cols() < 1) fail("B needs at least one port column");
  if (x0.size() != n) fail("initial state has length " + std::to_string(x0.size()) + ", expected " + std::to_string(n));
  if (!B.allFinite() || !x0.allFinite()) throw InvalidModelError("B and the initial state must be finite");
}

}  // namespace detail

/// dx/dt = (J - R) Q x + B u,  y = B^T Q x,  x(0) = x_hat.
struct PHSystem {
  SkewSymmetricMatrix J;
  PSDMatrix R;
  SPDMatrix Q;
  Matrix B;
  Vector x_hat;

  PHSystem(SkewSymmetricMatrix J_, PSDMatrix R_, SPDMatrix Q_, Matrix B_, Vector x_hat_)
      : J(std::move(J_)), R(std::move(R_)), Q(std::move(Q_)), B(std::move(B_)), x_hat(std::move(x_hat_)) {
    detail::check_model_dims(J.dim(), B, x_hat, J.dim(), R.dim(), Q.dim());
  }

  Eigen::Index states() const noexcept { return J.dim(); }
  Eigen::Index ports() const noexcept { return B.cols(); }
};

/// Q-free form after w = V^T x:  dw/dt = (J - R) w + B u,  y = B^T w.
struct ReducedPHSystem {
  SkewSymmetricMatrix J;
  PSDMatrix R;
  Matrix B;
  Vector w_hat;

  ReducedPHSystem(SkewSymmetricMatrix J_, PSDMatrix R_, Matrix B_, Vector w_hat_)
      : J(std::move(J_)), R(std::move(R_)), B(std::move(B_)), w_hat(std::move(w_hat_)) {
    detail::check_model_dims(J.dim(), B, w_hat, J.dim(), R.dim(), J.dim());
  }

  Eigen::Index states() const noexcept { return J.dim(); }
  Eigen::Index ports() const noexcept { return B.cols(); }
  Matrix dynamics() const { return J.dense() - R.dense(); }
};

/// Eliminates Q by the congruence with its Cholesky factor V (Q = V V^T):
/// (J, R, B, x_hat) -> (V^T J V, V^T R V, V^T B, V^T x_hat).
inline ReducedPHSystem cholesky_reduce(const PHSystem& sys) {
  const Matrix& V = sys.Q.cholesky_factor();
  const Matrix Vt = V.transpose();
  const Matrix Jt = Vt * sys.J.dense() * V;
  const Matrix Rt = Vt * sys.R.dense() * V;
  return ReducedPHSystem(SkewSymmetricMatrix::from_lower(Jt), PSDMatrix(SymmetricMatrix::from_lower(Rt)), Vt * sys.B,
                         Vt * sys.x_hat);
}

}  // namespace phsid
