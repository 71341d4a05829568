#pragma once

// Structured dense matrices: skew-symmetric, symmetric, positive
// semidefinite and positive definite. The full n x n array is stored, but
// the skew and symmetric types are only ever filled from their free
// parameters (strict lower triangle, lower triangle incl. diagonal), so
// (anti)symmetry holds bit-exactly.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

#include "phsid/errors.hpp"

namespace phsid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tolerance on the smallest eigenvalue when validating R >= 0.
inline constexpr double kPsdTolerance = 1e-10;

namespace detail {

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimensionError(std::string(what) + " must be square and non-empty, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InvariantError("finiteness", std::string(what) + " has non-finite entries");
}

}  // namespace detail

class SkewSymmetricMatrix {
 public:
  /// Reads only the strictly lower triangle of `m`.
  static SkewSymmetricMatrix from_lower(const Matrix& m) {
    detail::require_square(m, "skew-symmetric matrix");
    const Eigen::Index n = m.rows();
    Matrix a = Matrix::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        a(i, j) = m(i, j);
        a(j, i) = -m(i, j);
      }
    }
    return SkewSymmetricMatrix(std::move(a));
  }

  /// Accepts `m` only if it is exactly skew (zero diagonal, a_ij == -a_ji).
  static SkewSymmetricMatrix from_dense(const Matrix& m) {
    detail::require_square(m, "skew-symmetric matrix");
    detail::require_finite(m, "skew-symmetric matrix");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m(i, i) != 0.0) {
        throw InvariantError("skew-symmetry", "diagonal entry (" + std::to_string(i) + "," +
                                                   std::to_string(i) + ") is nonzero");
      }
      for (Eigen::Index j = 0; j < i; ++j) {
        if (m(i, j) != -m(j, i)) {
          throw InvariantError("skew-symmetry", "entry (" + std::to_string(j) + "," + std::to_string(i) +
                                                     ") is not the negative of (" + std::to_string(i) +
                                                     "," + std::to_string(j) + ")");
        }
      }
    }
    return from_lower(m);
  }

  static SkewSymmetricMatrix zero(Eigen::Index n) { return from_lower(Matrix::Zero(n, n)); }

  Eigen::Index dim() const noexcept { return a_.rows(); }
  const Matrix& dense() const noexcept { return a_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return a_(i, j); }
  bool is_zero() const { return a_.isZero(0.0); }

  friend SkewSymmetricMatrix operator+(const SkewSymmetricMatrix& a, const SkewSymmetricMatrix& b) {
    return from_lower(a.a_ + b.a_);
  }
  friend SkewSymmetricMatrix operator-(const SkewSymmetricMatrix& a, const SkewSymmetricMatrix& b) {
    return from_lower(a.a_ - b.a_);
  }
  friend SkewSymmetricMatrix operator*(double s, const SkewSymmetricMatrix& a) { return from_lower(s * a.a_); }

 private:
  explicit SkewSymmetricMatrix(Matrix a) : a_(std::move(a)) {}
  Matrix a_;
};

class SymmetricMatrix {
 public:
  /// Reads only the lower triangle (including the diagonal) of `m`.
  static SymmetricMatrix from_lower(const Matrix& m) {
    detail::require_square(m, "symmetric matrix");
    const Eigen::Index n = m.rows();
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        a(i, j) = m(i, j);
        a(j, i) = m(i, j);
      }
    }
    return SymmetricMatrix(std::move(a));
  }

  /// Accepts `m` only if it is exactly symmetric.
  static SymmetricMatrix from_dense(const Matrix& m) {
    detail::require_square(m, "symmetric matrix");
    detail::require_finite(m, "symmetric matrix");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        if (m(i, j) != m(j, i)) {
          throw InvariantError("symmetry", "entry (" + std::to_string(i) + "," + std::to_string(j) +
                                               ") differs from (" + std::to_string(j) + "," +
                                               std::to_string(i) + ")");
        }
      }
    }
    return from_lower(m);
  }

  /// Symmetric part (m + m^T)/2, then mirrored from the lower triangle.
  static SymmetricMatrix symmetrize(const Matrix& m) {
    detail::require_square(m, "symmetric matrix");
    return from_lower(0.5 * (m + m.transpose()));
  }

  static SymmetricMatrix zero(Eigen::Index n) { return from_lower(Matrix::Zero(n, n)); }
  static SymmetricMatrix identity(Eigen::Index n) { return from_lower(Matrix::Identity(n, n)); }

  Eigen::Index dim() const noexcept { return a_.rows(); }
  const Matrix& dense() const noexcept { return a_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return a_(i, j); }
  bool is_zero() const { return a_.isZero(0.0); }

  friend SymmetricMatrix operator+(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    return from_lower(a.a_ + b.a_);
  }
  friend SymmetricMatrix operator-(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    return from_lower(a.a_ - b.a_);
  }
  friend SymmetricMatrix operator*(double s, const SymmetricMatrix& a) { return from_lower(s * a.a_); }

 private:
  explicit SymmetricMatrix(Matrix a) : a_(std::move(a)) {}
  Matrix a_;
};

/// Smallest eigenvalue of a symmetric matrix (self-adjoint eigensolver).
inline double min_eigenvalue(const SymmetricMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.dense(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw InvariantError("eigendecomposition", "symmetric eigensolver did not converge");
  }
  return es.eigenvalues()(0);
}

/// Symmetric matrix with smallest eigenvalue >= -kPsdTolerance.
class PSDMatrix {
 public:
  explicit PSDMatrix(SymmetricMatrix base) : base_(std::move(base)) {
    detail::require_finite(base_.dense(), "PSD matrix");
    lambda_min_ = min_eigenvalue(base_);
    if (!(lambda_min_ >= -kPsdTolerance)) {
      throw InvariantError("positive-semidefiniteness",
                           "smallest eigenvalue " + std::to_string(lambda_min_) + " is below -1e-10");
    }
  }

  static PSDMatrix from_dense(const Matrix& m) { return PSDMatrix(SymmetricMatrix::from_dense(m)); }
  static PSDMatrix zero(Eigen::Index n) { return PSDMatrix(SymmetricMatrix::zero(n)); }

  Eigen::Index dim() const noexcept { return base_.dim(); }
  const SymmetricMatrix& symmetric() const noexcept { return base_; }
  const Matrix& dense() const noexcept { return base_.dense(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return base_(i, j); }
  double lambda_min() const noexcept { return lambda_min_; }

 private:
  SymmetricMatrix base_;
  double lambda_min_ = 0.0;
};

/// Symmetric positive definite matrix together with its lower Cholesky
/// factor V (Q = V V^T).
class SPDMatrix {
 public:
  explicit SPDMatrix(SymmetricMatrix base) : base_(std::move(base)) {
    detail::require_finite(base_.dense(), "SPD matrix");
    Eigen::LLT<Matrix> llt(base_.dense());
    if (llt.info() != Eigen::Success) {
      throw InvariantError("positive-definiteness", "Cholesky factorization failed");
    }
    factor_ = llt.matrixL();
    for (Eigen::Index i = 0; i < factor_.rows(); ++i) {
      if (!(factor_(i, i) > 0.0)) {
        throw InvariantError("positive-definiteness",
                             "Cholesky pivot " + std::to_string(i) + " is not strictly positive");
      }
    }
    const double err = (factor_ * factor_.transpose() - base_.dense()).norm();
    if (err > 1e-12 * base_.dense().norm()) {
      throw InvariantError("positive-definiteness",
                           "Cholesky reconstruction error " + std::to_string(err) + " too large");
    }
  }

  static SPDMatrix from_dense(const Matrix& m) { return SPDMatrix(SymmetricMatrix::from_dense(m)); }
  static SPDMatrix identity(Eigen::Index n) { return SPDMatrix(SymmetricMatrix::identity(n)); }

  Eigen::Index dim() const noexcept { return base_.dim(); }
  const SymmetricMatrix& symmetric() const noexcept { return base_; }
  const Matrix& dense() const noexcept { return base_.dense(); }
  /// Lower-triangular V with Q = V V^T.
  const Matrix& cholesky_factor() const noexcept { return factor_; }
  bool is_identity() const { return base_.dense().isIdentity(0.0); }

 private:
  SymmetricMatrix base_;
  Matrix factor_;
};

}  // namespace phsid
