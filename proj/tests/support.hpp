#pragma once

// Test-only helpers: the two-state reference problem, random admissible
// instances, and a plain-loop Euler/cost oracle that shares no code with
// the library.

#include <cstdint>
#include <random>
#include <vector>

#include "phsid/phsid.hpp"

namespace phsid::test {

inline Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

inline Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

inline Matrix example_B() {
  Matrix B(2, 1);
  B << 1.0, 1.0;
  return B;
}

/// Data-generating system: J = [[0,1],[-1,0]], R = diag(0.5, 0.3), x_hat = (1, 2).
inline ReducedPHSystem example_truth() {
  return ReducedPHSystem(SkewSymmetricMatrix::from_dense(mat2(0, 1, -1, 0)),
                         PSDMatrix::from_dense(mat2(0.5, 0, 0, 0.3)), example_B(), vec2(1.0, 2.0));
}

inline ParameterPoint example_truth_point() {
  const auto s = example_truth();
  return ParameterPoint(s.J, s.R, s.w_hat);
}

/// Initial guess: J = [[0,1.2],[-1.2,0]], R = diag(0.4, 0.4), x_hat = (1.1, 1.95).
inline ParameterPoint example_guess() {
  return ParameterPoint(SkewSymmetricMatrix::from_dense(mat2(0, 1.2, -1.2, 0)),
                        PSDMatrix::from_dense(mat2(0.4, 0, 0, 0.4)), vec2(1.1, 1.95));
}

inline TimeGrid example_grid() { return TimeGrid(1.0, 1000); }

inline Reference example_reference(std::uint64_t seed) {
  return generate_reference(example_truth(), example_grid(), {1.0, 0.1, seed});
}

// ------------------------------------------------------------ random cases

struct RandomInstance {
  ParameterPoint v;
  Matrix B;
  Signal u;
  Signal y_data;
};

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> z(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = z(rng);
  return m;
}

inline SkewSymmetricMatrix random_skew(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  return SkewSymmetricMatrix::from_lower(random_matrix(rng, n, n, scale));
}

/// L L^T / n with L Gaussian; PSD by construction, sometimes rank deficient.
inline PSDMatrix random_psd(std::mt19937_64& rng, Eigen::Index n, bool rank_deficient = false) {
  const Eigen::Index r = rank_deficient && n > 1 ? n - 1 : n;
  const Matrix L = random_matrix(rng, n, r);
  return PSDMatrix(SymmetricMatrix::symmetrize(L * L.transpose() / double(n)));
}

inline SPDMatrix random_spd(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix L = random_matrix(rng, n, n);
  return SPDMatrix(SymmetricMatrix::symmetrize(L * L.transpose() + 0.5 * Matrix::Identity(n, n)));
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale).col(0);
}

inline Signal random_signal(std::mt19937_64& rng, const TimeGrid& grid, Eigen::Index k) {
  std::normal_distribution<double> z(0.0, 1.0);
  SampleMatrix v(static_cast<Eigen::Index>(grid.nodes()), k);
  for (Eigen::Index j = 0; j < v.rows(); ++j)
    for (Eigen::Index i = 0; i < k; ++i) v(j, i) = 1.0 + 0.3 * z(rng);
  return Signal(grid, std::move(v));
}

/// Admissible point plus data generated by a different random system.
inline RandomInstance random_instance(std::mt19937_64& rng, Eigen::Index n, Eigen::Index k, const TimeGrid& grid) {
  const Matrix B = random_matrix(rng, n, k);
  ParameterPoint v(random_skew(rng, n), random_psd(rng, n), random_vector(rng, n));
  const ReducedPHSystem data_sys(random_skew(rng, n), random_psd(rng, n), B, random_vector(rng, n));
  Signal u = random_signal(rng, grid, k);
  Signal y = output(data_sys, simulate_euler(data_sys, u));
  return {std::move(v), B, std::move(u), std::move(y)};
}

// ----------------------------------------------------------------- oracle

using Rows = std::vector<std::vector<double>>;

inline Rows to_rows(const Matrix& m) {
  Rows r(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  return r;
}

/// Explicit Euler with plain loops: w_{j+1} = w_j + h (A w_j + B u_j).
inline Rows oracle_euler(const Rows& A, const Rows& B, const std::vector<double>& w0, const Rows& u, double h) {
  const std::size_t n = w0.size(), k = B[0].size();
  Rows w{w0};
  for (std::size_t j = 0; j + 1 < u.size(); ++j) {
    std::vector<double> next(n);
    for (std::size_t a = 0; a < n; ++a) {
      double f = 0.0;
      for (std::size_t b = 0; b < n; ++b) f += A[a][b] * w[j][b];
      for (std::size_t p = 0; p < k; ++p) f += B[a][p] * u[j][p];
      next[a] = w[j][a] + h * f;
    }
    w.push_back(std::move(next));
  }
  return w;
}

/// 1/2 sum_{j<K} h |B^T w_j - y_j|^2 with plain loops.
inline double oracle_cost(const Rows& B, const Rows& w, const Rows& y, double h) {
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < w.size(); ++j) {
    for (std::size_t p = 0; p < B[0].size(); ++p) {
      double out = 0.0;
      for (std::size_t a = 0; a < w[j].size(); ++a) out += B[a][p] * w[j][a];
      acc += (out - y[j][p]) * (out - y[j][p]);
    }
  }
  return 0.5 * h * acc;
}

inline Rows signal_rows(const Signal& s) { return to_rows(s.values()); }

inline std::vector<double> std_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace phsid::test
