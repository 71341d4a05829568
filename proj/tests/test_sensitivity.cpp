#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace phsid;
using namespace phsid::test;

namespace {

/// Plain-loop cost at dense (J, R, w0); independent of the library path.
double oracle_cost_at(const Matrix& J, const Matrix& R, const Matrix& B, const Vector& w0, const Signal& u,
                      const Signal& y) {
  const double h = u.grid().step_size();
  const Rows w = oracle_euler(to_rows(J - R), to_rows(B), std_vec(w0), signal_rows(u), h);
  return oracle_cost(to_rows(B), w, signal_rows(y), h);
}

}  // namespace

// ------------------------------------------------------------------ basis

TEST(TangentBasis, TwoStateFullMatchesListing) {
  const BasisSet b = tangent_basis(2, BasisStructure::full);
  ASSERT_EQ(b.size(), 6u);
  EXPECT_EQ(b[0].hJ.dense(), mat2(0, -1, 1, 0));
  EXPECT_EQ(b[1].hR.dense(), mat2(1, 0, 0, 0));
  EXPECT_EQ(b[2].hR.dense(), mat2(0, 0, 0, 1));
  EXPECT_EQ(b[3].hR.dense(), mat2(0, 1, 1, 0));
  EXPECT_EQ(b[4].hx, vec2(1, 0));
  EXPECT_EQ(b[5].hx, vec2(0, 1));
  EXPECT_EQ(b[0].block(), DirectionBlock::J);
  EXPECT_EQ(b[3].block(), DirectionBlock::R);
  EXPECT_EQ(b[5].block(), DirectionBlock::x);
}

TEST(TangentBasis, DiagonalVariantDropsOffDiagonal) {
  const BasisSet b = tangent_basis(2, BasisStructure::diagonal_R);
  ASSERT_EQ(b.size(), 5u);
  for (const auto& d : b.directions) EXPECT_TRUE(d.hR.dense().isDiagonal(0.0));
}

TEST(TangentBasis, Cardinality) {
  EXPECT_EQ(tangent_basis(3, BasisStructure::full).size(), 12u);
  for (Eigen::Index n = 1; n <= 6; ++n) {
    EXPECT_EQ(tangent_basis(n, BasisStructure::full).size(), std::size_t(n * n + n));
    EXPECT_EQ(tangent_basis(n, BasisStructure::diagonal_R).size(), std::size_t(n * (n - 1) / 2 + 2 * n));
    for (const auto& d : tangent_basis(n, BasisStructure::full).directions) {
      EXPECT_NE(d.block(), DirectionBlock::mixed);
      EXPECT_NE(d.block(), DirectionBlock::none);
    }
  }
  EXPECT_THROW(tangent_basis(0, BasisStructure::full), DimensionError);
}

// ------------------------------------------------------------ sensitivity

TEST(SolveSensitivity, InitialStateDirectionWithoutDynamicsIsConstant) {
  const ReducedPHSystem sys(SkewSymmetricMatrix::zero(2), PSDMatrix::zero(2), example_B(), vec2(1, 2));
  const Signal u = Signal::constant(TimeGrid(1.0, 30), 1, 1.0);
  const Trajectory w = simulate_euler(sys, u);
  const auto basis = tangent_basis(2, BasisStructure::full);
  const Trajectory s = solve_sensitivity(sys, w, basis[5], w.grid());
  for (std::size_t j = 0; j < s.grid().nodes(); ++j) EXPECT_EQ(Vector(s.row(j).transpose()), vec2(0, 1));
}

TEST(SolveSensitivity, NoStateNoSource) {
  const ReducedPHSystem sys(SkewSymmetricMatrix::from_dense(mat2(0, 1, -1, 0)),
                            PSDMatrix::from_dense(mat2(0.5, 0, 0, 0.3)), example_B(), vec2(0, 0));
  const Signal u = Signal::constant(TimeGrid(1.0, 30), 1, 0.0);
  const Trajectory w = simulate_euler(sys, u);
  const Trajectory s = solve_sensitivity(sys, w, tangent_basis(2, BasisStructure::full)[0], w.grid());
  EXPECT_TRUE(s.states().isZero(0.0));
}

TEST(SolveSensitivity, MixedDirectionRejected) {
  const ReducedPHSystem sys = example_truth();
  const Signal u = Signal::constant(TimeGrid(1.0, 10), 1, 1.0);
  const Trajectory w = simulate_euler(sys, u);
  TangentDirection d = TangentDirection::zero(2);
  d.hJ = SkewSymmetricMatrix::from_dense(mat2(0, -1, 1, 0));
  d.hx = vec2(1, 0);
  EXPECT_THROW(solve_sensitivity(sys, w, d, w.grid()), UnsupportedDirectionError);
  EXPECT_THROW(solve_sensitivity(sys, w, TangentDirection::zero(3), w.grid()), DimensionError);
  EXPECT_THROW(solve_sensitivity(sys, w, tangent_basis(2, BasisStructure::full)[0], TimeGrid(1.0, 11)),
               DimensionError);
}

TEST(SolveSensitivity, MatchesFiniteDifferenceTrajectories) {
  const Reference ref = example_reference(42);
  const ParameterPoint v = example_guess();
  const Matrix B = example_B();
  const ReducedPHSystem sys = v.system(B);
  const Trajectory w = simulate_euler(sys, ref.u);
  const double eps = 1e-6, h = example_grid().step_size();
  for (const TangentDirection& d : tangent_basis(2, BasisStructure::full).directions) {
    const Trajectory s = solve_sensitivity(sys, w, d, w.grid());
    const Rows plus = oracle_euler(to_rows(v.J.dense() + eps * d.hJ.dense() - v.R.dense() - eps * d.hR.dense()),
                                   to_rows(B), std_vec(v.w_hat + eps * d.hx), signal_rows(ref.u), h);
    const Rows minus = oracle_euler(to_rows(v.J.dense() - eps * d.hJ.dense() - v.R.dense() + eps * d.hR.dense()),
                                    to_rows(B), std_vec(v.w_hat - eps * d.hx), signal_rows(ref.u), h);
    const double scale = s.states().cwiseAbs().maxCoeff();
    ASSERT_GT(scale, 0.0);
    double err = 0.0;
    for (std::size_t j = 0; j < plus.size(); ++j)
      for (std::size_t a = 0; a < 2; ++a) {
        const double fd = (plus[j][a] - minus[j][a]) / (2 * eps);
        err = std::max(err, std::abs(fd - s.states()(Eigen::Index(j), Eigen::Index(a))));
      }
    EXPECT_LE(err, 1e-5 * scale);
  }
}

TEST(SolveSensitivity, LinearInDirection) {
  std::mt19937_64 rng(9);
  const auto inst = random_instance(rng, 3, 2, TimeGrid(1.0, 100));
  const ReducedPHSystem sys = inst.v.system(inst.B);
  const Trajectory w = simulate_euler(sys, inst.u);
  for (const auto& d : tangent_basis(3, BasisStructure::full).directions) {
    const Trajectory s1 = solve_sensitivity(sys, w, d, w.grid());
    const Trajectory s2 = solve_sensitivity(sys, w, -2.5 * d, w.grid());
    EXPECT_LE((s2.states() + 2.5 * s1.states()).cwiseAbs().maxCoeff(),
              1e-12 * std::max(1.0, s1.states().cwiseAbs().maxCoeff()));
  }
}

// ----------------------------------------------------- directional derivative

TEST(DirectionalDerivative, ZeroAtPerfectFitAndForZeroSensitivity) {
  const Reference ref = example_reference(3);
  const ReducedPHSystem sys = example_truth();
  const Trajectory w = simulate_euler(sys, ref.u);
  for (const auto& d : tangent_basis(2, BasisStructure::full).directions) {
    EXPECT_EQ(directional_derivative(sys, w, solve_sensitivity(sys, w, d, w.grid()), ref.y_data), 0.0);
  }
  const ReducedPHSystem other = example_guess().system(example_B());
  const Trajectory w2 = simulate_euler(other, ref.u);
  const Trajectory zero(w2.grid(), SampleMatrix::Zero(w2.states().rows(), 2));
  EXPECT_EQ(directional_derivative(other, w2, zero, ref.y_data), 0.0);
}

TEST(DirectionalDerivative, SkewDirectionMatchesCostFiniteDifference) {
  const Reference ref = example_reference(42);
  const ParameterPoint v = example_guess();
  const Matrix B = example_B();
  const ReducedPHSystem sys = v.system(B);
  const Trajectory w = simulate_euler(sys, ref.u);
  const TangentDirection J1 = tangent_basis(2, BasisStructure::full)[0];
  const double dd = directional_derivative(sys, w, solve_sensitivity(sys, w, J1, w.grid()), ref.y_data);
  const double eps = 1e-6;
  const double fd = (oracle_cost_at(v.J.dense() + eps * J1.hJ.dense(), v.R.dense(), B, v.w_hat, ref.u, ref.y_data) -
                     oracle_cost_at(v.J.dense() - eps * J1.hJ.dense(), v.R.dense(), B, v.w_hat, ref.u, ref.y_data)) /
                    (2 * eps);
  EXPECT_NE(dd, 0.0);
  EXPECT_LE(std::abs(dd - fd), 1e-4 * std::abs(fd));
}

TEST(DirectionalDerivative, GridMismatchRejected) {
  const ReducedPHSystem sys = example_truth();
  const Signal u = Signal::constant(TimeGrid(1.0, 10), 1, 1.0);
  const Trajectory w = simulate_euler(sys, u);
  EXPECT_THROW(directional_derivative(sys, w, w, Signal::constant(TimeGrid(1.0, 12), 1, 0.0)), DimensionError);
}

// -------------------------------------------------------------- assembly

TEST(AssembleGradient, LinearCombinationOfRawBasis) {
  const BasisSet basis = tangent_basis(2, BasisStructure::full);
  const Gradient zero = assemble_gradient(std::vector<double>(6, 0.0), basis);
  EXPECT_TRUE(zero.value.hJ.is_zero() && zero.value.hR.is_zero() && zero.value.hx.isZero(0.0));

  const Gradient j1 = assemble_gradient({1, 0, 0, 0, 0, 0}, basis);
  EXPECT_EQ(j1.value.hJ.dense(), mat2(0, -1, 1, 0));
  EXPECT_TRUE(j1.value.hR.is_zero());

  const Gradient g = assemble_gradient({0.5, 1, 2, 3, 4, 5}, basis);
  EXPECT_EQ(g.value.hJ.dense(), mat2(0, -0.5, 0.5, 0));
  EXPECT_EQ(g.value.hR.dense(), mat2(1, 3, 3, 2));
  EXPECT_EQ(g.value.hx, vec2(4, 5));
  EXPECT_DOUBLE_EQ(g.norm_sq(), 0.25 + 1 + 4 + 9 + 16 + 25);

  EXPECT_THROW(assemble_gradient({1, 2}, basis), DimensionError);
}

TEST(AssembleGradient, BlocksAreExactlyStructured) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  for (Eigen::Index n = 2; n <= 5; ++n) {
    const BasisSet basis = tangent_basis(n, BasisStructure::full);
    std::vector<double> c(basis.size());
    for (auto& x : c) x = z(rng);
    const Gradient g = assemble_gradient(c, basis);
    EXPECT_EQ(g.value.hJ.dense(), -g.value.hJ.dense().transpose());
    EXPECT_EQ(g.value.hR.dense(), g.value.hR.dense().transpose());
  }
}

// --------------------------------------------------- finite differences

TEST(FiniteDifferenceGradient, VanishesAtPerfectFit) {
  const Reference ref = example_reference(5);
  const auto fd = finite_difference_gradient(example_truth_point(), example_B(), ref.u, ref.y_data,
                                             tangent_basis(2, BasisStructure::full), 1e-6);
  for (double c : fd) EXPECT_LE(std::abs(c), 1e-8);
}

TEST(FiniteDifferenceGradient, ScalarRecursionHasClosedFormDerivative) {
  // n = 1, J = 0, R = [r], B = [1], u = 0, y_data = c:
  // w_j = a^j w0 with a = 1 - h r, cost = h/2 sum_{j<K} (a^j w0 - c)^2,
  // d/dr = -h^2 sum (a^j w0 - c) j a^(j-1) w0, d/dw0 = h sum (a^j w0 - c) a^j.
  const double r = 0.4, w0 = 1.3, c = 0.2;
  const TimeGrid grid(1.0, 50);
  const double h = grid.step_size(), a = 1 - h * r;
  double d_r = 0.0, d_w = 0.0;
  for (std::size_t j = 0; j < grid.steps(); ++j) {
    const double aj = std::pow(a, double(j));
    d_r += -h * h * (aj * w0 - c) * double(j) * (j == 0 ? 0.0 : std::pow(a, double(j) - 1)) * w0;
    d_w += h * (aj * w0 - c) * aj;
  }
  const ParameterPoint v(SkewSymmetricMatrix::zero(1), PSDMatrix::from_dense(Matrix::Constant(1, 1, r)),
                         Vector::Constant(1, w0));
  const Matrix B = Matrix::Ones(1, 1);
  const Signal u = Signal::constant(grid, 1, 0.0);
  const Signal y = Signal::constant(grid, 1, c);
  const BasisSet basis = tangent_basis(1, BasisStructure::full);
  ASSERT_EQ(basis.size(), 2u);
  const auto fd = finite_difference_gradient(v, B, u, y, basis, 1e-6);
  EXPECT_LE(std::abs(fd[0] - d_r), 1e-6 * std::abs(d_r));
  EXPECT_LE(std::abs(fd[1] - d_w), 1e-6 * std::abs(d_w));
  const auto sens = sensitivity_coefficients(v.system(B), u, y, basis);
  EXPECT_LE(std::abs(sens[0] - d_r), 1e-12 * std::abs(d_r));
  EXPECT_LE(std::abs(sens[1] - d_w), 1e-12 * std::abs(d_w));
}

TEST(FiniteDifferenceGradient, AgreesWithSensitivitiesOnReferenceProblem) {
  const Reference ref = example_reference(42);
  const BasisSet basis = tangent_basis(2, BasisStructure::full);
  const ParameterPoint v = example_guess();
  const auto sens = sensitivity_coefficients(v.system(example_B()), ref.u, ref.y_data, basis);
  const auto fd = finite_difference_gradient(v, example_B(), ref.u, ref.y_data, basis, 1e-6);
  for (std::size_t l = 0; l < basis.size(); ++l) EXPECT_TRUE(coefficients_agree(sens[l], fd[l])) << "direction " << l;
}

TEST(FiniteDifferenceGradient, RejectsNonPositiveStep) {
  const Reference ref = example_reference(1);
  EXPECT_THROW(finite_difference_gradient(example_guess(), example_B(), ref.u, ref.y_data,
                                          tangent_basis(2, BasisStructure::full), 0.0),
               Error);
}

TEST(GradientProperty, RandomInstancesAgreeWithFiniteDifferences) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 1 + trial % 4, k = 1 + trial % 2;
    const auto inst = random_instance(rng, n, k, TimeGrid(1.0, 200));
    const BasisSet basis = tangent_basis(n, trial % 3 == 0 ? BasisStructure::diagonal_R : BasisStructure::full);
    const auto sens = sensitivity_coefficients(inst.v.system(inst.B), inst.u, inst.y_data, basis);
    const auto fd = finite_difference_gradient(inst.v, inst.B, inst.u, inst.y_data, basis, 1e-6);
    for (std::size_t l = 0; l < basis.size(); ++l) {
      EXPECT_TRUE(coefficients_agree(sens[l], fd[l])) << "trial " << trial << " direction " << l << ": " << sens[l]
                                                      << " vs " << fd[l];
    }
  }
}

TEST(GradientProperty, ZeroResidualGivesExactlyZeroCoefficients) {
  std::mt19937_64 rng(4);
  const auto inst = random_instance(rng, 3, 2, TimeGrid(1.0, 100));
  const ReducedPHSystem sys = inst.v.system(inst.B);
  const Signal y = output(sys, simulate_euler(sys, inst.u));
  for (double c : sensitivity_coefficients(sys, inst.u, y, tangent_basis(3, BasisStructure::full))) EXPECT_EQ(c, 0.0);
}

TEST(GradientProperty, ParallelMatchesSequentialBitForBit) {
  const Reference ref = example_reference(42);
  const BasisSet basis = tangent_basis(2, BasisStructure::full);
  const ReducedPHSystem sys = example_guess().system(example_B());
  EXPECT_EQ(sensitivity_coefficients(sys, ref.u, ref.y_data, basis, Execution::sequential),
            sensitivity_coefficients(sys, ref.u, ref.y_data, basis, Execution::parallel));
}
