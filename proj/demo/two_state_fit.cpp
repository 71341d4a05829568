// Identifies the two-state test system from synthetic data and prints the
// fitted parameters for both R structures.

#include <cstdlib>
#include <iostream>

#include "phsid/phsid.hpp"

using namespace phsid;

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 42;

  Matrix Jd(2, 2), Rd(2, 2), B(2, 1);
  Vector x_true(2), x0(2);
  x_true << 1, 2;
  x0 << 1.1, 1.95;
  Jd << 0, 1, -1, 0;
  Rd << 0.5, 0, 0, 0.3;
  B << 1, 1;
  const ReducedPHSystem truth(SkewSymmetricMatrix::from_dense(Jd), PSDMatrix::from_dense(Rd), B, x_true);
  const Reference ref = generate_reference(truth, TimeGrid(1.0, 1000), {1.0, 0.1, seed});

  Matrix J0(2, 2), R0(2, 2);
  J0 << 0, 1.2, -1.2, 0;
  R0 << 0.4, 0, 0, 0.4;
  const ParameterPoint guess(SkewSymmetricMatrix::from_dense(J0), PSDMatrix::from_dense(R0), x0);

  for (BasisStructure structure : {BasisStructure::full, BasisStructure::diagonal_R}) {
    CalibrationConfig cfg;
    cfg.structure = structure;
    const CalibrationResult r = calibrate(guess, ref.u, ref.y_data, B, cfg);
    std::cout << "structure " << to_string(structure) << ": " << (r.converged ? "converged" : "not converged")
              << " in " << r.iterations << " steps, cost " << r.final_cost() << "\n"
              << "J =\n" << r.v_opt.J.dense() << "\nR =\n" << r.v_opt.R.dense() << "\nx_hat = "
              << r.v_opt.w_hat.transpose() << "\n\n";
  }
}
