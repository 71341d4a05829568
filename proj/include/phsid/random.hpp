#pragma once

// Reproducible Gaussian noise.
//
// Bits come from std::mt19937_64 seeded with the 64-bit seed; its output
// sequence is fixed by the C++ standard. Uniforms are built from the top 53
// bits, and normals use the Box-Muller transform (both variates of a pair are
// used, cosine branch first). The standard library distributions are avoided
// because their algorithms differ between implementations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "phsid/signal.hpp"

namespace phsid {

class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct NoiseSpec {
  double mean = 1.0;
  double std = 0.1;
  std::uint64_t seed = 0;
};

/// u_{j,i} = mean + std * z_{j,i}; draws are taken row by row, so each port
/// gets an independent stream position.
inline Signal generate_input(const TimeGrid& grid, Eigen::Index ports, const NoiseSpec& spec) {
  if (!(spec.std >= 0.0) || !std::isfinite(spec.std)) throw InvariantError("noise-spec", "std must be >= 0");
  if (!std::isfinite(spec.mean)) throw InvariantError("noise-spec", "mean must be finite");
  if (ports < 1) throw DimensionError("input needs at least one port");
  NormalStream z(spec.seed);
  SampleMatrix u(static_cast<Eigen::Index>(grid.nodes()), ports);
  for (Eigen::Index j = 0; j < u.rows(); ++j) {
    for (Eigen::Index i = 0; i < ports; ++i) u(j, i) = spec.mean + spec.std * z.next();
  }
  return Signal(grid, std::move(u));
}

}  // namespace phsid
