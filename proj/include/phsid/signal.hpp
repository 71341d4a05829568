#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>

#include "phsid/errors.hpp"

namespace phsid {

/// Row-per-node storage for sampled signals and trajectories.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Uniform grid t_j = j*h, j = 0..steps, h = t_end/steps.
class TimeGrid {
 public:
  TimeGrid(double t_end, std::size_t steps) : t_end_(t_end), steps_(steps) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
      throw InvariantError("time-grid", "final time must be positive and finite");
    }
    if (steps < 1) throw InvariantError("time-grid", "at least one step is required");
    h_ = t_end_ / static_cast<double>(steps_);
  }

  double t_end() const noexcept { return t_end_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t nodes() const noexcept { return steps_ + 1; }
  double step_size() const noexcept { return h_; }

  /// The last node is pinned to t_end so it survives a CSV round trip.
  double time(std::size_t j) const noexcept {
    return j == steps_ ? t_end_ : static_cast<double>(j) * h_;
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) noexcept {
    return a.t_end_ == b.t_end_ && a.steps_ == b.steps_;
  }

 private:
  double t_end_;
  std::size_t steps_;
  double h_;
};

/// Sampled input or output: one row of k channels per grid node.
class Signal {
 public:
  Signal(TimeGrid grid, SampleMatrix values) : grid_(grid), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.rows()) != grid_.nodes()) {
      throw InvariantError("grid-length", "signal has " + std::to_string(values_.rows()) +
                                              " rows but the grid has " + std::to_string(grid_.nodes()) +
                                              " nodes");
    }
    if (values_.cols() < 1) throw DimensionError("signal needs at least one channel");
  }

  static Signal constant(TimeGrid grid, Eigen::Index channels, double value) {
    return Signal(grid, SampleMatrix::Constant(static_cast<Eigen::Index>(grid.nodes()), channels, value));
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  const SampleMatrix& values() const noexcept { return values_; }
  Eigen::Index channels() const noexcept { return values_.cols(); }
  auto row(std::size_t j) const { return values_.row(static_cast<Eigen::Index>(j)); }

 private:
  TimeGrid grid_;
  SampleMatrix values_;
};

/// Which integrator produced a trajectory. It also fixes the discrete output
/// convention: node-wise y_j = B^T w_j for Euler, midpoint
/// y_{j+1} = B^T (w_j + w_{j+1})/2 for the discrete-gradient scheme.
enum class Scheme { euler, midpoint };

inline const char* to_string(Scheme s) { return s == Scheme::euler ? "euler" : "midpoint"; }

/// Sampled state: one row of n components per grid node.
class Trajectory {
 public:
  Trajectory(TimeGrid grid, SampleMatrix states, Scheme scheme = Scheme::euler)
      : grid_(grid), states_(std::move(states)), scheme_(scheme) {
    if (static_cast<std::size_t>(states_.rows()) != grid_.nodes()) {
      throw InvariantError("grid-length", "trajectory has " + std::to_string(states_.rows()) +
                                              " rows but the grid has " + std::to_string(grid_.nodes()) +
                                              " nodes");
    }
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  const SampleMatrix& states() const noexcept { return states_; }
  Eigen::Index dim() const noexcept { return states_.cols(); }
  Scheme scheme() const noexcept { return scheme_; }
  auto row(std::size_t j) const { return states_.row(static_cast<Eigen::Index>(j)); }

 private:
  TimeGrid grid_;
  SampleMatrix states_;
  Scheme scheme_;
};

}  // namespace phsid
