#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "vtc/types.hpp"

namespace vtc {

/// Uniform grid t_i = i T / N on [0, T].
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps);

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t nodes() const noexcept { return steps_ + 1; }
  double dt() const noexcept { return horizon_ / static_cast<double>(steps_); }
  double t(std::size_t i) const noexcept {
    return i >= steps_ ? horizon_ : horizon_ * static_cast<double>(i) / static_cast<double>(steps_);
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) noexcept {
    return a.horizon_ == b.horizon_ && a.steps_ == b.steps_;
  }

 private:
  double horizon_;
  std::size_t steps_;
};

/// Position of a time inside the grid under the left-limit convention: the
/// cell is the one whose closed right end reaches the time, so a time that
/// coincides with node t_k (k >= 1) belongs to cell k - 1 with frac = 1.
struct CellLocation {
  std::size_t cell = 0;
  double offset = 0.0;  // time - t_cell, in (0, dt]
  double frac = 0.0;    // offset / dt
};

CellLocation locate(const TimeGrid& grid, double time);

/// Per-coordinate closed interval [lo_i, hi_i].
class ControlBox {
 public:
  ControlBox(Vec lo, Vec hi);

  int dim() const noexcept { return static_cast<int>(lo_.size()); }
  const Vec& lo() const noexcept { return lo_; }
  const Vec& hi() const noexcept { return hi_; }
  Vec midpoint() const { return 0.5 * (lo_ + hi_); }
  bool contains(const Vec& u, double slack = 1e-12) const;

 private:
  Vec lo_;
  Vec hi_;
};

/// Values on the cells [t_i, t_{i+1}) of a grid; column i holds the value of cell i.
class PiecewiseConstant {
 public:
  PiecewiseConstant(TimeGrid grid, Eigen::MatrixXd values);

  const TimeGrid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return static_cast<int>(values_.rows()); }
  std::size_t cells() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  Vec at(std::size_t cell) const { return values_.col(static_cast<Eigen::Index>(cell)); }
  /// Value in force at `time` with the left-limit convention of `locate`.
  Vec at_time(double time) const;
  const Eigen::MatrixXd& values() const noexcept { return values_; }

 protected:
  TimeGrid grid_;
  Eigen::MatrixXd values_;
};

/// Direction of a convex perturbation u + rho v. No box invariant.
class Direction : public PiecewiseConstant {
 public:
  using PiecewiseConstant::PiecewiseConstant;

  static Direction constant(const TimeGrid& grid, const Vec& value);
  static Direction zero(const TimeGrid& grid, int dim);

  Direction operator*(double a) const;
  Direction operator+(const Direction& other) const;
};

/// Admissible open-loop control: every cell value lies in the control box.
class ControlPath : public PiecewiseConstant {
 public:
  ControlPath(TimeGrid grid, Eigen::MatrixXd values, const ControlBox& box);

  static ControlPath constant(const TimeGrid& grid, const Vec& value, const ControlBox& box);
  /// Samples `fn` at cell midpoints.
  static ControlPath from_function(const TimeGrid& grid, const std::function<Vec(double)>& fn,
                                   const ControlBox& box);

  const ControlBox& box() const noexcept { return box_; }

  /// u + rho v; throws BoxViolation when the result leaves the box.
  ControlPath perturbed(double rho, const Direction& v) const;
  /// Control-minus-control, as a direction.
  Direction operator-(const ControlPath& other) const;

 private:
  ControlBox box_;
};

/// Coefficients of the controlled SDE and the cost/constraint functionals,
/// together with their derivatives. Derivative slots may be left empty and
/// then be filled by `finite_difference_derivatives`.
struct ProblemFunctions {
  std::function<Vec(const Vec&, const Vec&)> drift;       // b(x, u) in R^m
  std::function<Mat(const Vec&, const Vec&)> diffusion;   // sigma(x, u) in R^{m x d}
  std::function<double(const Vec&, const Vec&)> running_cost;
  std::function<double(const Vec&)> terminal_cost;
  std::function<double(const Vec&)> constraint;

  std::function<Mat(const Vec&, const Vec&)> drift_x;     // m x m
  std::function<Mat(const Vec&, const Vec&)> drift_u;     // m x k
  std::function<Mat(const Vec&, const Vec&, int)> diffusion_x;  // column j: m x m
  std::function<Mat(const Vec&, const Vec&, int)> diffusion_u;  // column j: m x k
  std::function<Vec(const Vec&, const Vec&)> running_cost_x;
  std::function<Vec(const Vec&, const Vec&)> running_cost_u;
  std::function<Vec(const Vec&)> terminal_cost_x;
  std::function<Mat(const Vec&)> terminal_cost_xx;
  std::function<Vec(const Vec&)> constraint_x;
  std::function<Mat(const Vec&)> constraint_xx;
  std::function<Mat(const Vec&, int)> constraint_xxx;     // slice a: d^3 Phi / dx_a dx_. dx_.

  bool has_all_derivatives() const;
};

struct ProblemData {
  std::string name;
  int state_dim = 1;
  int noise_dim = 1;
  int control_dim = 1;
  ProblemFunctions fn;
  double horizon = 1.0;
  double threshold = 1.0;
  Vec initial_state;
  ControlBox box{Vec::Zero(1), Vec::Ones(1)};
  /// sigma is identically zero; enables the deterministic backends.
  bool diffusion_free = false;
};

/// Validated, immutable optimal-control problem with a mean-constraint
/// terminal time. Shareable across threads; coefficient functions must be pure.
class ProblemSpec {
 public:
  /// Throws ProblemError on inconsistent dimensions, a missing derivative,
  /// an invalid box, or threshold <= Phi(x0).
  explicit ProblemSpec(ProblemData data);

  const ProblemData& data() const noexcept { return data_; }
  const std::string& name() const noexcept { return data_.name; }
  int state_dim() const noexcept { return data_.state_dim; }
  int noise_dim() const noexcept { return data_.noise_dim; }
  int control_dim() const noexcept { return data_.control_dim; }
  double horizon() const noexcept { return data_.horizon; }
  double threshold() const noexcept { return data_.threshold; }
  const Vec& initial_state() const noexcept { return data_.initial_state; }
  const ControlBox& box() const noexcept { return data_.box; }
  bool diffusion_free() const noexcept { return data_.diffusion_free; }

  /// Copy with a different threshold (revalidated).
  ProblemSpec with_threshold(double alpha) const;
  /// Copy with a different horizon (revalidated).
  ProblemSpec with_horizon(double horizon) const;

  Vec drift(const Vec& x, const Vec& u) const { return data_.fn.drift(x, u); }
  Mat diffusion(const Vec& x, const Vec& u) const { return data_.fn.diffusion(x, u); }
  double running_cost(const Vec& x, const Vec& u) const { return data_.fn.running_cost(x, u); }
  double terminal_cost(const Vec& x) const { return data_.fn.terminal_cost(x); }
  double constraint(const Vec& x) const { return data_.fn.constraint(x); }

  Mat drift_x(const Vec& x, const Vec& u) const { return data_.fn.drift_x(x, u); }
  Mat drift_u(const Vec& x, const Vec& u) const { return data_.fn.drift_u(x, u); }
  Mat diffusion_x(const Vec& x, const Vec& u, int j) const { return data_.fn.diffusion_x(x, u, j); }
  Mat diffusion_u(const Vec& x, const Vec& u, int j) const { return data_.fn.diffusion_u(x, u, j); }
  Vec running_cost_x(const Vec& x, const Vec& u) const { return data_.fn.running_cost_x(x, u); }
  Vec running_cost_u(const Vec& x, const Vec& u) const { return data_.fn.running_cost_u(x, u); }
  Vec terminal_cost_x(const Vec& x) const { return data_.fn.terminal_cost_x(x); }
  Mat terminal_cost_xx(const Vec& x) const { return data_.fn.terminal_cost_xx(x); }
  Vec constraint_x(const Vec& x) const { return data_.fn.constraint_x(x); }
  Mat constraint_xx(const Vec& x) const { return data_.fn.constraint_xx(x); }
  Mat constraint_xxx(const Vec& x, int a) const { return data_.fn.constraint_xxx(x, a); }

  // Ito generators used throughout.

  /// g(x, u) = Phi_x^T b + 1/2 sum_j sigma_j^T Phi_xx sigma_j, the integrand of h.
  double constraint_rate(const Vec& x, const Vec& u) const;
  /// g_x: includes the Phi_xxx contraction with sigma_j sigma_j.
  Vec constraint_rate_x(const Vec& x, const Vec& u) const;
  /// g_u = b_u^T Phi_x + sum_j sigma_u^j^T Phi_xx sigma_j.
  Vec constraint_rate_u(const Vec& x, const Vec& u) const;
  /// Psi_x^T b + 1/2 sum_j sigma_j^T Psi_xx sigma_j, the integrand of Psi-tilde.
  double terminal_rate(const Vec& x, const Vec& u) const;

 private:
  ProblemData data_;
};

}  // namespace vtc
