#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "vtc/problem.hpp"

namespace vtc {

/// A registered problem plus its stored candidate control.
struct BuiltinProblem {
  ProblemSpec spec;
  /// Candidate (reference) control sampled on a grid over [0, T].
  std::function<ControlPath(const TimeGrid&)> reference_control;
};

/// Names accepted by `register_builtin`.
const std::vector<std::string>& builtin_names();

/// Builds a registered problem:
///  - example-kink: b = u, sigma = 0, Phi = x, T = 2, alpha = 1; reference
///    u = 1 on [0, 1], 0.5 after (mean curve with a kink at tau = 1).
///  - example-flat: same dynamics; reference u = 2 - 2t (X = 2t - t^2 touches
///    alpha = 1 with zero slope).
///  - example-affine: b = x + u, f = u, Psi = 0, Phi = x, U = [1, 2], T = 1,
///    alpha = 1; reference u = 1.
///  - toy-linear-deterministic, toy-linear-sde: see the parameter structs.
/// Throws RegistryError listing the valid names for anything else.
BuiltinProblem register_builtin(std::string_view name);

/// b = u, sigma = 0, f = u^2, Phi = x, Psi = w (x - c)^2.
struct ToyLinearParams {
  double horizon = 1.0;
  double threshold = 0.5;
  double x0 = 0.0;
  double u_lo = 0.0;
  double u_hi = 2.0;
  double psi_weight = 0.0;
  double psi_target = 0.0;
  double reference_value = 1.0;
};
BuiltinProblem make_toy_linear_deterministic(const ToyLinearParams& p = {});

/// b = theta u, sigma = s (constant), f = u^2, Psi = w x^2, Phi = x or x^2.
struct ToyLinearSdeParams {
  double theta = 1.0;
  double sigma = 0.2;
  double horizon = 1.0;
  double threshold = 0.4;
  double x0 = 0.0;
  double u_lo = 0.0;
  double u_hi = 2.0;
  double psi_weight = 1.0;
  bool quadratic_constraint = false;
  double reference_value = 0.5;
};
BuiltinProblem make_toy_linear_sde(const ToyLinearSdeParams& p = {});

/// Generic scalar family with finite-difference derivatives:
///   b = a0 + a1 x + a2 x^2 + c1 u + c2 u^2 + c3 x u
///   sigma = s0 + s1 x + s2 u
///   f = r2 u^2 + r1 u + e2 x^2 + e1 x
///   Psi = p2 x^2 + p1 x
///   Phi = q1 x + q2 x^2 + q3 x^3
struct ScalarPolynomialParams {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, c1 = 1.0, c2 = 0.0, c3 = 0.0;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  double r2 = 0.0, r1 = 0.0, e2 = 0.0, e1 = 0.0;
  double p2 = 0.0, p1 = 0.0;
  double q1 = 1.0, q2 = 0.0, q3 = 0.0;
  double horizon = 1.0;
  double threshold = 1.0;
  double x0 = 0.0;
  double u_lo = 0.0;
  double u_hi = 1.0;
  double reference_value = 0.5;
};
BuiltinProblem make_scalar_polynomial(const ScalarPolynomialParams& p);

}  // namespace vtc
