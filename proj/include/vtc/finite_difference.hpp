#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "vtc/problem.hpp"

namespace vtc {

enum class FdFill {
  missing,  ///< only empty derivative slots are filled
  all,      ///< every derivative slot is replaced by a finite difference
};

/// Central-difference step for a derivative built from `depth` nested
/// difference layers: eps^(1/(depth+2)) * max(1, |x|). Depth 1 is the
/// classical cbrt(eps) step.
double fd_step(double x, int depth);

/// Central-difference gradient of a scalar field with relative step `rel`.
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double rel);

/// Central-difference Jacobian (columns = derivative along x_i).
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double rel);

/// Completes (or replaces) the derivative slots of `data` with central
/// finite differences and validates the result. Third derivatives of Phi use
/// nested central differences of the next-lower derivative.
ProblemSpec finite_difference_derivatives(ProblemData data, FdFill fill = FdFill::missing);

struct DerivativeCheck {
  double worst_relative_error = 0.0;
  std::string worst_field;
  std::size_t samples = 0;
};

/// Probes each derivative of `spec` against a one-layer central difference
/// of the next-lower function at random (x, u). States are drawn around x0
/// with unit spread; controls uniformly from the box.
DerivativeCheck check_derivatives(const ProblemSpec& spec, std::size_t samples, std::uint64_t seed);

}  // namespace vtc
