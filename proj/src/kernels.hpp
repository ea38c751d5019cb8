#pragma once

#include <cmath>

#include "vtc/problem.hpp"

namespace vtc::detail {

// One Euler-Maruyama step; dw may be null (sigma = 0).
inline Vec euler_step(const ProblemSpec& spec, const Vec& x, const Vec& u, double dt, const double* dw) {
  const Vec b = spec.drift(x, u);
  Vec out(x.size());
  if (dw == nullptr) {
    for (Eigen::Index a = 0; a < x.size(); ++a) out[a] = x[a] + b[a] * dt;
    return out;
  }
  const Mat s = spec.diffusion(x, u);
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    double acc = x[a] + b[a] * dt;
    for (Eigen::Index j = 0; j < s.cols(); ++j) acc += s(a, j) * dw[j];
    out[a] = acc;
  }
  return out;
}

// Classical RK4 step of dx = b(x, u) dt with u frozen over the step.
inline Vec rk4_step(const ProblemSpec& spec, const Vec& x, const Vec& u, double dt) {
  const Vec k1 = spec.drift(x, u);
  const Vec k2 = spec.drift(x + (0.5 * dt) * k1, u);
  const Vec k3 = spec.drift(x + (0.5 * dt) * k2, u);
  const Vec k4 = spec.drift(x + dt * k3, u);
  Vec out(x.size());
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    out[a] = x[a] + (dt / 6.0) * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
  }
  return out;
}

inline bool all_finite(const Vec& x) {
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    if (!std::isfinite(x[a])) return false;
  }
  return true;
}

}  // namespace vtc::detail
