#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace vtc::test {

// Discrete dynamic programming for x_{i+1} = x_i + dt b(x_i, u), cost
// sum dt f(x_i, u) + Psi(x_N), on a state lattice with linear interpolation
// and a control lattice. Returns the optimal cost from x0.
struct DpProblem {
  double horizon = 1.0;
  std::size_t steps = 50;
  double x0 = 0.0;
  double x_lo = -1.0, x_hi = 2.0;
  std::size_t x_points = 3001;
  double u_lo = 0.0, u_hi = 2.0, u_step = 0.01;
  std::function<double(double, double)> drift;
  std::function<double(double, double)> running;
  std::function<double(double)> terminal;
};

inline double dp_optimal_cost(const DpProblem& p) {
  const double dt = p.horizon / static_cast<double>(p.steps);
  const double dx = (p.x_hi - p.x_lo) / static_cast<double>(p.x_points - 1);
  std::vector<double> xs(p.x_points), value(p.x_points), next(p.x_points);
  for (std::size_t j = 0; j < p.x_points; ++j) {
    xs[j] = p.x_lo + dx * static_cast<double>(j);
    value[j] = p.terminal(xs[j]);
  }
  auto interp = [&](const std::vector<double>& v, double x) {
    const double s = std::clamp((x - p.x_lo) / dx, 0.0, static_cast<double>(p.x_points - 1));
    const auto j = std::min(static_cast<std::size_t>(s), p.x_points - 2);
    const double w = s - static_cast<double>(j);
    return (1.0 - w) * v[j] + w * v[j + 1];
  };
  const auto controls = static_cast<std::size_t>(std::llround((p.u_hi - p.u_lo) / p.u_step)) + 1;
  for (std::size_t i = p.steps; i-- > 0;) {
    for (std::size_t j = 0; j < p.x_points; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < controls; ++c) {
        const double u = p.u_lo + p.u_step * static_cast<double>(c);
        const double x = xs[j];
        best = std::min(best, dt * p.running(x, u) + interp(value, x + dt * p.drift(x, u)));
      }
      next[j] = best;
    }
    value.swap(next);
  }
  return interp(value, p.x0);
}

}  // namespace vtc::test
