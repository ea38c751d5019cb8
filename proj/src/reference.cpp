// Serial reference for the forward simulation. Draws every increment first,
// then integrates path by path in a plain loop.

#include <sstream>

#include "kernels.hpp"
#include "rng.hpp"
#include "vtc/errors.hpp"
#include "vtc/forward.hpp"

namespace vtc {

PathEnsemble simulate_reference(const ProblemSpec& spec, const ControlPath& control,
                                const SimulationOptions& options) {
  if (options.paths == 0) throw ContractError("path count must be at least 1");
  const bool deterministic = spec.diffusion_free() && !options.force_monte_carlo;
  if (deterministic && options.paths != 1) throw ContractError("deterministic mode (sigma = 0) uses exactly one path");
  if (!deterministic && options.scheme == Scheme::rk4) {
    throw ContractError("the rk4 scheme is only available in deterministic mode");
  }

  const TimeGrid& grid = control.grid();
  const std::size_t n = grid.steps();
  const std::size_t m = static_cast<std::size_t>(spec.state_dim());
  const std::size_t d = static_cast<std::size_t>(spec.noise_dim());
  const double dt = grid.dt();

  std::vector<double> increments;
  if (!deterministic) {
    increments.resize(options.paths * n * d);
    for (std::size_t p = 0; p < options.paths; ++p) {
      auto rng = detail::path_stream(options.seed, p);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (std::size_t k = 0; k < n * d; ++k) increments[p * n * d + k] = std::sqrt(dt) * normal(rng);
    }
  }

  std::vector<double> states(options.paths * (n + 1) * m);
  for (std::size_t p = 0; p < options.paths; ++p) {
    Vec x = spec.initial_state();
    for (std::size_t a = 0; a < m; ++a) states[(p * (n + 1)) * m + a] = x[static_cast<Eigen::Index>(a)];
    for (std::size_t i = 0; i < n; ++i) {
      const Vec u = control.at(i);
      if (options.scheme == Scheme::rk4) {
        x = detail::rk4_step(spec, x, u, dt);
      } else {
        x = detail::euler_step(spec, x, u, dt, deterministic ? nullptr : &increments[(p * n + i) * d]);
      }
      if (!detail::all_finite(x)) {
        std::ostringstream os;
        os << "non-finite state on path " << p << " at node " << i + 1;
        throw SimulationError(os.str(), p, i + 1);
      }
      for (std::size_t a = 0; a < m; ++a) {
        states[(p * (n + 1) + i + 1) * m + a] = x[static_cast<Eigen::Index>(a)];
      }
    }
  }
  if (!options.retain_increments) increments.clear();
  return PathEnsemble(spec, control, options, deterministic, std::move(states), std::move(increments));
}

}  // namespace vtc
