#pragma once

#include <cmath>
#include <vector>

#include "vtc/builtins.hpp"
#include "vtc/forward.hpp"

namespace vtc::test {

inline Vec scalar(double x) { return Vec::Constant(1, x); }

inline SimulationOptions det(Scheme scheme = Scheme::euler) {
  SimulationOptions o;
  o.scheme = scheme;
  return o;
}

inline SimulationOptions mc(std::size_t paths, std::uint64_t seed) {
  SimulationOptions o;
  o.paths = paths;
  o.seed = seed;
  return o;
}

inline ControlPath constant(const ProblemSpec& spec, const TimeGrid& grid, double u) {
  return ControlPath::constant(grid, scalar(u), spec.box());
}

inline Direction unit(const TimeGrid& grid) { return Direction::constant(grid, scalar(1.0)); }

}  // namespace vtc::test
