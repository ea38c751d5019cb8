#include "vtc/builtins.hpp"

#include <sstream>

#include "vtc/errors.hpp"
#include "vtc/finite_difference.hpp"

namespace vtc {

namespace {

Vec scalar(double v) {
  Vec out(1);
  out[0] = v;
  return out;
}

Mat scalar_mat(double v) {
  Mat out(1, 1);
  out(0, 0) = v;
  return out;
}

ControlBox interval(double lo, double hi) { return ControlBox(scalar(lo), scalar(hi)); }

// Linear constraint Phi = x and its derivatives.
void linear_constraint(ProblemFunctions& fn) {
  fn.constraint = [](const Vec& x) { return x[0]; };
  fn.constraint_x = [](const Vec&) { return scalar(1.0); };
  fn.constraint_xx = [](const Vec&) { return scalar_mat(0.0); };
  fn.constraint_xxx = [](const Vec&, int) { return scalar_mat(0.0); };
}

void zero_diffusion(ProblemFunctions& fn) {
  fn.diffusion = [](const Vec&, const Vec&) { return scalar_mat(0.0); };
  fn.diffusion_x = [](const Vec&, const Vec&, int) { return scalar_mat(0.0); };
  fn.diffusion_u = [](const Vec&, const Vec&, int) { return scalar_mat(0.0); };
}

void zero_terminal_cost(ProblemFunctions& fn) {
  fn.terminal_cost = [](const Vec&) { return 0.0; };
  fn.terminal_cost_x = [](const Vec&) { return scalar(0.0); };
  fn.terminal_cost_xx = [](const Vec&) { return scalar_mat(0.0); };
}

// b = u, sigma = 0, f = u^2 / 2, Psi = 0, Phi = x on [0, 2] with alpha = 1.
ProblemData counterexample_data(const std::string& name) {
  ProblemData d;
  d.name = name;
  auto& fn = d.fn;
  fn.drift = [](const Vec&, const Vec& u) { return scalar(u[0]); };
  fn.drift_x = [](const Vec&, const Vec&) { return scalar_mat(0.0); };
  fn.drift_u = [](const Vec&, const Vec&) { return scalar_mat(1.0); };
  zero_diffusion(fn);
  fn.running_cost = [](const Vec&, const Vec& u) { return 0.5 * u[0] * u[0]; };
  fn.running_cost_x = [](const Vec&, const Vec&) { return scalar(0.0); };
  fn.running_cost_u = [](const Vec&, const Vec& u) { return scalar(u[0]); };
  zero_terminal_cost(fn);
  linear_constraint(fn);
  d.horizon = 2.0;
  d.threshold = 1.0;
  d.initial_state = scalar(0.0);
  d.box = interval(-3.0, 3.0);
  d.diffusion_free = true;
  return d;
}

BuiltinProblem example_kink() {
  ProblemSpec spec(counterexample_data("example-kink"));
  const ControlBox box = spec.box();
  return {spec, [box](const TimeGrid& grid) {
            return ControlPath::from_function(
                grid, [](double t) { return scalar(t < 1.0 ? 1.0 : 0.5); }, box);
          }};
}

BuiltinProblem example_flat() {
  ProblemSpec spec(counterexample_data("example-flat"));
  const ControlBox box = spec.box();
  return {spec, [box](const TimeGrid& grid) {
            return ControlPath::from_function(grid, [](double t) { return scalar(2.0 - 2.0 * t); }, box);
          }};
}

BuiltinProblem example_affine() {
  ProblemData d;
  d.name = "example-affine";
  auto& fn = d.fn;
  fn.drift = [](const Vec& x, const Vec& u) { return scalar(x[0] + u[0]); };
  fn.drift_x = [](const Vec&, const Vec&) { return scalar_mat(1.0); };
  fn.drift_u = [](const Vec&, const Vec&) { return scalar_mat(1.0); };
  zero_diffusion(fn);
  fn.running_cost = [](const Vec&, const Vec& u) { return u[0]; };
  fn.running_cost_x = [](const Vec&, const Vec&) { return scalar(0.0); };
  fn.running_cost_u = [](const Vec&, const Vec&) { return scalar(1.0); };
  zero_terminal_cost(fn);
  linear_constraint(fn);
  d.horizon = 1.0;
  d.threshold = 1.0;
  d.initial_state = scalar(0.0);
  d.box = interval(1.0, 2.0);
  d.diffusion_free = true;
  ProblemSpec spec(std::move(d));
  const ControlBox box = spec.box();
  return {spec, [box](const TimeGrid& grid) { return ControlPath::constant(grid, scalar(1.0), box); }};
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {"example-kink", "example-flat", "example-affine",
                                                 "toy-linear-deterministic", "toy-linear-sde"};
  return names;
}

BuiltinProblem register_builtin(std::string_view name) {
  if (name == "example-kink") return example_kink();
  if (name == "example-flat") return example_flat();
  if (name == "example-affine") return example_affine();
  if (name == "toy-linear-deterministic") return make_toy_linear_deterministic();
  if (name == "toy-linear-sde") return make_toy_linear_sde();
  std::ostringstream os;
  os << "unknown builtin problem '" << name << "'; valid names:";
  for (const auto& n : builtin_names()) os << ' ' << n;
  throw RegistryError(os.str());
}

BuiltinProblem make_toy_linear_deterministic(const ToyLinearParams& p) {
  ProblemData d;
  d.name = "toy-linear-deterministic";
  auto& fn = d.fn;
  fn.drift = [](const Vec&, const Vec& u) { return scalar(u[0]); };
  fn.drift_x = [](const Vec&, const Vec&) { return scalar_mat(0.0); };
  fn.drift_u = [](const Vec&, const Vec&) { return scalar_mat(1.0); };
  zero_diffusion(fn);
  fn.running_cost = [](const Vec&, const Vec& u) { return u[0] * u[0]; };
  fn.running_cost_x = [](const Vec&, const Vec&) { return scalar(0.0); };
  fn.running_cost_u = [](const Vec&, const Vec& u) { return scalar(2.0 * u[0]); };
  const double w = p.psi_weight;
  const double c = p.psi_target;
  fn.terminal_cost = [w, c](const Vec& x) { return w * (x[0] - c) * (x[0] - c); };
  fn.terminal_cost_x = [w, c](const Vec& x) { return scalar(2.0 * w * (x[0] - c)); };
  fn.terminal_cost_xx = [w](const Vec&) { return scalar_mat(2.0 * w); };
  linear_constraint(fn);
  d.horizon = p.horizon;
  d.threshold = p.threshold;
  d.initial_state = scalar(p.x0);
  d.box = interval(p.u_lo, p.u_hi);
  d.diffusion_free = true;
  ProblemSpec spec(std::move(d));
  const ControlBox box = spec.box();
  const double ref = p.reference_value;
  return {spec, [box, ref](const TimeGrid& grid) { return ControlPath::constant(grid, scalar(ref), box); }};
}

BuiltinProblem make_toy_linear_sde(const ToyLinearSdeParams& p) {
  ProblemData d;
  d.name = "toy-linear-sde";
  auto& fn = d.fn;
  const double theta = p.theta;
  const double s = p.sigma;
  fn.drift = [theta](const Vec&, const Vec& u) { return scalar(theta * u[0]); };
  fn.drift_x = [](const Vec&, const Vec&) { return scalar_mat(0.0); };
  fn.drift_u = [theta](const Vec&, const Vec&) { return scalar_mat(theta); };
  fn.diffusion = [s](const Vec&, const Vec&) { return scalar_mat(s); };
  fn.diffusion_x = [](const Vec&, const Vec&, int) { return scalar_mat(0.0); };
  fn.diffusion_u = [](const Vec&, const Vec&, int) { return scalar_mat(0.0); };
  fn.running_cost = [](const Vec&, const Vec& u) { return u[0] * u[0]; };
  fn.running_cost_x = [](const Vec&, const Vec&) { return scalar(0.0); };
  fn.running_cost_u = [](const Vec&, const Vec& u) { return scalar(2.0 * u[0]); };
  const double w = p.psi_weight;
  fn.terminal_cost = [w](const Vec& x) { return w * x[0] * x[0]; };
  fn.terminal_cost_x = [w](const Vec& x) { return scalar(2.0 * w * x[0]); };
  fn.terminal_cost_xx = [w](const Vec&) { return scalar_mat(2.0 * w); };
  if (p.quadratic_constraint) {
    fn.constraint = [](const Vec& x) { return x[0] * x[0]; };
    fn.constraint_x = [](const Vec& x) { return scalar(2.0 * x[0]); };
    fn.constraint_xx = [](const Vec&) { return scalar_mat(2.0); };
    fn.constraint_xxx = [](const Vec&, int) { return scalar_mat(0.0); };
  } else {
    linear_constraint(fn);
  }
  d.horizon = p.horizon;
  d.threshold = p.threshold;
  d.initial_state = scalar(p.x0);
  d.box = interval(p.u_lo, p.u_hi);
  d.diffusion_free = s == 0.0;
  ProblemSpec spec(std::move(d));
  const ControlBox box = spec.box();
  const double ref = p.reference_value;
  return {spec, [box, ref](const TimeGrid& grid) { return ControlPath::constant(grid, scalar(ref), box); }};
}

BuiltinProblem make_scalar_polynomial(const ScalarPolynomialParams& p) {
  ProblemData d;
  d.name = "scalar-polynomial";
  auto& fn = d.fn;
  fn.drift = [p](const Vec& x, const Vec& u) {
    const double a = x[0], c = u[0];
    return scalar(p.a0 + p.a1 * a + p.a2 * a * a + p.c1 * c + p.c2 * c * c + p.c3 * a * c);
  };
  fn.diffusion = [p](const Vec& x, const Vec& u) { return scalar_mat(p.s0 + p.s1 * x[0] + p.s2 * u[0]); };
  fn.running_cost = [p](const Vec& x, const Vec& u) {
    const double a = x[0], c = u[0];
    return p.r2 * c * c + p.r1 * c + p.e2 * a * a + p.e1 * a;
  };
  fn.terminal_cost = [p](const Vec& x) { return p.p2 * x[0] * x[0] + p.p1 * x[0]; };
  fn.constraint = [p](const Vec& x) {
    const double a = x[0];
    return p.q1 * a + p.q2 * a * a + p.q3 * a * a * a;
  };
  d.horizon = p.horizon;
  d.threshold = p.threshold;
  d.initial_state = scalar(p.x0);
  d.box = interval(p.u_lo, p.u_hi);
  d.diffusion_free = p.s0 == 0.0 && p.s1 == 0.0 && p.s2 == 0.0;
  ProblemSpec spec = finite_difference_derivatives(std::move(d));
  const ControlBox box = spec.box();
  const double ref = p.reference_value;
  return {spec, [box, ref](const TimeGrid& grid) { return ControlPath::constant(grid, scalar(ref), box); }};
}

}  // namespace vtc
