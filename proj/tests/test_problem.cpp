#include <doctest.h>

#include "helpers.hpp"
#include "vtc/builtins.hpp"
#include "vtc/errors.hpp"
#include "vtc/finite_difference.hpp"

using namespace vtc;
using test::scalar;

TEST_SUITE("problem") {
  TEST_CASE("grid nodes and the left-limit cell convention") {
    const TimeGrid g(1.0, 10);
    CHECK(g.dt() == doctest::Approx(0.1));
    CHECK(g.t(10) == 1.0);
    const CellLocation at_node = locate(g, 0.3);
    CHECK(at_node.cell == 2);
    CHECK(at_node.frac == doctest::Approx(1.0));
    const CellLocation inside = locate(g, 0.35);
    CHECK(inside.cell == 3);
    CHECK(inside.frac == doctest::Approx(0.5));
    const CellLocation end = locate(g, 1.0);
    CHECK(end.cell == 9);
    CHECK(end.frac == doctest::Approx(1.0));
  }

  TEST_CASE("controls respect the box") {
    const TimeGrid g(1.0, 10);
    const ControlBox box(scalar(0.0), scalar(1.0));
    CHECK_THROWS_AS(ControlPath::constant(g, scalar(1.5), box), BoxViolation);
    const ControlPath u = ControlPath::constant(g, scalar(0.5), box);
    CHECK_NOTHROW(u.perturbed(0.5, Direction::constant(g, scalar(1.0))));
    CHECK_THROWS_AS(u.perturbed(0.6, Direction::constant(g, scalar(1.0))), BoxViolation);
    const ControlPath lin = ControlPath::from_function(g, [](double t) { return scalar(t); }, box);
    CHECK(lin.at(0)[0] == doctest::Approx(0.05));
    CHECK(lin.at(9)[0] == doctest::Approx(0.95));
    CHECK(lin.at_time(0.3)[0] == doctest::Approx(0.25));
    const Direction d = lin - u;
    CHECK(d.at(9)[0] == doctest::Approx(0.45));
  }

  TEST_CASE("threshold must exceed the initial constraint value") {
    ToyLinearParams p;
    p.threshold = 0.0;
    CHECK_THROWS_AS(make_toy_linear_deterministic(p), ProblemError);
    p.threshold = 0.5;
    p.u_lo = 2.0;
    p.u_hi = 1.0;
    CHECK_THROWS_AS(make_toy_linear_deterministic(p), ProblemError);
  }

  TEST_CASE("unknown builtin lists the registry") {
    try {
      register_builtin("nope");
      FAIL("expected RegistryError");
    } catch (const RegistryError& e) {
      CHECK(std::string(e.what()).find("example-affine") != std::string::npos);
    }
  }

  TEST_CASE("builtin derivatives agree with finite differences") {
    for (const std::string& name : builtin_names()) {
      const DerivativeCheck c = check_derivatives(register_builtin(name).spec, 20, 7);
      INFO(name << " worst field " << c.worst_field);
      CHECK(c.worst_relative_error < 1e-5);
    }
    ToyLinearSdeParams q;
    q.quadratic_constraint = true;
    const DerivativeCheck c = check_derivatives(make_toy_linear_sde(q).spec, 20, 7);
    CHECK(c.worst_relative_error < 1e-5);
  }

  TEST_CASE("generator terms for a quadratic constraint") {
    ToyLinearSdeParams q;
    q.quadratic_constraint = true;
    q.theta = 1.5;
    q.sigma = 0.3;
    const ProblemSpec spec = make_toy_linear_sde(q).spec;
    const Vec x = scalar(0.7);
    const Vec u = scalar(0.4);
    // Phi = x^2: g = 2 x theta u + s^2.
    CHECK(spec.constraint_rate(x, u) == doctest::Approx(2 * 0.7 * 1.5 * 0.4 + 0.09));
    CHECK(spec.constraint_rate_x(x, u)[0] == doctest::Approx(2 * 1.5 * 0.4));
    CHECK(spec.constraint_rate_u(x, u)[0] == doctest::Approx(2 * 0.7 * 1.5));
    // Psi = x^2 as well.
    CHECK(spec.terminal_rate(x, u) == doctest::Approx(2 * 0.7 * 1.5 * 0.4 + 0.09));
  }

  TEST_CASE("finite-difference family matches its analytic form") {
    ScalarPolynomialParams p;
    p.a1 = -0.5;
    p.a2 = 0.3;
    p.c3 = 0.2;
    p.s1 = 0.1;
    p.q2 = 0.5;
    p.q3 = 0.1;
    const ProblemSpec spec = make_scalar_polynomial(p).spec;
    const Vec x = scalar(0.8);
    const Vec u = scalar(0.6);
    const double b = -0.5 * 0.8 + 0.3 * 0.64 + 0.6 + 0.2 * 0.8 * 0.6;
    CHECK(spec.drift(x, u)[0] == doctest::Approx(b));
    CHECK(spec.drift_x(x, u)(0, 0) == doctest::Approx(-0.5 + 0.6 * 0.8 + 0.2 * 0.6).epsilon(1e-7));
    CHECK(spec.drift_u(x, u)(0, 0) == doctest::Approx(1.0 + 0.2 * 0.8).epsilon(1e-7));
    CHECK(spec.constraint_xx(x)(0, 0) == doctest::Approx(1.0 + 0.6 * 0.8).epsilon(1e-6));
    CHECK(spec.constraint_xxx(x, 0)(0, 0) == doctest::Approx(0.6).epsilon(1e-4));
  }
}
