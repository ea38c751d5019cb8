#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vtc/errors.hpp"
#include "vtc/forward.hpp"

using namespace vtc;
using test::scalar;

TEST_SUITE("forward") {
  TEST_CASE("parallel kernel is bit-identical to the serial reference") {
    const BuiltinProblem prob = make_toy_linear_sde();
    const TimeGrid g(1.0, 50);
    const ControlPath u = prob.reference_control(g);
    const SimulationOptions o = test::mc(2000, 11);
    const PathEnsemble a = simulate(prob.spec, u, o);
    const PathEnsemble b = simulate_reference(prob.spec, u, o);
    CHECK(a.raw_states() == b.raw_states());
    CHECK(a.raw_increments() == b.raw_increments());
    SimulationOptions serial = o;
    serial.execution = Execution::serial;
    CHECK(simulate(prob.spec, u, serial).raw_states() == a.raw_states());
  }

  TEST_CASE("results do not depend on the worker count") {
    const BuiltinProblem prob = make_toy_linear_sde();
    const TimeGrid g(1.0, 40);
    const ControlPath u = prob.reference_control(g);
    const int before = max_threads();
    set_threads(1);
    const Evaluation a = evaluate(prob.spec, u, test::mc(3000, 5));
    set_threads(3);
    const Evaluation b = evaluate(prob.spec, u, test::mc(3000, 5));
    set_threads(before);
    CHECK(a.ensemble.raw_states() == b.ensemble.raw_states());
    CHECK(a.mean.values == b.mean.values);
    CHECK(a.mean.se == b.mean.se);
    CHECK(a.cost.value == b.cost.value);
    CHECK(a.terminal.tau == b.terminal.tau);
  }

  TEST_CASE("seeds select independent streams") {
    const BuiltinProblem prob = make_toy_linear_sde();
    const TimeGrid g(1.0, 20);
    const ControlPath u = prob.reference_control(g);
    const PathEnsemble a = simulate(prob.spec, u, test::mc(100, 1));
    const PathEnsemble b = simulate(prob.spec, u, test::mc(100, 1));
    const PathEnsemble c = simulate(prob.spec, u, test::mc(100, 2));
    CHECK(a.raw_states() == b.raw_states());
    CHECK(a.raw_states() != c.raw_states());
  }

  TEST_CASE("Gaussian moments of the linear SDE") {
    // X(1) = theta u + s W(1): mean 0.5, variance 0.04.
    const BuiltinProblem prob = make_toy_linear_sde();
    const TimeGrid g(1.0, 20);
    const PathEnsemble ens = simulate(prob.spec, prob.reference_control(g), test::mc(40000, 3));
    std::vector<double> x(ens.paths()), x2(ens.paths());
    for (std::size_t p = 0; p < ens.paths(); ++p) {
      x[p] = ens.state(p, 20)[0];
      x2[p] = (x[p] - 0.5) * (x[p] - 0.5);
    }
    const Estimate m = sample_mean(x);
    const Estimate v = sample_mean(x2);
    CHECK(std::abs(m.value - 0.5) < 4 * m.se);
    CHECK(std::abs(v.value - 0.04) < 4 * v.se);
  }

  TEST_CASE("deterministic Euler recursion") {
    const BuiltinProblem prob = register_builtin("example-affine");
    const TimeGrid g(1.0, 100);
    const PathEnsemble ens = simulate(prob.spec, prob.reference_control(g), test::det());
    CHECK(ens.deterministic());
    for (std::size_t i : {1ul, 37ul, 100ul}) {
      CHECK(ens.state(0, i)[0] == doctest::Approx(std::pow(1.01, static_cast<double>(i)) - 1.0).epsilon(1e-13));
    }
    CHECK_THROWS_AS(simulate(prob.spec, prob.reference_control(g), test::mc(10, 0)), ContractError);
    CHECK_THROWS_AS(simulate(make_toy_linear_sde().spec, prob.reference_control(g), test::det(Scheme::rk4)),
                    ContractError);
  }

  TEST_CASE("mean curve integrates the rate curve") {
    const BuiltinProblem prob = register_builtin("example-affine");
    const TimeGrid g(1.0, 2000);
    const Evaluation ev = evaluate(prob.spec, prob.reference_control(g), test::det(Scheme::rk4));
    CHECK(mean_rate_crosscheck(ev.mean, ev.rate, prob.spec) <= 1e-4);
    CHECK(ev.mean.values[2000] == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-10));
  }

  TEST_CASE("terminal-time cases") {
    const TimeGrid g(1.0, 1000);
    ToyLinearParams p;
    {
      const BuiltinProblem prob = make_toy_linear_deterministic(p);
      const Evaluation ev = evaluate(prob.spec, prob.reference_control(g), test::det());
      CHECK(ev.terminal.case_tag == TerminalCase::interior);
      CHECK(ev.terminal.tau == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(ev.terminal.h_at_tau == doctest::Approx(1.0));
      CHECK_FALSE(ev.terminal.flagged());
      CHECK(ev.cost.value == doctest::Approx(0.5));
    }
    {
      p.threshold = 1.0;
      const BuiltinProblem prob = make_toy_linear_deterministic(p);
      const Evaluation ev = evaluate(prob.spec, prob.reference_control(g), test::det());
      CHECK(ev.terminal.case_tag == TerminalCase::boundary);
      CHECK(ev.terminal.tau == 1.0);
    }
    {
      p.threshold = 1.5;
      const BuiltinProblem prob = make_toy_linear_deterministic(p);
      const Evaluation ev = evaluate(prob.spec, prob.reference_control(g), test::det());
      CHECK(ev.terminal.case_tag == TerminalCase::unreached);
      CHECK(ev.terminal.tau == 1.0);
      CHECK(ev.terminal.alpha_gap == doctest::Approx(-0.5));
      CHECK_FALSE(ev.terminal.crossing_index.has_value());
    }
  }

  TEST_CASE("first crossing wins") {
    // b = u with u = 1 then -1: x rises to 0.5 and falls back.
    const BuiltinProblem prob = make_toy_linear_deterministic(ToyLinearParams{1.0, 0.3, 0.0, -1.0, 1.0});
    const TimeGrid g(1.0, 100);
    const ControlPath u =
        ControlPath::from_function(g, [](double t) { return scalar(t < 0.5 ? 1.0 : -1.0); }, prob.spec.box());
    const Evaluation ev = evaluate(prob.spec, u, test::det());
    CHECK(ev.terminal.tau == doctest::Approx(0.3));
  }

  TEST_CASE("kink and flat diagnostics") {
    const TimeGrid g(2.0, 2000);
    const BuiltinProblem kink = register_builtin("example-kink");
    const Evaluation k = evaluate(kink.spec, kink.reference_control(g), test::det());
    CHECK(k.terminal.h_discontinuous);
    CHECK_FALSE(k.terminal.degenerate_h);
    const BuiltinProblem flat = register_builtin("example-flat");
    const Evaluation f = evaluate(flat.spec, flat.reference_control(g), test::det());
    CHECK(f.terminal.degenerate_h);
    CHECK_FALSE(f.terminal.h_discontinuous);
    CHECK(f.terminal.tau == doctest::Approx(1.0));
  }

  TEST_CASE("non-finite states are reported with their location") {
    ScalarPolynomialParams p;
    p.c1 = 0.0;
    p.a2 = 1.0;
    p.x0 = 1.0;
    p.threshold = 1e300;
    p.horizon = 3.0;
    const BuiltinProblem prob = make_scalar_polynomial(p);
    const TimeGrid g(3.0, 300);
    try {
      simulate(prob.spec, prob.reference_control(g), test::det());
      FAIL("expected SimulationError");
    } catch (const SimulationError& e) {
      CHECK(e.path() == 0);
      CHECK(e.node() > 100);
    }
  }

  TEST_CASE("common random numbers reuse the increments") {
    const BuiltinProblem prob = make_toy_linear_sde();
    const TimeGrid g(1.0, 30);
    const PathEnsemble base = simulate(prob.spec, prob.reference_control(g), test::mc(500, 9));
    const ControlPath other = test::constant(prob.spec, g, 0.8);
    const PathEnsemble crn = resimulate_with_control(base, prob.spec, other);
    SimulationOptions o = test::mc(500, 9);
    CHECK(crn.raw_states() == simulate(prob.spec, other, o).raw_states());
  }
}
