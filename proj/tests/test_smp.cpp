#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vtc/smp.hpp"

using namespace vtc;
using test::scalar;

TEST_SUITE("smp") {
  TEST_CASE("probe lattice covers the box corners") {
    const ControlBox box(Vec::Zero(2), Vec::Ones(2));
    const std::vector<Vec> l = probe_lattice(box, 3);
    CHECK(l.size() == 9);
    CHECK(l.front() == Vec::Zero(2));
    CHECK(l.back() == Vec::Ones(2));
    CHECK(l[1][1] == doctest::Approx(0.5));
  }

  TEST_CASE("affine example: the candidate u = 1 is certified") {
    const BuiltinProblem prob = register_builtin("example-affine");
    const TimeGrid g(1.0, 2000);
    const SmpReport r = verify(prob.spec, prob.reference_control(g), test::det(Scheme::rk4));
    CHECK(r.verdict == Verdict::certified);
    CHECK(r.max_violation() <= 1e-6);
    CHECK(r.branches.size() == 1);
    CHECK(r.penalty.kappa == doctest::Approx(0.5).epsilon(1e-6));
    // LHS = -0.5 (u - 1) at every node.
    for (const ProbeRow& row : r.chosen().probes) CHECK(row.lhs == doctest::Approx(-0.5 * (row.u[0] - 1.0)).epsilon(1e-6));
  }

  TEST_CASE("affine example: u = 2 is refuted") {
    // tau = ln 1.5, h(tau) = 3, kappa = 2/3, LHS = -(u - 2) / 3.
    const BuiltinProblem prob = register_builtin("example-affine");
    const TimeGrid g(1.0, 2000);
    const SmpReport r = verify(prob.spec, test::constant(prob.spec, g, 2.0), test::det(Scheme::rk4));
    CHECK(r.verdict == Verdict::refuted);
    CHECK(r.terminal.tau == doctest::Approx(std::log(1.5)).epsilon(1e-6));
    CHECK(r.penalty.kappa == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(r.max_violation() == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(r.chosen().probes[r.chosen().worst].u[0] == 1.0);
    CHECK_FALSE(r.diagnosis.empty());
  }

  TEST_CASE("counterexamples are degenerate, not refuted") {
    const TimeGrid g(2.0, 2000);
    for (const char* name : {"example-kink", "example-flat"}) {
      const BuiltinProblem prob = register_builtin(name);
      const SmpReport r = verify(prob.spec, prob.reference_control(g), test::det());
      CHECK(r.verdict == Verdict::degenerate);
      CHECK(r.branches.empty());
    }
  }

  TEST_CASE("case III uses the classical inequality") {
    // alpha out of reach, Psi = (x - 1)^2, f = u^2: optimum u = 0.5.
    ToyLinearParams p;
    p.threshold = 10.0;
    p.psi_weight = 1.0;
    p.psi_target = 1.0;
    const BuiltinProblem prob = make_toy_linear_deterministic(p);
    const TimeGrid g(1.0, 200);
    const SmpReport good = verify(prob.spec, test::constant(prob.spec, g, 0.5), test::det());
    CHECK(good.verdict == Verdict::certified);
    CHECK(good.terminal.case_tag == TerminalCase::unreached);
    CHECK_FALSE(good.chosen().with_penalty);
    const SmpReport bad = verify(prob.spec, test::constant(prob.spec, g, 1.0), test::det());
    CHECK(bad.verdict == Verdict::refuted);
  }

  TEST_CASE("case II reports both branches") {
    ToyLinearParams p;
    p.threshold = 1.0;
    const BuiltinProblem prob = make_toy_linear_deterministic(p);
    const TimeGrid g(1.0, 200);
    const SmpReport r = verify(prob.spec, prob.reference_control(g), test::det());
    CHECK(r.terminal.case_tag == TerminalCase::boundary);
    REQUIRE(r.branches.size() == 2);
    CHECK(r.branches[0].with_penalty);
    CHECK_FALSE(r.branches[1].with_penalty);
    CHECK(r.branches[1].kappa == 0.0);
  }

  TEST_CASE("integrated inequality equals minus the cost derivative") {
    const BuiltinProblem prob = register_builtin("example-affine");
    const TimeGrid g(1.0, 1000);
    const Evaluation ev = evaluate(prob.spec, test::constant(prob.spec, g, 1.5), test::det(Scheme::rk4));
    const Direction v = Direction::constant(g, scalar(-0.5));
    const VariationalEnsemble y = variational_paths(prob.spec, ev.ensemble, v);
    const AdjointPath adj = solve_adjoint(prob.spec, ev.ensemble, ev.terminal);
    const PenaltyTerms pen = penalty_terms(prob.spec, ev);
    const Estimate lhs = integrated_lhs(prob.spec, ev, adj, y, pen.kappa);
    const CostVariationResult dj = cost_directional_derivative(prob.spec, ev, y);
    CHECK(lhs.value == doctest::Approx(-dj.total).epsilon(1e-8));
  }

  TEST_CASE("stochastic certification with the regression adjoint") {
    // Psi = w x^2 pulls u down; the lower box edge is optimal for a small theta.
    ToyLinearSdeParams p;
    p.u_lo = 0.5;
    p.u_hi = 1.0;
    p.threshold = 5.0;
    const BuiltinProblem prob = make_toy_linear_sde(p);
    const TimeGrid g(1.0, 50);
    const SmpReport r = verify(prob.spec, test::constant(prob.spec, g, 0.5), test::mc(20000, 2));
    CHECK(r.terminal.case_tag == TerminalCase::unreached);
    CHECK(r.verdict == Verdict::certified);
    const SmpReport bad = verify(prob.spec, test::constant(prob.spec, g, 1.0), test::mc(20000, 2));
    CHECK(bad.verdict == Verdict::refuted);
  }
}
