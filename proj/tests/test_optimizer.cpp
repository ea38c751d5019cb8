#include <doctest.h>

#include <cmath>

#include "dp_oracle.hpp"
#include "helpers.hpp"
#include "vtc/optimizer.hpp"

using namespace vtc;
using test::scalar;

TEST_SUITE("optimizer") {
  TEST_CASE("affine example from u = 2 reaches the certified pair") {
    const BuiltinProblem prob = register_builtin("example-affine");
    const TimeGrid g(1.0, 2000);
    const OptimizerResult r = improve(prob.spec, test::constant(prob.spec, g, 2.0), test::det());
    CHECK(r.trace.termination == Termination::smp_satisfied);
    CHECK(r.final_report.terminal.tau == doctest::Approx(std::log(2.0)).epsilon(1e-3));
    const std::size_t cells = locate(g, r.final_report.terminal.tau).cell + 1;
    for (std::size_t i = 0; i < cells; ++i) CHECK(std::abs(r.control.at(i)[0] - 1.0) <= 1e-2);
    for (std::size_t k = 1; k < r.trace.iterates.size(); ++k) {
      CHECK(r.trace.iterates[k].J < r.trace.iterates[k - 1].J);
    }
    const SmpReport again = verify(prob.spec, r.control, test::det());
    CHECK(again.verdict == Verdict::certified);
  }

  TEST_CASE("a certified start returns at once") {
    const BuiltinProblem prob = register_builtin("example-affine");
    const TimeGrid g(1.0, 500);
    const ControlPath start = prob.reference_control(g);
    const OptimizerResult r = improve(prob.spec, start, test::det());
    CHECK(r.trace.termination == Termination::smp_satisfied);
    CHECK(r.trace.iterates.size() == 1);
    CHECK(r.control.values() == start.values());
  }

  TEST_CASE("degenerate candidates stop the descent") {
    const BuiltinProblem prob = register_builtin("example-kink");
    const TimeGrid g(2.0, 1000);
    const OptimizerResult r = improve(prob.spec, prob.reference_control(g), test::det());
    CHECK(r.trace.termination == Termination::degenerate_encountered);
  }

  TEST_CASE("case III matches dynamic programming") {
    ToyLinearParams p;
    p.threshold = 10.0;
    p.psi_weight = 1.0;
    p.psi_target = 1.0;
    const BuiltinProblem prob = make_toy_linear_deterministic(p);
    const TimeGrid g(1.0, 50);
    const OptimizerResult r = improve(prob.spec, test::constant(prob.spec, g, 1.0), test::det());
    CHECK(r.trace.termination == Termination::smp_satisfied);
    CHECK(r.final_report.terminal.case_tag == TerminalCase::unreached);

    test::DpProblem dp;
    dp.drift = [](double, double u) { return u; };
    dp.running = [](double, double u) { return u * u; };
    dp.terminal = [](double x) { return (x - 1.0) * (x - 1.0); };
    const double oracle = test::dp_optimal_cost(dp);
    CHECK(std::abs(r.trace.iterates.back().J - oracle) <= 1e-3);
  }

  TEST_CASE("cell coefficients match the pointwise inequality") {
    const BuiltinProblem prob = register_builtin("example-affine");
    const TimeGrid g(1.0, 100);
    const Evaluation ev = evaluate(prob.spec, test::constant(prob.spec, g, 1.5), test::det());
    const PenaltyTerms pen = penalty_terms(prob.spec, ev);
    const CellGradient c = cell_gradient(prob.spec, ev, pen);
    double total = 0.0;
    for (std::size_t i = 0; i < c.coefficient.size(); ++i) {
      total += c.weight[i];
      if (c.weight[i] > 0.0) CHECK(c.coefficient[i][0] == doctest::Approx(-1.0 + pen.kappa));
    }
    CHECK(total == doctest::Approx(ev.terminal.tau));
  }
}
