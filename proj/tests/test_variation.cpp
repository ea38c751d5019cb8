#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vtc/errors.hpp"
#include "vtc/variation.hpp"

using namespace vtc;
using test::scalar;

TEST_SUITE("variation") {
  TEST_CASE("variational process of b = u is t v") {
    const BuiltinProblem prob = make_toy_linear_deterministic();
    const TimeGrid g(1.0, 50);
    const PathEnsemble ens = simulate(prob.spec, prob.reference_control(g), test::det());
    const VariationalEnsemble y = variational_paths(prob.spec, ens, Direction::constant(g, scalar(0.7)));
    for (std::size_t i = 0; i <= 50; ++i) CHECK(y.y(0, i)[0] == doctest::Approx(0.7 * g.t(i)));
  }

  TEST_CASE("variational process of the affine example follows the discrete flow") {
    const BuiltinProblem prob = register_builtin("example-affine");
    const TimeGrid g(1.0, 200);
    const PathEnsemble ens = simulate(prob.spec, prob.reference_control(g), test::det());
    const VariationalEnsemble y = variational_paths(prob.spec, ens, test::unit(g));
    // y_{i+1} = (1 + dt) y_i + dt.
    CHECK(y.y(0, 200)[0] == doctest::Approx(std::pow(1.005, 200.0) - 1.0).epsilon(1e-12));
  }

  TEST_CASE("expansion defect is first order on a nonlinear problem") {
    ScalarPolynomialParams p;
    p.a1 = -0.5;
    p.a2 = 0.4;
    p.c2 = 0.3;
    p.c3 = 0.5;
    p.s1 = 0.2;
    p.s2 = 0.1;
    const BuiltinProblem prob = make_scalar_polynomial(p);
    const TimeGrid g(1.0, 50);
    const std::vector<double> rhos{0.2, 0.1, 0.05, 0.025};
    const std::vector<TaylorRow> rows =
        taylor_expansion_check(prob.spec, prob.reference_control(g), test::unit(g), rhos, test::mc(2000, 4));
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i].defect / rows[i - 1].defect == doctest::Approx(0.5).epsilon(0.05));
    }
  }

  TEST_CASE("terminal-time derivative of the linear toy") {
    // tau^rho = 0.5 / (1 + rho), so the limit of (tau - tau^rho) / rho is 0.5.
    const BuiltinProblem prob = make_toy_linear_deterministic();
    const TimeGrid g(1.0, 1000);
    const ControlPath u = prob.reference_control(g);
    const Evaluation ev = evaluate(prob.spec, u, test::det());
    const VariationalEnsemble y = variational_paths(prob.spec, ev.ensemble, test::unit(g));
    const TauDerivativeResult d = tau_derivative(ev.terminal, hbar_integral(prob.spec, ev.ensemble, y, ev.terminal.tau));
    CHECK(d.value == doctest::Approx(0.5).epsilon(1e-9));
    const std::vector<QuotientRow> q = tau_derivative_fd(prob.spec, u, test::unit(g), {0.1, -0.1}, test::det());
    CHECK(q[0].quotient == doctest::Approx(0.5 / 1.1).epsilon(1e-9));
    CHECK(q[1].quotient == doctest::Approx(0.5 / 0.9).epsilon(1e-9));
  }

  TEST_CASE("case III has a zero terminal-time derivative and case II two candidates") {
    ToyLinearParams p;
    p.threshold = 1.5;
    const TimeGrid g(1.0, 100);
    {
      const BuiltinProblem prob = make_toy_linear_deterministic(p);
      const Evaluation ev = evaluate(prob.spec, prob.reference_control(g), test::det());
      const TauDerivativeResult d = tau_derivative(ev.terminal, Estimate{0.3, 0.0});
      CHECK(d.case_tag == TerminalCase::unreached);
      CHECK(d.value == 0.0);
    }
    p.threshold = 1.0;
    {
      const BuiltinProblem prob = make_toy_linear_deterministic(p);
      const Evaluation ev = evaluate(prob.spec, prob.reference_control(g), test::det());
      const TauDerivativeResult d = tau_derivative(ev.terminal, Estimate{1.0, 0.0});
      CHECK(d.case_tag == TerminalCase::boundary);
      CHECK(d.ambiguous);
      CHECK(d.value == doctest::Approx(1.0));
      CHECK(d.alternative == 0.0);
    }
  }

  TEST_CASE("counterexamples raise their errors") {
    const TimeGrid g(2.0, 2000);
    for (const char* name : {"example-kink", "example-flat"}) {
      const BuiltinProblem prob = register_builtin(name);
      const Evaluation ev = evaluate(prob.spec, prob.reference_control(g), test::det());
      const VariationalEnsemble y = variational_paths(prob.spec, ev.ensemble, test::unit(g));
      const Estimate hb = hbar_integral(prob.spec, ev.ensemble, y, ev.terminal.tau);
      if (std::string(name) == "example-kink") {
        CHECK_THROWS_AS(tau_derivative(ev.terminal, hb), Discontinuity);
      } else {
        CHECK_THROWS_AS(tau_derivative(ev.terminal, hb), DegenerateRate);
      }
    }
  }

  TEST_CASE("Neville extrapolation is exact on polynomials") {
    auto f = [](double r) { return 2.0 - 3.0 * r + 0.5 * r * r; };
    CHECK(extrapolate_to_zero({0.1, 0.05, 0.025}, {f(0.1), f(0.05), f(0.025)}) == doctest::Approx(2.0));
  }

  TEST_CASE("cost derivative of the affine example") {
    // J(1 + rho) = (1 + rho) ln(1 + 1 / (1 + rho)), derivative ln 2 - 1/2.
    const BuiltinProblem prob = register_builtin("example-affine");
    const TimeGrid g(1.0, 2000);
    const Evaluation ev = evaluate(prob.spec, prob.reference_control(g), test::det(Scheme::rk4));
    const VariationalEnsemble y = variational_paths(prob.spec, ev.ensemble, test::unit(g));
    const CostVariationResult r = cost_directional_derivative(prob.spec, ev, y);
    CHECK(r.total == doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-4));
    CHECK(r.kappa == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(r.penalty_psi == 0.0);
    CHECK(r.running == doctest::Approx(std::log(2.0)).epsilon(1e-4));
  }

  TEST_CASE("cost derivative components of the linear toy") {
    // J(u) = alpha u + w (alpha - c)^2 for constant u, so dJ[1] = alpha, and
    // the terminal and Psi-penalty parts cancel.
    ToyLinearParams p;
    p.psi_weight = 2.0;
    p.psi_target = 0.2;
    const BuiltinProblem prob = make_toy_linear_deterministic(p);
    const TimeGrid g(1.0, 1000);
    const Evaluation ev = evaluate(prob.spec, prob.reference_control(g), test::det());
    const VariationalEnsemble y = variational_paths(prob.spec, ev.ensemble, test::unit(g));
    const CostVariationResult r = cost_directional_derivative(prob.spec, ev, y);
    CHECK(r.total == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(r.terminal == doctest::Approx(2 * 2.0 * 0.3 * 0.5).epsilon(1e-9));
    CHECK(r.penalty_psi == doctest::Approx(-r.terminal).epsilon(1e-9));
    CHECK(r.total == doctest::Approx(r.penalty_psi + r.penalty_f + r.terminal + r.running));
    const std::vector<CostQuotientRow> q = cost_difference_quotients(prob.spec, ev, test::unit(g), {0.1, -0.1});
    CHECK(q[0].quotient == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(q[0].se == 0.0);
  }
}
