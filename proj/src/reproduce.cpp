#include "vtc/reproduce.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "vtc/adjoint.hpp"
#include "vtc/builtins.hpp"
#include "vtc/errors.hpp"
#include "vtc/optimizer.hpp"
#include "vtc/report_io.hpp"
#include "vtc/smp.hpp"
#include "vtc/variation.hpp"

namespace vtc {

bool ReproduceSummary::all_pass() const {
  for (const ReproRow& r : rows) {
    if (!r.pass) return false;
  }
  return true;
}

std::string ReproduceSummary::table() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %-34s %14s %14s %10s  %s\n", "group", "check", "observed", "expected",
                "tol", "result");
  os << line;
  for (const ReproRow& r : rows) {
    std::snprintf(line, sizeof line, "%-8s %-34s %14.8g %14.8g %10.3g  %s\n", r.group.c_str(), r.name.c_str(),
                  r.observed, r.expected, r.tolerance, r.pass ? "PASS" : "FAIL");
    os << line;
  }
  return os.str();
}

namespace {

class Recorder {
 public:
  explicit Recorder(std::vector<ReproRow>& rows) : rows_(rows) {}

  void close(const std::string& group, const std::string& name, double observed, double expected, double tol) {
    rows_.push_back({group, name, observed, expected, tol, std::abs(observed - expected) <= tol});
  }
  void at_most(const std::string& group, const std::string& name, double observed, double bound) {
    rows_.push_back({group, name, observed, bound, 0.0, observed <= bound});
  }
  void at_least(const std::string& group, const std::string& name, double observed, double bound) {
    rows_.push_back({group, name, observed, bound, 0.0, observed >= bound});
  }
  void holds(const std::string& group, const std::string& name, bool value) {
    rows_.push_back({group, name, value ? 1.0 : 0.0, 1.0, 0.0, value});
  }

 private:
  std::vector<ReproRow>& rows_;
};

SimulationOptions deterministic_options() {
  SimulationOptions o;
  o.scheme = Scheme::euler;
  o.execution = Execution::parallel;
  return o;
}

// Which error tau_derivative raises for the ensemble: 0 none, 1 Discontinuity, 2 DegenerateRate.
int tau_derivative_error(const ProblemSpec& spec, const Evaluation& ev, const Direction& v) {
  const VariationalEnsemble y = variational_paths(spec, ev.ensemble, v);
  try {
    tau_derivative(ev.terminal, hbar_integral(spec, ev.ensemble, y, ev.terminal.tau));
  } catch (const Discontinuity&) {
    return 1;
  } catch (const DegenerateRate&) {
    return 2;
  }
  return 0;
}

void affine(Recorder& rec, const ReproduceOptions& opt) {
  const BuiltinProblem prob = register_builtin("example-affine");
  const ProblemSpec& spec = prob.spec;
  const TimeGrid grid(spec.horizon(), opt.grid);
  const ControlPath ubar = prob.reference_control(grid);
  const Evaluation ev = evaluate(spec, ubar, deterministic_options());
  const SmpReport report = verify(spec, ev);
  const AdjointPath adj = solve_adjoint(spec, ev.ensemble, ev.terminal);
  double p_max = 0.0;
  for (std::size_t j = 0; j < adj.points(); ++j) p_max = std::max(p_max, adj.p(0, j).cwiseAbs().maxCoeff());

  rec.close("affine", "tau = ln 2", ev.terminal.tau, std::log(2.0), 1e-3);
  rec.close("affine", "h(tau) = 2", ev.terminal.h_at_tau, 2.0, 5e-3);
  rec.at_most("affine", "max |p|", p_max, 1e-10);
  rec.holds("affine", "verdict certified", report.verdict == Verdict::certified);
  rec.at_most("affine", "max violation", report.max_violation(), 1e-6);

  const Direction one = Direction::constant(grid, Vec::Ones(1));
  const VariationalEnsemble y = variational_paths(spec, ev.ensemble, one);
  const CostVariationResult dj = cost_directional_derivative(spec, ev, y);
  rec.close("oracle", "affine dJ[1] = ln 2 - 1/2", dj.total, std::log(2.0) - 0.5, 1e-3);
  const AdjointPath app = solve_rate_adjoint(spec, ev.ensemble, ev.terminal);
  const DualityResult rate_dual = rate_duality_check(spec, ev.ensemble, y, app);
  rec.at_most("oracle", "affine hbar duality defect", rate_dual.defect, 1e-4);

  const ControlPath start = ControlPath::constant(grid, Vec::Constant(1, 2.0), spec.box());
  const OptimizerResult best = improve(spec, start, deterministic_options());
  const std::size_t cells = locate(grid, best.final_report.terminal.tau).cell + 1;
  double dev = 0.0;
  for (std::size_t i = 0; i < cells; ++i) dev = std::max(dev, std::abs(best.control.at(i)[0] - 1.0));
  rec.holds("oracle", "optimizer smp-satisfied", best.trace.termination == Termination::smp_satisfied);
  rec.at_most("oracle", "optimizer max |u - 1|", dev, 1e-2);

  if (!opt.out.empty()) {
    const std::filesystem::path dir = opt.out / "affine";
    write_csv(dir, "mean.csv", mean_curve_csv(ev.mean));
    write_csv(dir, "h.csv", rate_curve_csv(ev.rate));
    write_csv(dir, "adjoint.csv", adjoint_csv(adj));
    write_csv(dir, "probes.csv", probe_csv(report.chosen()));
    write_json(dir, "smp.json", to_json(report));
    write_csv(dir, "cost_components.csv", cost_components_csv(dj));
    write_csv(dir, "trace.csv", trace_csv(best.trace));
    write_csv(dir, "control.csv", control_csv(best.control));
  }
}

void kink(Recorder& rec, const ReproduceOptions& opt) {
  const BuiltinProblem prob = register_builtin("example-kink");
  const ProblemSpec& spec = prob.spec;
  const TimeGrid grid(spec.horizon(), opt.grid);
  const ControlPath ubar = prob.reference_control(grid);
  const Direction one = Direction::constant(grid, Vec::Ones(1));
  const Evaluation ev = evaluate(spec, ubar, deterministic_options());
  rec.close("kink", "tau = 1", ev.terminal.tau, 1.0, 1e-3);
  rec.holds("kink", "h discontinuous at tau", ev.terminal.h_discontinuous);
  rec.holds("kink", "tau derivative: Discontinuity", tau_derivative_error(spec, ev, one) == 1);

  const std::vector<double> rhos{0.1, 0.01, -0.1, -0.01};
  const std::vector<QuotientRow> rows = tau_derivative_fd(spec, ubar, one, rhos, deterministic_options());
  for (const QuotientRow& r : rows) {
    const double expected = r.rho > 0 ? 1.0 / (1.0 + r.rho) : 0.5 / (0.5 + r.rho);
    rec.close("kink", "tau(rho = " + format_double(r.rho) + ")", r.tau, expected, 2e-3);
  }
  const double right = extrapolate_to_zero({rows[0].rho, rows[1].rho}, {rows[0].quotient, rows[1].quotient});
  const double left = extrapolate_to_zero({rows[2].rho, rows[3].rho}, {rows[2].quotient, rows[3].quotient});
  rec.close("kink", "right quotient limit = 1", right, 1.0, 0.05);
  rec.close("kink", "left quotient limit = 2", left, 2.0, 0.1);

  if (!opt.out.empty()) {
    const std::filesystem::path dir = opt.out / "kink";
    write_csv(dir, "mean.csv", mean_curve_csv(ev.mean));
    write_csv(dir, "h.csv", rate_curve_csv(ev.rate));
    write_csv(dir, "quotients.csv", quotient_csv(rows));
    write_json(dir, "terminal.json", to_json(ev.terminal));
  }
}

void flat(Recorder& rec, const ReproduceOptions& opt) {
  const BuiltinProblem prob = register_builtin("example-flat");
  const ProblemSpec& spec = prob.spec;
  const TimeGrid grid(spec.horizon(), opt.grid);
  const ControlPath ubar = prob.reference_control(grid);
  const Direction one = Direction::constant(grid, Vec::Ones(1));
  const Evaluation ev = evaluate(spec, ubar, deterministic_options());
  rec.close("flat", "tau = 1", ev.terminal.tau, 1.0, 1e-3);
  rec.holds("flat", "h(tau) degenerate", ev.terminal.degenerate_h);
  rec.holds("flat", "tau derivative: DegenerateRate", tau_derivative_error(spec, ev, one) == 2);

  const std::vector<double> rhos{-0.1, -0.01, -0.001};
  const std::vector<QuotientRow> rows = tau_derivative_fd(spec, ubar, one, rhos, deterministic_options());
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double growth = std::abs(rows[i + 1].quotient) / std::abs(rows[i].quotient);
    rec.at_least("flat", "growth to rho = " + format_double(rows[i + 1].rho), growth, 10.0 - 1e-9);
  }

  if (!opt.out.empty()) {
    const std::filesystem::path dir = opt.out / "flat";
    write_csv(dir, "mean.csv", mean_curve_csv(ev.mean));
    write_csv(dir, "h.csv", rate_curve_csv(ev.rate));
    write_csv(dir, "quotients.csv", quotient_csv(rows));
    write_json(dir, "terminal.json", to_json(ev.terminal));
  }
}

void oracles(Recorder& rec, const ReproduceOptions& opt) {
  {
    const BuiltinProblem prob = make_toy_linear_deterministic();
    const TimeGrid grid(prob.spec.horizon(), opt.grid);
    const Evaluation ev = evaluate(prob.spec, prob.reference_control(grid), deterministic_options());
    const Direction one = Direction::constant(grid, Vec::Ones(1));
    const VariationalEnsemble y = variational_paths(prob.spec, ev.ensemble, one);
    const TauDerivativeResult d =
        tau_derivative(ev.terminal, hbar_integral(prob.spec, ev.ensemble, y, ev.terminal.tau));
    rec.close("oracle", "toy tau derivative = 0.5", d.value, 0.5, 1e-3);
  }
  {
    const BuiltinProblem prob = make_toy_linear_sde();
    const TimeGrid grid(prob.spec.horizon(), 50);
    SimulationOptions o;
    o.paths = 20000;
    o.seed = opt.seed;
    const Evaluation ev = evaluate(prob.spec, prob.reference_control(grid), o);
    const Direction one = Direction::constant(grid, Vec::Ones(1));
    const VariationalEnsemble y = variational_paths(prob.spec, ev.ensemble, one);
    const AdjointPath adj = solve_adjoint(prob.spec, ev.ensemble, ev.terminal);
    const DualityResult dual = duality_check(prob.spec, ev.ensemble, y, adj);
    const double bound = std::max(0.02 * std::abs(dual.lhs), 3.0 * dual.se);
    rec.at_most("oracle", "toy sde duality defect", dual.defect, bound);
    if (!opt.out.empty()) write_json(opt.out / "toy-sde", "duality.json", to_json(dual));
  }
}

}  // namespace

ReproduceSummary reproduce_all(const ReproduceOptions& opt) {
  const std::vector<std::pair<std::string, std::function<void(Recorder&, const ReproduceOptions&)>>> steps{
      {"affine", affine}, {"kink", kink}, {"flat", flat}, {"oracles", oracles}};
  bool known = opt.example == "all";
  for (const auto& s : steps) known = known || s.first == opt.example;
  if (!known) throw RegistryError("unknown example \"" + opt.example + "\"; valid: all, affine, kink, flat, oracles");

  ReproduceSummary summary;
  Recorder rec(summary.rows);
  for (const auto& [name, run] : steps) {
    if (opt.example == "all" || opt.example == name) run(rec, opt);
  }
  if (!opt.out.empty()) write_file(opt.out, "summary.txt", summary.table());
  return summary;
}

}  // namespace vtc
