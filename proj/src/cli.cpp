#include "vtc/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>

#include "vtc/adjoint.hpp"
#include "vtc/config.hpp"
#include "vtc/errors.hpp"
#include "vtc/optimizer.hpp"
#include "vtc/report_io.hpp"
#include "vtc/reproduce.hpp"
#include "vtc/smp.hpp"
#include "vtc/variation.hpp"

namespace vtc {

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::size_t> grid;
  std::optional<std::size_t> paths;
  std::string rho_list;
  std::optional<std::size_t> probes;
  std::optional<double> tol;
  std::string problem;
  std::string control;
  std::string scheme;
  std::string example = "all";
};

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.threads) cfg.threads = *f.threads;
  if (f.grid) cfg.grid = *f.grid;
  if (f.paths) cfg.paths = *f.paths;
  if (!f.rho_list.empty()) cfg.rho_list = parse_number_list(f.rho_list, "--rho-list");
  if (f.probes) cfg.probes = *f.probes;
  if (f.tol) cfg.tol = *f.tol;
  if (!f.problem.empty()) {
    cfg.problem = ProblemSelection{};
    const std::string families[] = {"toy-linear-deterministic", "toy-linear-sde", "scalar-polynomial"};
    bool family = false;
    for (const std::string& name : families) family = family || name == f.problem;
    if (family) {
      cfg.problem.builtin.clear();
      cfg.problem.family = f.problem;
    } else {
      cfg.problem.builtin = f.problem;
    }
  }
  if (!f.control.empty()) {
    if (f.control == "reference") {
      cfg.control = ControlSelection{};
    } else {
      cfg.control.reference = false;
      cfg.control.value = parse_number_list(f.control, "--control");
    }
  }
  if (!f.scheme.empty()) {
    if (f.scheme == "euler") {
      cfg.scheme = Scheme::euler;
    } else if (f.scheme == "rk4") {
      cfg.scheme = Scheme::rk4;
    } else {
      throw ConfigError("--scheme", "expected euler or rk4");
    }
  }
  if (!f.out.empty()) cfg.out = f.out;
  if (cfg.out.empty()) {
    const char* env = std::getenv("VTC_OUT_DIR");
    cfg.out = env && *env ? env : "vtc-out";
  }
  validate_config(cfg);
  return cfg;
}

// Problem, grid, simulation settings and candidate control for one run.
struct Setup {
  ExperimentConfig cfg;
  BuiltinProblem problem;
  TimeGrid grid;
  SimulationOptions sim;
  ControlPath control;
  HittingOptions hitting;

  const ProblemSpec& spec() const { return problem.spec; }
};

Setup make_setup(const ExperimentConfig& cfg) {
  BuiltinProblem problem = build_problem(cfg.problem);
  const TimeGrid grid = make_grid(cfg, problem.spec);
  SimulationOptions sim = make_simulation(cfg, problem.spec);
  ControlPath control = make_control(cfg, problem, grid);
  return Setup{cfg, std::move(problem), grid, sim, std::move(control), make_hitting(cfg)};
}

AdjointOptions adjoint_options(const ExperimentConfig& cfg) { return AdjointOptions{cfg.adjoint}; }

void print_terminal(std::ostream& out, const TerminalTimeResult& t) {
  out << "tau = " << format_double(t.tau) << "  case " << case_label(t.case_tag)
      << "  h(tau) = " << format_double(t.h_at_tau);
  if (t.degenerate_h) out << "  [h(tau) degenerate]";
  if (t.h_discontinuous) out << "  [h discontinuous at tau]";
  out << "\n";
}

int cmd_simulate(const Setup& s, std::ostream& out) {
  const Evaluation ev = evaluate(s.spec(), s.control, s.sim, s.hitting);
  const std::filesystem::path dir = s.cfg.out;
  write_csv(dir, "mean.csv", mean_curve_csv(ev.mean));
  write_csv(dir, "h.csv", rate_curve_csv(ev.rate));
  Json j;
  j["problem"] = s.spec().name();
  j["grid"] = s.grid.steps();
  j["paths"] = ev.ensemble.paths();
  j["seed"] = ev.ensemble.seed();
  j["deterministic"] = ev.ensemble.deterministic();
  j["terminal"] = to_json(ev.terminal);
  j["cost"] = to_json(ev.cost);
  j["mean_rate_crosscheck"] = mean_rate_crosscheck(ev.mean, ev.rate, s.spec());
  write_json(dir, "simulate.json", j);
  out << "simulated " << ev.ensemble.paths() << " path(s) on " << s.grid.steps() << " cells; J = "
      << format_double(ev.cost.value) << "\n";
  print_terminal(out, ev.terminal);
  return 0;
}

int cmd_tau(const Setup& s, std::ostream& out) {
  const Evaluation ev = evaluate(s.spec(), s.control, s.sim, s.hitting);
  write_json(s.cfg.out, "tau.json", to_json(ev.terminal));
  print_terminal(out, ev.terminal);
  return 0;
}

int cmd_h_curve(const Setup& s, std::ostream& out) {
  const Evaluation ev = evaluate(s.spec(), s.control, s.sim, s.hitting);
  write_csv(s.cfg.out, "mean.csv", mean_curve_csv(ev.mean));
  write_csv(s.cfg.out, "h.csv", rate_curve_csv(ev.rate));
  out << "h curve written; max |h| = " << format_double(ev.terminal.h_max) << "\n";
  return 0;
}

int cmd_derivative_check(const Setup& s, std::ostream& out) {
  const Direction v = make_direction(s.cfg, s.spec(), s.grid);
  std::vector<double> positive;
  for (double r : s.cfg.rho_list) positive.push_back(std::abs(r));
  const std::vector<TaylorRow> taylor = taylor_expansion_check(s.spec(), s.control, v, positive, s.sim);
  CsvTable t({"rho", "defect"});
  for (const TaylorRow& r : taylor) t.row({r.rho, r.defect});
  write_csv(s.cfg.out, "taylor.csv", t);

  const Evaluation ev = evaluate(s.spec(), s.control, s.sim, s.hitting);
  const std::vector<CostQuotientRow> q = cost_difference_quotients(s.spec(), ev, v, s.cfg.rho_list, s.hitting);
  write_csv(s.cfg.out, "quotients.csv", cost_quotient_csv(q));
  const VariationalEnsemble y = variational_paths(s.spec(), ev.ensemble, v);
  write_csv(s.cfg.out, "hbar.csv", hbar_curve_csv(hbar_curve(s.spec(), ev.ensemble, y)));
  const CostVariationResult dj = cost_directional_derivative(s.spec(), ev, y);
  write_csv(s.cfg.out, "cost_components.csv", cost_components_csv(dj));
  Json j = to_json(dj);
  Json rows = Json::array();
  for (const CostQuotientRow& r : q) rows.push_back(Json{{"rho", r.rho}, {"quotient", r.quotient}, {"se", r.se}});
  j["quotients"] = rows;
  write_json(s.cfg.out, "derivative_check.json", j);
  out << "dJ[v] = " << format_double(dj.total) << " (case " << case_label(dj.case_tag) << ")\n";
  for (const CostQuotientRow& r : q) {
    out << "  rho = " << format_double(r.rho) << "  quotient = " << format_double(r.quotient) << "\n";
  }
  return 0;
}

int cmd_tau_derivative(const Setup& s, std::ostream& out) {
  const Direction v = make_direction(s.cfg, s.spec(), s.grid);
  const std::vector<QuotientRow> q = tau_derivative_fd(s.spec(), s.control, v, s.cfg.rho_list, s.sim, s.hitting);
  write_csv(s.cfg.out, "quotients.csv", quotient_csv(q));
  for (const QuotientRow& r : q) {
    out << "  rho = " << format_double(r.rho) << "  tau = " << format_double(r.tau)
        << "  quotient = " << format_double(r.quotient) << "\n";
  }
  const Evaluation ev = evaluate(s.spec(), s.control, s.sim, s.hitting);
  const VariationalEnsemble y = variational_paths(s.spec(), ev.ensemble, v);
  write_csv(s.cfg.out, "hbar.csv", hbar_curve_csv(hbar_curve(s.spec(), ev.ensemble, y)));
  const TauDerivativeResult d =
      tau_derivative(ev.terminal, hbar_integral(s.spec(), ev.ensemble, y, ev.terminal.tau));
  write_json(s.cfg.out, "tau_derivative.json", to_json(d));
  out << "tau derivative = " << format_double(d.value) << " (case " << case_label(d.case_tag) << ")";
  if (d.ambiguous) out << " or " << format_double(d.alternative);
  out << "\n";
  return 0;
}

SmpOptions smp_options(const ExperimentConfig& cfg) {
  SmpOptions o;
  o.probes = cfg.probes;
  o.tol = cfg.tol;
  o.hitting = make_hitting(cfg);
  o.adjoint = adjoint_options(cfg);
  return o;
}

int cmd_verify(const Setup& s, std::ostream& out) {
  const SmpReport r = verify(s.spec(), s.control, s.sim, smp_options(s.cfg));
  write_json(s.cfg.out, "smp.json", to_json(r));
  if (!r.branches.empty()) write_csv(s.cfg.out, "probes.csv", probe_csv(r.chosen()));
  print_terminal(out, r.terminal);
  out << "verdict: " << verdict_label(r.verdict) << "  max violation = " << format_double(r.max_violation());
  if (!r.diagnosis.empty()) out << "\n  " << r.diagnosis;
  out << "\n";
  return r.verdict == Verdict::certified ? 0 : 1;
}

int cmd_optimize(const Setup& s, std::ostream& out) {
  OptimizerOptions o;
  o.max_iters = s.cfg.max_iters;
  o.smp = smp_options(s.cfg);
  const OptimizerResult r = improve(s.spec(), s.control, s.sim, o);
  write_csv(s.cfg.out, "trace.csv", trace_csv(r.trace));
  write_csv(s.cfg.out, "control.csv", control_csv(r.control));
  write_json(s.cfg.out, "optimize.json", to_json(r));
  const IterateRecord& last = r.trace.iterates.back();
  out << "terminated: " << termination_label(r.trace.termination) << " after " << last.iter
      << " step(s); J = " << format_double(last.J) << "  tau = " << format_double(last.tau) << "\n";
  return r.trace.termination == Termination::smp_satisfied ? 0 : 1;
}

int cmd_duality(const Setup& s, std::ostream& out) {
  const Direction v = make_direction(s.cfg, s.spec(), s.grid);
  const Evaluation ev = evaluate(s.spec(), s.control, s.sim, s.hitting);
  const VariationalEnsemble y = variational_paths(s.spec(), ev.ensemble, v);
  const AdjointOptions ao = adjoint_options(s.cfg);
  const AdjointPath adj = solve_adjoint(s.spec(), ev.ensemble, ev.terminal, ao);
  const AdjointPath app = solve_rate_adjoint(s.spec(), ev.ensemble, ev.terminal, ao);
  const DualityResult d1 = duality_check(s.spec(), ev.ensemble, y, adj);
  const DualityResult d2 = rate_duality_check(s.spec(), ev.ensemble, y, app);
  write_csv(s.cfg.out, "adjoint.csv", adjoint_csv(adj));
  write_csv(s.cfg.out, "rate_adjoint.csv", adjoint_csv(app));
  write_json(s.cfg.out, "duality.json", Json{{"adjoint", to_json(d1)}, {"hbar", to_json(d2)}});
  out << "adjoint duality defect = " << format_double(d1.defect) << "  hbar duality defect = "
      << format_double(d2.defect) << "\n";
  return 0;
}

int cmd_reproduce(const ExperimentConfig& cfg, const Flags& f, std::ostream& out) {
  ReproduceOptions o;
  o.example = f.example;
  o.grid = cfg.grid;
  o.seed = cfg.seed;
  o.out = cfg.out;
  const ReproduceSummary s = reproduce_all(o);
  out << s.table();
  out << (s.all_pass() ? "all checks passed" : "some checks FAILED") << "\n";
  return s.all_pass() ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal control with a mean-constraint terminal time"};
  app.name("vtc");
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--config", f.config, "JSON experiment configuration");
  app.add_option("--out", f.out, "output directory (default $VTC_OUT_DIR or ./vtc-out)");
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--grid", f.grid, "number of time cells N");
  app.add_option("--paths", f.paths, "Monte Carlo paths M");
  app.add_option("--problem", f.problem, "builtin problem or family name");
  app.add_option("--control", f.control, "\"reference\" or constant value(s), comma separated");
  app.add_option("--scheme", f.scheme, "euler or rk4");

  const char* names[][2] = {{"simulate", "simulate the ensemble and write the mean and h curves"},
                            {"tau", "terminal time and case"},
                            {"h-curve", "write the h curve"},
                            {"derivative-check", "expansion check and cost difference quotients"},
                            {"tau-derivative", "terminal-time derivative and quotients"},
                            {"verify-smp", "check the maximum-principle inequality"},
                            {"optimize", "conditional-gradient descent with verification"},
                            {"duality-check", "adjoint duality identities"},
                            {"reproduce", "reproduce the worked examples and oracle checks"}};
  std::map<std::string, CLI::App*> sub;
  for (const auto& n : names) sub[n[0]] = app.add_subcommand(n[0], n[1]);
  for (const char* name : {"derivative-check", "tau-derivative"}) {
    sub[name]->add_option("--rho-list", f.rho_list, "comma-separated rho values");
  }
  for (const char* name : {"verify-smp", "optimize"}) {
    sub[name]->add_option("--probes", f.probes, "probe points per control coordinate");
    sub[name]->add_option("--tol", f.tol, "certification tolerance");
  }
  sub["reproduce"]->add_option("--example", f.example, "all, affine, kink, flat or oracles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    const ExperimentConfig cfg = resolve(f);
    if (cfg.threads > 0) set_threads(cfg.threads);
    if (sub["reproduce"]->parsed()) return cmd_reproduce(cfg, f, out);
    const Setup s = make_setup(cfg);
    if (sub["simulate"]->parsed()) return cmd_simulate(s, out);
    if (sub["tau"]->parsed()) return cmd_tau(s, out);
    if (sub["h-curve"]->parsed()) return cmd_h_curve(s, out);
    if (sub["derivative-check"]->parsed()) return cmd_derivative_check(s, out);
    if (sub["tau-derivative"]->parsed()) return cmd_tau_derivative(s, out);
    if (sub["verify-smp"]->parsed()) return cmd_verify(s, out);
    if (sub["optimize"]->parsed()) return cmd_optimize(s, out);
    if (sub["duality-check"]->parsed()) return cmd_duality(s, out);
    err << app.help();
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const RegistryError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ProblemError& e) {
    err << "problem error: " << e.what() << "\n";
    return 2;
  } catch (const BoxViolation& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const GridMismatch& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace vtc
