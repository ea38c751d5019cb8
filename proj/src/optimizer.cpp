#include "vtc/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "vtc/adjoint.hpp"
#include "vtc/errors.hpp"

namespace vtc {

std::string termination_label(Termination t) {
  switch (t) {
    case Termination::smp_satisfied:
      return "smp-satisfied";
    case Termination::step_floor:
      return "step-floor";
    case Termination::max_iters:
      return "max-iters";
    case Termination::degenerate_encountered:
      return "degenerate-encountered";
  }
  return "?";
}

CellGradient cell_gradient(const ProblemSpec& spec, const Evaluation& base, const PenaltyTerms& penalty,
                           const AdjointOptions& adjoint_options) {
  const PathEnsemble& ens = base.ensemble;
  const TimeGrid& grid = ens.grid();
  const int k = spec.control_dim();
  CellGradient out;
  out.coefficient.assign(grid.steps(), Vec::Zero(k));
  out.weight.assign(grid.steps(), 0.0);
  const double tau = base.terminal.tau;
  if (!(tau > 0.0)) return out;

  const AdjointPath adj = solve_adjoint(spec, ens, base.terminal, adjoint_options);
  const CellLocation loc = locate(grid, tau);
  const std::size_t paths = ens.paths();
  parallel_for(loc.cell + 1, ens.execution(), [&](std::size_t i) {
    const Vec u = ens.control().at(i);
    Vec acc = Vec::Zero(k);
    for (std::size_t p = 0; p < paths; ++p) {
      const std::size_t ap = adj.paths() == 1 ? 0 : p;
      const Vec x = ens.state(p, i);
      acc += hamiltonian_u(spec, x, u, adj.p(ap, i), adj.q(ap, i));
      if (penalty.kappa != 0.0) acc += penalty.kappa * spec.constraint_rate_u(x, u);
    }
    out.coefficient[i] = acc / static_cast<double>(paths);
    out.weight[i] = i == loc.cell ? loc.offset : grid.dt();
  });
  return out;
}

namespace {

IterateRecord record(std::size_t iter, const SmpReport& r, double step) {
  IterateRecord rec;
  rec.iter = iter;
  rec.J = r.cost.value;
  rec.J_se = r.cost.se;
  rec.tau = r.terminal.tau;
  rec.case_tag = r.terminal.case_tag;
  rec.verdict = r.verdict;
  rec.violation = r.max_violation();
  rec.step = step;
  return rec;
}

// Corner of the box that maximises c^T u, coordinate by coordinate.
Eigen::MatrixXd corner_control(const ControlPath& u, const CellGradient& grad, double tie_tol) {
  const ControlBox& box = u.box();
  double scale = 1.0;
  for (const Vec& c : grad.coefficient) scale = std::max(scale, c.cwiseAbs().maxCoeff());
  const double tie = tie_tol * scale;
  Eigen::MatrixXd target = u.values();
  std::size_t last = 0;
  bool any = false;
  for (std::size_t i = 0; i < grad.coefficient.size(); ++i) {
    if (grad.weight[i] <= 0.0) {
      // Cells after tau do not enter J; they continue the last target so
      // the next terminal time does not land on a control jump.
      if (any) target.col(static_cast<Eigen::Index>(i)) = target.col(static_cast<Eigen::Index>(last));
      continue;
    }
    last = i;
    any = true;
    for (int c = 0; c < box.dim(); ++c) {
      const double g = grad.coefficient[i][c];
      double v = 0.5 * (box.lo()[c] + box.hi()[c]);
      if (g > tie) v = box.hi()[c];
      if (g < -tie) v = box.lo()[c];
      target(c, static_cast<Eigen::Index>(i)) = v;
    }
  }
  return target;
}

}  // namespace

OptimizerResult improve(const ProblemSpec& spec, const ControlPath& initial, const SimulationOptions& simulation,
                        const OptimizerOptions& options) {
  const ArmijoOptions& arm = options.armijo;
  if (!(arm.shrink > 0.0 && arm.shrink < 1.0) || !(arm.initial_step > 0.0 && arm.initial_step <= 1.0)) {
    throw ContractError("Armijo step must lie in (0, 1] and shrink in (0, 1)");
  }
  const HittingOptions& hitting = options.smp.hitting;
  Evaluation current = evaluate(spec, initial, simulation, hitting);
  const PathEnsemble noise = current.ensemble;
  ControlPath control = initial;
  OptimizerTrace trace;
  double last_step = 0.0;

  for (std::size_t iter = 0;; ++iter) {
    SmpReport report = verify(spec, current, options.smp);
    trace.iterates.push_back(record(iter, report, last_step));
    auto finish = [&](Termination t) {
      trace.termination = t;
      return OptimizerResult{control, trace, std::move(report)};
    };
    if (report.verdict == Verdict::certified) return finish(Termination::smp_satisfied);
    if (report.verdict == Verdict::degenerate) return finish(Termination::degenerate_encountered);
    if (iter >= options.max_iters) return finish(Termination::max_iters);

    const CellGradient grad = cell_gradient(spec, current, report.penalty, options.smp.adjoint);
    const Eigen::MatrixXd target = corner_control(control, grad, options.tie_tol);
    const Eigen::MatrixXd dir = target - control.values();
    double slope = 0.0;
    for (std::size_t i = 0; i < grad.weight.size(); ++i) {
      slope -= grad.weight[i] * grad.coefficient[i].dot(Vec(dir.col(static_cast<Eigen::Index>(i))));
    }
    if (!(slope < 0.0)) return finish(Termination::step_floor);

    bool accepted = false;
    for (double s = arm.initial_step; s >= arm.min_step; s *= arm.shrink) {
      Eigen::MatrixXd next = control.values() + s * dir;
      for (int c = 0; c < next.rows(); ++c) {
        next.row(c) = next.row(c).cwiseMax(spec.box().lo()[c]).cwiseMin(spec.box().hi()[c]);
      }
      ControlPath trial(control.grid(), next, spec.box());
      Evaluation cand = evaluate_crn(noise, spec, trial, hitting);
      if (cand.cost.value <= current.cost.value + arm.fraction * s * slope) {
        control = std::move(trial);
        current = std::move(cand);
        last_step = s;
        accepted = true;
        break;
      }
    }
    if (!accepted) return finish(Termination::step_floor);
  }
}

}  // namespace vtc
