#include "vtc/smp.hpp"

#include <cmath>
#include <sstream>

#include "vtc/errors.hpp"

namespace vtc {

std::string verdict_label(Verdict v) {
  switch (v) {
    case Verdict::certified:
      return "certified";
    case Verdict::refuted:
      return "refuted";
    case Verdict::degenerate:
      return "degenerate";
  }
  return "?";
}

std::vector<Vec> probe_lattice(const ControlBox& box, std::size_t probes) {
  if (probes < 2) throw ContractError("the probe lattice needs at least 2 points per control coordinate");
  const int k = box.dim();
  std::vector<Vec> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
  while (true) {
    Vec u(k);
    for (int c = 0; c < k; ++c) {
      const double lo = box.lo()[c];
      const double hi = box.hi()[c];
      const std::size_t r = idx[static_cast<std::size_t>(c)];
      u[c] = r + 1 == probes ? hi : lo + (hi - lo) * static_cast<double>(r) / static_cast<double>(probes - 1);
    }
    out.push_back(u);
    int c = k - 1;
    while (c >= 0 && ++idx[static_cast<std::size_t>(c)] == probes) {
      idx[static_cast<std::size_t>(c)] = 0;
      --c;
    }
    if (c < 0) break;
  }
  return out;
}

namespace {

struct NodeCoefficients {
  Eigen::VectorXd h_mean, g_mean;
  std::vector<Vec> h_path, g_path;
};

BranchReport evaluate_branch(bool with_penalty, double kappa, const std::vector<NodeCoefficients>& nodes,
                             const PathEnsemble& ens, const std::vector<Vec>& lattice, const SmpOptions& opt) {
  BranchReport br;
  br.with_penalty = with_penalty;
  br.kappa = kappa;
  const int k = ens.control().dim();
  const std::size_t np = lattice.size();
  br.probes.resize(nodes.size() * np);
  parallel_for(nodes.size(), ens.execution(), [&](std::size_t i) {
    const NodeCoefficients& nc = nodes[i];
    const Eigen::VectorXd mean = nc.h_mean + kappa * nc.g_mean;
    Eigen::VectorXd se = Eigen::VectorXd::Zero(k);
    if (!ens.deterministic()) {
      for (int c = 0; c < k; ++c) {
        std::vector<double> s(nc.h_path.size());
        for (std::size_t p = 0; p < s.size(); ++p) s[p] = nc.h_path[p][c] + kappa * nc.g_path[p][c];
        se[c] = sample_mean(s).se;
      }
    }
    const Vec ubar = ens.control().at(i);
    for (std::size_t r = 0; r < np; ++r) {
      ProbeRow row;
      row.t = ens.grid().t(i);
      row.node = i;
      row.u = lattice[r];
      const Eigen::VectorXd delta = Eigen::VectorXd(lattice[r] - ubar);
      row.lhs = mean.dot(delta);
      row.se = se.cwiseProduct(delta.cwiseAbs()).sum();
      br.probes[i * np + r] = row;
    }
  });
  double max_se = 0.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < br.probes.size(); ++r) {
    max_se = std::max(max_se, br.probes[r].se);
    if (br.probes[r].lhs > worst) {
      worst = br.probes[r].lhs;
      br.worst = r;
    }
  }
  br.max_violation = std::max(0.0, worst);
  br.tolerance = opt.tol + opt.se_factor * max_se;
  br.satisfied = br.max_violation <= br.tolerance;
  return br;
}

}  // namespace

SmpReport verify(const ProblemSpec& spec, const Evaluation& base, const SmpOptions& opt) {
  const std::vector<Vec> lattice = probe_lattice(spec.box(), opt.probes);
  SmpReport report;
  report.terminal = base.terminal;
  report.cost = base.cost;
  const TerminalTimeResult& t = base.terminal;
  const PathEnsemble& ens = base.ensemble;

  if (t.case_tag != TerminalCase::unreached && t.flagged()) {
    report.verdict = Verdict::degenerate;
    std::ostringstream os;
    if (t.degenerate_h) {
      os << "h(tau) = " << t.h_at_tau << " is numerically zero at tau = " << t.tau
         << "; the maximum principle does not apply";
    } else {
      os << "h jumps by " << t.jump << " at tau = " << t.tau << "; the maximum principle does not apply";
    }
    report.diagnosis = os.str();
    return report;
  }

  report.penalty = penalty_terms(spec, base);
  const AdjointPath adj = solve_adjoint(spec, ens, t, opt.adjoint);
  const std::size_t last = adj.tau_cell();
  std::vector<NodeCoefficients> nodes(last + 1);
  const std::size_t paths = ens.paths();
  const int k = spec.control_dim();
  parallel_for(nodes.size(), ens.execution(), [&](std::size_t i) {
    NodeCoefficients& nc = nodes[i];
    nc.h_path.resize(paths);
    nc.g_path.resize(paths);
    nc.h_mean = Eigen::VectorXd::Zero(k);
    nc.g_mean = Eigen::VectorXd::Zero(k);
    const Vec u = ens.control().at(i);
    for (std::size_t p = 0; p < paths; ++p) {
      const std::size_t ap = adj.paths() == 1 ? 0 : p;
      const Vec x = ens.state(p, i);
      nc.h_path[p] = hamiltonian_u(spec, x, u, adj.p(ap, i), adj.q(ap, i));
      nc.g_path[p] = spec.constraint_rate_u(x, u);
      nc.h_mean += Eigen::VectorXd(nc.h_path[p]);
      nc.g_mean += Eigen::VectorXd(nc.g_path[p]);
    }
    nc.h_mean /= static_cast<double>(paths);
    nc.g_mean /= static_cast<double>(paths);
  });

  switch (t.case_tag) {
    case TerminalCase::interior:
      report.branches.push_back(evaluate_branch(true, report.penalty.kappa, nodes, ens, lattice, opt));
      break;
    case TerminalCase::boundary:
      report.branches.push_back(evaluate_branch(true, report.penalty.kappa, nodes, ens, lattice, opt));
      report.branches.push_back(evaluate_branch(false, 0.0, nodes, ens, lattice, opt));
      break;
    case TerminalCase::unreached:
      report.branches.push_back(evaluate_branch(false, 0.0, nodes, ens, lattice, opt));
      break;
  }

  report.verdict = Verdict::refuted;
  for (std::size_t b = 0; b < report.branches.size(); ++b) {
    if (report.branches[b].satisfied) {
      report.verdict = Verdict::certified;
      report.chosen_branch = b;
      break;
    }
  }
  if (report.verdict == Verdict::refuted) {
    std::ostringstream os;
    const ProbeRow& w = report.chosen().probes[report.chosen().worst];
    os << "inequality violated by " << report.chosen().max_violation << " at t = " << w.t;
    report.diagnosis = os.str();
  }
  return report;
}

SmpReport verify(const ProblemSpec& spec, const ControlPath& candidate, const SimulationOptions& simulation,
                 const SmpOptions& options) {
  return verify(spec, evaluate(spec, candidate, simulation, options.hitting), options);
}

Estimate integrated_lhs(const ProblemSpec& spec, const Evaluation& base, const AdjointPath& adjoint,
                        const VariationalEnsemble& y, double kappa) {
  const PathEnsemble& ens = base.ensemble;
  const double tau = adjoint.tau();
  const Direction& v = y.direction();
  std::vector<double> per_path(ens.paths());
  parallel_for(ens.paths(), ens.execution(), [&](std::size_t p) {
    const std::size_t ap = adjoint.paths() == 1 ? 0 : p;
    per_path[p] = integrate_to(ens.grid(), tau, [&](const Site& s) {
      const Vec x = ens.state_at(p, s);
      const Vec u = ens.control().at(s.cell);
      return hamiltonian_u(spec, x, u, adjoint.p_at(ap, s), adjoint.q_at(ap, s)).dot(v.at(s.cell));
    });
  });
  if (kappa != 0.0) {
    const std::vector<double> hb = hbar_path_integrals(spec, ens, y, tau);
    for (std::size_t p = 0; p < per_path.size(); ++p) per_path[p] += kappa * hb[p];
  }
  Estimate e = sample_mean(per_path);
  if (ens.deterministic()) e.se = 0.0;
  return e;
}

}  // namespace vtc
