#include "vtc/variation.hpp"

#include <cmath>
#include <sstream>

#include "vtc/errors.hpp"

namespace vtc {

VariationalEnsemble::VariationalEnsemble(TimeGrid grid, std::size_t paths, int state_dim, Direction direction,
                                         std::vector<double> y)
    : grid_(grid), paths_(paths), m_(state_dim), direction_(std::move(direction)), y_(std::move(y)) {
  if (y_.size() != paths_ * grid_.nodes() * static_cast<std::size_t>(m_)) {
    throw ContractError("variational storage has the wrong size");
  }
}

Vec VariationalEnsemble::y(std::size_t p, std::size_t i) const {
  const std::size_t base = (p * grid_.nodes() + i) * static_cast<std::size_t>(m_);
  Vec out(m_);
  for (int a = 0; a < m_; ++a) out[a] = y_[base + static_cast<std::size_t>(a)];
  return out;
}

Vec VariationalEnsemble::y_at(std::size_t p, const Site& s) const {
  if (s.w == 0.0) return y(p, s.cell);
  if (s.w == 1.0) return y(p, s.cell + 1);
  const Vec a = y(p, s.cell);
  const Vec b = y(p, s.cell + 1);
  return a + s.w * (b - a);
}

namespace {

std::vector<Vec> columns(const PiecewiseConstant& path) {
  std::vector<Vec> out(path.cells());
  for (std::size_t i = 0; i < path.cells(); ++i) out[i] = path.at(i);
  return out;
}

void check_direction(const PathEnsemble& base, const Direction& v) {
  if (!(v.grid() == base.grid())) throw GridMismatch("direction lives on a different grid than the ensemble");
  if (v.dim() != base.control().dim()) throw ProblemError("direction has the wrong dimension");
}

Vec linear_rhs(const ProblemSpec& spec, const Vec& x, const Vec& u, const Vec& y, const Vec& v) {
  return spec.drift_x(x, u) * y + spec.drift_u(x, u) * v;
}

}  // namespace

VariationalEnsemble variational_paths(const ProblemSpec& spec, const PathEnsemble& base, const Direction& v) {
  check_direction(base, v);
  if (!base.has_increments()) {
    throw ContractError("variational paths need an ensemble with retained Brownian increments");
  }
  const TimeGrid& grid = base.grid();
  const std::size_t n = grid.steps();
  const int m = spec.state_dim();
  const int d = spec.noise_dim();
  const double dt = grid.dt();
  const auto us = columns(base.control());
  const auto vs = columns(v);
  const bool noise = !base.deterministic() && !spec.diffusion_free();
  const std::size_t row = grid.nodes() * static_cast<std::size_t>(m);
  std::vector<double> out(base.paths() * row, 0.0);

  parallel_for(base.paths(), base.execution(), [&](std::size_t p) {
    double* yp = out.data() + p * row;
    Vec y = Vec::Zero(m);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec x = base.state(p, i);
      const Vec& u = us[i];
      const Vec& w = vs[i];
      if (base.scheme() == Scheme::rk4) {
        const Vec k1 = spec.drift(x, u);
        const Vec x2 = x + (0.5 * dt) * k1;
        const Vec k2 = spec.drift(x2, u);
        const Vec x3 = x + (0.5 * dt) * k2;
        const Vec k3 = spec.drift(x3, u);
        const Vec x4 = x + dt * k3;
        const Vec l1 = linear_rhs(spec, x, u, y, w);
        const Vec l2 = linear_rhs(spec, x2, u, y + (0.5 * dt) * l1, w);
        const Vec l3 = linear_rhs(spec, x3, u, y + (0.5 * dt) * l2, w);
        const Vec l4 = linear_rhs(spec, x4, u, y + dt * l3, w);
        y = y + (dt / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
      } else {
        Vec next = y + dt * linear_rhs(spec, x, u, y, w);
        if (noise) {
          const Vec dw = base.increment(p, i);
          for (int j = 0; j < d; ++j) {
            next += (spec.diffusion_x(x, u, j) * y + spec.diffusion_u(x, u, j) * w) * dw[j];
          }
        }
        y = next;
      }
      for (int a = 0; a < m; ++a) yp[(i + 1) * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)] = y[a];
    }
  });
  return VariationalEnsemble(grid, base.paths(), m, v, std::move(out));
}

std::vector<TaylorRow> taylor_expansion_check(const ProblemSpec& spec, const ControlPath& control,
                                              const Direction& v, const std::vector<double>& rho_list,
                                              const SimulationOptions& options) {
  const PathEnsemble base = simulate(spec, control, options);
  const VariationalEnsemble y = variational_paths(spec, base, v);
  std::vector<TaylorRow> rows;
  for (double rho : rho_list) {
    if (!(rho > 0.0)) throw ContractError("Taylor check needs positive rho values");
    const PathEnsemble moved = resimulate_with_control(base, spec, control.perturbed(rho, v));
    std::vector<double> per_node(base.grid().nodes(), 0.0);
    parallel_for(per_node.size(), base.execution(), [&](std::size_t i) {
      double acc = 0.0;
      for (std::size_t p = 0; p < base.paths(); ++p) {
        const Vec diff = (moved.state(p, i) - base.state(p, i)) / rho - y.y(p, i);
        acc += diff.norm();
      }
      per_node[i] = acc / static_cast<double>(base.paths());
    });
    double sup = 0.0;
    for (double e : per_node) sup = std::max(sup, e);
    rows.push_back({rho, sup});
  }
  return rows;
}

double HbarCurve::at(const Site& s) const {
  if (s.w == 0.0) return right[s.cell];
  return (1.0 - s.w) * right[s.cell] + s.w * left[s.cell + 1];
}

namespace {

double hbar_integrand(const ProblemSpec& spec, const Vec& x, const Vec& u, const Vec& y, const Vec& v) {
  return spec.constraint_rate_x(x, u).dot(y) + spec.constraint_rate_u(x, u).dot(v);
}

}  // namespace

HbarCurve hbar_curve(const ProblemSpec& spec, const PathEnsemble& base, const VariationalEnsemble& y) {
  const TimeGrid& grid = base.grid();
  if (!(y.grid() == grid)) throw GridMismatch("variational ensemble lives on a different grid");
  const std::size_t nodes = grid.nodes();
  const std::size_t n = grid.steps();
  const auto us = columns(base.control());
  const auto vs = columns(y.direction());
  HbarCurve out{grid, std::vector<double>(nodes), std::vector<double>(nodes), std::vector<double>(nodes, 0.0),
                std::vector<double>(nodes, 0.0)};
  parallel_for(nodes, base.execution(), [&](std::size_t i) {
    const std::size_t cr = std::min(i, n - 1);
    const std::size_t cl = i == 0 ? 0 : i - 1;
    std::vector<double> r(base.paths()), l(base.paths());
    for (std::size_t p = 0; p < base.paths(); ++p) {
      const Vec x = base.state(p, i);
      const Vec yy = y.y(p, i);
      r[p] = hbar_integrand(spec, x, us[cr], yy, vs[cr]);
      l[p] = hbar_integrand(spec, x, us[cl], yy, vs[cl]);
    }
    const Estimate er = sample_mean(r);
    const Estimate el = sample_mean(l);
    out.right[i] = er.value;
    out.left[i] = el.value;
    if (!base.deterministic()) {
      out.se_right[i] = er.se;
      out.se_left[i] = el.se;
    }
  });
  return out;
}

std::vector<double> hbar_path_integrals(const ProblemSpec& spec, const PathEnsemble& base,
                                        const VariationalEnsemble& y, double tau) {
  const TimeGrid& grid = base.grid();
  if (!(y.grid() == grid)) throw GridMismatch("variational ensemble lives on a different grid");
  const auto us = columns(base.control());
  const auto vs = columns(y.direction());
  std::vector<double> out(base.paths());
  parallel_for(base.paths(), base.execution(), [&](std::size_t p) {
    out[p] = integrate_to(grid, tau, [&](const Site& s) {
      return hbar_integrand(spec, base.state_at(p, s), us[s.cell], y.y_at(p, s), vs[s.cell]);
    });
  });
  return out;
}

Estimate hbar_integral(const ProblemSpec& spec, const PathEnsemble& base, const VariationalEnsemble& y, double tau) {
  Estimate e = sample_mean(hbar_path_integrals(spec, base, y, tau));
  if (base.deterministic()) e.se = 0.0;
  return e;
}

namespace {

void require_hypotheses(const TerminalTimeResult& t) {
  if (t.case_tag == TerminalCase::unreached) return;
  if (t.degenerate_h) {
    std::ostringstream os;
    os << "h(tau) = " << t.h_at_tau << " at tau = " << t.tau << " is numerically zero (max |h| = " << t.h_max
       << "); the terminal-time derivative requires h(tau) != 0";
    throw DegenerateRate(os.str());
  }
  if (t.h_discontinuous) {
    std::ostringstream os;
    os << "h jumps by " << t.jump << " at tau = " << t.tau << " (threshold " << t.jump_threshold
       << "); the terminal-time derivative requires h continuous at tau";
    throw Discontinuity(os.str());
  }
}

}  // namespace

TauDerivativeResult tau_derivative(const TerminalTimeResult& terminal, const Estimate& hbar_int) {
  TauDerivativeResult r;
  r.case_tag = terminal.case_tag;
  r.h_at_tau = terminal.h_at_tau;
  r.hbar_integral = hbar_int.value;
  if (terminal.case_tag == TerminalCase::unreached) return r;
  require_hypotheses(terminal);
  r.value = hbar_int.value / terminal.h_at_tau;
  r.se = hbar_int.se / std::abs(terminal.h_at_tau);
  if (terminal.case_tag == TerminalCase::boundary) {
    r.ambiguous = true;
    r.alternative = 0.0;
  }
  return r;
}

std::vector<QuotientRow> tau_derivative_fd(const ProblemSpec& spec, const ControlPath& control, const Direction& v,
                                           const std::vector<double>& rho_list, const SimulationOptions& options,
                                           const HittingOptions& hitting) {
  const Evaluation base = evaluate(spec, control, options, hitting);
  std::vector<QuotientRow> rows;
  for (double rho : rho_list) {
    if (rho == 0.0) throw ContractError("difference quotients need rho != 0");
    const Evaluation moved = evaluate_crn(base.ensemble, spec, control.perturbed(rho, v), hitting);
    rows.push_back({rho, moved.terminal.tau, moved.terminal.case_tag, (base.terminal.tau - moved.terminal.tau) / rho});
  }
  return rows;
}

double extrapolate_to_zero(const std::vector<double>& rho, const std::vector<double>& values) {
  if (rho.size() != values.size() || rho.empty()) throw ContractError("extrapolation needs matching, non-empty lists");
  std::vector<double> p = values;
  const std::size_t n = p.size();
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t i = 0; i + k < n; ++i) {
      const double denom = rho[i] - rho[i + k];
      if (denom == 0.0) throw ContractError("extrapolation needs distinct rho values");
      p[i] = (-rho[i + k] * p[i] + rho[i] * p[i + 1]) / denom;
    }
  }
  return p[0];
}

namespace {

struct TauQuantities {
  std::vector<double> psi_rate;  // Psi_x^T b + 1/2 tr, per path at tau
  std::vector<double> f;         // f at tau, per path
  std::vector<double> g;         // h integrand interpolated at tau, per path
};

TauQuantities quantities_at_tau(const ProblemSpec& spec, const PathEnsemble& ens, const Site& s) {
  TauQuantities q{std::vector<double>(ens.paths()), std::vector<double>(ens.paths()),
                  std::vector<double>(ens.paths())};
  const Vec u = ens.control().at(s.cell);
  parallel_for(ens.paths(), ens.execution(), [&](std::size_t p) {
    const Vec x = ens.state_at(p, s);
    q.psi_rate[p] = spec.terminal_rate(x, u);
    q.f[p] = spec.running_cost(x, u);
    const double g0 = spec.constraint_rate(ens.state(p, s.cell), u);
    q.g[p] = s.w == 0.0 ? g0 : (1.0 - s.w) * g0 + s.w * spec.constraint_rate(ens.state(p, s.cell + 1), u);
  });
  return q;
}

}  // namespace

PenaltyTerms penalty_terms(const ProblemSpec& spec, const Evaluation& base) {
  const TerminalTimeResult& t = base.terminal;
  PenaltyTerms out;
  out.h_at_tau = t.h_at_tau;
  if (t.case_tag == TerminalCase::unreached) return out;
  require_hypotheses(t);
  const TauQuantities q = quantities_at_tau(spec, base.ensemble, t.site);
  out.psi_tilde = sample_mean(q.psi_rate).value;
  out.f_at_tau = sample_mean(q.f).value;
  out.kappa = (out.psi_tilde + out.f_at_tau) / t.h_at_tau;
  return out;
}

CostVariationResult cost_directional_derivative(const ProblemSpec& spec, const Evaluation& base,
                                                const VariationalEnsemble& y) {
  const PathEnsemble& ens = base.ensemble;
  const TerminalTimeResult& t = base.terminal;
  check_direction(ens, y.direction());
  require_hypotheses(t);

  const TimeGrid& grid = ens.grid();
  const auto us = columns(ens.control());
  const auto vs = columns(y.direction());
  const std::size_t paths = ens.paths();

  std::vector<double> terminal(paths), running(paths);
  parallel_for(paths, ens.execution(), [&](std::size_t p) {
    terminal[p] = spec.terminal_cost_x(ens.state_at(p, t.site)).dot(y.y_at(p, t.site));
    running[p] = integrate_to(grid, t.tau, [&](const Site& s) {
      const Vec x = ens.state_at(p, s);
      const Vec& u = us[s.cell];
      return spec.running_cost_x(x, u).dot(y.y_at(p, s)) + spec.running_cost_u(x, u).dot(vs[s.cell]);
    });
  });

  CostVariationResult r;
  r.case_tag = t.case_tag;
  r.h_at_tau = t.h_at_tau;
  r.terminal = sample_mean(terminal).value;
  r.running = sample_mean(running).value;
  r.total_without_penalty = r.terminal + r.running;

  std::vector<double> influence(paths);
  if (t.case_tag == TerminalCase::unreached) {
    for (std::size_t p = 0; p < paths; ++p) influence[p] = terminal[p] + running[p];
    r.total = r.total_without_penalty;
  } else {
    const TauQuantities q = quantities_at_tau(spec, ens, t.site);
    const std::vector<double> hb = hbar_path_integrals(spec, ens, y, t.tau);
    r.psi_tilde = sample_mean(q.psi_rate).value;
    r.f_at_tau = sample_mean(q.f).value;
    r.hbar_integral = sample_mean(hb).value;
    const double h = t.h_at_tau;
    r.kappa = (r.psi_tilde + r.f_at_tau) / h;
    r.penalty_psi = -r.psi_tilde * r.hbar_integral / h;
    r.penalty_f = -r.f_at_tau * r.hbar_integral / h;
    r.total = r.penalty_psi + r.penalty_f + r.terminal + r.running;
    r.ambiguous = t.case_tag == TerminalCase::boundary;
    const double dh = r.hbar_integral;
    for (std::size_t p = 0; p < paths; ++p) {
      influence[p] = terminal[p] + running[p] - (q.psi_rate[p] + q.f[p]) * dh / h - r.kappa * hb[p] +
                     r.kappa * dh * q.g[p] / h;
    }
  }
  r.se = ens.deterministic() ? 0.0 : sample_mean(influence).se;
  return r;
}

std::vector<CostQuotientRow> cost_difference_quotients(const ProblemSpec& spec, const Evaluation& base,
                                                       const Direction& v, const std::vector<double>& rho_list,
                                                       const HittingOptions& hitting) {
  const std::vector<double> j0 = path_costs(base.ensemble, spec, base.terminal.tau);
  std::vector<CostQuotientRow> rows;
  for (double rho : rho_list) {
    if (rho == 0.0) throw ContractError("difference quotients need rho != 0");
    const Evaluation moved = evaluate_crn(base.ensemble, spec, base.ensemble.control().perturbed(rho, v), hitting);
    const std::vector<double> j1 = path_costs(moved.ensemble, spec, moved.terminal.tau);
    std::vector<double> diff(j0.size());
    for (std::size_t p = 0; p < j0.size(); ++p) diff[p] = (j1[p] - j0[p]) / rho;
    const Estimate e = sample_mean(diff);
    rows.push_back({rho, e.value, base.ensemble.deterministic() ? 0.0 : e.se, moved.terminal.tau,
                    moved.terminal.case_tag});
  }
  return rows;
}

}  // namespace vtc
