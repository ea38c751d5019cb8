#include "vtc/forward.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kernels.hpp"
#include "rng.hpp"
#include "vtc/errors.hpp"

namespace vtc {

void set_threads(int n) { omp_set_num_threads(std::max(1, n)); }

int max_threads() { return omp_get_max_threads(); }

Estimate sample_mean(const std::vector<double>& samples) {
  Estimate out;
  const std::size_t n = samples.size();
  if (n == 0) return out;
  double sum = 0.0;
  for (double v : samples) sum += v;
  out.value = sum / static_cast<double>(n);
  if (n < 2) return out;
  double ss = 0.0;
  for (double v : samples) ss += (v - out.value) * (v - out.value);
  out.se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

Site site_at(const TimeGrid& grid, double time) {
  const CellLocation loc = locate(grid, time);
  return Site{loc.cell, loc.frac};
}

PathEnsemble::PathEnsemble(const ProblemSpec& spec, ControlPath control, SimulationOptions options,
                           bool deterministic, std::vector<double> states, std::vector<double> increments)
    : control_(std::move(control)),
      options_(options),
      deterministic_(deterministic),
      m_(spec.state_dim()),
      d_(spec.noise_dim()),
      states_(std::move(states)),
      increments_(std::move(increments)) {
  const std::size_t n = control_.grid().steps();
  if (states_.size() != options_.paths * (n + 1) * static_cast<std::size_t>(m_)) {
    throw ContractError("ensemble state storage has the wrong size");
  }
  if (!increments_.empty() && increments_.size() != options_.paths * n * static_cast<std::size_t>(d_)) {
    throw ContractError("ensemble increment storage has the wrong size");
  }
}

Vec PathEnsemble::state(std::size_t p, std::size_t i) const {
  const std::size_t base = (p * grid().nodes() + i) * static_cast<std::size_t>(m_);
  Vec x(m_);
  for (int a = 0; a < m_; ++a) x[a] = states_[base + static_cast<std::size_t>(a)];
  return x;
}

Vec PathEnsemble::state_at(std::size_t p, const Site& s) const {
  if (s.w == 0.0) return state(p, s.cell);
  if (s.w == 1.0) return state(p, s.cell + 1);
  const Vec a = state(p, s.cell);
  const Vec b = state(p, s.cell + 1);
  return a + s.w * (b - a);
}

Vec PathEnsemble::increment(std::size_t p, std::size_t i) const {
  Vec dw = Vec::Zero(d_);
  if (increments_.empty()) {
    if (!deterministic_) throw ContractError("ensemble was simulated without retained Brownian increments");
    return dw;
  }
  const std::size_t base = (p * grid().steps() + i) * static_cast<std::size_t>(d_);
  for (int j = 0; j < d_; ++j) dw[j] = increments_[base + static_cast<std::size_t>(j)];
  return dw;
}

namespace {

std::vector<Vec> control_columns(const ControlPath& control) {
  std::vector<Vec> out(control.cells());
  for (std::size_t i = 0; i < control.cells(); ++i) out[i] = control.at(i);
  return out;
}

bool is_deterministic(const ProblemSpec& spec, const SimulationOptions& options) {
  return spec.diffusion_free() && !options.force_monte_carlo;
}

void check_options(const ProblemSpec& spec, const ControlPath& control, const SimulationOptions& options) {
  if (control.dim() != spec.control_dim()) throw ProblemError("control dimension does not match the problem");
  if (control.grid().horizon() != spec.horizon()) {
    throw GridMismatch("control grid horizon does not match the problem horizon");
  }
  if (options.paths == 0) throw ContractError("path count must be at least 1");
  if (is_deterministic(spec, options)) {
    if (options.paths != 1) throw ContractError("deterministic mode (sigma = 0) uses exactly one path");
  } else if (options.scheme == Scheme::rk4) {
    throw ContractError("the rk4 scheme is only available in deterministic mode");
  }
}

// Integrates path p from x0 with the given increments (null in deterministic mode).
void run_path(const ProblemSpec& spec, const std::vector<Vec>& controls, double dt, Scheme scheme,
              const double* dw, int d, double* out, std::size_t p) {
  const int m = spec.state_dim();
  Vec x = spec.initial_state();
  for (int a = 0; a < m; ++a) out[a] = x[a];
  for (std::size_t i = 0; i < controls.size(); ++i) {
    if (scheme == Scheme::rk4) {
      x = detail::rk4_step(spec, x, controls[i], dt);
    } else {
      x = detail::euler_step(spec, x, controls[i], dt, dw == nullptr ? nullptr : dw + i * static_cast<std::size_t>(d));
    }
    if (!detail::all_finite(x)) {
      std::ostringstream os;
      os << "non-finite state on path " << p << " at node " << i + 1;
      throw SimulationError(os.str(), p, i + 1);
    }
    double* row = out + (i + 1) * static_cast<std::size_t>(m);
    for (int a = 0; a < m; ++a) row[a] = x[a];
  }
}

void draw_increments(std::uint64_t seed, std::size_t p, std::size_t steps, int d, double dt, double* out) {
  auto rng = detail::path_stream(seed, p);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::sqrt(dt);
  for (std::size_t k = 0; k < steps * static_cast<std::size_t>(d); ++k) out[k] = scale * normal(rng);
}

PathEnsemble run(const ProblemSpec& spec, const ControlPath& control, const SimulationOptions& options,
                 std::vector<double> increments, bool draw) {
  const TimeGrid& grid = control.grid();
  const std::size_t n = grid.steps();
  const std::size_t paths = options.paths;
  const int m = spec.state_dim();
  const int d = spec.noise_dim();
  const bool deterministic = is_deterministic(spec, options);
  const auto controls = control_columns(control);
  const std::size_t row = (n + 1) * static_cast<std::size_t>(m);
  const std::size_t inc_row = n * static_cast<std::size_t>(d);

  std::vector<double> states(paths * row);
  if (!deterministic && draw) increments.assign(paths * inc_row, 0.0);

  parallel_for(paths, options.execution, [&](std::size_t p) {
    const double* dw = nullptr;
    if (!deterministic) {
      double* mine = increments.data() + p * inc_row;
      if (draw) draw_increments(options.seed, p, n, d, grid.dt(), mine);
      dw = mine;
    }
    run_path(spec, controls, grid.dt(), options.scheme, dw, d, states.data() + p * row, p);
  });

  if (!options.retain_increments) increments.clear();
  return PathEnsemble(spec, control, options, deterministic, std::move(states), std::move(increments));
}

}  // namespace

PathEnsemble simulate(const ProblemSpec& spec, const ControlPath& control, const SimulationOptions& options) {
  check_options(spec, control, options);
  return run(spec, control, options, {}, true);
}

PathEnsemble resimulate_with_control(const PathEnsemble& base, const ProblemSpec& spec, const ControlPath& control) {
  if (!(control.grid() == base.grid())) throw GridMismatch("control lives on a different grid than the ensemble");
  if (!base.has_increments()) {
    throw ContractError("common random numbers need an ensemble with retained Brownian increments");
  }
  SimulationOptions options = base.options();
  options.retain_increments = true;
  check_options(spec, control, options);
  if (base.deterministic() != is_deterministic(spec, options)) {
    throw ContractError("ensemble mode does not match the problem (sigma = 0 versus sigma != 0)");
  }
  return run(spec, control, options, base.raw_increments(), false);
}

MeanCurve mean_phi(const PathEnsemble& ensemble, const ProblemSpec& spec) {
  const TimeGrid& grid = ensemble.grid();
  MeanCurve out{grid, std::vector<double>(grid.nodes()), std::vector<double>(grid.nodes(), 0.0)};
  const std::size_t paths = ensemble.paths();
  parallel_for(grid.nodes(), ensemble.execution(), [&](std::size_t i) {
    if (i == 0) {
      out.values[0] = spec.constraint(spec.initial_state());
      return;
    }
    std::vector<double> vals(paths);
    for (std::size_t p = 0; p < paths; ++p) vals[p] = spec.constraint(ensemble.state(p, i));
    const Estimate e = sample_mean(vals);
    out.values[i] = e.value;
    out.se[i] = ensemble.deterministic() ? 0.0 : e.se;
  });
  return out;
}

double RateCurve::at(const Site& s) const {
  if (s.w == 0.0) return right[s.cell];
  return (1.0 - s.w) * right[s.cell] + s.w * left[s.cell + 1];
}

RateCurve h_curve(const PathEnsemble& ensemble, const ProblemSpec& spec) {
  const TimeGrid& grid = ensemble.grid();
  const std::size_t nodes = grid.nodes();
  const std::size_t n = grid.steps();
  RateCurve out{grid, std::vector<double>(nodes), std::vector<double>(nodes), std::vector<double>(nodes, 0.0),
                std::vector<double>(nodes, 0.0)};
  const auto controls = control_columns(ensemble.control());
  const std::size_t paths = ensemble.paths();
  parallel_for(nodes, ensemble.execution(), [&](std::size_t i) {
    const Vec& ur = controls[std::min(i, n - 1)];
    const Vec& ul = controls[i == 0 ? 0 : i - 1];
    std::vector<double> r(paths), l(paths);
    for (std::size_t p = 0; p < paths; ++p) {
      const Vec x = ensemble.state(p, i);
      r[p] = spec.constraint_rate(x, ur);
      l[p] = spec.constraint_rate(x, ul);
    }
    const Estimate er = sample_mean(r);
    const Estimate el = sample_mean(l);
    out.right[i] = er.value;
    out.left[i] = el.value;
    if (!ensemble.deterministic()) {
      out.se_right[i] = er.se;
      out.se_left[i] = el.se;
    }
  });
  return out;
}

double mean_rate_crosscheck(const MeanCurve& mean, const RateCurve& rate, const ProblemSpec& spec) {
  if (!(mean.grid == rate.grid)) throw GridMismatch("mean and rate curves live on different grids");
  const double phi0 = spec.constraint(spec.initial_state());
  const double dt = mean.grid.dt();
  double cum = 0.0;
  double worst = std::abs(mean.values[0] - phi0);
  for (std::size_t k = 0; k < mean.grid.steps(); ++k) {
    cum += 0.5 * dt * (rate.right[k] + rate.left[k + 1]);
    worst = std::max(worst, std::abs(mean.values[k + 1] - phi0 - cum));
  }
  return worst;
}

std::string case_label(TerminalCase c) {
  switch (c) {
    case TerminalCase::interior:
      return "I";
    case TerminalCase::boundary:
      return "II";
    case TerminalCase::unreached:
      return "III";
  }
  return "?";
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double hi = *mid;
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

// Window comparison of cell-averaged h on both sides of the cell holding tau.
void jump_statistic(const RateCurve& rate, std::size_t tau_cell, const HittingOptions& opt, TerminalTimeResult& r) {
  const std::size_t n = rate.grid.steps();
  const std::size_t w = std::max<std::size_t>(1, opt.jump_window);
  if (tau_cell == 0 || tau_cell + 1 >= n) return;
  const std::size_t first = tau_cell >= w ? tau_cell - w : 0;
  const std::size_t last = std::min(n - 1, tau_cell + w);

  auto cell_mean = [&](std::size_t k) { return 0.5 * (rate.right[k] + rate.left[k + 1]); };
  auto cell_se = [&](std::size_t k) { return std::max(rate.se_right[k], rate.se_left[k + 1]); };

  double left = 0.0, right = 0.0, se = 0.0;
  for (std::size_t k = first; k < tau_cell; ++k) left += cell_mean(k);
  left /= static_cast<double>(tau_cell - first);
  for (std::size_t k = tau_cell + 1; k <= last; ++k) right += cell_mean(k);
  right /= static_cast<double>(last - tau_cell);

  std::vector<double> steps;
  for (std::size_t k = first; k <= last; ++k) {
    se = std::max(se, cell_se(k));
    if (k > first) steps.push_back(std::abs(cell_mean(k) - cell_mean(k - 1)));
  }
  r.jump = std::abs(right - left);
  r.jump_threshold = opt.jump_se_factor * se + opt.jump_variation_factor * median(std::move(steps));
  r.h_discontinuous = r.jump > r.jump_threshold;
}

}  // namespace

TerminalTimeResult hitting_time(const MeanCurve& mean, const RateCurve& rate, const ProblemSpec& spec,
                                const HittingOptions& opt) {
  const TimeGrid& grid = mean.grid;
  if (!(grid == rate.grid)) throw GridMismatch("mean and rate curves live on different grids");
  const std::size_t n = grid.steps();
  const double dt = grid.dt();
  const double alpha = spec.threshold();
  const double case_tol = opt.case_tol < 0.0 ? 2.0 * dt : opt.case_tol;
  if (!(case_tol > 0.0)) throw ContractError("case tolerance must be positive");
  for (std::size_t i = 0; i < mean.values.size(); ++i) {
    if (!std::isfinite(mean.values[i])) {
      std::ostringstream os;
      os << "mean curve is not finite at node " << i;
      throw ContractError(os.str());
    }
  }
  const double level = alpha - opt.level_tol * std::max(1.0, std::abs(alpha));

  TerminalTimeResult r;
  r.alpha_gap = mean.values[n] - alpha;
  for (double v : rate.right) r.h_max = std::max(r.h_max, std::abs(v));
  for (double v : rate.left) r.h_max = std::max(r.h_max, std::abs(v));

  std::optional<std::size_t> hit;
  for (std::size_t i = 1; i <= n; ++i) {
    if (mean.values[i] >= level) {
      hit = i;
      break;
    }
  }

  if (hit) {
    const std::size_t i = *hit;
    const double m0 = mean.values[i - 1];
    const double m1 = mean.values[i];
    double theta = m1 > m0 ? (alpha - m0) / (m1 - m0) : 1.0;
    theta = std::clamp(theta, 0.0, 1.0);
    r.tau = theta >= 1.0 ? grid.t(i) : std::min(grid.horizon(), grid.t(i - 1) + theta * dt);
    r.crossing_index = i;
    if (r.tau >= grid.horizon() - case_tol) {
      r.case_tag = TerminalCase::boundary;
      r.tau = grid.horizon();
    } else {
      r.case_tag = TerminalCase::interior;
    }
  } else {
    r.tau = grid.horizon();
    const double band = case_tol * std::abs(rate.left[n]);
    r.case_tag = -r.alpha_gap <= band ? TerminalCase::boundary : TerminalCase::unreached;
  }

  r.site = site_at(grid, r.tau);
  r.h_at_tau = rate.at(r.site);
  r.h_at_tau_se = r.site.w == 0.0 ? rate.se_right[r.site.cell]
                                  : (1.0 - r.site.w) * rate.se_right[r.site.cell] +
                                        r.site.w * rate.se_left[r.site.cell + 1];
  if (r.case_tag != TerminalCase::unreached) {
    r.degenerate_h = std::abs(r.h_at_tau) < opt.degeneracy_ratio * r.h_max;
    jump_statistic(rate, r.site.cell, opt, r);
  }
  return r;
}

std::vector<double> path_costs(const PathEnsemble& ensemble, const ProblemSpec& spec, double tau) {
  const TimeGrid& grid = ensemble.grid();
  const auto controls = control_columns(ensemble.control());
  const Site end = site_at(grid, tau);
  std::vector<double> per_path(ensemble.paths());
  parallel_for(ensemble.paths(), ensemble.execution(), [&](std::size_t p) {
    const double running = integrate_to(grid, tau, [&](const Site& s) {
      return spec.running_cost(ensemble.state_at(p, s), controls[s.cell]);
    });
    per_path[p] = running + spec.terminal_cost(ensemble.state_at(p, end));
  });
  return per_path;
}

Estimate expected_cost(const PathEnsemble& ensemble, const ProblemSpec& spec, double tau) {
  Estimate e = sample_mean(path_costs(ensemble, spec, tau));
  if (ensemble.deterministic()) e.se = 0.0;
  return e;
}

namespace {

Evaluation finish(PathEnsemble ensemble, const ProblemSpec& spec, const HittingOptions& hitting) {
  MeanCurve mean = mean_phi(ensemble, spec);
  RateCurve rate = h_curve(ensemble, spec);
  TerminalTimeResult terminal = hitting_time(mean, rate, spec, hitting);
  const Estimate cost = expected_cost(ensemble, spec, terminal.tau);
  return Evaluation{std::move(ensemble), std::move(mean), std::move(rate), terminal, cost};
}

}  // namespace

Evaluation evaluate(const ProblemSpec& spec, const ControlPath& control, const SimulationOptions& options,
                    const HittingOptions& hitting) {
  return finish(simulate(spec, control, options), spec, hitting);
}

Evaluation evaluate_crn(const PathEnsemble& base, const ProblemSpec& spec, const ControlPath& control,
                        const HittingOptions& hitting) {
  return finish(resimulate_with_control(base, spec, control), spec, hitting);
}

}  // namespace vtc
