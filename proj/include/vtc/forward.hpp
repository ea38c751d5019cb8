#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vtc/parallel.hpp"
#include "vtc/problem.hpp"
#include "vtc/stats.hpp"

namespace vtc {

/// Time stepping. rk4 is the refinement flag for deterministic mode.
enum class Scheme { euler, rk4 };

struct SimulationOptions {
  std::size_t paths = 1;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::euler;
  bool retain_increments = true;
  /// Draw Brownian increments even when sigma = 0 (enables M > 1 and the
  /// regression adjoint on diffusion-free problems).
  bool force_monte_carlo = false;
  Execution execution = Execution::parallel;
};

/// Evaluation point inside a cell: state (1 - w) X_cell + w X_{cell+1} with
/// the control of the cell. w = 0 is the left node, w = 1 the left limit at
/// the right node.
struct Site {
  std::size_t cell = 0;
  double w = 0.0;
};

/// Site of `time` under the left-limit convention of `locate`.
Site site_at(const TimeGrid& grid, double time);

/// Trapezoid rule over [0, tau] with the cell control held at both ends of
/// every cell and a fractional last cell ending at tau. f maps a Site to the
/// integrand.
template <class F>
double integrate_to(const TimeGrid& grid, double tau, F&& f) {
  if (!(tau > 0.0)) return 0.0;
  const CellLocation loc = locate(grid, tau);
  const double dt = grid.dt();
  double acc = 0.0;
  for (std::size_t k = 0; k < loc.cell; ++k) acc += 0.5 * dt * (f(Site{k, 0.0}) + f(Site{k, 1.0}));
  acc += 0.5 * loc.offset * (f(Site{loc.cell, 0.0}) + f(Site{loc.cell, loc.frac}));
  return acc;
}

/// Monte Carlo trajectories X[p][i] with the Brownian increments that drove
/// them. Immutable once built.
class PathEnsemble {
 public:
  PathEnsemble(const ProblemSpec& spec, ControlPath control, SimulationOptions options, bool deterministic,
               std::vector<double> states, std::vector<double> increments);

  const TimeGrid& grid() const noexcept { return control_.grid(); }
  const ControlPath& control() const noexcept { return control_; }
  const SimulationOptions& options() const noexcept { return options_; }
  std::size_t paths() const noexcept { return options_.paths; }
  std::uint64_t seed() const noexcept { return options_.seed; }
  Scheme scheme() const noexcept { return options_.scheme; }
  Execution execution() const noexcept { return options_.execution; }
  int state_dim() const noexcept { return m_; }
  int noise_dim() const noexcept { return d_; }
  /// sigma = 0 and no increments were drawn; M = 1.
  bool deterministic() const noexcept { return deterministic_; }
  /// Increments are available (always true in deterministic mode, where they are zero).
  bool has_increments() const noexcept { return deterministic_ || !increments_.empty(); }

  Vec state(std::size_t p, std::size_t i) const;
  Vec state_at(std::size_t p, const Site& s) const;
  /// Brownian increment of cell i on path p (zero in deterministic mode).
  Vec increment(std::size_t p, std::size_t i) const;

  const std::vector<double>& raw_states() const noexcept { return states_; }
  const std::vector<double>& raw_increments() const noexcept { return increments_; }

 private:
  ControlPath control_;
  SimulationOptions options_;
  bool deterministic_;
  int m_;
  int d_;
  std::vector<double> states_;      // [p][i][a]
  std::vector<double> increments_;  // [p][i][j]
};

/// Euler-Maruyama X_{i+1} = X_i + b dt + sigma dW_i; with sigma = 0 the
/// explicit Euler (or RK4) recursion and M = 1. Path p draws its increments
/// from a stream seeded by (seed, p), so results do not depend on the
/// worker count. Throws SimulationError naming the first non-finite (p, i).
PathEnsemble simulate(const ProblemSpec& spec, const ControlPath& control, const SimulationOptions& options);

/// Straight serial implementation of `simulate`, kept as a reference for
/// tests and benchmarks. Produces bit-identical ensembles.
PathEnsemble simulate_reference(const ProblemSpec& spec, const ControlPath& control,
                                const SimulationOptions& options);

/// Recomputes the states of `base` under `control` with the same increments.
PathEnsemble resimulate_with_control(const PathEnsemble& base, const ProblemSpec& spec, const ControlPath& control);

/// m_i = E[Phi(X(t_i))] with standard errors; m_0 = Phi(x0).
struct MeanCurve {
  TimeGrid grid;
  std::vector<double> values;
  std::vector<double> se;
};

MeanCurve mean_phi(const PathEnsemble& ensemble, const ProblemSpec& spec);

/// h(t) = E[g(X(t), u(t))] at the nodes. `right[i]` uses the control of cell
/// i and `left[i]` the control of cell i - 1 (they coincide at the end nodes
/// for a constant control).
struct RateCurve {
  TimeGrid grid;
  std::vector<double> right;
  std::vector<double> left;
  std::vector<double> se_right;
  std::vector<double> se_left;

  /// Value at a site by linear interpolation inside its cell.
  double at(const Site& s) const;
};

RateCurve h_curve(const PathEnsemble& ensemble, const ProblemSpec& spec);

/// max_i |m_i - Phi(x0) - trapezoid(h, 0..t_i)|.
double mean_rate_crosscheck(const MeanCurve& mean, const RateCurve& rate, const ProblemSpec& spec);

enum class TerminalCase {
  interior,   ///< I: tau < T
  boundary,   ///< II: crossing at T (within tolerance)
  unreached,  ///< III: no crossing, tau = T
};

/// "I", "II" or "III".
std::string case_label(TerminalCase c);

struct HittingOptions {
  /// Case II band in time units; a negative value means 2 dt.
  double case_tol = -1.0;
  /// m_i >= alpha - level_tol * max(1, |alpha|) counts as a crossing.
  double level_tol = 1e-10;
  /// |h(tau)| < degeneracy_ratio * max |h| flags degenerate_h.
  double degeneracy_ratio = 1e-3;
  /// Jump statistic window in cells and its thresholds.
  std::size_t jump_window = 5;
  double jump_se_factor = 5.0;
  double jump_variation_factor = 10.0;
};

struct TerminalTimeResult {
  double tau = 0.0;
  TerminalCase case_tag = TerminalCase::unreached;
  std::optional<std::size_t> crossing_index;
  double h_at_tau = 0.0;
  double h_at_tau_se = 0.0;
  double h_max = 0.0;
  bool degenerate_h = false;
  bool h_discontinuous = false;
  double jump = 0.0;
  double jump_threshold = 0.0;
  /// m(T) - alpha.
  double alpha_gap = 0.0;
  Site site;

  /// h(tau) is numerically zero or h jumps at tau.
  bool flagged() const noexcept { return degenerate_h || h_discontinuous; }
};

/// First crossing of the mean curve through alpha, linear interpolation in
/// the bracketing cell, case classification and the h diagnostics.
TerminalTimeResult hitting_time(const MeanCurve& mean, const RateCurve& rate, const ProblemSpec& spec,
                                const HittingOptions& options = {});

/// Per-path cost int_0^tau f dt + Psi(X(tau)).
std::vector<double> path_costs(const PathEnsemble& ensemble, const ProblemSpec& spec, double tau);

/// J = E[int_0^tau f dt + Psi(X(tau))] with per-path standard error.
Estimate expected_cost(const PathEnsemble& ensemble, const ProblemSpec& spec, double tau);

/// Everything the forward pass knows about one control.
struct Evaluation {
  PathEnsemble ensemble;
  MeanCurve mean;
  RateCurve rate;
  TerminalTimeResult terminal;
  Estimate cost;
};

Evaluation evaluate(const ProblemSpec& spec, const ControlPath& control, const SimulationOptions& options,
                    const HittingOptions& hitting = {});

/// `evaluate` under `control` with the increments of `base` (common random numbers).
Evaluation evaluate_crn(const PathEnsemble& base, const ProblemSpec& spec, const ControlPath& control,
                        const HittingOptions& hitting = {});

}  // namespace vtc
