#pragma once

#include <string>
#include <vector>

#include "vtc/forward.hpp"
#include "vtc/smp.hpp"

namespace vtc {

struct ArmijoOptions {
  double initial_step = 1.0;
  double shrink = 0.5;
  double fraction = 1e-4;
  double min_step = 1e-8;
};

struct OptimizerOptions {
  std::size_t max_iters = 50;
  ArmijoOptions armijo;
  SmpOptions smp;
  /// |c| <= tie_tol * max(1, max |c|) counts as a tie; the midpoint of the box is used.
  double tie_tol = 1e-12;
};

enum class Termination { smp_satisfied, step_floor, max_iters, degenerate_encountered };

std::string termination_label(Termination t);

struct IterateRecord {
  std::size_t iter = 0;
  double J = 0.0;
  double J_se = 0.0;
  double tau = 0.0;
  TerminalCase case_tag = TerminalCase::unreached;
  Verdict verdict = Verdict::refuted;
  double violation = 0.0;
  /// Step that produced this iterate (0 for the initial control).
  double step = 0.0;
};

struct OptimizerTrace {
  std::vector<IterateRecord> iterates;
  Termination termination = Termination::max_iters;
};

struct OptimizerResult {
  ControlPath control;
  OptimizerTrace trace;
  SmpReport final_report;
};

/// Per-cell linearisation c_i = E[H_u + kappa g_u] at t_i (the coefficient of
/// the pointwise inequality) and w_i, the length of cell i inside [0, tau].
/// The model slope along v is -sum_i w_i c_i^T v_i.
struct CellGradient {
  std::vector<Vec> coefficient;
  std::vector<double> weight;
};

CellGradient cell_gradient(const ProblemSpec& spec, const Evaluation& base, const PenaltyTerms& penalty,
                           const AdjointOptions& adjoint = {});

/// Conditional-gradient descent over the box with Armijo backtracking and
/// common random numbers for every iterate. Each iterate is verified first;
/// the loop stops on a certified or degenerate verdict.
OptimizerResult improve(const ProblemSpec& spec, const ControlPath& initial, const SimulationOptions& simulation,
                        const OptimizerOptions& options = {});

}  // namespace vtc
