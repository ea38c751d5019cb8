#pragma once

#include <string>
#include <vector>

#include "vtc/adjoint.hpp"
#include "vtc/forward.hpp"
#include "vtc/variation.hpp"

namespace vtc {

struct SmpOptions {
  /// Lattice points per control coordinate (>= 2, box corners included).
  std::size_t probes = 11;
  /// Certification tolerance; stochastic runs add se_factor * max probe se.
  double tol = 1e-6;
  double se_factor = 3.0;
  HittingOptions hitting;
  AdjointOptions adjoint;
};

enum class Verdict { certified, refuted, degenerate };

std::string verdict_label(Verdict v);

struct ProbeRow {
  double t = 0.0;
  std::size_t node = 0;
  Vec u;
  double lhs = 0.0;
  double se = 0.0;
};

/// One form of the inequality: with the penalty terms (kappa from tau) or
/// without them (kappa = 0).
struct BranchReport {
  bool with_penalty = true;
  double kappa = 0.0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  std::size_t worst = 0;
  bool satisfied = false;
  std::vector<ProbeRow> probes;
};

struct SmpReport {
  TerminalTimeResult terminal;
  Estimate cost;
  PenaltyTerms penalty;
  Verdict verdict = Verdict::refuted;
  std::string diagnosis;
  /// Branch used for the verdict (the satisfied one in case II when there is one).
  std::size_t chosen_branch = 0;
  std::vector<BranchReport> branches;

  const BranchReport& chosen() const { return branches.at(chosen_branch); }
  double max_violation() const { return branches.empty() ? 0.0 : chosen().max_violation; }
};

/// Pointwise check at every grid node t_i < tau and every lattice probe u:
///   LHS = E[H_u + kappa g_u]^T (u - u_bar(t_i)) <= 0,
/// the single-cell direction u - u_bar started at t_i, where y(t_i) = 0 so
/// hbar reduces to E[g_u](u - u_bar). Case II evaluates both branches.
SmpReport verify(const ProblemSpec& spec, const Evaluation& base, const SmpOptions& options = {});

SmpReport verify(const ProblemSpec& spec, const ControlPath& candidate, const SimulationOptions& simulation,
                 const SmpOptions& options = {});

/// int_0^tau E[H_u^T v] dt + kappa int_0^tau hbar(v, t) dt, which equals
/// minus the cost derivative along v.
Estimate integrated_lhs(const ProblemSpec& spec, const Evaluation& base, const AdjointPath& adjoint,
                        const VariationalEnsemble& y, double kappa);

/// Uniform lattice over the control box, probes points per coordinate.
std::vector<Vec> probe_lattice(const ControlBox& box, std::size_t probes);

}  // namespace vtc
