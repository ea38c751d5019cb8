#pragma once

#include <vector>

#include "vtc/forward.hpp"

namespace vtc {

/// First-order variational process y[p][i], aligned path by path with a base
/// ensemble and driven by the same increments.
class VariationalEnsemble {
 public:
  VariationalEnsemble(TimeGrid grid, std::size_t paths, int state_dim, Direction direction, std::vector<double> y);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t paths() const noexcept { return paths_; }
  int state_dim() const noexcept { return m_; }
  const Direction& direction() const noexcept { return direction_; }

  Vec y(std::size_t p, std::size_t i) const;
  Vec y_at(std::size_t p, const Site& s) const;
  const std::vector<double>& raw() const noexcept { return y_; }

 private:
  TimeGrid grid_;
  std::size_t paths_;
  int m_;
  Direction direction_;
  std::vector<double> y_;  // [p][i][a]
};

/// dy = [b_x y + b_u v] dt + sum_j [sigma_x^j y + sigma_u^j v] dW^j, y(0) = 0,
/// with coefficients along the base paths. Euler steps; an rk4 base ensemble
/// gets the RK4 linearisation instead, so y is the exact derivative of the
/// discrete flow. Throws ContractError without retained increments.
VariationalEnsemble variational_paths(const ProblemSpec& spec, const PathEnsemble& base, const Direction& v);

struct TaylorRow {
  double rho = 0.0;
  double defect = 0.0;  ///< sup_i mean_p |(X^rho - X) / rho - y|
};

/// First-order expansion check of the state under common random numbers.
std::vector<TaylorRow> taylor_expansion_check(const ProblemSpec& spec, const ControlPath& control,
                                              const Direction& v, const std::vector<double>& rho_list,
                                              const SimulationOptions& options);

/// hbar(v, t) = E[g_x^T y + g_u^T v] at the nodes, with right/left controls
/// as in RateCurve.
struct HbarCurve {
  TimeGrid grid;
  std::vector<double> right;
  std::vector<double> left;
  std::vector<double> se_right;
  std::vector<double> se_left;

  double at(const Site& s) const;
};

HbarCurve hbar_curve(const ProblemSpec& spec, const PathEnsemble& base, const VariationalEnsemble& y);

/// Per-path trapezoid integral of g_x^T y + g_u^T v over [0, tau].
std::vector<double> hbar_path_integrals(const ProblemSpec& spec, const PathEnsemble& base,
                                        const VariationalEnsemble& y, double tau);
Estimate hbar_integral(const ProblemSpec& spec, const PathEnsemble& base, const VariationalEnsemble& y, double tau);

struct TauDerivativeResult {
  TerminalCase case_tag = TerminalCase::unreached;
  /// int_0^tau hbar / h(tau) (case I, first candidate of case II), 0 in case III.
  double value = 0.0;
  double se = 0.0;
  /// Case II: the limit is either `value` or 0.
  bool ambiguous = false;
  double alternative = 0.0;
  double hbar_integral = 0.0;
  double h_at_tau = 0.0;
};

/// Terminal-time derivative lim (tau - tau^rho) / rho. Throws DegenerateRate
/// when h(tau) is numerically zero and Discontinuity when h jumps at tau
/// (cases I and II).
TauDerivativeResult tau_derivative(const TerminalTimeResult& terminal, const Estimate& hbar_integral);

struct QuotientRow {
  double rho = 0.0;
  double tau = 0.0;
  TerminalCase case_tag = TerminalCase::unreached;
  double quotient = 0.0;
};

/// (tau - tau^rho) / rho for each signed rho, with tau^rho recomputed under
/// u + rho v and common random numbers.
std::vector<QuotientRow> tau_derivative_fd(const ProblemSpec& spec, const ControlPath& control, const Direction& v,
                                           const std::vector<double>& rho_list, const SimulationOptions& options,
                                           const HittingOptions& hitting = {});

/// Neville extrapolation to rho = 0 of the polynomial through (rho_i, value_i).
double extrapolate_to_zero(const std::vector<double>& rho, const std::vector<double>& values);

struct CostVariationResult {
  TerminalCase case_tag = TerminalCase::unreached;
  double total = 0.0;
  double penalty_psi = 0.0;
  double penalty_f = 0.0;
  double terminal = 0.0;
  double running = 0.0;
  double se = 0.0;
  /// Case II: the value without penalty terms is the other admissible branch.
  bool ambiguous = false;
  double total_without_penalty = 0.0;
  /// Quantities at tau.
  double psi_tilde = 0.0;
  double f_at_tau = 0.0;
  double h_at_tau = 0.0;
  double hbar_integral = 0.0;
  /// (psi_tilde + f_at_tau) / h(tau); zero when the penalties are absent.
  double kappa = 0.0;
};

/// Directional derivative of J along v assembled from the penalty, terminal
/// and running parts. Throws like `tau_derivative`.
CostVariationResult cost_directional_derivative(const ProblemSpec& spec, const Evaluation& base,
                                                const VariationalEnsemble& y);

/// Quantities at tau that weigh the penalty terms.
struct PenaltyTerms {
  double psi_tilde = 0.0;
  double f_at_tau = 0.0;
  double h_at_tau = 0.0;
  /// (psi_tilde + f_at_tau) / h(tau) in cases I and II, 0 in case III.
  double kappa = 0.0;
};

/// Throws like `tau_derivative` in cases I and II.
PenaltyTerms penalty_terms(const ProblemSpec& spec, const Evaluation& base);

struct CostQuotientRow {
  double rho = 0.0;
  double quotient = 0.0;  ///< (J(u + rho v) - J(u)) / rho
  double se = 0.0;        ///< from per-path differences
  double tau = 0.0;
  TerminalCase case_tag = TerminalCase::unreached;
};

/// Finite-difference quotients of J with tau recomputed per perturbation and
/// common random numbers.
std::vector<CostQuotientRow> cost_difference_quotients(const ProblemSpec& spec, const Evaluation& base,
                                                       const Direction& v, const std::vector<double>& rho_list,
                                                       const HittingOptions& hitting = {});

}  // namespace vtc
