#pragma once

#include <optional>
#include <vector>

#include "vtc/forward.hpp"
#include "vtc/variation.hpp"

namespace vtc {

enum class AdjointMode { deterministic, regression };

/// Backward solution (p, q) on the time points t_0, ..., t_K, tau, where K is
/// the cell holding tau. Deterministic mode keeps one path and q = 0;
/// regression mode keeps per-path fitted values and the coefficient tables.
class AdjointPath {
 public:
  struct Fit {
    Eigen::VectorXd center;  // standardisation of the state
    Eigen::VectorXd scale;
    Eigen::MatrixXd p_coef;  // basis x m
    Eigen::MatrixXd q_coef;  // basis x (m d), column a * d + j holds q^j_a
  };

  AdjointPath(AdjointMode mode, TimeGrid grid, double tau, std::size_t paths, int m, int d);

  AdjointMode mode() const noexcept { return mode_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  double tau() const noexcept { return tau_; }
  std::size_t paths() const noexcept { return paths_; }
  int state_dim() const noexcept { return m_; }
  int noise_dim() const noexcept { return d_; }
  /// Number of time points (K + 2): the nodes up to t_K plus tau.
  std::size_t points() const noexcept { return points_; }
  double time(std::size_t j) const;
  std::size_t tau_cell() const noexcept { return tau_cell_; }

  Vec p(std::size_t path, std::size_t j) const;
  /// Columns are q^1, ..., q^d.
  Mat q(std::size_t path, std::size_t j) const;
  /// Value at an integration site inside [0, tau].
  Vec p_at(std::size_t path, const Site& s) const;
  Mat q_at(std::size_t path, const Site& s) const;

  void set_p(std::size_t path, std::size_t j, const Vec& v);
  void set_q(std::size_t path, std::size_t j, const Mat& v);

  /// Regression tables per time point (empty in deterministic mode).
  std::vector<Fit>& fits() noexcept { return fits_; }
  const std::vector<Fit>& fits() const noexcept { return fits_; }

 private:
  std::size_t index(const Site& s) const;

  AdjointMode mode_;
  TimeGrid grid_;
  double tau_;
  std::size_t tau_cell_;
  std::size_t paths_;
  int m_;
  int d_;
  std::size_t points_;
  std::vector<double> p_;  // [path][j][a]
  std::vector<double> q_;  // [path][j][a * d + l]
  std::vector<Fit> fits_;
};

struct AdjointOptions {
  /// Defaults to deterministic for deterministic ensembles, regression otherwise.
  std::optional<AdjointMode> mode;
};

/// -dp = [b_x^T p + sum_j sigma_x^j^T q^j - f_x] dt - q dW, p(tau) = -Psi_x(X(tau)).
/// Deterministic mode: backward Euler (backward RK4 on an rk4 ensemble).
/// Regression mode: least-squares backward induction on a degree-2
/// polynomial basis. Throws IllConditioned when M < 10 * basis size and
/// DegenerateInterval when tau = 0.
AdjointPath solve_adjoint(const ProblemSpec& spec, const PathEnsemble& base, const TerminalTimeResult& terminal,
                          const AdjointOptions& options = {});

/// Same machinery with source g_x and p0(tau) = 0.
AdjointPath solve_rate_adjoint(const ProblemSpec& spec, const PathEnsemble& base,
                                   const TerminalTimeResult& terminal, const AdjointOptions& options = {});

/// H = b^T p + sum_j sigma^j^T q^j - f.
double hamiltonian(const ProblemSpec& spec, const Vec& x, const Vec& u, const Vec& p, const Mat& q);
/// H_u = b_u^T p + sum_j sigma_u^j^T q^j - f_u.
Vec hamiltonian_u(const ProblemSpec& spec, const Vec& x, const Vec& u, const Vec& p, const Mat& q);
/// b_u^T p0 + sum_j sigma_u^j^T q0^j - g_u.
Vec rate_hamiltonian_u(const ProblemSpec& spec, const Vec& x, const Vec& u, const Vec& p0, const Mat& q0);

struct DualityResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double defect = 0.0;
  double se = 0.0;
};

/// LHS = E[-Psi_x(X(tau))^T y(tau)], RHS = int_0^tau E[p^T b_u v + sum_j q^j^T sigma_u^j v + f_x^T y] dt.
DualityResult duality_check(const ProblemSpec& spec, const PathEnsemble& base, const VariationalEnsemble& y,
                            const AdjointPath& adjoint);

/// LHS = int_0^tau E[g_x^T y + g_u^T v] dt, RHS = int_0^tau E[-Hcal_u v] dt.
DualityResult rate_duality_check(const ProblemSpec& spec, const PathEnsemble& base, const VariationalEnsemble& y,
                              const AdjointPath& rate_adjoint);

}  // namespace vtc
