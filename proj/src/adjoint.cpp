#include "vtc/adjoint.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "vtc/errors.hpp"

namespace vtc {

AdjointPath::AdjointPath(AdjointMode mode, TimeGrid grid, double tau, std::size_t paths, int m, int d)
    : mode_(mode), grid_(grid), tau_(tau), tau_cell_(locate(grid, tau).cell), paths_(paths), m_(m), d_(d) {
  points_ = tau_cell_ + 2;
  p_.assign(paths_ * points_ * static_cast<std::size_t>(m_), 0.0);
  q_.assign(paths_ * points_ * static_cast<std::size_t>(m_ * d_), 0.0);
}

double AdjointPath::time(std::size_t j) const { return j <= tau_cell_ ? grid_.t(j) : tau_; }

Vec AdjointPath::p(std::size_t path, std::size_t j) const {
  const std::size_t base = (path * points_ + j) * static_cast<std::size_t>(m_);
  Vec out(m_);
  for (int a = 0; a < m_; ++a) out[a] = p_[base + static_cast<std::size_t>(a)];
  return out;
}

Mat AdjointPath::q(std::size_t path, std::size_t j) const {
  const std::size_t base = (path * points_ + j) * static_cast<std::size_t>(m_ * d_);
  Mat out(m_, d_);
  for (int a = 0; a < m_; ++a) {
    for (int l = 0; l < d_; ++l) out(a, l) = q_[base + static_cast<std::size_t>(a * d_ + l)];
  }
  return out;
}

void AdjointPath::set_p(std::size_t path, std::size_t j, const Vec& v) {
  const std::size_t base = (path * points_ + j) * static_cast<std::size_t>(m_);
  for (int a = 0; a < m_; ++a) p_[base + static_cast<std::size_t>(a)] = v[a];
}

void AdjointPath::set_q(std::size_t path, std::size_t j, const Mat& v) {
  const std::size_t base = (path * points_ + j) * static_cast<std::size_t>(m_ * d_);
  for (int a = 0; a < m_; ++a) {
    for (int l = 0; l < d_; ++l) q_[base + static_cast<std::size_t>(a * d_ + l)] = v(a, l);
  }
}

namespace {

// Bracketing time points of a site and the weight of the later one.
struct Bracket {
  std::size_t a;
  std::size_t b;
  double lam;
};

Bracket bracket(const AdjointPath& adj, const Site& s) {
  const std::size_t k = adj.tau_cell();
  if (s.cell > k) throw ContractError("adjoint evaluated beyond tau");
  if (s.cell < k) return {s.cell, s.cell + 1, s.w};
  const double frac = locate(adj.grid(), adj.tau()).frac;
  const double lam = frac > 0.0 ? std::min(1.0, s.w / frac) : 0.0;
  return {k, k + 1, lam};
}

}  // namespace

Vec AdjointPath::p_at(std::size_t path, const Site& s) const {
  const Bracket br = bracket(*this, s);
  if (br.lam == 0.0) return p(path, br.a);
  if (br.lam == 1.0) return p(path, br.b);
  return (1.0 - br.lam) * p(path, br.a) + br.lam * p(path, br.b);
}

Mat AdjointPath::q_at(std::size_t path, const Site& s) const {
  const Bracket br = bracket(*this, s);
  if (br.lam == 0.0) return q(path, br.a);
  if (br.lam == 1.0) return q(path, br.b);
  return (1.0 - br.lam) * q(path, br.a) + br.lam * q(path, br.b);
}

namespace {

using Source = std::function<Vec(const Vec&, const Vec&)>;
using TerminalValue = std::function<Vec(const Vec&)>;

// Cubic Hermite state inside cell k at fraction theta (deterministic path).
Vec hermite_state(const ProblemSpec& spec, const PathEnsemble& ens, std::size_t k, double theta) {
  const double dt = ens.grid().dt();
  const Vec u = ens.control().at(k);
  const Vec x0 = ens.state(0, k);
  const Vec x1 = ens.state(0, k + 1);
  if (theta == 0.0) return x0;
  if (theta == 1.0) return x1;
  const Vec d0 = spec.drift(x0, u);
  const Vec d1 = spec.drift(x1, u);
  const double t2 = theta * theta;
  const double t3 = t2 * theta;
  return (2 * t3 - 3 * t2 + 1) * x0 + (t3 - 2 * t2 + theta) * dt * d0 + (-2 * t3 + 3 * t2) * x1 +
         (t3 - t2) * dt * d1;
}

void solve_deterministic(const ProblemSpec& spec, const PathEnsemble& ens, const Source& source,
                         const TerminalValue& terminal, AdjointPath& adj) {
  const TimeGrid& grid = ens.grid();
  const double dt = grid.dt();
  const std::size_t k_tau = adj.tau_cell();
  const CellLocation loc = locate(grid, adj.tau());
  Vec p = terminal(ens.state_at(0, Site{loc.cell, loc.frac}));
  adj.set_p(0, k_tau + 1, p);

  for (std::size_t jj = k_tau + 1; jj-- > 0;) {
    const double h = jj == k_tau ? loc.offset : dt;
    const Vec u = ens.control().at(jj);
    if (ens.scheme() == Scheme::rk4) {
      auto rhs = [&](double theta, const Vec& pv) -> Vec {
        const Vec x = hermite_state(spec, ens, jj, theta);
        return -(spec.drift_x(x, u).transpose() * pv) + source(x, u);
      };
      const double tb = h / dt;
      const double tm = 0.5 * h / dt;
      const Vec k1 = rhs(tb, p);
      const Vec k2 = rhs(tm, p - (0.5 * h) * k1);
      const Vec k3 = rhs(tm, p - (0.5 * h) * k2);
      const Vec k4 = rhs(0.0, p - h * k3);
      p = p - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } else {
      const Vec x = ens.state(0, jj);
      p = p + h * (spec.drift_x(x, u).transpose() * p - source(x, u));
    }
    adj.set_p(0, jj, p);
  }
}

int basis_size(int m) { return 1 + m + m * (m + 1) / 2; }

void fill_basis(const Eigen::VectorXd& center, const Eigen::VectorXd& scale, const Vec& x, double* out) {
  const int m = static_cast<int>(x.size());
  Vec z(m);
  for (int a = 0; a < m; ++a) z[a] = (x[a] - center[a]) / scale[a];
  int c = 0;
  out[c++] = 1.0;
  for (int a = 0; a < m; ++a) out[c++] = z[a];
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) out[c++] = z[a] * z[b];
  }
}

// Least squares on the normal equations, accumulated in fixed chunks so the
// sums do not depend on the worker count.
Eigen::MatrixXd regress(const std::vector<double>& basis, const std::vector<double>& targets, std::size_t paths,
                        int nb, int nt, Execution ex) {
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (paths + kChunk - 1) / kChunk;
  std::vector<Eigen::MatrixXd> gram(chunks), cross(chunks);
  parallel_for(chunks, ex, [&](std::size_t c) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nb, nb);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nb, nt);
    const std::size_t end = std::min(paths, (c + 1) * kChunk);
    for (std::size_t p = c * kChunk; p < end; ++p) {
      const double* phi = &basis[p * static_cast<std::size_t>(nb)];
      const double* y = &targets[p * static_cast<std::size_t>(nt)];
      for (int r = 0; r < nb; ++r) {
        for (int s = 0; s < nb; ++s) a(r, s) += phi[r] * phi[s];
        for (int t = 0; t < nt; ++t) b(r, t) += phi[r] * y[t];
      }
    }
    gram[c] = std::move(a);
    cross[c] = std::move(b);
  });
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nb, nt);
  for (std::size_t c = 0; c < chunks; ++c) {
    a += gram[c];
    b += cross[c];
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  return cod.solve(b);
}

void solve_regression(const ProblemSpec& spec, const PathEnsemble& ens, const Source& source,
                      const TerminalValue& terminal, AdjointPath& adj) {
  const TimeGrid& grid = ens.grid();
  const std::size_t paths = ens.paths();
  const int m = spec.state_dim();
  const int d = spec.noise_dim();
  const int nb = basis_size(m);
  if (paths < static_cast<std::size_t>(10 * nb)) {
    std::ostringstream os;
    os << "regression adjoint needs at least " << 10 * nb << " paths for a basis of size " << nb << ", got "
       << paths;
    throw IllConditioned(os.str());
  }
  if (!ens.has_increments()) throw ContractError("regression adjoint needs retained Brownian increments");
  const bool noise = !spec.diffusion_free();
  const std::size_t k_tau = adj.tau_cell();
  const CellLocation loc = locate(grid, adj.tau());
  const Site end{loc.cell, loc.frac};
  const Execution ex = ens.execution();
  adj.fits().assign(adj.points(), AdjointPath::Fit{});

  std::vector<Vec> p_next(paths);
  parallel_for(paths, ex, [&](std::size_t p) {
    p_next[p] = terminal(ens.state_at(p, end));
    adj.set_p(p, k_tau + 1, p_next[p]);
  });

  std::vector<double> basis(paths * static_cast<std::size_t>(nb));
  const int nq = m * d;
  std::vector<double> q_target(paths * static_cast<std::size_t>(nq));
  std::vector<double> p_target(paths * static_cast<std::size_t>(m));
  std::vector<Mat> q_now(paths);

  for (std::size_t jj = k_tau + 1; jj-- > 0;) {
    const double h = jj == k_tau ? loc.offset : grid.dt();
    const double dw_scale = jj == k_tau ? loc.frac : 1.0;
    const Vec u = ens.control().at(jj);

    AdjointPath::Fit fit;
    fit.center = Eigen::VectorXd::Zero(m);
    fit.scale = Eigen::VectorXd::Ones(m);
    for (std::size_t p = 0; p < paths; ++p) fit.center += Eigen::VectorXd(ens.state(p, jj));
    fit.center /= static_cast<double>(paths);
    Eigen::VectorXd var = Eigen::VectorXd::Zero(m);
    for (std::size_t p = 0; p < paths; ++p) {
      const Eigen::VectorXd dev = Eigen::VectorXd(ens.state(p, jj)) - fit.center;
      var += dev.cwiseProduct(dev);
    }
    for (int a = 0; a < m; ++a) {
      const double sd = std::sqrt(var[a] / static_cast<double>(paths));
      if (sd > 1e-12 * std::max(1.0, std::abs(fit.center[a]))) fit.scale[a] = sd;
    }

    parallel_for(paths, ex, [&](std::size_t p) {
      fill_basis(fit.center, fit.scale, ens.state(p, jj), &basis[p * static_cast<std::size_t>(nb)]);
      if (noise) {
        const Vec dw = ens.increment(p, jj) * dw_scale;
        for (int a = 0; a < m; ++a) {
          for (int l = 0; l < d; ++l) q_target[p * static_cast<std::size_t>(nq) + a * d + l] = p_next[p][a] * dw[l] / h;
        }
      }
    });

    if (noise) {
      fit.q_coef = regress(basis, q_target, paths, nb, nq, ex);
    } else {
      fit.q_coef = Eigen::MatrixXd::Zero(nb, nq);
    }

    parallel_for(paths, ex, [&](std::size_t p) {
      const Eigen::Map<const Eigen::RowVectorXd> phi(&basis[p * static_cast<std::size_t>(nb)], nb);
      const Eigen::RowVectorXd qf = phi * fit.q_coef;
      Mat q(m, d);
      for (int a = 0; a < m; ++a) {
        for (int l = 0; l < d; ++l) q(a, l) = qf[a * d + l];
      }
      q_now[p] = q;
      const Vec x = ens.state(p, jj);
      Vec drive = spec.drift_x(x, u).transpose() * p_next[p] - source(x, u);
      if (noise) {
        for (int l = 0; l < d; ++l) drive += spec.diffusion_x(x, u, l).transpose() * q.col(l);
      }
      const Vec target = p_next[p] + h * drive;
      for (int a = 0; a < m; ++a) p_target[p * static_cast<std::size_t>(m) + a] = target[a];
    });

    fit.p_coef = regress(basis, p_target, paths, nb, m, ex);

    parallel_for(paths, ex, [&](std::size_t p) {
      const Eigen::Map<const Eigen::RowVectorXd> phi(&basis[p * static_cast<std::size_t>(nb)], nb);
      const Eigen::RowVectorXd pf = phi * fit.p_coef;
      Vec pv(m);
      for (int a = 0; a < m; ++a) pv[a] = pf[a];
      p_next[p] = pv;
      adj.set_p(p, jj, pv);
      adj.set_q(p, jj, q_now[p]);
      if (jj == k_tau) adj.set_q(p, k_tau + 1, q_now[p]);
    });
    adj.fits()[jj] = std::move(fit);
  }
  adj.fits()[k_tau + 1] = adj.fits()[k_tau];
}

AdjointPath solve_backward(const ProblemSpec& spec, const PathEnsemble& base, const TerminalTimeResult& terminal,
                           const AdjointOptions& options, const Source& source, const TerminalValue& end_value) {
  if (!(terminal.tau > 0.0)) throw DegenerateInterval("adjoint requested on an empty interval (tau = 0)");
  const AdjointMode mode =
      options.mode.value_or(base.deterministic() ? AdjointMode::deterministic : AdjointMode::regression);
  if (mode == AdjointMode::deterministic) {
    if (!base.deterministic()) throw ContractError("deterministic adjoint needs sigma = 0 and a single path");
    AdjointPath adj(mode, base.grid(), terminal.tau, 1, spec.state_dim(), spec.noise_dim());
    solve_deterministic(spec, base, source, end_value, adj);
    return adj;
  }
  AdjointPath adj(mode, base.grid(), terminal.tau, base.paths(), spec.state_dim(), spec.noise_dim());
  solve_regression(spec, base, source, end_value, adj);
  return adj;
}

}  // namespace

AdjointPath solve_adjoint(const ProblemSpec& spec, const PathEnsemble& base, const TerminalTimeResult& terminal,
                          const AdjointOptions& options) {
  return solve_backward(
      spec, base, terminal, options, [&](const Vec& x, const Vec& u) { return spec.running_cost_x(x, u); },
      [&](const Vec& x) -> Vec { return -spec.terminal_cost_x(x); });
}

AdjointPath solve_rate_adjoint(const ProblemSpec& spec, const PathEnsemble& base,
                                   const TerminalTimeResult& terminal, const AdjointOptions& options) {
  const int m = spec.state_dim();
  return solve_backward(
      spec, base, terminal, options, [&](const Vec& x, const Vec& u) { return spec.constraint_rate_x(x, u); },
      [m](const Vec&) -> Vec { return Vec::Zero(m); });
}

double hamiltonian(const ProblemSpec& spec, const Vec& x, const Vec& u, const Vec& p, const Mat& q) {
  double h = spec.drift(x, u).dot(p) - spec.running_cost(x, u);
  const Mat s = spec.diffusion(x, u);
  for (int j = 0; j < spec.noise_dim(); ++j) h += s.col(j).dot(q.col(j));
  return h;
}

Vec hamiltonian_u(const ProblemSpec& spec, const Vec& x, const Vec& u, const Vec& p, const Mat& q) {
  Vec hu = spec.drift_u(x, u).transpose() * p - spec.running_cost_u(x, u);
  if (!spec.diffusion_free()) {
    for (int j = 0; j < spec.noise_dim(); ++j) hu += spec.diffusion_u(x, u, j).transpose() * q.col(j);
  }
  return hu;
}

Vec rate_hamiltonian_u(const ProblemSpec& spec, const Vec& x, const Vec& u, const Vec& p0, const Mat& q0) {
  Vec hu = spec.drift_u(x, u).transpose() * p0 - spec.constraint_rate_u(x, u);
  if (!spec.diffusion_free()) {
    for (int j = 0; j < spec.noise_dim(); ++j) hu += spec.diffusion_u(x, u, j).transpose() * q0.col(j);
  }
  return hu;
}

namespace {

void check_alignment(const PathEnsemble& base, const VariationalEnsemble& y, const AdjointPath& adj) {
  if (!(y.grid() == base.grid()) || !(adj.grid() == base.grid())) {
    throw GridMismatch("duality check inputs live on different grids");
  }
  if (adj.paths() != 1 && adj.paths() != base.paths()) {
    throw ContractError("adjoint path count does not match the ensemble");
  }
}

DualityResult finish(const std::vector<double>& lhs, const std::vector<double>& rhs, bool deterministic) {
  std::vector<double> diff(lhs.size());
  for (std::size_t p = 0; p < lhs.size(); ++p) diff[p] = lhs[p] - rhs[p];
  DualityResult r;
  r.lhs = sample_mean(lhs).value;
  r.rhs = sample_mean(rhs).value;
  r.defect = std::abs(r.lhs - r.rhs);
  r.se = deterministic ? 0.0 : sample_mean(diff).se;
  return r;
}

}  // namespace

DualityResult duality_check(const ProblemSpec& spec, const PathEnsemble& base, const VariationalEnsemble& y,
                            const AdjointPath& adj) {
  check_alignment(base, y, adj);
  const TimeGrid& grid = base.grid();
  const double tau = adj.tau();
  const Site end = site_at(grid, tau);
  const Direction& v = y.direction();
  const std::size_t paths = base.paths();
  std::vector<double> lhs(paths), rhs(paths);
  parallel_for(paths, base.execution(), [&](std::size_t p) {
    const std::size_t ap = adj.paths() == 1 ? 0 : p;
    lhs[p] = -spec.terminal_cost_x(base.state_at(p, end)).dot(y.y_at(p, end));
    rhs[p] = integrate_to(grid, tau, [&](const Site& s) {
      const Vec x = base.state_at(p, s);
      const Vec u = base.control().at(s.cell);
      const Vec vv = v.at(s.cell);
      const Vec pv = adj.p_at(ap, s);
      double acc = pv.dot(spec.drift_u(x, u) * vv) + spec.running_cost_x(x, u).dot(y.y_at(p, s));
      if (!spec.diffusion_free()) {
        const Mat qv = adj.q_at(ap, s);
        for (int j = 0; j < spec.noise_dim(); ++j) acc += qv.col(j).dot(spec.diffusion_u(x, u, j) * vv);
      }
      return acc;
    });
  });
  return finish(lhs, rhs, base.deterministic());
}

DualityResult rate_duality_check(const ProblemSpec& spec, const PathEnsemble& base, const VariationalEnsemble& y,
                              const AdjointPath& rate_adjoint) {
  check_alignment(base, y, rate_adjoint);
  const TimeGrid& grid = base.grid();
  const double tau = rate_adjoint.tau();
  const Direction& v = y.direction();
  const std::size_t paths = base.paths();
  std::vector<double> lhs = hbar_path_integrals(spec, base, y, tau);
  std::vector<double> rhs(paths);
  parallel_for(paths, base.execution(), [&](std::size_t p) {
    const std::size_t ap = rate_adjoint.paths() == 1 ? 0 : p;
    rhs[p] = integrate_to(grid, tau, [&](const Site& s) {
      const Vec x = base.state_at(p, s);
      const Vec u = base.control().at(s.cell);
      return -rate_hamiltonian_u(spec, x, u, rate_adjoint.p_at(ap, s), rate_adjoint.q_at(ap, s)).dot(v.at(s.cell));
    });
  });
  return finish(lhs, rhs, base.deterministic());
}

}  // namespace vtc
