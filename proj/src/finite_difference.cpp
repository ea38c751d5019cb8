#include "vtc/finite_difference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace vtc {

double fd_step(double x, int depth) {
  const double eps = std::numeric_limits<double>::epsilon();
  return std::pow(eps, 1.0 / (depth + 2.0)) * std::max(1.0, std::abs(x));
}

namespace {

double rel_for_depth(int depth) { return fd_step(0.0, depth); }

double step(double x, double rel) { return rel * std::max(1.0, std::abs(x)); }

using ScalarFn = std::function<double(const Vec&)>;
using VecFn = std::function<Vec(const Vec&)>;
using MatFn = std::function<Mat(const Vec&)>;

Mat fd_matrix_derivative(const MatFn& f, const Vec& x, int a, double rel) {
  const double h = step(x[a], rel);
  Vec xp = x, xm = x;
  xp[a] += h;
  xm[a] -= h;
  return (f(xp) - f(xm)) / (2.0 * h);
}

// Builds Phi_x, Phi_xx, Phi_xxx slots for a scalar field whose analytic
// derivatives may be partially present. All nested layers of a derivative
// share the step chosen for its total depth.
struct ScalarDerivatives {
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
  std::function<Mat(const Vec&, int)> third;
};

ScalarDerivatives complete_scalar(const ScalarFn& f, std::function<Vec(const Vec&)> grad,
                                  std::function<Mat(const Vec&)> hess,
                                  std::function<Mat(const Vec&, int)> third, FdFill fill, bool need_third) {
  if (fill == FdFill::all) {
    grad = nullptr;
    hess = nullptr;
    third = nullptr;
  }
  ScalarDerivatives out;
  const bool grad_analytic = static_cast<bool>(grad);
  const bool hess_analytic = static_cast<bool>(hess);

  if (grad_analytic) {
    out.grad = grad;
  } else {
    const double rel = rel_for_depth(1);
    out.grad = [f, rel](const Vec& x) { return fd_gradient(f, x, rel); };
  }

  if (hess_analytic) {
    out.hess = hess;
  } else if (grad_analytic) {
    const double rel = rel_for_depth(1);
    out.hess = [grad, rel](const Vec& x) { return fd_jacobian(grad, x, rel); };
  } else {
    const double rel = rel_for_depth(2);
    out.hess = [f, rel](const Vec& x) {
      VecFn g = [&f, rel](const Vec& y) { return fd_gradient(f, y, rel); };
      return fd_jacobian(g, x, rel);
    };
  }

  if (!need_third) return out;
  if (third) {
    out.third = third;
  } else if (hess_analytic) {
    const double rel = rel_for_depth(1);
    out.third = [hess, rel](const Vec& x, int a) { return fd_matrix_derivative(hess, x, a, rel); };
  } else if (grad_analytic) {
    const double rel = rel_for_depth(2);
    out.third = [grad, rel](const Vec& x, int a) {
      MatFn h = [&grad, rel](const Vec& y) { return fd_jacobian(grad, y, rel); };
      return fd_matrix_derivative(h, x, a, rel);
    };
  } else {
    const double rel = rel_for_depth(3);
    out.third = [f, rel](const Vec& x, int a) {
      MatFn h = [&f, rel](const Vec& y) {
        VecFn g = [&f, rel](const Vec& z) { return fd_gradient(f, z, rel); };
        return fd_jacobian(g, y, rel);
      };
      return fd_matrix_derivative(h, x, a, rel);
    };
  }
  return out;
}

}  // namespace

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double rel) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step(x[i], rel);
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double rel) {
  Mat jac;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step(x[i], rel);
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const Vec col = (f(xp) - f(xm)) / (2.0 * h);
    if (i == 0) jac.resize(col.size(), x.size());
    jac.col(i) = col;
  }
  return jac;
}

ProblemSpec finite_difference_derivatives(ProblemData data, FdFill fill) {
  auto& fn = data.fn;
  const bool all = fill == FdFill::all;
  const double rel = rel_for_depth(1);

  if (all || !fn.drift_x) {
    auto b = fn.drift;
    fn.drift_x = [b, rel](const Vec& x, const Vec& u) {
      return fd_jacobian([&](const Vec& y) { return b(y, u); }, x, rel);
    };
  }
  if (all || !fn.drift_u) {
    auto b = fn.drift;
    fn.drift_u = [b, rel](const Vec& x, const Vec& u) {
      return fd_jacobian([&](const Vec& w) { return b(x, w); }, u, rel);
    };
  }
  if (all || !fn.diffusion_x) {
    auto s = fn.diffusion;
    fn.diffusion_x = [s, rel](const Vec& x, const Vec& u, int j) {
      return fd_jacobian([&](const Vec& y) -> Vec { return s(y, u).col(j); }, x, rel);
    };
  }
  if (all || !fn.diffusion_u) {
    auto s = fn.diffusion;
    fn.diffusion_u = [s, rel](const Vec& x, const Vec& u, int j) {
      return fd_jacobian([&](const Vec& w) -> Vec { return s(x, w).col(j); }, u, rel);
    };
  }
  if (all || !fn.running_cost_x) {
    auto f = fn.running_cost;
    fn.running_cost_x = [f, rel](const Vec& x, const Vec& u) {
      return fd_gradient([&](const Vec& y) { return f(y, u); }, x, rel);
    };
  }
  if (all || !fn.running_cost_u) {
    auto f = fn.running_cost;
    fn.running_cost_u = [f, rel](const Vec& x, const Vec& u) {
      return fd_gradient([&](const Vec& w) { return f(x, w); }, u, rel);
    };
  }

  auto psi = complete_scalar(fn.terminal_cost, fn.terminal_cost_x, fn.terminal_cost_xx, nullptr, fill, false);
  fn.terminal_cost_x = psi.grad;
  fn.terminal_cost_xx = psi.hess;

  auto phi = complete_scalar(fn.constraint, fn.constraint_x, fn.constraint_xx, fn.constraint_xxx, fill, true);
  fn.constraint_x = phi.grad;
  fn.constraint_xx = phi.hess;
  fn.constraint_xxx = phi.third;

  return ProblemSpec(std::move(data));
}

namespace {

double relative_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& probe) {
  if (analytic.rows() != probe.rows() || analytic.cols() != probe.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data()[i];
    const double p = probe.data()[i];
    worst = std::max(worst, std::abs(a - p) / std::max(1.0, std::abs(a)));
  }
  return worst;
}

}  // namespace

DerivativeCheck check_derivatives(const ProblemSpec& spec, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double rel = rel_for_depth(1);
  const int m = spec.state_dim();
  const int k = spec.control_dim();
  const int d = spec.noise_dim();

  DerivativeCheck out;
  out.samples = samples;
  auto record = [&](const std::string& field, const Eigen::MatrixXd& a, const Eigen::MatrixXd& p) {
    const double e = relative_error(a, p);
    if (e > out.worst_relative_error || out.worst_field.empty()) {
      out.worst_relative_error = std::max(e, out.worst_relative_error);
      out.worst_field = field;
    }
  };

  for (std::size_t s = 0; s < samples; ++s) {
    Vec x(m);
    for (int i = 0; i < m; ++i) x[i] = spec.initial_state()[i] + normal(rng);
    Vec u(k);
    for (int i = 0; i < k; ++i) {
      const double lo = spec.box().lo()[i];
      const double hi = spec.box().hi()[i];
      u[i] = lo + (hi - lo) * unit(rng);
    }

    record("drift_x", spec.drift_x(x, u),
           fd_jacobian([&](const Vec& y) { return spec.drift(y, u); }, x, rel));
    record("drift_u", spec.drift_u(x, u),
           fd_jacobian([&](const Vec& w) { return spec.drift(x, w); }, u, rel));
    for (int j = 0; j < d; ++j) {
      record("diffusion_x", spec.diffusion_x(x, u, j),
             fd_jacobian([&](const Vec& y) -> Vec { return spec.diffusion(y, u).col(j); }, x, rel));
      record("diffusion_u", spec.diffusion_u(x, u, j),
             fd_jacobian([&](const Vec& w) -> Vec { return spec.diffusion(x, w).col(j); }, u, rel));
    }
    record("running_cost_x", spec.running_cost_x(x, u),
           fd_gradient([&](const Vec& y) { return spec.running_cost(y, u); }, x, rel));
    record("running_cost_u", spec.running_cost_u(x, u),
           fd_gradient([&](const Vec& w) { return spec.running_cost(x, w); }, u, rel));
    record("terminal_cost_x", spec.terminal_cost_x(x),
           fd_gradient([&](const Vec& y) { return spec.terminal_cost(y); }, x, rel));
    record("terminal_cost_xx", spec.terminal_cost_xx(x),
           fd_jacobian([&](const Vec& y) { return spec.terminal_cost_x(y); }, x, rel));
    record("constraint_x", spec.constraint_x(x),
           fd_gradient([&](const Vec& y) { return spec.constraint(y); }, x, rel));
    record("constraint_xx", spec.constraint_xx(x),
           fd_jacobian([&](const Vec& y) { return spec.constraint_x(y); }, x, rel));
    for (int a = 0; a < m; ++a) {
      const double h = step(x[a], rel);
      Vec xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      const Mat probe = (spec.constraint_xx(xp) - spec.constraint_xx(xm)) / (2.0 * h);
      record("constraint_xxx", spec.constraint_xxx(x, a), probe);
    }
  }
  return out;
}

}  // namespace vtc
