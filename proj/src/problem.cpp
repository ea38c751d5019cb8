#include "vtc/problem.hpp"

#include <cmath>
#include <sstream>

#include "vtc/errors.hpp"

namespace vtc {

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ProblemError("time grid horizon must be positive and finite");
  }
  if (steps == 0) throw ProblemError("time grid needs at least one step");
}

CellLocation locate(const TimeGrid& grid, double time) {
  const double dt = grid.dt();
  CellLocation loc;
  if (time <= 0.0) return loc;
  if (time >= grid.horizon()) {
    loc.cell = grid.steps() - 1;
  } else {
    const double pos = time / dt;
    auto k = static_cast<std::size_t>(std::ceil(pos));
    if (k == 0) k = 1;
    if (k > grid.steps()) k = grid.steps();
    loc.cell = k - 1;
  }
  loc.offset = time - grid.t(loc.cell);
  if (loc.offset > dt) {
    // Rounding in ceil() can place the time one cell early.
    if (loc.cell + 1 < grid.steps()) {
      ++loc.cell;
      loc.offset = time - grid.t(loc.cell);
    } else {
      loc.offset = dt;
    }
  }
  if (loc.offset < 0.0) loc.offset = 0.0;
  loc.frac = loc.offset / dt;
  return loc;
}

ControlBox::ControlBox(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size() || lo_.size() == 0) {
    throw ProblemError("control box bounds must have equal, non-zero dimension");
  }
  for (Eigen::Index i = 0; i < lo_.size(); ++i) {
    if (!(lo_[i] <= hi_[i])) {
      std::ostringstream os;
      os << "control box coordinate " << i << " has lo > hi (" << lo_[i] << " > " << hi_[i] << ")";
      throw ProblemError(os.str());
    }
  }
}

bool ControlBox::contains(const Vec& u, double slack) const {
  if (u.size() != lo_.size()) return false;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double scale = std::max(1.0, std::max(std::abs(lo_[i]), std::abs(hi_[i])));
    if (!(u[i] >= lo_[i] - slack * scale && u[i] <= hi_[i] + slack * scale)) return false;
  }
  return true;
}

PiecewiseConstant::PiecewiseConstant(TimeGrid grid, Eigen::MatrixXd values)
    : grid_(grid), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.cols()) != grid_.steps()) {
    throw GridMismatch("piecewise-constant path needs one column per grid cell");
  }
  if (values_.rows() == 0 || values_.rows() > kMaxDim) {
    throw ProblemError("piecewise-constant path dimension must be in [1, 4]");
  }
}

Vec PiecewiseConstant::at_time(double time) const { return at(locate(grid_, time).cell); }

Direction Direction::constant(const TimeGrid& grid, const Vec& value) {
  Eigen::MatrixXd values(value.size(), static_cast<Eigen::Index>(grid.steps()));
  values.colwise() = Eigen::VectorXd(value);
  return Direction(grid, std::move(values));
}

Direction Direction::zero(const TimeGrid& grid, int dim) {
  return Direction(grid, Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(grid.steps())));
}

Direction Direction::operator*(double a) const { return Direction(grid_, a * values_); }

Direction Direction::operator+(const Direction& other) const {
  if (!(grid_ == other.grid_)) throw GridMismatch("directions live on different grids");
  return Direction(grid_, values_ + other.values_);
}

ControlPath::ControlPath(TimeGrid grid, Eigen::MatrixXd values, const ControlBox& box)
    : PiecewiseConstant(grid, std::move(values)), box_(box) {
  if (dim() != box_.dim()) throw ProblemError("control dimension does not match the control box");
  for (std::size_t i = 0; i < cells(); ++i) {
    if (!box_.contains(at(i))) {
      std::ostringstream os;
      os << "control value in cell " << i << " (t = " << grid_.t(i) << ") lies outside the control box";
      throw BoxViolation(os.str());
    }
  }
}

ControlPath ControlPath::constant(const TimeGrid& grid, const Vec& value, const ControlBox& box) {
  Eigen::MatrixXd values(value.size(), static_cast<Eigen::Index>(grid.steps()));
  values.colwise() = Eigen::VectorXd(value);
  return ControlPath(grid, std::move(values), box);
}

ControlPath ControlPath::from_function(const TimeGrid& grid, const std::function<Vec(double)>& fn,
                                       const ControlBox& box) {
  Eigen::MatrixXd values(box.dim(), static_cast<Eigen::Index>(grid.steps()));
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    const double mid = 0.5 * (grid.t(i) + grid.t(i + 1));
    values.col(static_cast<Eigen::Index>(i)) = Eigen::VectorXd(fn(mid));
  }
  return ControlPath(grid, std::move(values), box);
}

ControlPath ControlPath::perturbed(double rho, const Direction& v) const {
  if (!(grid_ == v.grid())) throw GridMismatch("perturbation direction lives on a different grid");
  if (v.dim() != dim()) throw ProblemError("perturbation direction has the wrong dimension");
  return ControlPath(grid_, values_ + rho * v.values(), box_);
}

Direction ControlPath::operator-(const ControlPath& other) const {
  if (!(grid_ == other.grid_)) throw GridMismatch("controls live on different grids");
  return Direction(grid_, values_ - other.values_);
}

bool ProblemFunctions::has_all_derivatives() const {
  return drift_x && drift_u && diffusion_x && diffusion_u && running_cost_x && running_cost_u &&
         terminal_cost_x && terminal_cost_xx && constraint_x && constraint_xx && constraint_xxx;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ProblemError(what);
}

}  // namespace

ProblemSpec::ProblemSpec(ProblemData data) : data_(std::move(data)) {
  const auto& d = data_;
  require(d.state_dim >= 1 && d.state_dim <= kMaxDim, "state dimension must be in [1, 4]");
  require(d.noise_dim >= 1 && d.noise_dim <= kMaxDim, "noise dimension must be in [1, 4]");
  require(d.control_dim >= 1 && d.control_dim <= kMaxDim, "control dimension must be in [1, 4]");
  require(d.horizon > 0.0 && std::isfinite(d.horizon), "horizon must be positive and finite");
  require(std::isfinite(d.threshold), "threshold must be finite");
  require(d.initial_state.size() == d.state_dim, "initial state has the wrong dimension");
  require(d.box.dim() == d.control_dim, "control box has the wrong dimension");
  require(d.fn.drift && d.fn.diffusion && d.fn.running_cost && d.fn.terminal_cost && d.fn.constraint,
          "problem '" + d.name + "' is missing a coefficient function");
  require(d.fn.has_all_derivatives(),
          "problem '" + d.name + "' is missing derivatives; build it with finite_difference_derivatives");

  const double phi0 = d.fn.constraint(d.initial_state);
  if (!(d.threshold > phi0)) {
    std::ostringstream os;
    os << "threshold alpha = " << d.threshold << " must exceed Phi(x0) = " << phi0
       << " (otherwise tau = 0 and the problem is trivial)";
    throw ProblemError(os.str());
  }
  const Vec u = d.box.midpoint();
  require(d.fn.drift(d.initial_state, u).size() == d.state_dim, "drift returns the wrong dimension");
  const Mat s = d.fn.diffusion(d.initial_state, u);
  require(s.rows() == d.state_dim && s.cols() == d.noise_dim, "diffusion returns the wrong shape");
}

ProblemSpec ProblemSpec::with_threshold(double alpha) const {
  ProblemData d = data_;
  d.threshold = alpha;
  return ProblemSpec(std::move(d));
}

ProblemSpec ProblemSpec::with_horizon(double horizon) const {
  ProblemData d = data_;
  d.horizon = horizon;
  return ProblemSpec(std::move(d));
}

double ProblemSpec::constraint_rate(const Vec& x, const Vec& u) const {
  double g = constraint_x(x).dot(drift(x, u));
  if (!diffusion_free()) {
    const Mat s = diffusion(x, u);
    const Mat hess = constraint_xx(x);
    for (int j = 0; j < noise_dim(); ++j) g += 0.5 * s.col(j).dot(hess * s.col(j));
  }
  return g;
}

Vec ProblemSpec::constraint_rate_x(const Vec& x, const Vec& u) const {
  const Mat hess = constraint_xx(x);
  Vec gx = hess.transpose() * drift(x, u) + drift_x(x, u).transpose() * constraint_x(x);
  if (!diffusion_free()) {
    const Mat s = diffusion(x, u);
    for (int j = 0; j < noise_dim(); ++j) {
      const Vec sj = s.col(j);
      gx += diffusion_x(x, u, j).transpose() * (hess * sj);
    }
    for (int a = 0; a < state_dim(); ++a) {
      const Mat slice = constraint_xxx(x, a);
      double acc = 0.0;
      for (int j = 0; j < noise_dim(); ++j) acc += s.col(j).dot(slice * s.col(j));
      gx[a] += 0.5 * acc;
    }
  }
  return gx;
}

Vec ProblemSpec::constraint_rate_u(const Vec& x, const Vec& u) const {
  Vec gu = drift_u(x, u).transpose() * constraint_x(x);
  if (!diffusion_free()) {
    const Mat s = diffusion(x, u);
    const Mat hess = constraint_xx(x);
    for (int j = 0; j < noise_dim(); ++j) {
      const Vec sj = s.col(j);
      gu += diffusion_u(x, u, j).transpose() * (hess * sj);
    }
  }
  return gu;
}

double ProblemSpec::terminal_rate(const Vec& x, const Vec& u) const {
  double r = terminal_cost_x(x).dot(drift(x, u));
  if (!diffusion_free()) {
    const Mat s = diffusion(x, u);
    const Mat hess = terminal_cost_xx(x);
    for (int j = 0; j < noise_dim(); ++j) r += 0.5 * s.col(j).dot(hess * s.col(j));
  }
  return r;
}

}  // namespace vtc
