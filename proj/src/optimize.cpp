#include "nlct/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>

#include "nlct/errors.hpp"

namespace nlct {

double erfcx(double x) {
  if (std::isnan(x)) throw DomainError("erfcx: NaN argument");
  if (x < 5.0) return std::exp(x * x) * std::erfc(x);
  // Continued fraction erfcx(x) = (1/sqrt pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
  // evaluated by the modified Lentz method.
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 200; ++k) {
    const double a = 0.5 * k;
    d = x + a * d;
    if (d == 0.0) d = tiny;
    c = x + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::numbers::inv_sqrtpi / f;
}

double step_size_mu1(double norm_x) {
  if (!(norm_x >= 0.0) || !std::isfinite(norm_x)) throw DomainError("step_size_mu1: norm must be finite and >= 0");
  return 4.0 / erfcx(norm_x / std::numbers::sqrt2);
}

StepSchedule StepSchedule::theorem(double norm_x, double mu) {
  StepSchedule s;
  s.mode = StepMode::theorem;
  s.norm_x = norm_x;
  s.mu1 = step_size_mu1(norm_x);
  s.mu = mu;
  s.validate();
  return s;
}

StepSchedule StepSchedule::constant(double step) {
  StepSchedule s;
  s.mode = StepMode::constant;
  s.mu1 = step;
  s.mu = step;
  s.validate();
  return s;
}

StepSchedule StepSchedule::custom(std::vector<double> steps) {
  StepSchedule s;
  s.mode = StepMode::custom;
  s.custom_steps = std::move(steps);
  s.validate();
  return s;
}

double StepSchedule::step(std::size_t t) const {
  if (t == 0) throw DomainError("step index starts at 1");
  switch (mode) {
    case StepMode::theorem: return t == 1 ? mu1 : mu * std::exp(-5.0 * norm_x);
    case StepMode::constant: return mu;
    case StepMode::custom: return custom_steps[std::min(t, custom_steps.size()) - 1];
  }
  return mu;
}

void StepSchedule::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (mode == StepMode::custom) {
    if (custom_steps.empty()) throw DomainError("custom schedule needs at least one step");
    for (double s : custom_steps)
      if (!positive(s)) throw DomainError("custom step sizes must be > 0");
    return;
  }
  if (!(norm_x >= 0.0) || !std::isfinite(norm_x)) throw DomainError("schedule norm must be >= 0");
  if (!positive(mu1) || !positive(mu)) throw DomainError("step sizes must be > 0");
}

void Trajectory::write_csv(std::ostream& os) const {
  os << "iter,err,loss,grad_norm,time_ms\n";
  os << std::setprecision(17);
  for (const auto& r : records) {
    os << r.iter << ',';
    if (!std::isnan(r.err)) os << r.err;
    os << ',' << r.loss << ',' << r.grad_norm << ',' << r.time_ms << '\n';
  }
}

void Trajectory::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  write_csv(f);
  if (!f) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------- projection

void ConstraintSet::validate() const {
  if (kind == ConstraintKind::tv_ball_unsupported) throw DomainError("projection onto a TV ball is not supported");
  if (kind == ConstraintKind::l1_ball || kind == ConstraintKind::nonneg_l1)
    if (!(radius > 0.0)) throw DomainError("l1 radius must be > 0");
}

namespace {

Vector project_l1(const Vector& v, double radius) {
  if (std::isinf(radius) || v.lpNorm<1>() <= radius) return v;
  std::vector<double> a(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) a[static_cast<std::size_t>(i)] = std::abs(v[i]);
  std::sort(a.begin(), a.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    cumulative += a[k];
    const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
    if (a[k] > candidate) theta = candidate;
    else break;
  }
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v[i]) - theta, 0.0);
    out[i] = v[i] < 0 ? -mag : mag;
  }
  return out;
}

}  // namespace

Vector project(const ConstraintSet& set, const Vector& v) {
  set.validate();
  switch (set.kind) {
    case ConstraintKind::full_space: return v;
    case ConstraintKind::l1_ball: return project_l1(v, set.radius);
    case ConstraintKind::nonneg: return v.cwiseMax(0.0);
    case ConstraintKind::nonneg_l1: return project_l1(v.cwiseMax(0.0), set.radius);
    case ConstraintKind::tv_ball_unsupported: break;
  }
  throw DomainError("unsupported constraint");
}

// ---------------------------------------------------------------- TV

namespace {

template <class Visit>
void for_each_difference(const GridGeometry& grid, Visit&& visit) {
  std::size_t stride = 1;
  const std::size_t total = grid.size();
  for (std::size_t axis = 0; axis < grid.dims.size(); ++axis) {
    const std::size_t len = grid.dims[axis];
    for (std::size_t i = 0; i < total; ++i) {
      if ((i / stride) % len + 1 < len) visit(i, i + stride);
    }
    stride *= len;
  }
}

void check_grid(const Vector& z, const GridGeometry& grid) {
  grid.validate();
  if (static_cast<std::size_t>(z.size()) != grid.size())
    throw ShapeError("signal length " + std::to_string(z.size()) + " != grid size " + std::to_string(grid.size()));
}

}  // namespace

double tv_value(const Vector& z, const GridGeometry& grid, double eps) {
  check_grid(z, grid);
  double sum = 0.0;
  for_each_difference(grid, [&](std::size_t a, std::size_t b) {
    const double d = z[static_cast<Eigen::Index>(b)] - z[static_cast<Eigen::Index>(a)];
    sum += std::sqrt(d * d + eps * eps);
  });
  return sum;
}

Vector tv_subgradient(const Vector& z, const GridGeometry& grid, double eps) {
  check_grid(z, grid);
  Vector g = Vector::Zero(z.size());
  for_each_difference(grid, [&](std::size_t a, std::size_t b) {
    const auto ia = static_cast<Eigen::Index>(a);
    const auto ib = static_cast<Eigen::Index>(b);
    const double d = z[ib] - z[ia];
    const double w = d / std::sqrt(d * d + eps * eps);
    g[ib] += w;
    g[ia] -= w;
  });
  return g;
}

double tv_value(const Signal& z, double eps) {
  if (!z.geometry) throw ShapeError("total variation needs a grid geometry");
  return tv_value(z.values, *z.geometry, eps);
}

Vector tv_subgradient(const Signal& z, double eps) {
  if (!z.geometry) throw ShapeError("total variation needs a grid geometry");
  return tv_subgradient(z.values, *z.geometry, eps);
}

// ---------------------------------------------------------------- descent

namespace {

struct Objective {
  double value;
  Vector grad;
};

Trajectory run_descent(const MeasurementOperator& op, const Vector& y, const StepSchedule& schedule,
                       const DescentOptions& options, const std::function<Vector(const Vector&)>& projector,
                       const std::function<void(const Vector&, Objective&)>& regularizer) {
  schedule.validate();
  if (!(options.tol >= 0.0)) throw DomainError("tolerance must be >= 0");
  if (static_cast<std::size_t>(y.size()) != op.rows())
    throw ShapeError("measurement length " + std::to_string(y.size()) + " != operator rows " +
                     std::to_string(op.rows()));
  if (options.x_ref && static_cast<std::size_t>(options.x_ref->size()) != op.cols())
    throw ShapeError("reference signal length does not match operator columns");

  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  auto objective = [&](const Vector& z, std::size_t t) {
    LossEvaluation ev = evaluate(op, y, z, options.model, true);
    Objective o{ev.loss, std::move(ev.grad)};
    if (regularizer) regularizer(z, o);
    if (!std::isfinite(o.value)) throw DivergenceError(t, "objective is not finite");
    return o;
  };

  Trajectory traj;
  Vector z = Vector::Zero(static_cast<Eigen::Index>(op.cols()));
  Objective cur = objective(z, 0);
  auto record = [&](std::size_t t, double step) {
    TrajectoryRecord r;
    r.iter = t;
    if (options.x_ref) r.err = (z - *options.x_ref).norm();
    r.loss = cur.value;
    r.grad_norm = cur.grad.norm();
    r.time_ms = elapsed_ms();
    r.step = step;
    traj.records.push_back(r);
  };
  record(0, 0.0);

  double scale = 1.0;
  for (std::size_t t = 1; t <= options.max_iter; ++t) {
    if (traj.records.back().grad_norm <= options.tol) {
      traj.converged = true;
      break;
    }
    double step = schedule.step(t) * (t > 1 ? scale : 1.0);
    Vector candidate = projector(z - step * cur.grad);
    Objective next = objective(candidate, t);
    while (t > 1 && schedule.halving && next.value > cur.value && traj.halvings < schedule.max_halvings) {
      scale *= 0.5;
      ++traj.halvings;
      step = schedule.step(t) * scale;
      candidate = projector(z - step * cur.grad);
      next = objective(candidate, t);
    }
    const double moved = options.step_tol > 0.0 ? (candidate - z).norm() : 0.0;
    z = std::move(candidate);
    cur = std::move(next);
    record(t, step);
    if (options.step_tol > 0.0 && moved <= options.step_tol) {
      traj.converged = true;
      break;
    }
  }
  if (!traj.converged && traj.records.back().grad_norm <= options.tol) traj.converged = true;
  traj.final = std::move(z);
  return traj;
}

}  // namespace

Trajectory gradient_descent(const MeasurementOperator& op, const Vector& y, const StepSchedule& schedule,
                            const DescentOptions& options) {
  return run_descent(op, y, schedule, options, [](const Vector& v) { return v; }, {});
}

Trajectory projected_gradient_descent(const MeasurementOperator& op, const Vector& y, const StepSchedule& schedule,
                                      const ConstraintSet& set, const DescentOptions& options) {
  set.validate();
  return run_descent(op, y, schedule, options, [&](const Vector& v) { return project(set, v); }, {});
}

Trajectory regularized_descent(const MeasurementOperator& op, const Vector& y, const StepSchedule& schedule,
                               double lambda, const GridGeometry& grid, const DescentOptions& options) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be >= 0");
  if (grid.size() != op.cols()) throw ShapeError("grid size does not match operator columns");
  std::function<void(const Vector&, Objective&)> tv;
  if (lambda > 0.0) {
    tv = [&](const Vector& z, Objective& o) {
      o.value += lambda * tv_value(z, grid);
      o.grad += lambda * tv_subgradient(z, grid);
    };
  }
  return run_descent(op, y, schedule, options, [](const Vector& v) { return Vector(v.cwiseMax(0.0)); }, tv);
}

// ---------------------------------------------------------------- norm estimate

double mean_measurement(double norm_x) {
  if (!(norm_x >= 0.0)) throw DomainError("mean_measurement: norm must be >= 0");
  return 1.0 - 0.5 * (1.0 + erfcx(norm_x / std::numbers::sqrt2));
}

double estimate_signal_norm(const Vector& y) {
  if (y.size() == 0) throw ShapeError("estimate_signal_norm: no measurements");
  double ybar = y.mean();
  if (!std::isfinite(ybar) || ybar >= 1.0) throw DomainError("mean measurement must lie in [0, 1)");
  if (ybar < 0.0) {
    std::clog << "warning: mean measurement " << ybar << " < 0, treating as 0\n";
    ybar = 0.0;
  }
  double lo = 0.0;
  double hi = 50.0;
  if (ybar <= mean_measurement(lo)) return 0.0;
  if (ybar >= mean_measurement(hi)) return hi;
  while (hi - lo >= 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (mean_measurement(mid) < ybar) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double estimate_signal_norm(const MeasurementSet& y) { return estimate_signal_norm(y.y); }

}  // namespace nlct
