#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nlct/core_model.hpp"

namespace nlct {

// Scaled complementary error function exp(x^2) erfc(x); finite for all
// x >= 0 where erfc itself underflows.
double erfcx(double x);

// 4 exp(-t^2/2) / erfc(t/sqrt 2), the first step that lands z_1 near x from
// z_0 = 0. Evaluated as 4 / erfcx(t/sqrt 2).
double step_size_mu1(double norm_x);

enum class StepMode { theorem, constant, custom };

struct StepSchedule {
  static constexpr double default_base_step = 100.0;

  StepMode mode = StepMode::theorem;
  double norm_x = 0.0;
  double mu1 = 4.0;
  double mu = default_base_step;
  std::vector<double> custom_steps;  // custom mode: step t is custom_steps[t-1], last entry repeats
  bool halving = true;               // halve the running step when the objective increases (t > 1)
  unsigned max_halvings = 20;

  // mu1 from the norm, then mu * exp(-5 |x|) for every later step.
  static StepSchedule theorem(double norm_x, double mu = default_base_step);
  static StepSchedule constant(double step);
  static StepSchedule custom(std::vector<double> steps);

  // Step size for iteration t >= 1 before any halving.
  double step(std::size_t t) const;
  void validate() const;
};

struct TrajectoryRecord {
  std::size_t iter = 0;
  double err = std::numeric_limits<double>::quiet_NaN();  // |z_t - x| when a reference is known
  double loss = 0.0;
  double grad_norm = 0.0;
  double time_ms = 0.0;
  double step = 0.0;  // step actually taken to reach z_t (0 for t = 0)
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;  // t = 0 .. iterations
  Vector final;
  unsigned halvings = 0;
  bool converged = false;  // stopped on tol or step_tol rather than max_iter

  std::size_t iterations() const { return records.empty() ? 0 : records.size() - 1; }
  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;
};

enum class ConstraintKind { full_space, l1_ball, nonneg, nonneg_l1, tv_ball_unsupported };

struct ConstraintSet {
  ConstraintKind kind = ConstraintKind::full_space;
  double radius = std::numeric_limits<double>::infinity();

  static ConstraintSet full_space() { return {}; }
  static ConstraintSet l1_ball(double radius) { return {ConstraintKind::l1_ball, radius}; }
  static ConstraintSet nonneg() { return {ConstraintKind::nonneg, std::numeric_limits<double>::infinity()}; }
  static ConstraintSet nonneg_l1(double radius) { return {ConstraintKind::nonneg_l1, radius}; }

  void validate() const;
};

// Euclidean projection. The l1 ball uses the sort-based threshold; the
// nonnegative l1 ball is the l1 projection of the clamped vector, which is
// exact for that intersection. An infinite radius means no l1 constraint.
Vector project(const ConstraintSet& set, const Vector& v);

struct DescentOptions {
  std::size_t max_iter = 10000;
  double tol = 1e-12;     // stop once |grad| <= tol
  double step_tol = 0.0;  // also stop once |z_t - z_{t-1}| <= step_tol (0 disables)
  std::optional<Vector> x_ref;
  ForwardModel model = ForwardModel::beer_lambert;
};

// z_t = z_{t-1} - mu_t grad L(z_{t-1}) from z_0 = 0.
Trajectory gradient_descent(const MeasurementOperator& op, const Vector& y, const StepSchedule& schedule,
                            const DescentOptions& options = {});

// z_t = P_K(z_{t-1} - mu_t grad L(z_{t-1})), projecting after every step.
Trajectory projected_gradient_descent(const MeasurementOperator& op, const Vector& y, const StepSchedule& schedule,
                                      const ConstraintSet& set, const DescentOptions& options = {});

// Anisotropic total variation with each forward difference d smoothed to
// sqrt(d^2 + eps^2).
constexpr double tv_smoothing = 1e-8;
double tv_value(const Vector& z, const GridGeometry& grid, double eps = tv_smoothing);
Vector tv_subgradient(const Vector& z, const GridGeometry& grid, double eps = tv_smoothing);
double tv_value(const Signal& z, double eps = tv_smoothing);
Vector tv_subgradient(const Signal& z, double eps = tv_smoothing);

// Descent on L(z) + lambda TV(z) with a nonnegativity clamp after each step.
// options.model selects the Beer-Lambert or the linear data term.
Trajectory regularized_descent(const MeasurementOperator& op, const Vector& y, const StepSchedule& schedule,
                               double lambda, const GridGeometry& grid, const DescentOptions& options = {});

// Mean measurement E[y] = 1 - (1 + erfcx(t/sqrt 2)) / 2 of a Gaussian row
// acting on a signal of norm t.
double mean_measurement(double norm_x);

// Inverts mean_measurement by bisection on [0, 50]. Means above the value at
// 50 return 50; a negative mean (possible after noise) is treated as 0.
double estimate_signal_norm(const Vector& y);
double estimate_signal_norm(const MeasurementSet& y);

}  // namespace nlct
