#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlct/optimize.hpp"

namespace nlct {

// Monte Carlo estimate of a quantity that should stay above `bound`.
// pass = estimate >= bound - 2 se.
struct BoundReport {
  struct SweepPoint {
    double c;
    double estimate;
    double se;
  };

  std::string quantity;
  nlohmann::json params = nlohmann::json::object();
  double estimate = 0.0;
  double se = 0.0;
  double bound = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  bool pass = false;
  std::vector<SweepPoint> sweep;  // per-correlation estimates; `estimate` is their minimum

  nlohmann::json summary() const;
};

// ---- first iterate

struct FirstStepResult {
  double success_rate = 0.0;
  double mean_error = 0.0;  // mean |z_1 - x| / |x| (0 when x = 0)
  std::size_t trials = 0;
};

// Fraction of trials in which the first theorem-schedule iterate from z_0 = 0
// satisfies |z_1 - x| <= |x| / 4. Fresh x (uniform direction) and Gaussian
// operator per trial.
FirstStepResult first_step_experiment(std::size_t n, std::size_t m, double norm_x, std::size_t trials,
                                      std::uint64_t seed);

// ---- correlation bounds

// Tent: 0 for v < 0, v on [0, w/2], w - v on [w/2, w], 0 for v > w.
double tent(double v, double w);

struct CorrelationOptions {
  double r = -1.0;  // <= 0 picks |x| / 4
  double rho = -0.6;
  std::size_t samples = 50000;
  std::size_t grid_points = 50;
  std::uint64_t seed = 1;
};

// Minimum over c in [rho, 1] of
//   E[1{u >= 0} 1{h >= 0} exp(-2|x|u) exp(-r h) (1 - exp(-r h)) h] / r,
// with h = c u + sqrt(1 - c^2) v for standard normal (u, v), against
// exp(-sqrt(10|x| + 7)).
BoundReport correlation_bound_case1(double norm_x, const CorrelationOptions& options = {});

// The r -> 0 limit of the case 1 integrand, E[1{u >= 0} exp(-2|x|u) (h)_+^2],
// at a single correlation c.
BoundReport correlation_limit_case1(double norm_x, double c, std::size_t samples, std::uint64_t seed);

// Minimum over c in [-1, rho] of E[1{u >= 0} S(h; |x|u / r) exp(-|x|u)]^2
// against exp(-(5|x| + 2)). The expectation is taken along the reflected
// direction, h = -c u + sqrt(1 - c^2) v, which is where the lower bound for
// strongly anticorrelated errors is derived.
BoundReport correlation_bound_case2(double norm_x, const CorrelationOptions& options = {});

// 1/2 exp(-(5t + 2)).
double combined_alpha(double norm_x);

struct AlphaOrdering {
  double crossover;            // exp(-(5t+2)) <= exp(-sqrt(10t+7)) exactly for t >= crossover
  double first_grid_point;     // first grid t from which the ordering holds on the rest of the grid
  std::size_t violations = 0;  // grid points where it fails
  std::size_t grid_points = 0;
};
AlphaOrdering alpha_ordering(double t_max = 10.0, std::size_t grid_points = 1001);

// ---- smoothness

struct SmoothnessResult {
  double max_ratio = 0.0;
  double bound = 0.0;  // 8 (1 + n/m)
  std::size_t samples = 0;
  std::size_t skipped = 0;  // draws with z == x
  bool pass = false;
};

// max |grad L(z)| / |z - x| over z drawn uniformly from the ball of radius
// |x|/4 around x (radius `zero_radius` when x = 0), fresh operator per draw.
SmoothnessResult smoothness_check(std::size_t n, std::size_t m, double norm_x, std::size_t trials, std::uint64_t seed,
                                  double zero_radius = 1e-3);

// ---- Gaussian width

struct ConeSpec {
  enum class Kind { l1_sparse, full_space };
  Kind kind = Kind::full_space;
  std::size_t n = 0;
  std::size_t s = 0;
  std::vector<std::size_t> support;  // empty: first s coordinates
  std::vector<int> signs;            // empty: all +1

  static ConeSpec full(std::size_t n) { return {Kind::full_space, n, 0, {}, {}}; }
  static ConeSpec l1(std::size_t n, std::size_t s) { return {Kind::l1_sparse, n, s, {}, {}}; }
  void validate() const;
};

struct WidthEstimate {
  double estimate = 0.0;  // mean squared supremum, used as m0
  double se = 0.0;
  std::size_t samples = 0;
};

// Squared distance from g to the cone generated by the l1 subdifferential at
// the anchor: min over tau >= 0 of sum_S (g_i - tau s_i)^2 + sum_off (|g_i| - tau)_+^2,
// solved exactly after sorting.
double l1_cone_distance_squared(const Vector& g, const ConeSpec& cone);

WidthEstimate gaussian_width_m0(const ConeSpec& cone, std::size_t samples, std::uint64_t seed);

// 2 s ln(n/s) + 1.5 s.
double sparse_width_approximation(std::size_t n, std::size_t s);

// ---- phase transition

struct PhaseTransitionSpec {
  std::size_t n = 200;
  std::size_t s = 5;
  double norm_x = 1.0;
  std::vector<std::size_t> m_grid;
  std::size_t trials = 50;
  double tol = 1e-4;  // success: |z - x| / |x| < tol
  double mu = StepSchedule::default_base_step;
  std::size_t max_iter = 10000;
  std::uint64_t seed = 1;
};

struct PhasePoint {
  std::size_t m = 0;
  std::size_t successes = 0;
  std::size_t trials = 0;
  double rate = 0.0;
  double isotonic = 0.0;  // rate after the monotone (PAV) fit
};

struct PhaseTransitionResult {
  std::vector<PhasePoint> points;
  double max_isotonic_deviation = 0.0;

  void write_csv(std::ostream& os) const;
};

// Projected gradient descent onto the l1 ball of radius |x|_1 for fresh
// s-sparse x and Gaussian operators at every m of the grid.
PhaseTransitionResult phase_transition(const PhaseTransitionSpec& spec);

// Least-squares nondecreasing fit (pool adjacent violators), equal weights.
std::vector<double> isotonic_fit(const std::vector<double>& values);

// ---- reports

void write_reports_csv(std::ostream& os, const std::vector<BoundReport>& reports);

}  // namespace nlct
