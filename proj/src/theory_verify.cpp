#include "nlct/theory_verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>

#include "nlct/errors.hpp"
#include "nlct/rng.hpp"

namespace nlct {

namespace {

Vector normal_vector(Engine& eng, std::size_t n) {
  StandardNormal normal;
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(eng);
  return v;
}

Vector random_direction(Engine& eng, std::size_t n, double norm) {
  Vector v = normal_vector(eng, n);
  return v * (norm / v.norm());
}

// Streams per trial: x, operator, anything else.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial, std::uint64_t part) {
  return mix_seed(mix_seed(seed, trial), part);
}

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++count;
  }
  double mean() const { return sum / static_cast<double>(count); }
  double stdev() const {
    if (count < 2) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, (sum_sq - static_cast<double>(count) * m * m) / static_cast<double>(count - 1)));
  }
  double se() const { return stdev() / std::sqrt(static_cast<double>(count)); }
};

struct NormalPairs {
  std::vector<double> u;
  std::vector<double> v;
};

NormalPairs draw_pairs(std::size_t samples, std::uint64_t seed) {
  Engine eng = make_engine(seed, 0);
  StandardNormal normal;
  NormalPairs p;
  p.u.resize(samples);
  p.v.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    p.u[i] = normal(eng);
    p.v[i] = normal(eng);
  }
  return p;
}

void check_correlation_args(double norm_x, const CorrelationOptions& o, double r) {
  if (!(norm_x > 0.0) || !std::isfinite(norm_x)) throw DomainError("correlation bound needs |x| > 0");
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("correlation bound needs r > 0");
  if (!(o.rho >= -1.0 && o.rho <= 1.0)) throw DomainError("rho must lie in [-1, 1]");
  if (o.samples < 2) throw DomainError("need at least 2 samples");
  if (o.grid_points < 2) throw DomainError("need at least 2 correlation grid points");
}

double grid_value(double lo, double hi, std::size_t k, std::size_t points) {
  return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
}

void finish_sweep(BoundReport& rep) {
  const auto it = std::min_element(rep.sweep.begin(), rep.sweep.end(),
                                   [](const auto& a, const auto& b) { return a.estimate < b.estimate; });
  rep.estimate = it->estimate;
  rep.se = it->se;
  rep.params["c_at_minimum"] = it->c;
  rep.pass = rep.estimate >= rep.bound - 2.0 * rep.se;
}

}  // namespace

nlohmann::json BoundReport::summary() const {
  return {{"quantity", quantity}, {"params", params}, {"estimate", estimate}, {"se", se},
          {"bound", bound},       {"pass", pass},     {"samples", samples},   {"seed", seed}};
}

// ---------------------------------------------------------------- first step

FirstStepResult first_step_experiment(std::size_t n, std::size_t m, double norm_x, std::size_t trials,
                                      std::uint64_t seed) {
  if (trials == 0) throw DomainError("first_step_experiment needs at least one trial");
  if (!(norm_x >= 0.0) || !std::isfinite(norm_x)) throw DomainError("norm must be >= 0");
  const StepSchedule schedule = StepSchedule::theorem(norm_x);
  DescentOptions opts;
  opts.max_iter = 1;
  FirstStepResult res;
  res.trials = trials;
  std::size_t hits = 0;
  double err_sum = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Engine ex = make_engine(trial_seed(seed, t, 0), 0);
    const Vector x = norm_x > 0.0 ? random_direction(ex, n, norm_x) : Vector::Zero(static_cast<Eigen::Index>(n));
    const GaussianOperator op(m, n, trial_seed(seed, t, 1));
    Signal xs{x, std::nullopt, false};
    const Vector y = measure(op, xs).y;
    const Trajectory tr = gradient_descent(op, y, schedule, opts);
    const double err = (tr.final - x).norm();
    if (err <= 0.25 * norm_x) ++hits;
    err_sum += norm_x > 0.0 ? err / norm_x : 0.0;
  }
  res.success_rate = static_cast<double>(hits) / static_cast<double>(trials);
  res.mean_error = err_sum / static_cast<double>(trials);
  return res;
}

// ---------------------------------------------------------------- correlation bounds

double tent(double v, double w) {
  if (v < 0.0 || v > w) return 0.0;
  return v <= 0.5 * w ? v : w - v;
}

BoundReport correlation_bound_case1(double norm_x, const CorrelationOptions& o) {
  const double r = o.r > 0.0 ? o.r : 0.25 * norm_x;
  check_correlation_args(norm_x, o, r);
  BoundReport rep;
  rep.quantity = "correlation_case1";
  rep.samples = o.samples;
  rep.seed = o.seed;
  rep.bound = std::exp(-std::sqrt(10.0 * norm_x + 7.0));
  rep.params = {{"norm_x", norm_x}, {"r", r}, {"rho", o.rho}, {"c_min", o.rho}, {"c_max", 1.0},
                {"grid_points", o.grid_points}};
  const NormalPairs p = draw_pairs(o.samples, o.seed);
  for (std::size_t k = 0; k < o.grid_points; ++k) {
    const double c = grid_value(o.rho, 1.0, k, o.grid_points);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    Moments mom;
    for (std::size_t i = 0; i < o.samples; ++i) {
      const double u = p.u[i];
      const double h = c * u + s * p.v[i];
      double val = 0.0;
      if (u >= 0.0 && h >= 0.0) {
        const double e = std::exp(-r * h);
        val = std::exp(-2.0 * norm_x * u) * e * (-std::expm1(-r * h)) * h / r;
      }
      mom.add(val);
    }
    rep.sweep.push_back({c, mom.mean(), mom.se()});
  }
  finish_sweep(rep);
  return rep;
}

BoundReport correlation_limit_case1(double norm_x, double c, std::size_t samples, std::uint64_t seed) {
  if (!(c >= -1.0 && c <= 1.0)) throw DomainError("correlation must lie in [-1, 1]");
  BoundReport rep;
  rep.quantity = "correlation_case1_limit";
  rep.samples = samples;
  rep.seed = seed;
  rep.params = {{"norm_x", norm_x}, {"c", c}};
  const NormalPairs p = draw_pairs(samples, seed);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  Moments mom;
  for (std::size_t i = 0; i < samples; ++i) {
    const double u = p.u[i];
    const double h = c * u + s * p.v[i];
    mom.add(u >= 0.0 && h >= 0.0 ? std::exp(-2.0 * norm_x * u) * h * h : 0.0);
  }
  rep.sweep.push_back({c, mom.mean(), mom.se()});
  rep.estimate = mom.mean();
  rep.se = mom.se();
  rep.pass = true;
  return rep;
}

BoundReport correlation_bound_case2(double norm_x, const CorrelationOptions& o) {
  const double r = o.r > 0.0 ? o.r : 0.25 * norm_x;
  check_correlation_args(norm_x, o, r);
  BoundReport rep;
  rep.quantity = "correlation_case2";
  rep.samples = o.samples;
  rep.seed = o.seed;
  rep.bound = std::exp(-(5.0 * norm_x + 2.0));
  rep.params = {{"norm_x", norm_x}, {"r", r}, {"rho", o.rho}, {"c_min", -1.0}, {"c_max", o.rho},
                {"grid_points", o.grid_points}, {"direction", "reflected"}};
  const NormalPairs p = draw_pairs(o.samples, o.seed);
  for (std::size_t k = 0; k < o.grid_points; ++k) {
    const double c = grid_value(-1.0, o.rho, k, o.grid_points);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    Moments mom;
    for (std::size_t i = 0; i < o.samples; ++i) {
      const double ax = norm_x * p.u[i];
      const double h = -c * p.u[i] + s * p.v[i];
      mom.add(ax >= 0.0 ? tent(h, ax / r) * std::exp(-ax) : 0.0);
    }
    const double mean = mom.mean();
    // delta method for the squared mean
    rep.sweep.push_back({c, mean * mean, 2.0 * std::abs(mean) * mom.se()});
  }
  finish_sweep(rep);
  return rep;
}

double combined_alpha(double norm_x) {
  if (!(norm_x >= 0.0)) throw DomainError("combined_alpha needs |x| >= 0");
  return 0.5 * std::exp(-(5.0 * norm_x + 2.0));
}

AlphaOrdering alpha_ordering(double t_max, std::size_t grid_points) {
  if (grid_points < 2 || !(t_max > 0.0)) throw DomainError("alpha_ordering needs a nondegenerate grid");
  AlphaOrdering o;
  o.grid_points = grid_points;
  // 5t + 2 >= sqrt(10t + 7)  <=>  25t^2 + 10t - 3 >= 0 for t >= 0, root t = 1/5.
  o.crossover = (-10.0 + std::sqrt(100.0 + 300.0)) / 50.0;
  o.first_grid_point = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = grid_points; k-- > 0;) {
    const double t = grid_value(0.0, t_max, k, grid_points);
    const bool holds = std::exp(-(5.0 * t + 2.0)) <= std::exp(-std::sqrt(10.0 * t + 7.0));
    if (!holds) ++o.violations;
    if (holds && o.violations == 0) o.first_grid_point = t;
  }
  return o;
}

// ---------------------------------------------------------------- smoothness

SmoothnessResult smoothness_check(std::size_t n, std::size_t m, double norm_x, std::size_t trials,
                                  std::uint64_t seed, double zero_radius) {
  if (trials == 0) throw DomainError("smoothness_check needs at least one trial");
  if (n == 0 || m == 0) throw ShapeError("smoothness_check needs n, m >= 1");
  SmoothnessResult res;
  res.bound = 8.0 * (1.0 + static_cast<double>(n) / static_cast<double>(m));
  const double radius = norm_x > 0.0 ? 0.25 * norm_x : zero_radius;
  for (std::size_t t = 0; t < trials; ++t) {
    Engine eng = make_engine(trial_seed(seed, t, 0), 0);
    const Vector x = norm_x > 0.0 ? random_direction(eng, n, norm_x) : Vector::Zero(static_cast<Eigen::Index>(n));
    const double rad = radius * std::pow(uniform01(eng), 1.0 / static_cast<double>(n));
    const Vector z = x + random_direction(eng, n, rad);
    const double dist = (z - x).norm();
    if (dist == 0.0) {
      ++res.skipped;
      continue;
    }
    const GaussianOperator op(m, n, trial_seed(seed, t, 1));
    const Vector y = measure(op, Signal{x, std::nullopt, false}).y;
    res.max_ratio = std::max(res.max_ratio, grad_loss(op, y, z).norm() / dist);
    ++res.samples;
  }
  res.pass = res.max_ratio <= res.bound;
  return res;
}

// ---------------------------------------------------------------- width

void ConeSpec::validate() const {
  if (n == 0) throw DomainError("cone dimension must be >= 1");
  if (kind == Kind::full_space) return;
  if (s == 0) throw DomainError("l1 cone needs s >= 1");
  if (s > n) throw DomainError("sparsity s exceeds dimension n");
  if (!support.empty()) {
    if (support.size() != s) throw DomainError("support size differs from s");
    std::vector<bool> seen(n, false);
    for (auto i : support) {
      if (i >= n || seen[i]) throw DomainError("support indices must be distinct and < n");
      seen[i] = true;
    }
  }
  if (!signs.empty() && signs.size() != s) throw DomainError("sign pattern size differs from s");
  for (int sg : signs)
    if (sg != 1 && sg != -1) throw DomainError("signs must be +1 or -1");
}

double l1_cone_distance_squared(const Vector& g, const ConeSpec& cone) {
  if (static_cast<std::size_t>(g.size()) != cone.n) throw ShapeError("draw length differs from cone dimension");
  if (cone.kind == ConeSpec::Kind::full_space) return g.squaredNorm();

  std::vector<bool> on(cone.n, false);
  std::vector<double> a;  // s_i g_i on the support
  a.reserve(cone.s);
  for (std::size_t k = 0; k < cone.s; ++k) {
    const std::size_t i = cone.support.empty() ? k : cone.support[k];
    const int sg = cone.signs.empty() ? 1 : cone.signs[k];
    on[i] = true;
    a.push_back(sg * g[static_cast<Eigen::Index>(i)]);
  }
  std::vector<double> b;  // |g_i| off the support, descending
  b.reserve(cone.n - cone.s);
  for (std::size_t i = 0; i < cone.n; ++i)
    if (!on[i]) b.push_back(std::abs(g[static_cast<Eigen::Index>(i)]));
  std::sort(b.begin(), b.end(), std::greater<>());

  // The objective is convex and piecewise quadratic in tau with breakpoints
  // at b. With the top k off-support entries above tau, the stationary point
  // is (sum a + sum_{j<k} b_j) / (s + k).
  const double sum_a = std::accumulate(a.begin(), a.end(), 0.0);
  double prefix = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k <= b.size(); ++k) {
    const double cand = (sum_a + prefix) / static_cast<double>(cone.s + k);
    const double upper = k == 0 ? std::numeric_limits<double>::infinity() : b[k - 1];
    const double lower = k == b.size() ? 0.0 : b[k];
    if (cand <= upper && cand >= lower) {
      tau = cand;
      break;
    }
    if (k < b.size()) prefix += b[k];
  }
  tau = std::max(tau, 0.0);
  double d = 0.0;
  for (double ai : a) d += (ai - tau) * (ai - tau);
  for (double bi : b) {
    const double e = std::max(bi - tau, 0.0);
    d += e * e;
  }
  return d;
}

WidthEstimate gaussian_width_m0(const ConeSpec& cone, std::size_t samples, std::uint64_t seed) {
  cone.validate();
  if (samples < 2) throw DomainError("width estimate needs at least 2 samples");
  Moments mom;
  for (std::size_t k = 0; k < samples; ++k) {
    Engine eng = make_engine(seed, k);
    mom.add(l1_cone_distance_squared(normal_vector(eng, cone.n), cone));
  }
  return {mom.mean(), mom.se(), samples};
}

double sparse_width_approximation(std::size_t n, std::size_t s) {
  if (s == 0 || s > n) throw DomainError("need 1 <= s <= n");
  const auto sd = static_cast<double>(s);
  return 2.0 * sd * std::log(static_cast<double>(n) / sd) + 1.5 * sd;
}

// ---------------------------------------------------------------- phase transition

std::vector<double> isotonic_fit(const std::vector<double>& values) {
  struct Block {
    double sum;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (double v : values) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1) {
      const Block& last = blocks.back();
      const Block& prev = blocks[blocks.size() - 2];
      if (prev.sum / static_cast<double>(prev.count) <= last.sum / static_cast<double>(last.count)) break;
      const Block merged{prev.sum + last.sum, prev.count + last.count};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.sum / static_cast<double>(b.count));
  return out;
}

PhaseTransitionResult phase_transition(const PhaseTransitionSpec& spec) {
  if (spec.s == 0 || spec.s > spec.n) throw DomainError("need 1 <= s <= n");
  if (spec.trials == 0) throw DomainError("phase transition needs at least one trial");
  if (!(spec.norm_x > 0.0)) throw DomainError("phase transition needs |x| > 0");
  if (!std::is_sorted(spec.m_grid.begin(), spec.m_grid.end())) throw DomainError("m grid must be sorted");
  const StepSchedule schedule = StepSchedule::theorem(spec.norm_x, spec.mu);
  PhaseTransitionResult res;
  for (std::size_t gi = 0; gi < spec.m_grid.size(); ++gi) {
    const std::size_t m = spec.m_grid[gi];
    PhasePoint pt;
    pt.m = m;
    pt.trials = spec.trials;
    for (std::size_t t = 0; t < spec.trials; ++t) {
      const std::uint64_t ts = mix_seed(spec.seed, gi);
      Engine ex = make_engine(trial_seed(ts, t, 0), 0);
      // partial Fisher-Yates for the support
      std::vector<std::size_t> idx(spec.n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t k = 0; k < spec.s; ++k) {
        const auto j = k + static_cast<std::size_t>(uniform01(ex) * static_cast<double>(spec.n - k));
        std::swap(idx[k], idx[std::min(j, spec.n - 1)]);
      }
      const Vector vals = random_direction(ex, spec.s, spec.norm_x);
      Vector x = Vector::Zero(static_cast<Eigen::Index>(spec.n));
      for (std::size_t k = 0; k < spec.s; ++k) x[static_cast<Eigen::Index>(idx[k])] = vals[static_cast<Eigen::Index>(k)];

      const GaussianOperator op(m, spec.n, trial_seed(ts, t, 1));
      const Vector y = measure(op, Signal{x, std::nullopt, false}).y;
      DescentOptions opts;
      opts.max_iter = spec.max_iter;
      opts.step_tol = 1e-14;
      const Trajectory tr =
          projected_gradient_descent(op, y, schedule, ConstraintSet::l1_ball(x.lpNorm<1>()), opts);
      if ((tr.final - x).norm() / spec.norm_x < spec.tol) ++pt.successes;
    }
    pt.rate = static_cast<double>(pt.successes) / static_cast<double>(pt.trials);
    res.points.push_back(pt);
  }
  std::vector<double> rates;
  for (const auto& p : res.points) rates.push_back(p.rate);
  const auto iso = isotonic_fit(rates);
  for (std::size_t i = 0; i < iso.size(); ++i) {
    res.points[i].isotonic = iso[i];
    res.max_isotonic_deviation = std::max(res.max_isotonic_deviation, std::abs(iso[i] - rates[i]));
  }
  return res;
}

void PhaseTransitionResult::write_csv(std::ostream& os) const {
  os << "m,successes,trials,rate,isotonic\n" << std::setprecision(17);
  for (const auto& p : points) os << p.m << ',' << p.successes << ',' << p.trials << ',' << p.rate << ',' << p.isotonic << '\n';
}

void write_reports_csv(std::ostream& os, const std::vector<BoundReport>& reports) {
  os << "quantity,norm_x,c,estimate,se,bound,minimum\n" << std::setprecision(17);
  for (const auto& r : reports) {
    const double nx = r.params.value("norm_x", std::numeric_limits<double>::quiet_NaN());
    for (const auto& p : r.sweep)
      os << r.quantity << ',' << nx << ',' << p.c << ',' << p.estimate << ',' << p.se << ',' << r.bound << ','
         << (p.estimate == r.estimate ? 1 : 0) << '\n';
  }
}

}  // namespace nlct
