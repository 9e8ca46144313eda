#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "nlct/errors.hpp"
#include "nlct/optimize.hpp"
#include "nlct/rng.hpp"
#include "oracles.hpp"

using namespace nlct;

namespace {

Vector gaussian_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Engine eng = make_engine(seed, 3);
  StandardNormal normal;
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = scale * normal(eng);
  return v;
}

Vector scaled_to(Vector v, double norm) { return v * (norm / v.norm()); }

// Variational inequality (v - p).(w - p) <= 0 checked at every vertex w of a
// polytope, which is equivalent to p being its Euclidean projection.
double worst_vertex_product(const Vector& v, const Vector& p, const std::vector<Vector>& vertices) {
  double worst = -INFINITY;
  for (const auto& w : vertices) worst = std::max(worst, (v - p).dot(w - p));
  return worst;
}

std::vector<Vector> l1_vertices(std::size_t n, double r, bool nonneg) {
  std::vector<Vector> out;
  if (nonneg) out.push_back(Vector::Zero(static_cast<Eigen::Index>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(n));
    e[static_cast<Eigen::Index>(i)] = r;
    out.push_back(e);
    if (!nonneg) out.push_back(-e);
  }
  return out;
}

}  // namespace

TEST_CASE("erfcx against independent references") {
  for (double x = 0.0; x <= 2.0; x += 0.0625) {
    const long double ref = std::exp(static_cast<long double>(x) * x) * oracle::erfc_series(x);
    CHECK(std::abs(erfcx(x) - static_cast<double>(ref)) <= 1e-14 * static_cast<double>(ref));
  }
  for (double x = 10.0; x <= 1e6; x *= 1.7) {
    const long double ref = oracle::erfcx_asymptotic(x);
    CHECK(std::abs(erfcx(x) - static_cast<double>(ref)) <= 1e-14 * static_cast<double>(ref));
  }
  // Frozen high-precision values around the switch between evaluation paths.
  CHECK(erfcx(5.0) == doctest::Approx(0.11070463773306863).epsilon(1e-14));
  CHECK(erfcx(6.0) == doctest::Approx(0.092776567800538354).epsilon(1e-14));
  CHECK(erfcx(30.0) == doctest::Approx(0.018795888861416751).epsilon(1e-14));
  CHECK(erfcx(100.0) == doctest::Approx(0.0056416137829894329).epsilon(1e-14));
  CHECK(std::abs(erfcx(std::nextafter(5.0, 0.0)) - erfcx(5.0)) < 1e-14);
  CHECK_THROWS_AS(erfcx(NAN), DomainError);
}

TEST_CASE("step_size_mu1 examples") {
  CHECK(step_size_mu1(0.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(step_size_mu1(0.5) == doctest::Approx(5.720515605514981).epsilon(1e-12));
  CHECK(step_size_mu1(1.0) == doctest::Approx(7.645894411724550).epsilon(1e-12));
  CHECK(step_size_mu1(2.0) == doctest::Approx(11.897538312734416).epsilon(1e-12));
  CHECK(step_size_mu1(3.0) == doctest::Approx(16.459015833703277).epsilon(1e-12));
  CHECK(std::isfinite(step_size_mu1(60.0)));
  CHECK_THROWS_AS(step_size_mu1(-0.1), DomainError);
  CHECK_THROWS_AS(step_size_mu1(INFINITY), DomainError);
}

TEST_CASE("step_size_mu1 matches the series oracle and grows with the norm") {
  double prev = 0.0;
  for (double t = 0.0; t <= 2.8; t += 0.05) {
    const long double ref = 4.0L * std::exp(-0.5L * t * t) / oracle::erfc_series(t / std::numbers::sqrt2_v<long double>);
    CHECK(step_size_mu1(t) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
    CHECK(step_size_mu1(t) > prev);
    prev = step_size_mu1(t);
  }
}

TEST_CASE("step schedules") {
  const auto s = StepSchedule::theorem(1.0);
  CHECK(s.step(1) == doctest::Approx(7.645894411724550).epsilon(1e-12));
  CHECK(s.step(2) == doctest::Approx(100.0 * std::exp(-5.0)).epsilon(1e-15));
  CHECK(s.step(50) == s.step(2));
  CHECK(StepSchedule::theorem(1.0, 1.0).step(3) == doctest::Approx(std::exp(-5.0)));
  CHECK_THROWS_AS(s.step(0), DomainError);

  const auto c = StepSchedule::constant(0.25);
  CHECK(c.step(1) == 0.25);
  CHECK(c.step(9) == 0.25);

  const auto u = StepSchedule::custom({1.0, 2.0, 3.0});
  CHECK(u.step(2) == 2.0);
  CHECK(u.step(10) == 3.0);
  CHECK_THROWS_AS(StepSchedule::custom({}), DomainError);
  CHECK_THROWS_AS(StepSchedule::custom({1.0, -2.0}), DomainError);
  CHECK_THROWS_AS(StepSchedule::constant(0.0), DomainError);
  CHECK_THROWS_AS(StepSchedule::theorem(-1.0), DomainError);
}

TEST_CASE("l1 projection examples") {
  const auto ball = ConstraintSet::l1_ball(1.0);
  Vector v(2);
  v << 3.0, 0.0;
  CHECK(project(ball, v).isApprox(Vector::Unit(2, 0)));
  v << 0.25, -0.5;
  CHECK(project(ball, v) == v);
  v << 1.0, 1.0;
  Vector half(2);
  half << 0.5, 0.5;
  CHECK((project(ball, v) - half).norm() < 1e-15);
  CHECK_THROWS_AS(project(ConstraintSet::l1_ball(0.0), v), DomainError);
  CHECK_THROWS_AS(project(ConstraintSet{ConstraintKind::tv_ball_unsupported, 1.0}, v), DomainError);
}

TEST_CASE("l1 projection agrees with the diamond oracles in 2D") {
  Engine eng = make_engine(5, 0);
  for (int k = 0; k < 2000; ++k) {
    const double r = 0.1 + 3.0 * uniform01(eng);
    Vector v(2);
    v << 8.0 * (uniform01(eng) - 0.5), 8.0 * (uniform01(eng) - 0.5);
    const Vector p = project(ConstraintSet::l1_ball(r), v);
    const auto q = oracle::project_diamond(v[0], v[1], r);
    CHECK(std::abs(p[0] - q[0]) < 1e-12);
    CHECK(std::abs(p[1] - q[1]) < 1e-12);
    if (k < 20) {
      const auto g = oracle::project_diamond_grid(v[0], v[1], r);
      CHECK(std::abs(p[0] - g[0]) < 1e-7);
      CHECK(std::abs(p[1] - g[1]) < 1e-7);
    }
  }
}

TEST_CASE("projection properties in higher dimension") {
  const std::size_t n = 40;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const double r = 0.5 + static_cast<double>(seed % 7);
    const Vector v = gaussian_vector(n, seed, 2.0);
    const Vector w = gaussian_vector(n, seed + 5000, 2.0);
    for (auto set : {ConstraintSet::l1_ball(r), ConstraintSet::nonneg_l1(r)}) {
      const bool nonneg = set.kind == ConstraintKind::nonneg_l1;
      const Vector p = project(set, v);
      CHECK(p.lpNorm<1>() <= r * (1 + 1e-12));
      if (nonneg) CHECK(p.minCoeff() >= 0.0);
      CHECK((project(set, p) - p).norm() <= 1e-12 * std::max(1.0, p.norm()));
      CHECK((project(set, v) - project(set, w)).norm() <= (v - w).norm() + 1e-12);
      CHECK(worst_vertex_product(v, p, l1_vertices(n, r, nonneg)) <= 1e-10);
    }
    const Vector pn = project(ConstraintSet::nonneg(), v);
    CHECK(pn == v.cwiseMax(0.0));
    CHECK(project(ConstraintSet::full_space(), v) == v);
  }
}

TEST_CASE("total variation examples") {
  GridGeometry line{{5}, 1.0};
  Vector ramp(5);
  ramp << 0, 1, 2, 3, 4;
  CHECK(tv_value(ramp, line, 0.0) == 4.0);
  CHECK(tv_value(Vector::Constant(5, 3.0), line) == doctest::Approx(4e-8).epsilon(1e-12));

  GridGeometry square{{3, 3}, 1.0};
  Vector spike = Vector::Zero(9);
  spike[4] = 1.0;
  CHECK(tv_value(spike, square, 0.0) == 4.0);
  CHECK_THROWS_AS(tv_value(Vector::Zero(8), square), ShapeError);
  Signal no_grid{Vector::Zero(9), std::nullopt, false};
  CHECK_THROWS_AS(tv_value(no_grid), ShapeError);
}

TEST_CASE("tv_subgradient is the gradient of the smoothed value") {
  GridGeometry grid{{4, 3, 5}, 1.0};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Vector z = gaussian_vector(grid.size(), seed);
    const double eps = 0.05;
    const Vector fd = oracle::fd_gradient([&](const Vector& v) { return tv_value(v, grid, eps); }, z, 1e-6);
    CHECK(oracle::relative_error(tv_subgradient(z, grid, eps), fd) < 1e-6);
  }
}

TEST_CASE("mean_measurement and its inverse") {
  CHECK(mean_measurement(0.0) == 0.0);
  CHECK(mean_measurement(0.5) == doctest::Approx(0.15038116527960193).epsilon(1e-13));
  CHECK(mean_measurement(1.0) == doctest::Approx(0.23842170813487663).epsilon(1e-13));
  CHECK(mean_measurement(2.0) == doctest::Approx(0.33189799877682939).epsilon(1e-13));
  for (double t : {0.01, 0.3, 1.0, 2.5, 7.0, 20.0}) {
    const Vector y = Vector::Constant(4, mean_measurement(t));
    CHECK(estimate_signal_norm(y) == doctest::Approx(t).epsilon(1e-8));
  }
  CHECK(estimate_signal_norm(Vector::Constant(3, 0.4999)) == 50.0);
  CHECK(estimate_signal_norm(Vector::Constant(3, -0.01)) == 0.0);
  CHECK_THROWS_AS(estimate_signal_norm(Vector::Constant(3, 1.0)), DomainError);
  CHECK_THROWS_AS(estimate_signal_norm(Vector()), ShapeError);
}

TEST_CASE("norm estimate from simulated Gaussian measurements") {
  const std::size_t n = 30, m = 40000;
  GaussianOperator op(m, n, 12);
  for (double t : {0.5, 1.5, 3.0}) {
    const Vector x = scaled_to(gaussian_vector(n, 77), t);
    const auto y = measure(op, Signal{x, std::nullopt, false});
    CHECK(estimate_signal_norm(y) == doctest::Approx(t).epsilon(0.05));
  }
}

TEST_CASE("gradient descent basics") {
  GaussianOperator op(300, 20, 1);
  SUBCASE("zero is a fixed point for zero data") {
    const auto traj = gradient_descent(op, Vector::Zero(300), StepSchedule::theorem(0.0));
    CHECK(traj.converged);
    CHECK(traj.iterations() == 0);
    CHECK(traj.final.isZero(0.0));
  }
  SUBCASE("records, reference error and csv") {
    const Vector x = scaled_to(gaussian_vector(20, 2), 1.0);
    const Vector y = measure(op, Signal{x, std::nullopt, false}).y;
    DescentOptions opt;
    opt.max_iter = 25;
    opt.x_ref = x;
    const auto traj = gradient_descent(op, y, StepSchedule::theorem(1.0), opt);
    REQUIRE(traj.records.size() == 26);
    CHECK(traj.records[0].err == doctest::Approx(1.0));
    CHECK(traj.records[1].step == doctest::Approx(step_size_mu1(1.0)));
    CHECK(traj.records.back().err < traj.records[0].err);
    std::ostringstream os;
    traj.write_csv(os);
    std::string header;
    std::getline(std::istringstream(os.str()), header);
    CHECK(header == "iter,err,loss,grad_norm,time_ms");
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(gradient_descent(op, Vector::Zero(299), StepSchedule::constant(1.0)), ShapeError);
  }
}

TEST_CASE("halving caps oversized steps and keeps the objective from rising") {
  GaussianOperator op(200, 10, 3);
  const Vector x = scaled_to(gaussian_vector(10, 3), 1.0);
  const Vector y = measure(op, Signal{x, std::nullopt, false}).y;
  DescentOptions opt;
  opt.max_iter = 40;
  const auto traj = gradient_descent(op, y, StepSchedule::constant(500.0), opt);
  CHECK(traj.halvings > 0);
  CHECK(traj.halvings <= 20);
  for (std::size_t t = 2; t < traj.records.size(); ++t)
    if (traj.halvings < 20) CHECK(traj.records[t].loss <= traj.records[t - 1].loss);
}

TEST_CASE("divergence is reported") {
  GaussianOperator op(20, 4, 1);
  DescentOptions opt;
  opt.model = ForwardModel::linear;
  opt.max_iter = 2000;
  auto schedule = StepSchedule::constant(1e6);
  schedule.halving = false;
  CHECK_THROWS_AS(gradient_descent(op, Vector::Ones(20), schedule, opt), DivergenceError);
}

TEST_CASE("projected descent") {
  GaussianOperator op(150, 25, 6);
  const Vector x = scaled_to(gaussian_vector(25, 6), 1.0);
  const Vector y = measure(op, Signal{x, std::nullopt, false}).y;
  DescentOptions opt;
  opt.max_iter = 60;
  const auto schedule = StepSchedule::theorem(1.0);

  const auto free_run = gradient_descent(op, y, schedule, opt);
  const auto full = projected_gradient_descent(op, y, schedule, ConstraintSet::full_space(), opt);
  CHECK(free_run.final == full.final);
  REQUIRE(free_run.records.size() == full.records.size());
  for (std::size_t t = 0; t < full.records.size(); ++t) CHECK(free_run.records[t].loss == full.records[t].loss);

  const double r = x.lpNorm<1>();
  const auto l1 = projected_gradient_descent(op, y, schedule, ConstraintSet::l1_ball(r), opt);
  CHECK(l1.final.lpNorm<1>() <= r * (1 + 1e-12));

  const auto nonneg = projected_gradient_descent(op, y, schedule, ConstraintSet::nonneg(), opt);
  CHECK(nonneg.final.minCoeff() >= 0.0);
  CHECK_THROWS_AS(projected_gradient_descent(op, y, schedule, ConstraintSet::l1_ball(-1.0), opt), DomainError);
}

TEST_CASE("regularized descent") {
  GridGeometry grid{{6, 6}, 1.0};
  GaussianOperator op(200, 36, 8);
  Vector x = Vector::Zero(36);
  x.segment(14, 3).setConstant(0.4);
  const Vector y = measure(op, Signal{x, grid, true}).y;
  DescentOptions opt;
  opt.max_iter = 30;
  const auto schedule = StepSchedule::constant(20.0);

  const auto plain = regularized_descent(op, y, schedule, 0.0, grid, opt);
  const auto clamped = projected_gradient_descent(op, y, schedule, ConstraintSet::nonneg(), opt);
  CHECK(plain.final == clamped.final);

  const auto tv = regularized_descent(op, y, schedule, 1e-3, grid, opt);
  CHECK(tv.final.minCoeff() >= 0.0);
  CHECK(tv.records.back().loss < tv.records.front().loss);
  CHECK(tv_value(tv.final, grid) < tv_value(plain.final, grid) + 1e-12);
  CHECK_THROWS_AS(regularized_descent(op, y, schedule, -1.0, grid, opt), DomainError);
  CHECK_THROWS_AS(regularized_descent(op, y, schedule, 0.0, GridGeometry{{5, 5}, 1.0}, opt), ShapeError);
}
