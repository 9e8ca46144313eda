#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nlct/errors.hpp"
#include "nlct/operators.hpp"
#include "nlct/rng.hpp"
#include "oracles.hpp"

using namespace nlct;

namespace {

Vector random_vector(std::size_t n, std::uint64_t seed) {
  Engine eng = make_engine(seed, 0);
  StandardNormal normal;
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = normal(eng);
  return v;
}

double adjoint_gap(const MeasurementOperator& op, std::uint64_t seed) {
  const Vector u = random_vector(op.cols(), seed);
  const Vector v = random_vector(op.rows(), seed + 1000);
  const double lhs = op.apply(u).dot(v);
  const double rhs = u.dot(op.apply_transpose(v));
  return std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs));
}

Radon2DOperator small_radon(std::size_t n = 12, std::size_t views = 9) {
  return Radon2DOperator(ParallelBeamGeometry::uniform(views, 2 * n, 0.7), GridGeometry{{n, n}, 1.0});
}

ConeBeamOperator small_cone(unsigned threads = 1) {
  ConeBeamGeometry g;
  g.orbit_radius = 20;
  g.source_detector_distance = 40;
  g.source_angles = ConeBeamGeometry::full_orbit(7);
  g.detector_rows = 9;
  g.detector_cols = 11;
  g.pixel_pitch = 2.2;
  g.sample_step = 0.5;
  return ConeBeamOperator(g, GridGeometry{{10, 9, 8}, 1.0}, ExecutionPolicy{threads});
}

}  // namespace

TEST_CASE("gaussian operator statistics and determinism") {
  SUBCASE("entry mean over many small matrices") {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::uint64_t s = 0; s < 1000000 / 6; ++s) {
      GaussianOperator op(3, 2, s);
      sum += op.matrix().sum();
      count += 6;
    }
    CHECK(std::abs(sum / static_cast<double>(count)) < 0.01);
  }
  SUBCASE("same seed, same matrix") {
    GaussianOperator a(5, 4, 42), b(5, 4, 42), c(5, 4, 43);
    CHECK(a.matrix() == b.matrix());
    CHECK(a.matrix() != c.matrix());
  }
  SUBCASE("row norm concentrates") {
    GaussianOperator op(4, 10000, 9);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(std::abs(op.matrix().row(i).squaredNorm() / 10000.0 - 1.0) < 0.05);
  }
  SUBCASE("rows regenerate in isolation") {
    GaussianOperator op(6, 5, 77);
    for (std::size_t i = 0; i < 6; ++i)
      CHECK(GaussianOperator::generate_row(77, i, 5).transpose() == op.matrix().row(static_cast<Eigen::Index>(i)));
  }
  SUBCASE("memory budget") {
    CHECK_THROWS_AS(GaussianOperator(1000, 1000, 1, 1000 * 999 * sizeof(double)), CapacityError);
    CHECK_THROWS_AS(GaussianOperator(0, 3, 1), ShapeError);
  }
}

TEST_CASE("radon2d geometric examples") {
  SUBCASE("zero image, zero sinogram") {
    auto op = small_radon();
    CHECK(op.apply(Vector::Zero(144)).isZero(0.0));
  }
  SUBCASE("single pixel, central axis-aligned ray") {
    ParallelBeamGeometry g{{0.0, std::numbers::pi / 2}, 1, 1.0};
    Radon2DOperator op(g, GridGeometry{{1, 1}, 1.0});
    const Vector y = op.apply(Vector::Constant(1, 3.5));
    CHECK(y[0] == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(3.5).epsilon(1e-15));
  }
  SUBCASE("ray missing the grid gives an empty row") {
    ParallelBeamGeometry g{{0.3}, 3, 10.0};
    Radon2DOperator op(g, GridGeometry{{4, 4}, 1.0});
    CHECK(op.row(0).empty());
    CHECK(op.row(2).empty());
    CHECK_FALSE(op.row(1).empty());
  }
  SUBCASE("diagonal chord through a square grid") {
    ParallelBeamGeometry g{{std::numbers::pi / 4}, 1, 1.0};
    Radon2DOperator op(g, GridGeometry{{8, 8}, 0.5});
    CHECK(op.apply(Vector::Ones(64))[0] == doctest::Approx(4.0 * std::numbers::sqrt2).epsilon(1e-12));
  }
}

TEST_CASE("radon2d uniform disk projections") {
  const std::size_t n = 64;
  const double radius = 20.0;
  Vector disk(static_cast<Eigen::Index>(n * n));
  for (std::size_t iy = 0; iy < n; ++iy)
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double x = static_cast<double>(ix) + 0.5 - n / 2.0;
      const double y = static_cast<double>(iy) + 0.5 - n / 2.0;
      disk[static_cast<Eigen::Index>(iy * n + ix)] = x * x + y * y <= radius * radius ? 1.0 : 0.0;
    }
  // Angles related by the symmetries of the square pixel grid. The bin
  // spacing keeps rays off pixel edges, where the chord assignment is a tie.
  const double q = std::numbers::pi / 4;
  ParallelBeamGeometry g{{0, 2 * q, 4 * q, 6 * q, q, 3 * q, 5 * q, 7 * q, 0.3, 1.1}, 91, 0.77};
  Radon2DOperator op(g, GridGeometry{{n, n}, 1.0});
  const Vector y = op.apply(disk);
  auto view = [&](std::size_t k, std::size_t b) { return y[static_cast<Eigen::Index>(k * 91 + b)]; };

  for (std::size_t k = 0; k < g.angles.size(); ++k)
    for (std::size_t b = 0; b < 91; ++b) CHECK(std::abs(view(k, b) - view(k, 90 - b)) < 1e-8);
  for (std::size_t b = 0; b < 91; ++b) {
    for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(view(k, b) - view(0, b)) < 1e-8);
    for (std::size_t k = 5; k < 8; ++k) CHECK(std::abs(view(k, b) - view(4, b)) < 1e-8);
  }
  // Every view approximates the continuous chord 2 sqrt(R^2 - s^2).
  for (std::size_t k = 0; k < g.angles.size(); ++k) {
    double err = 0.0, ref = 0.0;
    for (std::size_t b = 0; b < 91; ++b) {
      const double s = (static_cast<double>(b) - 45.0) * 0.77;
      const double chord = s * s < radius * radius ? 2.0 * std::sqrt(radius * radius - s * s) : 0.0;
      err += std::abs(view(k, b) - chord);
      ref += chord;
    }
    CHECK(err / ref < 0.03);
  }
}

TEST_CASE("conebeam3d examples") {
  SUBCASE("zero volume, zero projections") {
    auto op = small_cone();
    CHECK(op.apply(Vector::Zero(720)).isZero(0.0));
  }
  SUBCASE("central voxel line integral") {
    for (double step : {0.5, 0.25, 0.3}) {
      ConeBeamGeometry g;
      g.orbit_radius = 10;
      g.source_detector_distance = 20;
      g.source_angles = {0.0, std::numbers::pi / 2, 1.0};
      g.detector_rows = 1;
      g.detector_cols = 1;
      g.pixel_pitch = 1.0;
      g.sample_step = step;
      const double h = 0.8;
      ConeBeamOperator op(g, GridGeometry{{5, 5, 5}, h});
      Vector x = Vector::Zero(125);
      x[62] = 1.0;  // voxel (2, 2, 2)
      const Vector y = op.apply(x);
      for (Eigen::Index i = 0; i < y.size(); ++i) CHECK(std::abs(y[i] - h) <= 2.0 * step * h);
    }
  }
  SUBCASE("source inside the volume") {
    ConeBeamGeometry g;
    g.orbit_radius = 3;
    g.source_detector_distance = 30;
    g.source_angles = {0.0};
    g.detector_rows = g.detector_cols = 2;
    CHECK_THROWS_AS(ConeBeamOperator(g, GridGeometry{{16, 16, 16}, 1.0}), GeometryError);
  }
  SUBCASE("2D grid rejected") {
    ConeBeamGeometry g;
    g.orbit_radius = 30;
    g.source_detector_distance = 60;
    g.source_angles = {0.0};
    g.detector_rows = g.detector_cols = 2;
    CHECK_THROWS_AS(ConeBeamOperator(g, GridGeometry{{16, 16}, 1.0}), ShapeError);
  }
}

TEST_CASE("adjoint identity for every operator kind") {
  GaussianOperator gauss(40, 25, 3);
  auto radon = small_radon();
  auto cone = small_cone();
  for (std::uint64_t s = 0; s < 100; ++s) {
    CHECK(adjoint_gap(gauss, s) < 1e-10);
    CHECK(adjoint_gap(radon, s) < 1e-10);
    CHECK(adjoint_gap(cone, s) < 1e-10);
  }
}

TEST_CASE("basis probes and matrix-free vs explicit apply") {
  auto radon = small_radon(16, 11);
  auto cone = small_cone();
  GaussianOperator gauss(30, 17, 5);
  for (const MeasurementOperator* op : std::initializer_list<const MeasurementOperator*>{&radon, &cone, &gauss}) {
    const auto a = op->materialize();
    const Vector u = random_vector(op->cols(), 8);
    const Vector v = random_vector(op->rows(), 9);
    CHECK(oracle::relative_error(op->apply(u), a * u) < 1e-12);
    CHECK(oracle::relative_error(op->apply_transpose(v), a.transpose() * v) < 1e-12);
    for (std::size_t j : {std::size_t{0}, op->cols() / 2, op->cols() - 1}) {
      Vector e = Vector::Zero(static_cast<Eigen::Index>(op->cols()));
      e[static_cast<Eigen::Index>(j)] = 1.0;
      const Vector col = a * e;
      CHECK(oracle::relative_error(op->apply(e), col) < 1e-12);
    }
    CHECK(op->apply(Vector::Zero(static_cast<Eigen::Index>(op->cols()))).isZero(0.0));
  }
}

TEST_CASE("ray operators have nonnegative sparse rows") {
  auto radon = small_radon();
  auto cone = small_cone();
  for (const MeasurementOperator* op : std::initializer_list<const MeasurementOperator*>{&radon, &cone}) {
    for (std::size_t i = 0; i < op->rows(); ++i) {
      const auto r = op->row(i);
      CHECK(r.size() < op->cols());
      for (std::size_t k = 0; k < r.size(); ++k) {
        CHECK(r[k].weight > 0.0);
        if (k) CHECK(r[k].col > r[k - 1].col);
      }
    }
  }
}

TEST_CASE("threaded apply matches single-threaded") {
  auto one = small_cone(1);
  auto four = small_cone(4);
  const Vector u = random_vector(one.cols(), 21);
  const Vector v = random_vector(one.rows(), 22);
  CHECK(one.apply(u) == four.apply(u));
  CHECK((one.apply_transpose(v) - four.apply_transpose(v)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(four.apply_transpose(v) == four.apply_transpose(v));

  Radon2DOperator r1(ParallelBeamGeometry::uniform(13, 20, 1.0), GridGeometry{{14, 14}, 1.0}, {1});
  Radon2DOperator r3(ParallelBeamGeometry::uniform(13, 20, 1.0), GridGeometry{{14, 14}, 1.0}, {3});
  const Vector w = random_vector(196, 23);
  CHECK(r1.apply(w) == r3.apply(w));
}

TEST_CASE("shape errors") {
  auto radon = small_radon();
  CHECK_THROWS_AS(radon.apply(Vector::Zero(3)), ShapeError);
  CHECK_THROWS_AS(radon.apply_transpose(Vector::Zero(3)), ShapeError);
  CHECK_THROWS_AS(Radon2DOperator(ParallelBeamGeometry::uniform(3, 4, 1.0), GridGeometry{{4, 5}, 1.0}), ShapeError);
  CHECK_THROWS_AS(Radon2DOperator(ParallelBeamGeometry::uniform(3, 4, 0.0), GridGeometry{{4, 4}, 1.0}), GeometryError);
}

TEST_CASE("geometry JSON blocks") {
  const auto pb = parallel_beam_from_json(nlohmann::json{{"angle_count", 6}, {"detector_bins", 10}});
  CHECK(pb.angles.size() == 6);
  CHECK(pb.detector_spacing == 1.0);
  const auto round = parallel_beam_from_json(to_json(pb));
  CHECK(round.angles == pb.angles);

  const auto cb = cone_beam_from_json(nlohmann::json{{"orbit_radius", 50},
                                                     {"source_detector_distance", 100},
                                                     {"source_count", 12},
                                                     {"detector_rows", 8},
                                                     {"detector_cols", 9},
                                                     {"sample_step", 0.25}});
  CHECK(cb.source_angles.size() == 12);
  CHECK(cb.sample_step == 0.25);
  CHECK(cone_beam_from_json(to_json(cb)).source_angles == cb.source_angles);

  try {
    cone_beam_from_json(nlohmann::json{{"orbit_radius", 50}, {"source_detector_distance", 100}, {"source_count", 12},
                                       {"detector_rows", 0}, {"detector_cols", 9}});
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.path() == "geometry.detector_rows");
  }
  try {
    parallel_beam_from_json(nlohmann::json{{"angle_count", 6}, {"detector_bins", 10}, {"pitch", 1}});
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.path() == "geometry.pitch");
  }
}

TEST_CASE("power iteration") {
  GaussianOperator op(30, 10, 4);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(op.matrix().transpose() * op.matrix()).eigenvalues();
  CHECK(estimate_squared_norm(op, 200) == doctest::Approx(ev.maxCoeff()).epsilon(1e-6));
}
