#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "nlct/core_model.hpp"
#include "nlct/errors.hpp"
#include "nlct/rng.hpp"
#include "oracles.hpp"

using namespace nlct;

namespace {

// Small explicit operator for hand-checked examples.
class DenseOp final : public MeasurementOperator {
public:
  explicit DenseOp(Eigen::MatrixXd a) : a_(std::move(a)) {}
  std::size_t rows() const override { return static_cast<std::size_t>(a_.rows()); }
  std::size_t cols() const override { return static_cast<std::size_t>(a_.cols()); }
  OperatorKind kind() const override { return OperatorKind::gaussian; }
  std::string id() const override { return "dense"; }
  std::vector<RowEntry> row(std::size_t i) const override {
    std::vector<RowEntry> r;
    for (Eigen::Index j = 0; j < a_.cols(); ++j) r.push_back({static_cast<std::size_t>(j), a_(static_cast<Eigen::Index>(i), j)});
    return r;
  }

protected:
  void apply_impl(const Vector& x, Vector& out) const override { out = a_ * x; }
  void apply_transpose_impl(const Vector& r, Vector& out) const override { out = a_.transpose() * r; }

private:
  Eigen::MatrixXd a_;
};

Signal plain(const Vector& v) { return Signal{v, std::nullopt, false}; }

}  // namespace

TEST_CASE("beer_lambert examples") {
  CHECK(beer_lambert(0.0) == 0.0);
  CHECK(beer_lambert(-3.0) == 0.0);
  CHECK(beer_lambert(std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(beer_lambert(1e6) < 1.0);
  CHECK_THROWS_AS(beer_lambert(std::numeric_limits<double>::quiet_NaN()), DomainError);
  CHECK_THROWS_AS(beer_lambert(INFINITY), DomainError);
}

TEST_CASE("beer_lambert_subgrad examples") {
  CHECK(beer_lambert_subgrad(-1.0) == 0.0);
  CHECK(beer_lambert_subgrad(0.0) == 0.5);
  CHECK(beer_lambert_subgrad(std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(beer_lambert_subgrad(-INFINITY), DomainError);
}

TEST_CASE("beer_lambert is monotone, 1-Lipschitz and inside [0, 1)") {
  Engine eng = make_engine(11, 0);
  for (int k = 0; k < 10000; ++k) {
    const double a = 40.0 * (uniform01(eng) - 0.25);
    const double b = 40.0 * (uniform01(eng) - 0.25);
    const double fa = beer_lambert(a), fb = beer_lambert(b);
    CHECK(fa >= 0.0);
    CHECK(fa < 1.0);
    if (a <= b) CHECK(fa <= fb);
    CHECK(std::abs(fa - fb) <= std::abs(a - b) + 1e-16);
  }
}

TEST_CASE("measure examples") {
  SUBCASE("zero signal gives zero measurements") {
    GaussianOperator op(30, 7, 3);
    CHECK(measure(op, plain(Vector::Zero(7))).y.isZero(0.0));
  }
  SUBCASE("single row") {
    DenseOp op(Eigen::MatrixXd::Constant(1, 1, 1.0));
    CHECK(measure(op, plain(Vector::Constant(1, std::log(2.0)))).y[0] == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("two rows against extended-precision exp") {
    Eigen::MatrixXd a(2, 2);
    a << 1, 0, 0, -5;
    DenseOp op(a);
    const Vector y = measure(op, plain(Vector::Ones(2))).y;
    const long double expected = 1.0L - std::exp(-1.0L);
    CHECK(std::abs(y[0] - static_cast<double>(expected)) < 1e-16);
    CHECK(y[1] == 0.0);
  }
  SUBCASE("shape mismatch") {
    GaussianOperator op(4, 3, 1);
    CHECK_THROWS_AS(measure(op, plain(Vector::Zero(2))), ShapeError);
  }
}

TEST_CASE("measure is deterministic and noise is reproducible") {
  GaussianOperator op(200, 20, 5);
  Engine eng = make_engine(5, 99);
  StandardNormal normal;
  Vector x(20);
  for (auto& v : x) v = normal(eng);
  NoiseSpec noise;
  noise.gaussian_sigma = 0.01;
  noise.quantization_bits = 12;
  const auto a = measure(op, plain(x), 17, noise);
  const auto b = measure(op, plain(x), 17, noise);
  CHECK(a.y == b.y);
  CHECK(a.op_id == op.id());
  for (double v : a.y) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 - 0x1p-52);
    CHECK(std::abs(v * 4095.0 - std::nearbyint(v * 4095.0)) < 1e-9);
  }
  const auto c = measure(op, plain(x), 18, noise);
  CHECK(a.y != c.y);
}

TEST_CASE("float32 storage rounds measurements last") {
  Eigen::MatrixXd a(3, 1);
  a << 1, 20, 40;
  DenseOp op(a);
  NoiseSpec noise;
  noise.storage = Storage::float32;
  const Vector y = measure(op, plain(Vector::Ones(1)), 0, noise).y;
  CHECK(y[0] == static_cast<double>(static_cast<float>(1.0 - std::exp(-1.0))));
  CHECK(y[1] == 1.0);  // 1 - e^-20 is not representable below 1 in float32
  CHECK(y[2] == 1.0);
}

TEST_CASE("loss examples") {
  GaussianOperator op(50, 8, 2);
  Engine eng = make_engine(2, 1);
  StandardNormal normal;
  Vector x(8);
  for (auto& v : x) v = normal(eng);
  const auto y = measure(op, plain(x));
  CHECK(loss(op, y, plain(x)) < 1e-24);
  CHECK(loss(op, Vector::Zero(50), Vector::Zero(8)) == 0.0);

  Eigen::MatrixXd a(2, 1);
  a << -1, -1;
  DenseOp neg(a);
  Vector yv(2);
  yv << 0.5, 0.0;
  CHECK(loss(neg, yv, Vector::Ones(1)) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK_THROWS_AS(loss(neg, Vector::Zero(3), Vector::Ones(1)), ShapeError);
}

TEST_CASE("grad_loss examples") {
  GaussianOperator op(60, 10, 4);
  Engine eng = make_engine(4, 1);
  StandardNormal normal;
  Vector x(10);
  for (auto& v : x) v = normal(eng);
  const Vector y = measure(op, plain(x)).y;

  CHECK(grad_loss(op, y, x).norm() < 1e-15);

  // At z = 0 every row sits on the kink: f(0) = 0, f'(0) = 1/2.
  const Vector expected = -op.matrix().transpose() * y / (2.0 * 60.0);
  CHECK(oracle::relative_error(grad_loss(op, y, Vector::Zero(10)), expected) < 1e-14);
  CHECK_THROWS_AS(grad_loss(op, y, Vector::Zero(9)), ShapeError);
}

TEST_CASE("grad_loss matches central differences away from kinks") {
  const double h = 1e-6;
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 5 && seed < 200; ++seed) {
    GaussianOperator op(40, 6, seed);
    Engine eng = make_engine(seed, 7);
    StandardNormal normal;
    Vector x(6), z(6);
    for (auto& v : x) v = normal(eng);
    for (auto& v : z) v = normal(eng);
    if ((op.apply(z).cwiseAbs().minCoeff()) <= 10 * h) continue;
    const Vector y = measure(op, Signal{x, std::nullopt, false}).y;
    const Vector g = grad_loss(op, y, z);
    const Vector fd = oracle::fd_gradient([&](const Vector& v) { return loss(op, y, v); }, z, h);
    CHECK(oracle::relative_error(g, fd) < 1e-5);
    ++checked;
  }
  CHECK(checked == 5);
}

TEST_CASE("linear forward model") {
  GaussianOperator op(30, 5, 8);
  const Vector z = Vector::LinSpaced(5, -1.0, 1.0);
  const Vector y = op.apply(z);
  CHECK(loss(op, y, z, ForwardModel::linear) == 0.0);
  const Vector yz = Vector::Zero(30);
  const Vector expected = op.matrix().transpose() * (op.apply(z) - yz) / 30.0;
  CHECK(oracle::relative_error(grad_loss(op, yz, z, ForwardModel::linear), expected) < 1e-14);
}

TEST_CASE("signal validation") {
  Signal s;
  s.values = Vector::Zero(12);
  s.geometry = GridGeometry{{3, 4}, 1.0};
  CHECK_NOTHROW(s.validate());
  s.geometry = GridGeometry{{3, 5}, 1.0};
  CHECK_THROWS_AS(s.validate(), ShapeError);
  s.geometry.reset();
  s.nonneg = true;
  s.values[3] = -1e-3;
  CHECK_THROWS_AS(s.validate(), DomainError);
}
