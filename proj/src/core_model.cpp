#include "nlct/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlct/errors.hpp"
#include "nlct/rng.hpp"

namespace nlct {

namespace {

constexpr double below_one = 1.0 - 0x1p-53;
constexpr double measurement_ceiling = 1.0 - 0x1p-52;

void require_finite(double t, const char* what) {
  if (!std::isfinite(t)) throw DomainError(std::string(what) + ": non-finite argument");
}

void check_lengths(const MeasurementOperator& op, const Vector& y, const Vector& z) {
  if (static_cast<std::size_t>(y.size()) != op.rows())
    throw ShapeError("measurement length " + std::to_string(y.size()) + " != operator rows " +
                     std::to_string(op.rows()));
  if (static_cast<std::size_t>(z.size()) != op.cols())
    throw ShapeError("signal length " + std::to_string(z.size()) + " != operator columns " +
                     std::to_string(op.cols()));
}

}  // namespace

void Signal::validate() const {
  if (geometry) {
    geometry->validate();
    if (geometry->size() != size())
      throw ShapeError("signal length " + std::to_string(size()) + " != grid size " +
                       std::to_string(geometry->size()));
  }
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw DomainError("signal entry " + std::to_string(i) + " is not finite");
    if (nonneg && values[i] < 0.0) throw DomainError("signal entry " + std::to_string(i) + " is negative");
  }
}

void NoiseSpec::validate() const {
  if (!(gaussian_sigma >= 0.0) || !std::isfinite(gaussian_sigma)) throw DomainError("noise sigma must be >= 0");
  if (quantization_bits > 52) throw DomainError("quantization bits must be <= 52");
}

double beer_lambert(double t) {
  require_finite(t, "beer_lambert");
  if (t <= 0.0) return 0.0;
  return std::min(-std::expm1(-t), below_one);
}

double beer_lambert_subgrad(double t) {
  require_finite(t, "beer_lambert_subgrad");
  if (t < 0.0) return 0.0;
  if (t == 0.0) return 0.5;
  return std::exp(-t);
}

MeasurementSet measure(const MeasurementOperator& op, const Signal& x, std::uint64_t seed, const NoiseSpec& noise) {
  if (x.size() != op.cols())
    throw ShapeError("signal length " + std::to_string(x.size()) + " != operator columns " +
                     std::to_string(op.cols()));
  noise.validate();
  MeasurementSet out;
  out.op_id = op.id();
  out.seed = seed;
  out.noise = noise;
  out.y = op.apply(x.values);
  for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y[i] = beer_lambert(out.y[i]);

  if (noise.gaussian_sigma > 0.0) {
    Engine eng = make_engine(seed, 0);
    StandardNormal normal;
    for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y[i] += noise.gaussian_sigma * normal(eng);
  }
  if (noise.quantization_bits > 0) {
    const double levels = std::ldexp(1.0, static_cast<int>(noise.quantization_bits)) - 1.0;
    for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y[i] = std::nearbyint(out.y[i] * levels) / levels;
  }
  if (!noise.noiseless())
    for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y[i] = std::clamp(out.y[i], 0.0, measurement_ceiling);
  if (noise.storage == Storage::float32)
    for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y[i] = static_cast<double>(static_cast<float>(out.y[i]));
  return out;
}

LossEvaluation evaluate(const MeasurementOperator& op, const Vector& y, const Vector& z, ForwardModel model,
                        bool with_gradient) {
  check_lengths(op, y, z);
  const Vector az = op.apply(z);
  const auto m = static_cast<double>(y.size());
  Vector weighted(y.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    require_finite(az[i], "loss");
    double r;
    double slope;
    if (model == ForwardModel::linear) {
      r = az[i] - y[i];
      slope = 1.0;
    } else {
      r = beer_lambert(az[i]) - y[i];
      slope = beer_lambert_subgrad(az[i]);
    }
    sum += r * r;
    weighted[i] = slope * r / m;
  }
  LossEvaluation ev;
  ev.loss = sum / (2.0 * m);
  if (with_gradient) ev.grad = op.apply_transpose(weighted);
  return ev;
}

double loss(const MeasurementOperator& op, const Vector& y, const Vector& z, ForwardModel model) {
  return evaluate(op, y, z, model, false).loss;
}

Vector grad_loss(const MeasurementOperator& op, const Vector& y, const Vector& z, ForwardModel model) {
  return evaluate(op, y, z, model, true).grad;
}

double loss(const MeasurementOperator& op, const MeasurementSet& y, const Signal& z) {
  return loss(op, y.y, z.values);
}

Vector grad_loss(const MeasurementOperator& op, const MeasurementSet& y, const Signal& z) {
  return grad_loss(op, y.y, z.values);
}

}  // namespace nlct
