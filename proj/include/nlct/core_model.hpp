#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "nlct/operators.hpp"

namespace nlct {

// The unknown density, flat in x-fastest order.
struct Signal {
  Vector values;
  std::optional<GridGeometry> geometry;
  bool nonneg = false;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  // Throws ShapeError on a length/grid mismatch and DomainError when the
  // nonneg flag is set but some entry is negative or any entry is non-finite.
  void validate() const;
};

enum class Storage { float64, float32 };

// Perturbations applied after the nonlinearity, in this order: additive
// Gaussian, quantization to 2^bits - 1 levels, clamp to [0, 1 - 2^-52],
// rounding to the storage type.
struct NoiseSpec {
  double gaussian_sigma = 0.0;
  unsigned quantization_bits = 0;  // 0 = off
  Storage storage = Storage::float64;

  bool noiseless() const { return gaussian_sigma == 0.0 && quantization_bits == 0 && storage == Storage::float64; }
  void validate() const;
};

struct MeasurementSet {
  Vector y;
  std::string op_id;
  std::uint64_t seed = 0;
  NoiseSpec noise;
};

// 1 - exp(-max(t, 0)). Saturates at the largest double below 1 so the
// result stays in [0, 1) even when exp underflows.
double beer_lambert(double t);

// 0 for t < 0, 1/2 at t = 0, exp(-t) for t > 0.
double beer_lambert_subgrad(double t);

MeasurementSet measure(const MeasurementOperator& op, const Signal& x, std::uint64_t seed = 0,
                       const NoiseSpec& noise = {});

// Which forward map the data term uses: the Beer-Lambert law on A z, or the
// plain linear model A z (for log-preprocessed data).
enum class ForwardModel { beer_lambert, linear };

struct LossEvaluation {
  double loss = 0.0;
  Vector grad;
};

// 1/(2m) sum_i (y_i - f(a_i^T z))^2 and its gradient
// 1/m sum_i a_i f'(a_i^T z) (f(a_i^T z) - y_i). Residuals are summed
// sequentially in row order, so results are bit-reproducible.
double loss(const MeasurementOperator& op, const Vector& y, const Vector& z,
            ForwardModel model = ForwardModel::beer_lambert);
Vector grad_loss(const MeasurementOperator& op, const Vector& y, const Vector& z,
                 ForwardModel model = ForwardModel::beer_lambert);
// Both at once, sharing the forward projection.
LossEvaluation evaluate(const MeasurementOperator& op, const Vector& y, const Vector& z,
                        ForwardModel model = ForwardModel::beer_lambert, bool with_gradient = true);

double loss(const MeasurementOperator& op, const MeasurementSet& y, const Signal& z);
Vector grad_loss(const MeasurementOperator& op, const MeasurementSet& y, const Signal& z);

}  // namespace nlct
