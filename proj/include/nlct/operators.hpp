#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <json.hpp>

namespace nlct {

using Vector = Eigen::VectorXd;

// Regular voxel grid centred on the origin, x-fastest storage order.
// 1 to 3 axes; `spacing` is the physical edge length of a voxel.
struct GridGeometry {
  std::vector<std::size_t> dims;
  double spacing = 1.0;

  std::size_t size() const;
  void validate() const;
};

enum class OperatorKind { gaussian, radon2d, conebeam3d };
std::string to_string(OperatorKind kind);

// Threads used inside apply/apply_transpose. Every ray or row writes only its
// own output slot; back-projection accumulates per-thread partials that are
// merged in thread order, so results do not depend on scheduling.
struct ExecutionPolicy {
  unsigned threads = 1;
};

// One nonzero of a measurement row.
struct RowEntry {
  std::size_t col;
  double weight;
};

class MeasurementOperator {
public:
  virtual ~MeasurementOperator() = default;

  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  virtual OperatorKind kind() const = 0;
  virtual std::uint64_t seed() const { return 0; }
  // Stable textual handle describing the operator and its parameters.
  virtual std::string id() const = 0;

  Vector apply(const Vector& x) const;
  Vector apply_transpose(const Vector& r) const;

  // Nonzeros of row i (duplicates merged, sorted by column).
  virtual std::vector<RowEntry> row(std::size_t i) const = 0;

  // Explicit sparse copy assembled from row(). Intended for small instances.
  Eigen::SparseMatrix<double, Eigen::RowMajor> materialize() const;

protected:
  virtual void apply_impl(const Vector& x, Vector& out) const = 0;
  virtual void apply_transpose_impl(const Vector& r, Vector& out) const = 0;
};

// Dense i.i.d. N(0, 1) rows. Row i is drawn from its own stream
// mix_seed(seed, i), so any row can be regenerated in isolation.
class GaussianOperator final : public MeasurementOperator {
public:
  static constexpr std::size_t default_memory_budget = std::size_t{2} << 30;

  GaussianOperator(std::size_t m, std::size_t n, std::uint64_t seed,
                   std::size_t memory_budget_bytes = default_memory_budget);

  std::size_t rows() const override { return static_cast<std::size_t>(a_.rows()); }
  std::size_t cols() const override { return static_cast<std::size_t>(a_.cols()); }
  OperatorKind kind() const override { return OperatorKind::gaussian; }
  std::uint64_t seed() const override { return seed_; }
  std::string id() const override;
  std::vector<RowEntry> row(std::size_t i) const override;

  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Matrix& matrix() const { return a_; }

  // The generator used for row i, exposed so tests can regenerate a row
  // without building the whole matrix.
  static Vector generate_row(std::uint64_t seed, std::size_t i, std::size_t n);

protected:
  void apply_impl(const Vector& x, Vector& out) const override;
  void apply_transpose_impl(const Vector& r, Vector& out) const override;

private:
  Matrix a_;
  std::uint64_t seed_;
};

// 2D parallel-beam acquisition. Bin b of a view sits at detector offset
// (b - (bins-1)/2) * spacing, measured along (-sin a, cos a); the ray runs
// along (cos a, sin a).
struct ParallelBeamGeometry {
  std::vector<double> angles;
  std::size_t detector_bins = 0;
  double detector_spacing = 1.0;

  void validate() const;
  static ParallelBeamGeometry uniform(std::size_t views, std::size_t bins, double spacing);
};

// Exact ray/pixel intersection lengths (Siddon). Rows are computed on the fly.
class Radon2DOperator final : public MeasurementOperator {
public:
  Radon2DOperator(ParallelBeamGeometry geometry, GridGeometry grid, ExecutionPolicy policy = {});

  std::size_t rows() const override;
  std::size_t cols() const override;
  OperatorKind kind() const override { return OperatorKind::radon2d; }
  std::string id() const override;
  std::vector<RowEntry> row(std::size_t i) const override;

  const ParallelBeamGeometry& geometry() const { return geometry_; }
  const GridGeometry& grid() const { return grid_; }

protected:
  void apply_impl(const Vector& x, Vector& out) const override;
  void apply_transpose_impl(const Vector& r, Vector& out) const override;

private:
  // Calls visit(pixel_index, chord_length) for every pixel the ray crosses.
  template <class Visit>
  void trace(std::size_t ray, Visit&& visit) const;

  ParallelBeamGeometry geometry_;
  GridGeometry grid_;
  ExecutionPolicy policy_;
  std::vector<std::pair<double, double>> trig_;
};

// Circular cone-beam orbit around the z axis. Source k sits at
// radius * (cos a_k, sin a_k, 0); the flat detector is centred on the far
// side of the axis at `source_detector_distance` from the source, with
// columns along (-sin a, cos a, 0) and rows along z.
struct ConeBeamGeometry {
  double orbit_radius = 0.0;
  std::vector<double> source_angles;
  double source_detector_distance = 0.0;
  std::size_t detector_rows = 0;
  std::size_t detector_cols = 0;
  double pixel_pitch = 1.0;
  // Distance between samples along a ray, in voxel units.
  double sample_step = 0.5;

  void validate() const;
  // Equally spaced sources over the full circle.
  static std::vector<double> full_orbit(std::size_t count);
};

// Fixed-step ray marching with trilinear interpolation. Each sample deposits
// its 8 interpolation weights scaled by the physical step length.
class ConeBeamOperator final : public MeasurementOperator {
public:
  ConeBeamOperator(ConeBeamGeometry geometry, GridGeometry grid, ExecutionPolicy policy = {});

  std::size_t rows() const override;
  std::size_t cols() const override;
  OperatorKind kind() const override { return OperatorKind::conebeam3d; }
  std::string id() const override;
  std::vector<RowEntry> row(std::size_t i) const override;

  const ConeBeamGeometry& geometry() const { return geometry_; }
  const GridGeometry& grid() const { return grid_; }

  struct Ray {
    std::array<double, 3> origin;
    std::array<double, 3> direction;  // unit length
    double length;                    // source to detector pixel
  };
  Ray ray(std::size_t i) const;

protected:
  void apply_impl(const Vector& x, Vector& out) const override;
  void apply_transpose_impl(const Vector& r, Vector& out) const override;

private:
  template <class Visit>
  void trace(std::size_t ray, Visit&& visit) const;

  ConeBeamGeometry geometry_;
  GridGeometry grid_;
  ExecutionPolicy policy_;
};

std::unique_ptr<MeasurementOperator> gaussian_operator(std::size_t m, std::size_t n, std::uint64_t seed);
std::unique_ptr<MeasurementOperator> radon2d_operator(const ParallelBeamGeometry& geometry,
                                                      const GridGeometry& grid,
                                                      ExecutionPolicy policy = {});
std::unique_ptr<MeasurementOperator> conebeam3d_operator(const ConeBeamGeometry& geometry,
                                                         const GridGeometry& grid,
                                                         ExecutionPolicy policy = {});

// Geometry blocks as they appear in experiment configs. Field errors raise
// ValidationError with the path prefixed by `where`.
ParallelBeamGeometry parallel_beam_from_json(const nlohmann::json& j, const std::string& where = "geometry");
ConeBeamGeometry cone_beam_from_json(const nlohmann::json& j, const std::string& where = "geometry");
nlohmann::json to_json(const ParallelBeamGeometry& g);
nlohmann::json to_json(const ConeBeamGeometry& g);

// Largest eigenvalue of A^T A by power iteration.
double estimate_squared_norm(const MeasurementOperator& op, std::size_t iterations = 30,
                             std::uint64_t seed = 7);

}  // namespace nlct
