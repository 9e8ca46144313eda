#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlct/core_model.hpp"

namespace nlct {

// One ellipse (2D) or ellipsoid (3D) of the phantom in normalized
// coordinates [-1, 1]^d. Euler angles (phi, theta, psi) in radians follow the
// z-x-z convention; in 2D only phi is used.
struct EllipsoidSpec {
  std::array<double, 3> center{};
  std::array<double, 3> semi_axes{1.0, 1.0, 1.0};
  std::array<double, 3> euler{};
  double density = 0.0;

  void validate() const;
  // True when point p (normalized coordinates) lies inside or on the surface.
  bool contains(const std::array<double, 3>& p, std::size_t dims) const;
};

// Ten-element modified (high-contrast) Shepp-Logan tables.
const std::vector<EllipsoidSpec>& shepp_logan_table_2d();
const std::vector<EllipsoidSpec>& shepp_logan_table_3d();

struct DensityPreset {
  std::string name;
  double density;
};
// Calibrated test-ellipsoid densities, after scaling: soft tissue, bone, metal.
const std::vector<DensityPreset>& density_presets();
double preset_density(const std::string& name);

struct PhantomConfig {
  std::vector<std::size_t> dims{64, 64, 64};
  double spacing = 1.0;  // physical voxel edge length
  double density_scale = 0.25;
  // Absolute density written into the test ellipsoid; unset keeps the table value.
  std::optional<double> test_ellipsoid_density;
  double test_ellipsoid_enlargement = 1.3;
  std::size_t test_ellipsoid_index = 4;

  void validate() const;
  GridGeometry grid() const { return {dims, spacing}; }
};

PhantomConfig phantom_config_from_json(const nlohmann::json& j, const std::string& where = "phantom");
nlohmann::json to_json(const PhantomConfig& c);

// Table with the test ellipsoid enlarged, before density scaling.
std::vector<EllipsoidSpec> phantom_table(const PhantomConfig& config);

// Sum of scaled table densities at normalized point p, test-ellipsoid
// override applied, clamped at 0.
double phantom_value(const PhantomConfig& config, const std::array<double, 3>& p);

// Rasterized from voxel centres, x fastest. Deterministic.
Signal shepp_logan(const PhantomConfig& config);

// Voxel-centre coordinate of index i on an axis of n voxels, in [-1, 1].
inline double normalized_coordinate(std::size_t i, std::size_t n) {
  return (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n) - 1.0;
}

// -10 log10(MSE); +infinity when the volumes are identical.
double psnr(const Vector& recon, const Vector& truth);
double psnr(const Signal& recon, const Signal& truth);

// Raw little-endian float32 volume at `path` plus `path + ".json"` sidecar
// {dims, spacing, dtype}. Extra sidecar fields may be passed in `extra`.
void write_volume(const std::string& path, const Signal& volume, const nlohmann::json& extra = {});
Signal read_volume(const std::string& path);

// 8-bit binary PGM of a 2D slice (z = slice for 3D volumes). The window is
// [lo, hi] = [min, max] of the slice; returned so callers can record it.
struct Window {
  double lo;
  double hi;
};
Window write_pgm_slice(const std::string& path, const Signal& volume, std::size_t slice);

}  // namespace nlct
