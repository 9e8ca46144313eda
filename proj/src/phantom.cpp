#include "nlct/phantom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include "json_fields.hpp"
#include "nlct/errors.hpp"

namespace nlct {

namespace {

constexpr double deg = std::numbers::pi / 180.0;

EllipsoidSpec row(double a, double sa, double sb, double sc, double x0, double y0, double z0, double phi,
                  double theta, double psi) {
  return {{x0, y0, z0}, {sa, sb, sc}, {phi * deg, theta * deg, psi * deg}, a};
}

}  // namespace

void EllipsoidSpec::validate() const {
  for (double s : semi_axes)
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("ellipsoid semi-axes must be > 0");
  for (double c : center)
    if (!std::isfinite(c)) throw DomainError("ellipsoid centre must be finite");
  if (!std::isfinite(density)) throw DomainError("ellipsoid density must be finite");
}

bool EllipsoidSpec::contains(const std::array<double, 3>& p, std::size_t dims) const {
  if (dims == 2) {
    const double c = std::cos(euler[0]);
    const double s = std::sin(euler[0]);
    const double dx = p[0] - center[0];
    const double dy = p[1] - center[1];
    const double u = (dx * c + dy * s) / semi_axes[0];
    const double v = (-dx * s + dy * c) / semi_axes[1];
    return u * u + v * v <= 1.0;
  }
  // Rotate the point into the ellipsoid frame, then offset by the centre
  // expressed in that frame.
  const double cphi = std::cos(euler[0]), sphi = std::sin(euler[0]);
  const double ctheta = std::cos(euler[1]), stheta = std::sin(euler[1]);
  const double cpsi = std::cos(euler[2]), spsi = std::sin(euler[2]);
  const double r[3][3] = {
      {cpsi * cphi - ctheta * sphi * spsi, cpsi * sphi + ctheta * cphi * spsi, spsi * stheta},
      {-spsi * cphi - ctheta * sphi * cpsi, -spsi * sphi + ctheta * cphi * cpsi, cpsi * stheta},
      {stheta * sphi, -stheta * cphi, ctheta}};
  double q = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double rp = r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2];
    const double u = (rp - center[static_cast<std::size_t>(i)]) / semi_axes[static_cast<std::size_t>(i)];
    q += u * u;
  }
  return q <= 1.0;
}

const std::vector<EllipsoidSpec>& shepp_logan_table_3d() {
  //                      A     a      b      c     x0     y0      z0    phi theta psi
  static const std::vector<EllipsoidSpec> t{
      row(1.0, 0.69, 0.92, 0.81, 0.0, 0.0, 0.0, 0, 0, 0),
      row(-0.8, 0.6624, 0.874, 0.78, 0.0, -0.0184, 0.0, 0, 0, 0),
      row(-0.2, 0.11, 0.31, 0.22, 0.22, 0.0, 0.0, -18, 0, 10),
      row(-0.2, 0.16, 0.41, 0.28, -0.22, 0.0, 0.0, 18, 0, 10),
      row(0.1, 0.21, 0.25, 0.41, 0.0, 0.35, -0.15, 0, 0, 0),
      row(0.1, 0.046, 0.046, 0.05, 0.0, 0.1, 0.25, 0, 0, 0),
      row(0.1, 0.046, 0.046, 0.05, 0.0, -0.1, 0.25, 0, 0, 0),
      row(0.1, 0.046, 0.023, 0.05, -0.08, -0.605, 0.0, 0, 0, 0),
      row(0.1, 0.023, 0.023, 0.02, 0.0, -0.606, 0.0, 0, 0, 0),
      row(0.1, 0.023, 0.046, 0.02, 0.06, -0.605, 0.0, 0, 0, 0)};
  return t;
}

const std::vector<EllipsoidSpec>& shepp_logan_table_2d() {
  static const std::vector<EllipsoidSpec> t{
      row(1.0, 0.69, 0.92, 1, 0.0, 0.0, 0, 0, 0, 0),
      row(-0.8, 0.6624, 0.874, 1, 0.0, -0.0184, 0, 0, 0, 0),
      row(-0.2, 0.11, 0.31, 1, 0.22, 0.0, 0, -18, 0, 0),
      row(-0.2, 0.16, 0.41, 1, -0.22, 0.0, 0, 18, 0, 0),
      row(0.1, 0.21, 0.25, 1, 0.0, 0.35, 0, 0, 0, 0),
      row(0.1, 0.046, 0.046, 1, 0.0, 0.1, 0, 0, 0, 0),
      row(0.1, 0.046, 0.046, 1, 0.0, -0.1, 0, 0, 0, 0),
      row(0.1, 0.046, 0.023, 1, -0.08, -0.605, 0, 0, 0, 0),
      row(0.1, 0.023, 0.023, 1, 0.0, -0.606, 0, 0, 0, 0),
      row(0.1, 0.023, 0.046, 1, 0.06, -0.605, 0, 0, 0, 0)};
  return t;
}

const std::vector<DensityPreset>& density_presets() {
  static const std::vector<DensityPreset> p{{"soft", 0.05}, {"bone", 0.25}, {"metal", 1.5}};
  return p;
}

double preset_density(const std::string& name) {
  for (const auto& p : density_presets())
    if (p.name == name) return p.density;
  throw DomainError("unknown density preset '" + name + "'");
}

void PhantomConfig::validate() const {
  if (dims.size() != 2 && dims.size() != 3) throw ShapeError("phantom must be 2D or 3D");
  for (auto d : dims)
    if (d < 16) throw ShapeError("phantom axes need at least 16 voxels");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw DomainError("voxel spacing must be > 0");
  if (!(density_scale > 0.0) || !std::isfinite(density_scale)) throw DomainError("density_scale must be > 0");
  if (!(test_ellipsoid_enlargement > 0.0) || !std::isfinite(test_ellipsoid_enlargement))
    throw DomainError("test ellipsoid enlargement must be > 0");
  if (test_ellipsoid_density && !std::isfinite(*test_ellipsoid_density))
    throw DomainError("test ellipsoid density must be finite");
  if (test_ellipsoid_index >= 10) throw DomainError("test ellipsoid index must be < 10");
}

PhantomConfig phantom_config_from_json(const nlohmann::json& j, const std::string& where) {
  detail::FieldReader f(j, where);
  PhantomConfig c;
  if (f.has("dims")) {
    c.dims = f.counts("dims", 16);
    if (c.dims.size() != 2 && c.dims.size() != 3) throw ValidationError(f.path("dims"), "expected 2 or 3 entries");
  }
  c.spacing = f.positive("spacing", c.spacing);
  c.density_scale = f.positive("density_scale", c.density_scale);
  const bool has_preset = f.has("preset");
  const bool has_density = f.has("test_ellipsoid_density");
  if (has_preset && has_density)
    throw ValidationError(f.path("preset"), "give at most one of preset / test_ellipsoid_density");
  if (has_preset) {
    std::vector<std::string> names;
    for (const auto& p : density_presets()) names.push_back(p.name);
    c.test_ellipsoid_density = preset_density(f.choice("preset", names, "soft"));
  }
  if (has_density) c.test_ellipsoid_density = f.nonnegative("test_ellipsoid_density", 0.0);
  c.test_ellipsoid_enlargement = f.positive("test_ellipsoid_enlargement", c.test_ellipsoid_enlargement);
  if (f.has("test_ellipsoid_index")) {
    c.test_ellipsoid_index = f.count("test_ellipsoid_index", 0);
    if (c.test_ellipsoid_index >= 10) throw ValidationError(f.path("test_ellipsoid_index"), "must be < 10");
  }
  f.finish();
  return c;
}

nlohmann::json to_json(const PhantomConfig& c) {
  nlohmann::json j{{"dims", c.dims},
                   {"spacing", c.spacing},
                   {"density_scale", c.density_scale},
                   {"test_ellipsoid_enlargement", c.test_ellipsoid_enlargement},
                   {"test_ellipsoid_index", c.test_ellipsoid_index}};
  if (c.test_ellipsoid_density) j["test_ellipsoid_density"] = *c.test_ellipsoid_density;
  return j;
}

std::vector<EllipsoidSpec> phantom_table(const PhantomConfig& config) {
  config.validate();
  auto table = config.dims.size() == 2 ? shepp_logan_table_2d() : shepp_logan_table_3d();
  for (auto& s : table[config.test_ellipsoid_index].semi_axes) s *= config.test_ellipsoid_enlargement;
  return table;
}

namespace {

double value_at(const std::vector<EllipsoidSpec>& table, const PhantomConfig& config, const std::array<double, 3>& p) {
  const std::size_t d = config.dims.size();
  if (config.test_ellipsoid_density && table[config.test_ellipsoid_index].contains(p, d))
    return std::max(*config.test_ellipsoid_density, 0.0);
  double v = 0.0;
  for (const auto& e : table)
    if (e.contains(p, d)) v += e.density;
  return std::max(v * config.density_scale, 0.0);
}

}  // namespace

double phantom_value(const PhantomConfig& config, const std::array<double, 3>& p) {
  return value_at(phantom_table(config), config, p);
}

Signal shepp_logan(const PhantomConfig& config) {
  const auto table = phantom_table(config);
  Signal s;
  s.geometry = config.grid();
  s.nonneg = true;
  s.values.resize(static_cast<Eigen::Index>(s.geometry->size()));
  const std::size_t nx = config.dims[0];
  const std::size_t ny = config.dims[1];
  const std::size_t nz = config.dims.size() == 3 ? config.dims[2] : 1;
  Eigen::Index k = 0;
  for (std::size_t iz = 0; iz < nz; ++iz)
    for (std::size_t iy = 0; iy < ny; ++iy)
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const std::array<double, 3> p{normalized_coordinate(ix, nx), normalized_coordinate(iy, ny),
                                      nz > 1 ? normalized_coordinate(iz, nz) : 0.0};
        s.values[k++] = value_at(table, config, p);
      }
  return s;
}

double psnr(const Vector& recon, const Vector& truth) {
  if (recon.size() == 0 || truth.size() == 0) throw ShapeError("psnr of an empty volume");
  if (recon.size() != truth.size()) throw ShapeError("psnr: volume sizes differ");
  const double mse = (recon - truth).squaredNorm() / static_cast<double>(recon.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

double psnr(const Signal& recon, const Signal& truth) {
  if (recon.geometry && truth.geometry && recon.geometry->dims != truth.geometry->dims)
    throw ShapeError("psnr: grid dimensions differ");
  return psnr(recon.values, truth.values);
}

void write_volume(const std::string& path, const Signal& volume, const nlohmann::json& extra) {
  volume.validate();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  for (Eigen::Index i = 0; i < volume.values.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(volume.values[i]));
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    f.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!f) throw IoError("write failed: " + path);

  nlohmann::json side = extra.is_object() ? extra : nlohmann::json::object();
  if (volume.geometry) {
    side["dims"] = volume.geometry->dims;
    side["spacing"] = volume.geometry->spacing;
  } else {
    side["dims"] = {volume.size()};
    side["spacing"] = 1.0;
  }
  side["dtype"] = "float32";
  side["byte_order"] = "little";
  std::ofstream s(path + ".json");
  if (!s) throw IoError("cannot write " + path + ".json");
  s << side.dump(2) << '\n';
  if (!s) throw IoError("write failed: " + path + ".json");
}

Signal read_volume(const std::string& path) {
  std::ifstream s(path + ".json");
  if (!s) throw IoError("cannot read " + path + ".json");
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(s);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ".json: " + e.what());
  }
  if (side.value("dtype", "") != "float32") throw IoError(path + ".json: dtype must be float32");
  Signal v;
  GridGeometry g;
  try {
    g.dims = side.at("dims").get<std::vector<std::size_t>>();
    g.spacing = side.at("spacing").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ".json: " + e.what());
  }
  g.validate();
  v.geometry = g;
  v.values.resize(static_cast<Eigen::Index>(g.size()));
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  for (Eigen::Index i = 0; i < v.values.size(); ++i) {
    std::uint32_t bits = 0;
    if (!f.read(reinterpret_cast<char*>(&bits), sizeof bits)) throw IoError(path + ": file shorter than sidecar dims");
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    v.values[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  if (f.peek() != std::char_traits<char>::eof()) throw IoError(path + ": file longer than sidecar dims");
  return v;
}

Window write_pgm_slice(const std::string& path, const Signal& volume, std::size_t slice) {
  if (!volume.geometry || volume.geometry->dims.size() < 2) throw ShapeError("preview needs a 2D or 3D grid");
  const auto& dims = volume.geometry->dims;
  const std::size_t nx = dims[0];
  const std::size_t ny = dims[1];
  const std::size_t nz = dims.size() == 3 ? dims[2] : 1;
  if (slice >= nz) throw ShapeError("slice index out of range");
  const auto offset = static_cast<Eigen::Index>(slice * nx * ny);
  const auto plane = volume.values.segment(offset, static_cast<Eigen::Index>(nx * ny));
  Window w{plane.minCoeff(), plane.maxCoeff()};
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << "P5\n" << nx << ' ' << ny << "\n255\n";
  const double span = w.hi > w.lo ? w.hi - w.lo : 1.0;
  // PGM rows run top to bottom; put +y at the top.
  for (std::size_t r = 0; r < ny; ++r) {
    const std::size_t iy = ny - 1 - r;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double v = (plane[static_cast<Eigen::Index>(iy * nx + ix)] - w.lo) / span;
      f.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    }
  }
  if (!f) throw IoError("write failed: " + path);
  return w;
}

}  // namespace nlct
