#include "nlct/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include "json_fields.hpp"
#include "nlct/errors.hpp"
#include "nlct/rng.hpp"

namespace nlct {

std::size_t GridGeometry::size() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void GridGeometry::validate() const {
  if (dims.empty() || dims.size() > 3) throw ShapeError("grid must have 1 to 3 axes");
  for (auto d : dims)
    if (d == 0) throw ShapeError("grid axis of length 0");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw GeometryError("voxel spacing must be > 0");
}

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::gaussian: return "gaussian";
    case OperatorKind::radon2d: return "radon2d";
    case OperatorKind::conebeam3d: return "conebeam3d";
  }
  return "unknown";
}

Vector MeasurementOperator::apply(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != cols())
    throw ShapeError("apply: input length " + std::to_string(x.size()) + " != operator columns " +
                     std::to_string(cols()));
  Vector out = Vector::Zero(static_cast<Eigen::Index>(rows()));
  apply_impl(x, out);
  return out;
}

Vector MeasurementOperator::apply_transpose(const Vector& r) const {
  if (static_cast<std::size_t>(r.size()) != rows())
    throw ShapeError("apply_transpose: input length " + std::to_string(r.size()) + " != operator rows " +
                     std::to_string(rows()));
  Vector out = Vector::Zero(static_cast<Eigen::Index>(cols()));
  apply_transpose_impl(r, out);
  return out;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> MeasurementOperator::materialize() const {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < rows(); ++i)
    for (const auto& e : row(i))
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(e.col), e.weight);
  Eigen::SparseMatrix<double, Eigen::RowMajor> a(static_cast<Eigen::Index>(rows()),
                                                 static_cast<Eigen::Index>(cols()));
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

namespace {

std::vector<RowEntry> merge_entries(std::vector<RowEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const RowEntry& a, const RowEntry& b) { return a.col < b.col; });
  std::vector<RowEntry> out;
  for (const auto& e : entries) {
    if (!out.empty() && out.back().col == e.col)
      out.back().weight += e.weight;
    else
      out.push_back(e);
  }
  return out;
}

// Runs body(begin, end, thread_index) over [0, count) split into contiguous
// chunks, one per thread.
template <class Body>
void for_chunks(std::size_t count, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    body(std::size_t{0}, count, 0u);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = std::min(count, t * chunk);
    const std::size_t e = std::min(count, b + chunk);
    pool.emplace_back([&, b, e, t] { body(b, e, t); });
  }
  for (auto& th : pool) th.join();
}

// Back-projection helper: per-thread partial images merged in thread order.
template <class Scatter>
void scatter_rays(std::size_t rays, unsigned threads, Vector& out, Scatter&& scatter) {
  if (threads <= 1) {
    scatter(std::size_t{0}, rays, out);
    return;
  }
  std::vector<Vector> partial(threads, Vector::Zero(out.size()));
  for_chunks(rays, threads, [&](std::size_t b, std::size_t e, unsigned t) { scatter(b, e, partial[t]); });
  for (const auto& p : partial) out += p;
}

}  // namespace

// ---------------------------------------------------------------- Gaussian

GaussianOperator::GaussianOperator(std::size_t m, std::size_t n, std::uint64_t seed, std::size_t memory_budget_bytes)
    : seed_(seed) {
  if (m == 0 || n == 0) throw ShapeError("gaussian operator needs m, n >= 1");
  if (m > memory_budget_bytes / sizeof(double) / n)
    throw CapacityError("gaussian operator " + std::to_string(m) + "x" + std::to_string(n) +
                        " exceeds memory budget of " + std::to_string(memory_budget_bytes) + " bytes");
  a_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < m; ++i) a_.row(static_cast<Eigen::Index>(i)) = generate_row(seed, i, n).transpose();
}

Vector GaussianOperator::generate_row(std::uint64_t seed, std::size_t i, std::size_t n) {
  RowEngine eng = make_row_engine(seed, i);
  StandardNormal normal;
  Vector r(static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < r.size(); ++j) r[j] = normal(eng);
  return r;
}

std::string GaussianOperator::id() const {
  std::ostringstream os;
  os << "gaussian:m=" << rows() << ",n=" << cols() << ",seed=" << seed_;
  return os.str();
}

std::vector<RowEntry> GaussianOperator::row(std::size_t i) const {
  std::vector<RowEntry> out;
  out.reserve(cols());
  for (std::size_t j = 0; j < cols(); ++j)
    out.push_back({j, a_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
  return out;
}

void GaussianOperator::apply_impl(const Vector& x, Vector& out) const { out.noalias() = a_ * x; }

void GaussianOperator::apply_transpose_impl(const Vector& r, Vector& out) const {
  out.noalias() = a_.transpose() * r;
}

// ---------------------------------------------------------------- Radon 2D

void ParallelBeamGeometry::validate() const {
  if (angles.empty()) throw GeometryError("parallel-beam geometry needs at least one angle");
  for (double a : angles)
    if (!std::isfinite(a)) throw GeometryError("parallel-beam angle is not finite");
  if (detector_bins == 0) throw GeometryError("detector needs at least one bin");
  if (!(detector_spacing > 0.0) || !std::isfinite(detector_spacing))
    throw GeometryError("detector spacing must be > 0");
}

ParallelBeamGeometry ParallelBeamGeometry::uniform(std::size_t views, std::size_t bins, double spacing) {
  ParallelBeamGeometry g;
  g.detector_bins = bins;
  g.detector_spacing = spacing;
  for (std::size_t k = 0; k < views; ++k)
    g.angles.push_back(std::numbers::pi * static_cast<double>(k) / static_cast<double>(views));
  return g;
}

Radon2DOperator::Radon2DOperator(ParallelBeamGeometry geometry, GridGeometry grid, ExecutionPolicy policy)
    : geometry_(std::move(geometry)), grid_(std::move(grid)), policy_(policy) {
  geometry_.validate();
  grid_.validate();
  if (grid_.dims.size() != 2 || grid_.dims[0] != grid_.dims[1])
    throw ShapeError("radon2d needs a square 2D grid");
  for (double a : geometry_.angles) trig_.emplace_back(std::cos(a), std::sin(a));
}

std::size_t Radon2DOperator::rows() const { return geometry_.angles.size() * geometry_.detector_bins; }
std::size_t Radon2DOperator::cols() const { return grid_.size(); }

std::string Radon2DOperator::id() const {
  std::ostringstream os;
  os << "radon2d:views=" << geometry_.angles.size() << ",bins=" << geometry_.detector_bins
     << ",spacing=" << geometry_.detector_spacing << ",grid=" << grid_.dims[0] << ",h=" << grid_.spacing;
  return os.str();
}

template <class Visit>
void Radon2DOperator::trace(std::size_t ray, Visit&& visit) const {
  const std::size_t view = ray / geometry_.detector_bins;
  const std::size_t bin = ray % geometry_.detector_bins;
  const auto [c, s] = trig_[view];
  const double offset =
      (static_cast<double>(bin) - 0.5 * static_cast<double>(geometry_.detector_bins - 1)) * geometry_.detector_spacing;
  const double px = -s * offset;
  const double py = c * offset;
  const double dx = c;
  const double dy = s;

  const std::size_t n = grid_.dims[0];
  const double h = grid_.spacing;
  const double lo = -0.5 * static_cast<double>(n) * h;
  const double hi = -lo;
  constexpr double tiny = 1e-14;

  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  auto clip = [&](double p, double d) {
    if (std::abs(d) < tiny) return p >= lo && p <= hi;
    double t1 = (lo - p) / d;
    double t2 = (hi - p) / d;
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    return true;
  };
  if (!clip(px, dx) || !clip(py, dy) || !(tmax - tmin > tiny)) return;

  // Parametric crossings of the grid planes strictly inside (tmin, tmax),
  // merged into one increasing sequence.
  thread_local std::vector<double> tx, ty, ts;
  auto crossings = [&](double p, double d, std::vector<double>& out) {
    out.clear();
    if (std::abs(d) < tiny) return;
    for (std::size_t k = 0; k <= n; ++k) {
      const double t = (lo + static_cast<double>(k) * h - p) / d;
      if (t > tmin && t < tmax) out.push_back(t);
    }
    if (d < 0) std::reverse(out.begin(), out.end());
  };
  crossings(px, dx, tx);
  crossings(py, dy, ty);
  ts.clear();
  ts.push_back(tmin);
  std::merge(tx.begin(), tx.end(), ty.begin(), ty.end(), std::back_inserter(ts));
  ts.push_back(tmax);

  const auto last = static_cast<long>(n) - 1;
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double len = ts[k + 1] - ts[k];
    if (len <= tiny * h) continue;
    const double tm = 0.5 * (ts[k] + ts[k + 1]);
    const long ix = std::clamp(static_cast<long>(std::floor((px + tm * dx - lo) / h)), 0L, last);
    const long iy = std::clamp(static_cast<long>(std::floor((py + tm * dy - lo) / h)), 0L, last);
    visit(static_cast<std::size_t>(iy) * n + static_cast<std::size_t>(ix), len);
  }
}

std::vector<RowEntry> Radon2DOperator::row(std::size_t i) const {
  std::vector<RowEntry> entries;
  trace(i, [&](std::size_t col, double w) { entries.push_back({col, w}); });
  return merge_entries(std::move(entries));
}

void Radon2DOperator::apply_impl(const Vector& x, Vector& out) const {
  for_chunks(rows(), policy_.threads, [&](std::size_t b, std::size_t e, unsigned) {
    for (std::size_t i = b; i < e; ++i) {
      double acc = 0.0;
      trace(i, [&](std::size_t col, double w) { acc += w * x[static_cast<Eigen::Index>(col)]; });
      out[static_cast<Eigen::Index>(i)] = acc;
    }
  });
}

void Radon2DOperator::apply_transpose_impl(const Vector& r, Vector& out) const {
  scatter_rays(rows(), policy_.threads, out, [&](std::size_t b, std::size_t e, Vector& dst) {
    for (std::size_t i = b; i < e; ++i) {
      const double ri = r[static_cast<Eigen::Index>(i)];
      if (ri == 0.0) continue;
      trace(i, [&](std::size_t col, double w) { dst[static_cast<Eigen::Index>(col)] += w * ri; });
    }
  });
}

// ---------------------------------------------------------------- cone beam

void ConeBeamGeometry::validate() const {
  if (!(orbit_radius > 0.0) || !std::isfinite(orbit_radius)) throw GeometryError("orbit radius must be > 0");
  if (source_angles.empty()) throw GeometryError("cone-beam geometry needs at least one source position");
  for (double a : source_angles)
    if (!std::isfinite(a)) throw GeometryError("source angle is not finite");
  if (!(source_detector_distance > orbit_radius) || !std::isfinite(source_detector_distance))
    throw GeometryError("source-detector distance must exceed the orbit radius");
  if (detector_rows == 0 || detector_cols == 0) throw GeometryError("detector needs at least one pixel");
  if (!(pixel_pitch > 0.0) || !std::isfinite(pixel_pitch)) throw GeometryError("pixel pitch must be > 0");
  if (!(sample_step > 0.0) || !std::isfinite(sample_step)) throw GeometryError("sample step must be > 0");
}

std::vector<double> ConeBeamGeometry::full_orbit(std::size_t count) {
  std::vector<double> a;
  for (std::size_t k = 0; k < count; ++k)
    a.push_back(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count));
  return a;
}

ConeBeamOperator::ConeBeamOperator(ConeBeamGeometry geometry, GridGeometry grid, ExecutionPolicy policy)
    : geometry_(std::move(geometry)), grid_(std::move(grid)), policy_(policy) {
  geometry_.validate();
  grid_.validate();
  if (grid_.dims.size() != 3) throw ShapeError("conebeam3d needs a 3D grid");
  // Every source sits in the z = 0 plane at distance orbit_radius from the
  // axis; it is inside the box iff both |x| and |y| fall within the half widths.
  const double hx = 0.5 * static_cast<double>(grid_.dims[0]) * grid_.spacing;
  const double hy = 0.5 * static_cast<double>(grid_.dims[1]) * grid_.spacing;
  for (double a : geometry_.source_angles) {
    const double sx = geometry_.orbit_radius * std::cos(a);
    const double sy = geometry_.orbit_radius * std::sin(a);
    if (std::abs(sx) <= hx && std::abs(sy) <= hy) throw GeometryError("source position lies inside the volume");
  }
}

std::size_t ConeBeamOperator::rows() const {
  return geometry_.source_angles.size() * geometry_.detector_rows * geometry_.detector_cols;
}
std::size_t ConeBeamOperator::cols() const { return grid_.size(); }

std::string ConeBeamOperator::id() const {
  std::ostringstream os;
  os << "conebeam3d:sources=" << geometry_.source_angles.size() << ",R=" << geometry_.orbit_radius
     << ",D=" << geometry_.source_detector_distance << ",det=" << geometry_.detector_rows << "x"
     << geometry_.detector_cols << ",pitch=" << geometry_.pixel_pitch << ",step=" << geometry_.sample_step
     << ",grid=" << grid_.dims[0] << "x" << grid_.dims[1] << "x" << grid_.dims[2] << ",h=" << grid_.spacing;
  return os.str();
}

ConeBeamOperator::Ray ConeBeamOperator::ray(std::size_t i) const {
  const std::size_t per_view = geometry_.detector_rows * geometry_.detector_cols;
  const std::size_t view = i / per_view;
  const std::size_t r = (i % per_view) / geometry_.detector_cols;
  const std::size_t c = i % geometry_.detector_cols;
  const double a = geometry_.source_angles[view];
  const double ca = std::cos(a);
  const double sa = std::sin(a);
  const std::array<double, 3> src{geometry_.orbit_radius * ca, geometry_.orbit_radius * sa, 0.0};
  const double u = (static_cast<double>(c) - 0.5 * static_cast<double>(geometry_.detector_cols - 1)) *
                   geometry_.pixel_pitch;
  const double v = (static_cast<double>(r) - 0.5 * static_cast<double>(geometry_.detector_rows - 1)) *
                   geometry_.pixel_pitch;
  const double dsd = geometry_.source_detector_distance;
  const std::array<double, 3> pix{src[0] - dsd * ca - u * sa, src[1] - dsd * sa + u * ca, v};
  std::array<double, 3> d{pix[0] - src[0], pix[1] - src[1], pix[2] - src[2]};
  const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  for (auto& di : d) di /= len;
  return {src, d, len};
}

template <class Visit>
void ConeBeamOperator::trace(std::size_t i, Visit&& visit) const {
  const Ray rr = ray(i);
  const double h = grid_.spacing;
  // Clip to the support of the interpolation kernels: half a voxel beyond
  // the outermost voxel centres on each side.
  double tmin = 0.0;
  double tmax = rr.length;
  double half[3];
  for (int k = 0; k < 3; ++k) {
    half[k] = 0.5 * static_cast<double>(grid_.dims[static_cast<std::size_t>(k)]) * h;
    const double lo = -half[k] - 0.5 * h;
    const double hi = half[k] + 0.5 * h;
    const double p = rr.origin[static_cast<std::size_t>(k)];
    const double d = rr.direction[static_cast<std::size_t>(k)];
    if (std::abs(d) < 1e-14) {
      if (p < lo || p > hi) return;
      continue;
    }
    double t1 = (lo - p) / d;
    double t2 = (hi - p) / d;
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
  }
  if (!(tmax > tmin)) return;

  const double dt = geometry_.sample_step * h;
  const auto nx = static_cast<long>(grid_.dims[0]);
  const auto ny = static_cast<long>(grid_.dims[1]);
  const auto nz = static_cast<long>(grid_.dims[2]);
  const double inv_h = 1.0 / h;
  // Continuous voxel index u = p / h + n / 2 - 1/2 puts voxel centres on integers.
  const double ox = rr.origin[0] * inv_h + 0.5 * static_cast<double>(nx) - 0.5;
  const double oy = rr.origin[1] * inv_h + 0.5 * static_cast<double>(ny) - 0.5;
  const double oz = rr.origin[2] * inv_h + 0.5 * static_cast<double>(nz) - 0.5;
  const double ddx = rr.direction[0] * inv_h;
  const double ddy = rr.direction[1] * inv_h;
  const double ddz = rr.direction[2] * inv_h;
  const std::size_t strideY = static_cast<std::size_t>(nx);
  const std::size_t strideZ = static_cast<std::size_t>(nx * ny);

  for (double t = tmin + 0.5 * dt; t < tmax; t += dt) {
    const double ux = ox + t * ddx;
    const double uy = oy + t * ddy;
    const double uz = oz + t * ddz;
    const double fx0 = std::floor(ux);
    const double fy0 = std::floor(uy);
    const double fz0 = std::floor(uz);
    const long ix = static_cast<long>(fx0);
    const long iy = static_cast<long>(fy0);
    const long iz = static_cast<long>(fz0);
    const double fx = ux - fx0;
    const double fy = uy - fy0;
    const double fz = uz - fz0;
    const double wx[2] = {1.0 - fx, fx};
    const double wy[2] = {1.0 - fy, fy};
    const double wz[2] = {1.0 - fz, fz};
    for (int cz = 0; cz < 2; ++cz) {
      const long z = iz + cz;
      if (z < 0 || z >= nz) continue;
      for (int cy = 0; cy < 2; ++cy) {
        const long y = iy + cy;
        if (y < 0 || y >= ny) continue;
        const double wyz = wy[cy] * wz[cz] * dt;
        const std::size_t base = static_cast<std::size_t>(z) * strideZ + static_cast<std::size_t>(y) * strideY;
        for (int cx = 0; cx < 2; ++cx) {
          const long x = ix + cx;
          if (x < 0 || x >= nx) continue;
          const double w = wx[cx] * wyz;
          if (w > 0.0) visit(base + static_cast<std::size_t>(x), w);
        }
      }
    }
  }
}

std::vector<RowEntry> ConeBeamOperator::row(std::size_t i) const {
  std::vector<RowEntry> entries;
  trace(i, [&](std::size_t col, double w) { entries.push_back({col, w}); });
  return merge_entries(std::move(entries));
}

void ConeBeamOperator::apply_impl(const Vector& x, Vector& out) const {
  const double* xs = x.data();
  for_chunks(rows(), policy_.threads, [&](std::size_t b, std::size_t e, unsigned) {
    for (std::size_t i = b; i < e; ++i) {
      double acc = 0.0;
      trace(i, [&](std::size_t col, double w) { acc += w * xs[col]; });
      out[static_cast<Eigen::Index>(i)] = acc;
    }
  });
}

void ConeBeamOperator::apply_transpose_impl(const Vector& r, Vector& out) const {
  scatter_rays(rows(), policy_.threads, out, [&](std::size_t b, std::size_t e, Vector& dst) {
    double* d = dst.data();
    for (std::size_t i = b; i < e; ++i) {
      const double ri = r[static_cast<Eigen::Index>(i)];
      if (ri == 0.0) continue;
      trace(i, [&](std::size_t col, double w) { d[col] += w * ri; });
    }
  });
}

// ---------------------------------------------------------------- factories

std::unique_ptr<MeasurementOperator> gaussian_operator(std::size_t m, std::size_t n, std::uint64_t seed) {
  return std::make_unique<GaussianOperator>(m, n, seed);
}

std::unique_ptr<MeasurementOperator> radon2d_operator(const ParallelBeamGeometry& geometry, const GridGeometry& grid,
                                                      ExecutionPolicy policy) {
  return std::make_unique<Radon2DOperator>(geometry, grid, policy);
}

std::unique_ptr<MeasurementOperator> conebeam3d_operator(const ConeBeamGeometry& geometry, const GridGeometry& grid,
                                                         ExecutionPolicy policy) {
  return std::make_unique<ConeBeamOperator>(geometry, grid, policy);
}

// ---------------------------------------------------------------- JSON

ParallelBeamGeometry parallel_beam_from_json(const nlohmann::json& j, const std::string& where) {
  detail::FieldReader f(j, where);
  ParallelBeamGeometry g;
  const bool explicit_angles = f.has("angles");
  const bool counted = f.has("angle_count");
  if (explicit_angles == counted) throw ValidationError(f.path("angles"), "give exactly one of angles / angle_count");
  g.detector_bins = f.count("detector_bins");
  g.detector_spacing = f.positive("detector_spacing", 1.0);
  if (explicit_angles) {
    g.angles = f.numbers("angles");
    if (g.angles.empty()) throw ValidationError(f.path("angles"), "must not be empty");
  } else {
    g.angles = ParallelBeamGeometry::uniform(f.count("angle_count"), 1, 1.0).angles;
  }
  f.finish();
  return g;
}

ConeBeamGeometry cone_beam_from_json(const nlohmann::json& j, const std::string& where) {
  detail::FieldReader f(j, where);
  ConeBeamGeometry g;
  g.orbit_radius = f.positive("orbit_radius");
  g.source_detector_distance = f.positive("source_detector_distance");
  const bool explicit_angles = f.has("source_angles");
  const bool counted = f.has("source_count");
  if (explicit_angles == counted)
    throw ValidationError(f.path("source_angles"), "give exactly one of source_angles / source_count");
  g.source_angles = explicit_angles ? f.numbers("source_angles") : ConeBeamGeometry::full_orbit(f.count("source_count"));
  if (g.source_angles.empty()) throw ValidationError(f.path("source_angles"), "must not be empty");
  g.detector_rows = f.count("detector_rows");
  g.detector_cols = f.count("detector_cols");
  g.pixel_pitch = f.positive("pixel_pitch", 1.0);
  g.sample_step = f.positive("sample_step", 0.5);
  f.finish();
  if (!(g.source_detector_distance > g.orbit_radius))
    throw ValidationError(f.path("source_detector_distance"), "must exceed orbit_radius");
  return g;
}

nlohmann::json to_json(const ParallelBeamGeometry& g) {
  return {{"angles", g.angles}, {"detector_bins", g.detector_bins}, {"detector_spacing", g.detector_spacing}};
}

nlohmann::json to_json(const ConeBeamGeometry& g) {
  return {{"orbit_radius", g.orbit_radius},
          {"source_angles", g.source_angles},
          {"source_detector_distance", g.source_detector_distance},
          {"detector_rows", g.detector_rows},
          {"detector_cols", g.detector_cols},
          {"pixel_pitch", g.pixel_pitch},
          {"sample_step", g.sample_step}};
}

double estimate_squared_norm(const MeasurementOperator& op, std::size_t iterations, std::uint64_t seed) {
  Engine eng = make_engine(seed, 0);
  StandardNormal normal;
  Vector v(static_cast<Eigen::Index>(op.cols()));
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = normal(eng);
  v.normalize();
  double lambda = 0.0;
  for (std::size_t k = 0; k < iterations; ++k) {
    Vector w = op.apply_transpose(op.apply(v));
    lambda = v.dot(w);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
  }
  return lambda;
}

}  // namespace nlct
