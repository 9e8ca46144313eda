#include "nlct/experiment.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <Eigen/Core>

#include "json_fields.hpp"
#include "nlct/errors.hpp"
#include "nlct/rng.hpp"

namespace nlct {

namespace fs = std::filesystem;

namespace {

ConeBeamGeometry default_cone_geometry(const GridGeometry& grid) {
  // Orbit at twice the circumscribed radius of the xy footprint, detector
  // at twice the orbit radius, wide enough for the whole fan.
  const double rho = 0.5 * std::numbers::sqrt2 * static_cast<double>(std::max(grid.dims[0], grid.dims[1])) * grid.spacing;
  ConeBeamGeometry g;
  g.orbit_radius = 2.0 * rho;
  g.source_detector_distance = 2.0 * g.orbit_radius;
  g.source_angles = ConeBeamGeometry::full_orbit(120);
  g.detector_cols = grid.dims[0];
  g.detector_rows = grid.dims.size() > 2 ? grid.dims[2] : grid.dims[0];
  const double half_width = g.source_detector_distance * std::tan(std::asin(rho / g.orbit_radius));
  g.pixel_pitch = 2.0 * half_width / static_cast<double>(g.detector_cols);
  return g;
}

ParallelBeamGeometry default_parallel_geometry(const GridGeometry& grid) {
  const auto bins = static_cast<std::size_t>(std::ceil(std::numbers::sqrt2 * static_cast<double>(grid.dims[0]))) + 1;
  return ParallelBeamGeometry::uniform(400, bins, grid.spacing);
}

std::string storage_name(Storage s) { return s == Storage::float32 ? "float32" : "float64"; }

nlohmann::json noise_json(const NoiseSpec& n) {
  return {{"gaussian_sigma", n.gaussian_sigma},
          {"quantization_bits", n.quantization_bits},
          {"storage", storage_name(n.storage)}};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << j.dump(2) << '\n';
  if (!f) throw IoError("write failed: " + path);
}

template <class Fn>
void write_text_file(const std::string& path, Fn&& fn) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  fn(f);
  if (!f) throw IoError("write failed: " + path);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------- config

ExperimentConfig parse_config(const nlohmann::json& j) {
  detail::FieldReader top(j, "");
  ExperimentConfig cfg;
  cfg.source = j;
  if (top.has("seed")) cfg.seed = static_cast<std::uint64_t>(top.count("seed", 0));
  cfg.output_dir = top.text("output_dir", cfg.output_dir);
  if (cfg.output_dir.empty()) throw ValidationError("output_dir", "must not be empty");

  if (top.has("phantom")) {
    auto f = top.object("phantom");
    if (f.has("volume")) {
      cfg.volume_path = f.text("volume");
      f.finish();
    } else {
      cfg.phantom = phantom_config_from_json(top.raw("phantom"), "phantom");
    }
  }
  if (top.has("operator")) {
    auto f = top.object("operator");
    const std::string kind = f.choice("kind", {"gaussian", "radon2d", "conebeam3d"}, "conebeam3d");
    cfg.op.threads = static_cast<unsigned>(f.count("threads", 1, 1));
    if (kind == "gaussian") {
      cfg.op.kind = OperatorKind::gaussian;
      cfg.op.m = f.count("m");
    } else if (kind == "radon2d") {
      cfg.op.kind = OperatorKind::radon2d;
      if (f.has("geometry")) cfg.op.parallel = parallel_beam_from_json(f.raw("geometry"), f.path("geometry"));
    } else {
      cfg.op.kind = OperatorKind::conebeam3d;
      if (f.has("geometry")) cfg.op.cone = cone_beam_from_json(f.raw("geometry"), f.path("geometry"));
    }
    f.finish();
  }
  if (top.has("noise")) {
    auto f = top.object("noise");
    cfg.noise.gaussian_sigma = f.nonnegative("gaussian_sigma", 0.0);
    cfg.noise.quantization_bits = static_cast<unsigned>(f.count("quantization_bits", 0, 0));
    if (cfg.noise.quantization_bits > 52) throw ValidationError(f.path("quantization_bits"), "must be <= 52");
    cfg.noise.storage = f.choice("storage", {"float64", "float32"}, "float64") == "float32" ? Storage::float32
                                                                                             : Storage::float64;
    f.finish();
  }
  if (top.has("reconstruction")) {
    auto f = top.object("reconstruction");
    auto& r = cfg.recon;
    r.method = f.choice("method", {"nonlinear", "linearized"}, r.method);
    if (f.has("step")) {
      auto s = f.object("step");
      const std::string rule = s.choice("rule", {"lipschitz", "theorem", "constant", "custom"}, "lipschitz");
      r.step_rule = rule == "theorem"    ? StepRule::theorem
                    : rule == "constant" ? StepRule::constant
                    : rule == "custom"   ? StepRule::custom
                                         : StepRule::lipschitz;
      r.step_scale = s.positive("scale", r.step_scale);
      if (r.step_rule == StepRule::constant) r.step = s.positive("value");
      if (s.has("norm_x")) {
        r.norm_x = s.number("norm_x");
        if (*r.norm_x < 0.0) throw ValidationError(s.path("norm_x"), "must be >= 0");
      }
      r.mu = s.positive("mu", r.mu);
      if (r.step_rule == StepRule::custom) {
        r.custom_steps = s.numbers("steps");
        if (r.custom_steps.empty()) throw ValidationError(s.path("steps"), "must not be empty");
        for (std::size_t i = 0; i < r.custom_steps.size(); ++i)
          if (!(r.custom_steps[i] > 0.0))
            throw ValidationError(s.path("steps") + "[" + std::to_string(i) + "]", "must be > 0");
      }
      if (s.has("halving")) r.halving = s.boolean("halving", true);
      s.finish();
    }
    r.lambda = f.nonnegative("lambda", r.lambda);
    if (f.has("constraint")) {
      auto c = f.object("constraint");
      const std::string kind = c.choice("kind", {"nonneg", "full_space", "l1_ball", "nonneg_l1"}, "nonneg");
      r.constraint = kind == "full_space" ? ConstraintKind::full_space
                     : kind == "l1_ball"  ? ConstraintKind::l1_ball
                     : kind == "nonneg_l1" ? ConstraintKind::nonneg_l1
                                           : ConstraintKind::nonneg;
      if (r.constraint == ConstraintKind::l1_ball || r.constraint == ConstraintKind::nonneg_l1)
        r.radius = c.positive("radius");
      c.finish();
    }
    if (r.lambda > 0.0 && r.constraint != ConstraintKind::nonneg)
      throw ValidationError("reconstruction.lambda", "total variation is only available with the nonneg constraint");
    r.iterations = f.count("iterations", 1, r.iterations);
    r.tol = f.nonnegative("tol", r.tol);
    if (f.has("eps")) {
      r.eps = f.positive("eps");
      if (!(r.eps < 1.0)) throw ValidationError(f.path("eps"), "must lie in (0, 1)");
    }
    f.finish();
  }
  if (top.has("verify")) {
    auto f = top.object("verify");
    auto& v = cfg.verify;
    v.samples = f.count("samples", 10000, v.samples);
    v.first_step_trials = f.count("first_step_trials", 1, v.first_step_trials);
    v.smoothness_trials = f.count("smoothness_trials", 1, v.smoothness_trials);
    v.width_samples = f.count("width_samples", 2, v.width_samples);
    v.phase_trials = f.count("phase_trials", 1, v.phase_trials);
    if (f.has("norms")) {
      v.norms = f.numbers("norms");
      if (v.norms.empty()) throw ValidationError(f.path("norms"), "must not be empty");
      for (std::size_t i = 0; i < v.norms.size(); ++i)
        if (!(v.norms[i] > 0.0)) throw ValidationError(f.path("norms") + "[" + std::to_string(i) + "]", "must be > 0");
    }
    f.finish();
  }
  if (top.has("compare")) {
    auto f = top.object("compare");
    if (f.has("presets")) {
      const auto& arr = f.raw("presets");
      if (!arr.is_array() || arr.empty()) throw ValidationError(f.path("presets"), "expected a non-empty array");
      cfg.compare_presets.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = f.path("presets") + "[" + std::to_string(i) + "]";
        if (!arr[i].is_string()) throw ValidationError(p, "expected a string");
        const auto name = arr[i].get<std::string>();
        bool known = false;
        for (const auto& d : density_presets()) known = known || d.name == name;
        if (!known) throw ValidationError(p, "unknown preset '" + name + "'");
        cfg.compare_presets.push_back(name);
      }
    }
    f.finish();
  }
  top.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("", std::string("not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

void apply_quick(ExperimentConfig& cfg) {
  auto& v = cfg.verify;
  v.samples = std::min<std::size_t>(v.samples, 10000);
  v.first_step_trials = std::min<std::size_t>(v.first_step_trials, 50);
  v.smoothness_trials = std::min<std::size_t>(v.smoothness_trials, 200);
  v.width_samples = std::min<std::size_t>(v.width_samples, 2000);
  v.phase_trials = std::min<std::size_t>(v.phase_trials, 10);
  cfg.recon.iterations = std::min<std::size_t>(cfg.recon.iterations, 50);
}

std::unique_ptr<MeasurementOperator> build_operator(const OperatorConfig& cfg, const GridGeometry& grid,
                                                    std::uint64_t seed) {
  const ExecutionPolicy policy{cfg.threads};
  switch (cfg.kind) {
    case OperatorKind::gaussian: return gaussian_operator(cfg.m, grid.size(), seed);
    case OperatorKind::radon2d:
      return radon2d_operator(cfg.parallel.angles.empty() ? default_parallel_geometry(grid) : cfg.parallel, grid, policy);
    case OperatorKind::conebeam3d:
      return conebeam3d_operator(cfg.cone.source_angles.empty() ? default_cone_geometry(grid) : cfg.cone, grid,
                                 policy);
  }
  throw ValidationError("operator.kind", "unknown operator kind");
}

Signal load_truth(const ExperimentConfig& cfg) {
  if (cfg.volume_path) return read_volume(*cfg.volume_path);
  return shepp_logan(cfg.phantom);
}

// ---------------------------------------------------------------- reconstruction

LogPreprocessResult log_preprocess(const Vector& y, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("log_preprocess: eps must lie in (0, 1)");
  LogPreprocessResult r;
  r.yhat.resize(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double gap = 1.0 - y[i];
    if (!(gap > eps)) {
      ++r.clamped;
      r.yhat[i] = -std::log(eps);
    } else {
      r.yhat[i] = -std::log1p(-y[i]);
    }
  }
  return r;
}

ReconstructionResult reconstruct(const MeasurementOperator& op, const Vector& y, const GridGeometry& grid,
                                 const ReconstructionConfig& cfg, const Signal* truth) {
  ReconstructionResult res;
  const bool linear = cfg.method == "linearized";
  Vector data = y;
  if (linear) {
    auto lp = log_preprocess(y, cfg.eps);
    data = std::move(lp.yhat);
    res.clamped = lp.clamped;
  }

  StepSchedule schedule;
  switch (cfg.step_rule) {
    case StepRule::lipschitz: {
      const double l = estimate_squared_norm(op) / static_cast<double>(op.rows());
      schedule = StepSchedule::constant(cfg.step_scale / l);
      break;
    }
    case StepRule::theorem:
      schedule = StepSchedule::theorem(cfg.norm_x ? *cfg.norm_x : estimate_signal_norm(y), cfg.mu);
      break;
    case StepRule::constant: schedule = StepSchedule::constant(cfg.step * cfg.step_scale); break;
    case StepRule::custom: schedule = StepSchedule::custom(cfg.custom_steps); break;
  }
  schedule.halving = cfg.halving.value_or(cfg.step_rule != StepRule::lipschitz);
  res.step = schedule.step(2);

  DescentOptions opts;
  opts.max_iter = cfg.iterations;
  opts.tol = cfg.tol;
  opts.model = linear ? ForwardModel::linear : ForwardModel::beer_lambert;
  if (truth) opts.x_ref = truth->values;

  if (cfg.constraint == ConstraintKind::nonneg) {
    res.trajectory = regularized_descent(op, data, schedule, cfg.lambda, grid, opts);
  } else {
    if (cfg.lambda > 0.0) throw DomainError("total variation is only available with the nonneg constraint");
    res.trajectory = projected_gradient_descent(op, data, schedule, {cfg.constraint, cfg.radius}, opts);
  }
  res.volume.values = res.trajectory.final;
  res.volume.geometry = grid;
  if (truth) res.psnr = psnr(res.volume.values, truth->values);
  return res;
}

std::vector<PresetComparison> compare_methods(const ExperimentConfig& cfg) {
  std::vector<PresetComparison> out;
  const GridGeometry grid = cfg.phantom.grid();
  const auto op = build_operator(cfg.op, grid, cfg.seed);
  for (const auto& name : cfg.compare_presets) {
    const auto t0 = std::chrono::steady_clock::now();
    PhantomConfig pc = cfg.phantom;
    pc.test_ellipsoid_density = preset_density(name);
    const Signal truth = shepp_logan(pc);
    const Vector q = op->apply(truth.values);
    const MeasurementSet ms = measure(*op, truth, cfg.seed, cfg.noise);

    PresetComparison c;
    c.preset = name;
    c.density = *pc.test_ellipsoid_density;
    c.max_line_integral = q.maxCoeff();
    c.max_measurement = ms.y.maxCoeff();
    c.saturated = static_cast<std::size_t>((ms.y.array() >= 1.0).count());

    ReconstructionConfig rc = cfg.recon;
    rc.method = "nonlinear";
    c.psnr_nonlinear = *reconstruct(*op, ms.y, grid, rc, &truth).psnr;
    rc.method = "linearized";
    const auto lin = reconstruct(*op, ms.y, grid, rc, &truth);
    c.psnr_linearized = *lin.psnr;
    c.clamped = lin.clamped;
    c.seconds = seconds_since(t0);
    out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------- files

void save_measurements(const std::string& path, const MeasurementSet& ms) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  for (Eigen::Index i = 0; i < ms.y.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(ms.y[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    f.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!f) throw IoError("write failed: " + path);
  write_json_file(path + ".json", {{"m", ms.y.size()},
                                   {"op_id", ms.op_id},
                                   {"seed", ms.seed},
                                   {"noise", noise_json(ms.noise)},
                                   {"dtype", "float64"},
                                   {"byte_order", "little"}});
}

MeasurementSet load_measurements(const std::string& path) {
  std::ifstream s(path + ".json");
  if (!s) throw IoError("cannot read " + path + ".json");
  MeasurementSet ms;
  std::size_t m = 0;
  try {
    const auto side = nlohmann::json::parse(s);
    m = side.at("m").get<std::size_t>();
    ms.op_id = side.at("op_id").get<std::string>();
    ms.seed = side.at("seed").get<std::uint64_t>();
    const auto& n = side.at("noise");
    ms.noise.gaussian_sigma = n.at("gaussian_sigma").get<double>();
    ms.noise.quantization_bits = n.at("quantization_bits").get<unsigned>();
    ms.noise.storage = n.at("storage").get<std::string>() == "float32" ? Storage::float32 : Storage::float64;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ".json: " + e.what());
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  ms.y.resize(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    std::uint64_t bits = 0;
    if (!f.read(reinterpret_cast<char*>(&bits), sizeof bits)) throw IoError(path + ": file shorter than sidecar m");
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    ms.y[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(bits);
  }
  if (f.peek() != std::char_traits<char>::eof()) throw IoError(path + ": file longer than sidecar m");
  return ms;
}

std::uint64_t config_hash(const nlohmann::json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_manifest(const std::string& dir, const ExperimentConfig& cfg, const std::string& command) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << config_hash(cfg.source);
  write_json_file(join(dir, "manifest.json"),
                  {{"command", command},
                   {"config_hash", hash.str()},
                   {"seed", cfg.seed},
                   {"config", cfg.source},
                   {"versions",
                    {{"nlct", NLCT_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__},
                     {"cxx_standard", __cplusplus}}}});
}

// ---------------------------------------------------------------- commands

namespace {

std::size_t middle_slice(const Signal& v) {
  const auto& d = v.geometry->dims;
  return d.size() == 3 ? d[2] / 2 : 0;
}

nlohmann::json write_volume_with_preview(const std::string& dir, const std::string& stem, const Signal& v,
                                         nlohmann::json extra = nlohmann::json::object()) {
  const std::string raw = join(dir, stem + ".raw");
  if (v.geometry && v.geometry->dims.size() >= 2) {
    const std::size_t slice = middle_slice(v);
    const std::string pgm = stem + "_slice.pgm";
    const Window w = write_pgm_slice(join(dir, pgm), v, slice);
    extra["preview"] = {{"file", pgm}, {"slice", slice}, {"window", {w.lo, w.hi}}};
  }
  write_volume(raw, v, extra);
  return {{"volume", stem + ".raw"}, {"bytes", v.size() * sizeof(float)}};
}

}  // namespace

nlohmann::json cmd_phantom(const ExperimentConfig& cfg) {
  ensure_dir(cfg.output_dir);
  const Signal v = load_truth(cfg);
  auto summary = write_volume_with_preview(cfg.output_dir, "phantom", v, {{"phantom", to_json(cfg.phantom)}});
  write_manifest(cfg.output_dir, cfg, "phantom");
  return summary;
}

nlohmann::json cmd_simulate(const ExperimentConfig& cfg) {
  ensure_dir(cfg.output_dir);
  const Signal truth = load_truth(cfg);
  const auto op = build_operator(cfg.op, *truth.geometry, cfg.seed);
  const MeasurementSet ms = measure(*op, truth, cfg.seed, cfg.noise);
  write_volume_with_preview(cfg.output_dir, "phantom", truth);
  save_measurements(join(cfg.output_dir, "measurements.bin"), ms);
  write_manifest(cfg.output_dir, cfg, "simulate");
  return {{"measurements", "measurements.bin"},
          {"m", ms.y.size()},
          {"op_id", ms.op_id},
          {"max_y", ms.y.size() ? ms.y.maxCoeff() : 0.0},
          {"saturated", static_cast<std::size_t>((ms.y.array() >= 1.0).count())}};
}

nlohmann::json cmd_reconstruct(const ExperimentConfig& cfg) {
  ensure_dir(cfg.output_dir);
  const std::string mpath = join(cfg.output_dir, "measurements.bin");
  if (!fs::exists(mpath)) throw IoError("no measurements in " + cfg.output_dir + " (run simulate first)");
  const MeasurementSet ms = load_measurements(mpath);

  std::optional<Signal> truth;
  const std::string tpath = join(cfg.output_dir, "phantom.raw");
  if (fs::exists(tpath)) truth = read_volume(tpath);
  const GridGeometry grid = truth ? *truth->geometry : (cfg.volume_path ? *read_volume(*cfg.volume_path).geometry
                                                                        : cfg.phantom.grid());
  const auto op = build_operator(cfg.op, grid, cfg.seed);
  if (op->id() != ms.op_id)
    throw ValidationError("operator", "measurements were produced by a different operator (" + ms.op_id + ")");

  const auto res = reconstruct(*op, ms.y, grid, cfg.recon, truth ? &*truth : nullptr);
  write_volume_with_preview(cfg.output_dir, "recon", res.volume);
  res.trajectory.write_csv(join(cfg.output_dir, "trajectory.csv"));
  nlohmann::json metrics{{"method", cfg.recon.method},
                         {"iterations", res.trajectory.iterations()},
                         {"final_loss", res.trajectory.records.back().loss},
                         {"halvings", res.trajectory.halvings},
                         {"step", res.step},
                         {"lambda", cfg.recon.lambda},
                         {"clamped", res.clamped}};
  metrics["psnr"] = res.psnr ? nlohmann::json(std::isinf(*res.psnr) ? 1e300 : *res.psnr) : nlohmann::json(nullptr);
  write_json_file(join(cfg.output_dir, "metrics.json"), metrics);
  write_manifest(cfg.output_dir, cfg, "reconstruct");
  return metrics;
}

nlohmann::json cmd_verify(const ExperimentConfig& cfg) {
  ensure_dir(cfg.output_dir);
  const auto& v = cfg.verify;
  nlohmann::json reports = nlohmann::json::array();
  std::vector<BoundReport> bounds;
  const std::uint64_t seed = cfg.seed;

  {
    const auto r = first_step_experiment(128, 640, 1.0, v.first_step_trials, mix_seed(seed, 1));
    const double se = std::sqrt(r.success_rate * (1.0 - r.success_rate) / static_cast<double>(r.trials));
    reports.push_back(nlohmann::json{{"quantity", "first_step"},
                       {"params", {{"n", 128}, {"m", 640}, {"norm_x", 1.0}, {"trials", r.trials},
                                   {"mean_relative_error", r.mean_error}}},
                       {"estimate", r.success_rate}, {"se", se}, {"bound", 0.95},
                       {"pass", r.success_rate >= 0.95}});
  }
  for (double nx : v.norms) {
    CorrelationOptions o;
    o.samples = v.samples;
    o.seed = mix_seed(seed, 2);
    bounds.push_back(correlation_bound_case1(nx, o));
    bounds.push_back(correlation_bound_case2(nx, o));
  }
  for (const auto& b : bounds) reports.push_back(b.summary());
  {
    const auto a = alpha_ordering();
    reports.push_back(nlohmann::json{{"quantity", "alpha_ordering"},
                       {"params", {{"t_max", 10.0}, {"grid_points", a.grid_points}, {"violations", a.violations},
                                   {"first_grid_point", a.first_grid_point}}},
                       {"estimate", a.crossover}, {"se", 0.0}, {"bound", 0.2},
                       {"pass", std::abs(a.crossover - 0.2) < 1e-12}});
  }
  for (std::size_t m : {std::size_t{64}, std::size_t{256}}) {
    const auto s = smoothness_check(64, m, 1.0, v.smoothness_trials, mix_seed(seed, 3));
    reports.push_back(nlohmann::json{{"quantity", "smoothness"},
                       {"params", {{"n", 64}, {"m", m}, {"norm_x", 1.0}, {"samples", s.samples}, {"relation", "<="}}},
                       {"estimate", s.max_ratio}, {"se", 0.0}, {"bound", s.bound}, {"pass", s.pass}});
  }
  const auto full = gaussian_width_m0(ConeSpec::full(400), v.width_samples, mix_seed(seed, 4));
  reports.push_back(nlohmann::json{{"quantity", "width_full_space"},
                     {"params", {{"n", 400}, {"samples", full.samples}, {"relation", "within 2%"}}},
                     {"estimate", full.estimate}, {"se", full.se}, {"bound", 400.0},
                     {"pass", std::abs(full.estimate / 400.0 - 1.0) < 0.02}});
  const auto sparse = gaussian_width_m0(ConeSpec::l1(100, 1), v.width_samples, mix_seed(seed, 5));
  const double approx = sparse_width_approximation(100, 1);
  reports.push_back(nlohmann::json{{"quantity", "width_l1"},
                     {"params", {{"n", 100}, {"s", 1}, {"samples", sparse.samples}, {"relation", "within 15%"}}},
                     {"estimate", sparse.estimate}, {"se", sparse.se}, {"bound", approx},
                     {"pass", std::abs(sparse.estimate / approx - 1.0) < 0.15}});

  const auto m0 = gaussian_width_m0(ConeSpec::l1(200, 5), v.width_samples, mix_seed(seed, 6)).estimate;
  PhaseTransitionSpec ps;
  ps.n = 200;
  ps.s = 5;
  ps.trials = v.phase_trials;
  ps.seed = mix_seed(seed, 7);
  for (double factor : {0.2, 0.5, 1.0, 2.0, 4.0, 8.0, 20.0})
    ps.m_grid.push_back(static_cast<std::size_t>(std::max(1.0, std::ceil(factor * m0))));
  const auto pt = phase_transition(ps);
  const double low = pt.points.front().rate;
  const double high = pt.points.back().rate;
  reports.push_back(nlohmann::json{{"quantity", "phase_transition"},
                     {"params", {{"n", 200}, {"s", 5}, {"m0", m0}, {"trials", ps.trials},
                                 {"rate_at_0.2m0", low}, {"rate_at_20m0", high},
                                 {"max_isotonic_deviation", pt.max_isotonic_deviation}}},
                     {"estimate", high}, {"se", 0.0}, {"bound", 0.9},
                     {"pass", high > 0.9 && low < 0.1 && pt.max_isotonic_deviation < 0.1}});

  write_text_file(join(cfg.output_dir, "bounds.csv"), [&](std::ostream& os) { write_reports_csv(os, bounds); });
  write_text_file(join(cfg.output_dir, "phase_transition.csv"), [&](std::ostream& os) { pt.write_csv(os); });
  bool all = true;
  for (const auto& r : reports) all = all && r.at("pass").get<bool>();
  nlohmann::json summary{{"version", NLCT_VERSION}, {"seed", seed}, {"reports", reports}, {"all_pass", all}};
  write_json_file(join(cfg.output_dir, "summary.json"), summary);
  write_manifest(cfg.output_dir, cfg, "verify");
  return summary;
}

nlohmann::json cmd_compare(const ExperimentConfig& cfg) {
  ensure_dir(cfg.output_dir);
  const auto rows = compare_methods(cfg);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : rows)
    out.push_back({{"preset", c.preset}, {"density", c.density}, {"max_line_integral", c.max_line_integral},
                   {"max_measurement", c.max_measurement}, {"saturated", c.saturated},
                   {"psnr_nonlinear", c.psnr_nonlinear}, {"psnr_linearized", c.psnr_linearized},
                   {"clamped", c.clamped}, {"seconds", c.seconds}});
  write_text_file(join(cfg.output_dir, "compare.csv"), [&](std::ostream& os) {
    os << "preset,density,max_line_integral,saturated,psnr_nonlinear,psnr_linearized,clamped\n"
       << std::setprecision(10);
    for (const auto& c : rows)
      os << c.preset << ',' << c.density << ',' << c.max_line_integral << ',' << c.saturated << ','
         << c.psnr_nonlinear << ',' << c.psnr_linearized << ',' << c.clamped << '\n';
  });
  nlohmann::json summary{{"presets", out}, {"storage", storage_name(cfg.noise.storage)}};
  write_json_file(join(cfg.output_dir, "compare.json"), summary);
  write_manifest(cfg.output_dir, cfg, "compare");
  return summary;
}

}  // namespace nlct
