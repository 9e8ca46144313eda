#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlct/errors.hpp"
#include "nlct/experiment.hpp"

namespace py = pybind11;
using namespace nlct;

namespace {

ForwardModel model_from(const std::string& name) {
  if (name == "beer_lambert") return ForwardModel::beer_lambert;
  if (name == "linear") return ForwardModel::linear;
  throw DomainError("model must be 'beer_lambert' or 'linear'");
}

ConstraintSet constraint_from(const std::string& kind, double radius) {
  if (kind == "full_space") return ConstraintSet::full_space();
  if (kind == "nonneg") return ConstraintSet::nonneg();
  if (kind == "l1_ball") return ConstraintSet::l1_ball(radius);
  if (kind == "nonneg_l1") return ConstraintSet::nonneg_l1(radius);
  throw DomainError("unknown constraint '" + kind + "'");
}

Storage storage_from(const std::string& name) {
  if (name == "float64") return Storage::float64;
  if (name == "float32") return Storage::float32;
  throw DomainError("storage must be 'float64' or 'float32'");
}

DescentOptions options_from(std::size_t max_iter, double tol, double step_tol, std::optional<Vector> x_ref,
                            const std::string& model) {
  DescentOptions o;
  o.max_iter = max_iter;
  o.tol = tol;
  o.step_tol = step_tol;
  o.x_ref = std::move(x_ref);
  o.model = model_from(model);
  return o;
}

py::dict trajectory_dict(const Trajectory& t) {
  std::vector<double> err, loss_, grad, step;
  for (const auto& r : t.records) {
    err.push_back(r.err);
    loss_.push_back(r.loss);
    grad.push_back(r.grad_norm);
    step.push_back(r.step);
  }
  py::dict d;
  d["final"] = t.final;
  d["err"] = err;
  d["loss"] = loss_;
  d["grad_norm"] = grad;
  d["step"] = step;
  d["iterations"] = t.iterations();
  d["halvings"] = t.halvings;
  d["converged"] = t.converged;
  return d;
}

GridGeometry grid_from(std::vector<std::size_t> dims, double spacing) {
  GridGeometry g{std::move(dims), spacing};
  g.validate();
  return g;
}

}  // namespace

PYBIND11_MODULE(_nlct, m) {
  m.doc() = "Beer-Lambert measurement model, CT operators and reconstruction";
  m.attr("__version__") = NLCT_VERSION;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_MemoryError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<MeasurementOperator>(m, "Operator")
      .def_property_readonly("rows", &MeasurementOperator::rows)
      .def_property_readonly("cols", &MeasurementOperator::cols)
      .def_property_readonly("id", &MeasurementOperator::id)
      .def("apply", &MeasurementOperator::apply, py::arg("x"))
      .def("apply_transpose", &MeasurementOperator::apply_transpose, py::arg("r"))
      .def("materialize", [](const MeasurementOperator& op) { return Eigen::MatrixXd(op.materialize()); });

  py::class_<GaussianOperator, MeasurementOperator>(m, "GaussianOperator")
      .def(py::init<std::size_t, std::size_t, std::uint64_t>(), py::arg("m"), py::arg("n"), py::arg("seed"));

  py::class_<Radon2DOperator, MeasurementOperator>(m, "Radon2DOperator")
      .def(py::init([](std::vector<double> angles, std::size_t bins, double detector_spacing,
                       std::vector<std::size_t> dims, double spacing, unsigned threads) {
             ParallelBeamGeometry g;
             g.angles = std::move(angles);
             g.detector_bins = bins;
             g.detector_spacing = detector_spacing;
             return new Radon2DOperator(g, grid_from(std::move(dims), spacing), {threads});
           }),
           py::arg("angles"), py::arg("detector_bins"), py::arg("detector_spacing") = 1.0, py::arg("dims"),
           py::arg("spacing") = 1.0, py::arg("threads") = 1);

  py::class_<ConeBeamOperator, MeasurementOperator>(m, "ConeBeamOperator")
      .def(py::init([](double orbit_radius, double source_detector_distance, std::vector<double> source_angles,
                       std::size_t detector_rows, std::size_t detector_cols, double pixel_pitch, double sample_step,
                       std::vector<std::size_t> dims, double spacing, unsigned threads) {
             ConeBeamGeometry g;
             g.orbit_radius = orbit_radius;
             g.source_detector_distance = source_detector_distance;
             g.source_angles = std::move(source_angles);
             g.detector_rows = detector_rows;
             g.detector_cols = detector_cols;
             g.pixel_pitch = pixel_pitch;
             g.sample_step = sample_step;
             return new ConeBeamOperator(g, grid_from(std::move(dims), spacing), {threads});
           }),
           py::arg("orbit_radius"), py::arg("source_detector_distance"), py::arg("source_angles"),
           py::arg("detector_rows"), py::arg("detector_cols"), py::arg("pixel_pitch") = 1.0,
           py::arg("sample_step") = 0.5, py::arg("dims"), py::arg("spacing") = 1.0, py::arg("threads") = 1);

  m.def("beer_lambert", &beer_lambert, py::arg("t"));
  m.def("beer_lambert_subgrad", &beer_lambert_subgrad, py::arg("t"));
  m.def(
      "measure",
      [](const MeasurementOperator& op, const Vector& x, std::uint64_t seed, double sigma, unsigned bits,
         const std::string& storage) {
        NoiseSpec noise;
        noise.gaussian_sigma = sigma;
        noise.quantization_bits = bits;
        noise.storage = storage_from(storage);
        return measure(op, Signal{x, std::nullopt, false}, seed, noise).y;
      },
      py::arg("op"), py::arg("x"), py::arg("seed") = 0, py::arg("sigma") = 0.0, py::arg("bits") = 0,
      py::arg("storage") = "float64");
  m.def(
      "loss",
      [](const MeasurementOperator& op, const Vector& y, const Vector& z, const std::string& model) {
        return loss(op, y, z, model_from(model));
      },
      py::arg("op"), py::arg("y"), py::arg("z"), py::arg("model") = "beer_lambert");
  m.def(
      "grad_loss",
      [](const MeasurementOperator& op, const Vector& y, const Vector& z, const std::string& model) {
        return grad_loss(op, y, z, model_from(model));
      },
      py::arg("op"), py::arg("y"), py::arg("z"), py::arg("model") = "beer_lambert");

  m.def("erfcx", &erfcx, py::arg("x"));
  m.def("step_size_mu1", &step_size_mu1, py::arg("norm_x"));
  m.def("mean_measurement", &mean_measurement, py::arg("norm_x"));
  m.def("estimate_signal_norm", py::overload_cast<const Vector&>(&estimate_signal_norm), py::arg("y"));
  m.def(
      "project", [](const Vector& v, const std::string& kind, double radius) { return project(constraint_from(kind, radius), v); },
      py::arg("v"), py::arg("kind"), py::arg("radius") = std::numeric_limits<double>::infinity());

  py::class_<StepSchedule>(m, "StepSchedule")
      .def_static("theorem", &StepSchedule::theorem, py::arg("norm_x"), py::arg("mu") = StepSchedule::default_base_step)
      .def_static("constant", &StepSchedule::constant, py::arg("step"))
      .def_static("custom", &StepSchedule::custom, py::arg("steps"))
      .def("step", &StepSchedule::step, py::arg("t"))
      .def_readwrite("halving", &StepSchedule::halving)
      .def_readwrite("max_halvings", &StepSchedule::max_halvings);

  m.def(
      "gradient_descent",
      [](const MeasurementOperator& op, const Vector& y, const StepSchedule& schedule, std::size_t max_iter,
         double tol, double step_tol, std::optional<Vector> x_ref, const std::string& model) {
        return trajectory_dict(
            gradient_descent(op, y, schedule, options_from(max_iter, tol, step_tol, std::move(x_ref), model)));
      },
      py::arg("op"), py::arg("y"), py::arg("schedule"), py::arg("max_iter") = 10000, py::arg("tol") = 1e-12,
      py::arg("step_tol") = 0.0, py::arg("x_ref") = std::nullopt, py::arg("model") = "beer_lambert");
  m.def(
      "projected_gradient_descent",
      [](const MeasurementOperator& op, const Vector& y, const StepSchedule& schedule, const std::string& kind,
         double radius, std::size_t max_iter, double tol, double step_tol, std::optional<Vector> x_ref,
         const std::string& model) {
        return trajectory_dict(projected_gradient_descent(
            op, y, schedule, constraint_from(kind, radius),
            options_from(max_iter, tol, step_tol, std::move(x_ref), model)));
      },
      py::arg("op"), py::arg("y"), py::arg("schedule"), py::arg("kind"),
      py::arg("radius") = std::numeric_limits<double>::infinity(), py::arg("max_iter") = 10000,
      py::arg("tol") = 1e-12, py::arg("step_tol") = 0.0, py::arg("x_ref") = std::nullopt,
      py::arg("model") = "beer_lambert");
  m.def(
      "regularized_descent",
      [](const MeasurementOperator& op, const Vector& y, const StepSchedule& schedule, double lambda,
         std::vector<std::size_t> dims, double spacing, std::size_t max_iter, double tol,
         std::optional<Vector> x_ref, const std::string& model) {
        return trajectory_dict(regularized_descent(op, y, schedule, lambda, grid_from(std::move(dims), spacing),
                                                   options_from(max_iter, tol, 0.0, std::move(x_ref), model)));
      },
      py::arg("op"), py::arg("y"), py::arg("schedule"), py::arg("lam"), py::arg("dims"), py::arg("spacing") = 1.0,
      py::arg("max_iter") = 500, py::arg("tol") = 1e-12, py::arg("x_ref") = std::nullopt,
      py::arg("model") = "beer_lambert");
  m.def(
      "tv_value",
      [](const Vector& z, std::vector<std::size_t> dims) { return tv_value(z, grid_from(std::move(dims), 1.0)); },
      py::arg("z"), py::arg("dims"));

  m.def(
      "shepp_logan",
      [](std::vector<std::size_t> dims, std::optional<double> test_density, double spacing) {
        PhantomConfig c;
        c.dims = std::move(dims);
        c.spacing = spacing;
        c.test_ellipsoid_density = test_density;
        return shepp_logan(c).values;
      },
      py::arg("dims"), py::arg("test_density") = std::nullopt, py::arg("spacing") = 1.0);
  m.def("preset_density", &preset_density, py::arg("name"));
  m.def("psnr", py::overload_cast<const Vector&, const Vector&>(&psnr), py::arg("recon"), py::arg("truth"));

  m.def(
      "first_step_experiment",
      [](std::size_t n, std::size_t m_, double norm_x, std::size_t trials, std::uint64_t seed) {
        const auto r = first_step_experiment(n, m_, norm_x, trials, seed);
        return py::dict(py::arg("success_rate") = r.success_rate, py::arg("mean_error") = r.mean_error,
                        py::arg("trials") = r.trials);
      },
      py::arg("n"), py::arg("m"), py::arg("norm_x"), py::arg("trials"), py::arg("seed"));
  auto correlation = [](auto fn) {
    return [fn](double norm_x, std::size_t samples, std::uint64_t seed) {
      CorrelationOptions o;
      o.samples = samples;
      o.seed = seed;
      return fn(norm_x, o).summary().dump();
    };
  };
  m.def("_correlation_bound_case1", correlation(&correlation_bound_case1), py::arg("norm_x"),
        py::arg("samples") = 50000, py::arg("seed") = 1);
  m.def("_correlation_bound_case2", correlation(&correlation_bound_case2), py::arg("norm_x"),
        py::arg("samples") = 50000, py::arg("seed") = 1);
  m.def(
      "smoothness_check",
      [](std::size_t n, std::size_t m_, double norm_x, std::size_t trials, std::uint64_t seed) {
        const auto r = smoothness_check(n, m_, norm_x, trials, seed);
        return py::dict(py::arg("max_ratio") = r.max_ratio, py::arg("bound") = r.bound, py::arg("pass") = r.pass);
      },
      py::arg("n"), py::arg("m"), py::arg("norm_x"), py::arg("trials"), py::arg("seed"));
  m.def(
      "gaussian_width_m0",
      [](std::size_t n, std::size_t s, std::size_t samples, std::uint64_t seed) {
        const auto cone = s == 0 ? ConeSpec::full(n) : ConeSpec::l1(n, s);
        const auto w = gaussian_width_m0(cone, samples, seed);
        return py::make_tuple(w.estimate, w.se);
      },
      py::arg("n"), py::arg("s"), py::arg("samples"), py::arg("seed"),
      "Squared width of the descent cone; s = 0 selects the full space.");
  m.def(
      "l1_cone_distance_squared",
      [](const Vector& g, std::size_t s) { return l1_cone_distance_squared(g, ConeSpec::l1(g.size(), s)); },
      py::arg("g"), py::arg("s"));
  m.def("sparse_width_approximation", &sparse_width_approximation, py::arg("n"), py::arg("s"));
  m.def("isotonic_fit", &isotonic_fit, py::arg("values"));

  m.def(
      "_validate_config", [](const std::string& text) { parse_config(nlohmann::json::parse(text)); },
      py::arg("config_json"));
  m.def(
      "_run_command",
      [](const std::string& command, const std::string& text, bool quick) {
        auto cfg = parse_config(nlohmann::json::parse(text));
        if (quick) apply_quick(cfg);
        py::gil_scoped_release release;
        nlohmann::json out;
        if (command == "phantom") out = cmd_phantom(cfg);
        else if (command == "simulate") out = cmd_simulate(cfg);
        else if (command == "reconstruct") out = cmd_reconstruct(cfg);
        else if (command == "verify") out = cmd_verify(cfg);
        else if (command == "compare") out = cmd_compare(cfg);
        else throw DomainError("unknown command '" + command + "'");
        return out.dump();
      },
      py::arg("command"), py::arg("config_json"), py::arg("quick") = false);
}
