#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlct/optimize.hpp"
#include "nlct/phantom.hpp"
#include "nlct/theory_verify.hpp"

namespace nlct {

struct OperatorConfig {
  OperatorKind kind = OperatorKind::conebeam3d;
  std::size_t m = 0;  // gaussian rows
  ParallelBeamGeometry parallel;
  ConeBeamGeometry cone;
  unsigned threads = 1;
};

enum class StepRule {
  lipschitz,  // scale * m / |A|^2, |A|^2 by power iteration
  theorem,
  constant,
  custom
};

struct ReconstructionConfig {
  std::string method = "nonlinear";  // or "linearized"
  StepRule step_rule = StepRule::lipschitz;
  double step_scale = 1.0;
  double step = 0.0;                  // constant rule
  std::optional<double> norm_x;       // theorem rule; estimated from y when unset
  double mu = StepSchedule::default_base_step;
  std::vector<double> custom_steps;
  std::optional<bool> halving;        // default: on except for the Lipschitz rule
  double lambda = 1e-4;
  ConstraintKind constraint = ConstraintKind::nonneg;
  double radius = std::numeric_limits<double>::infinity();
  std::size_t iterations = 500;
  double tol = 1e-12;
  double eps = 1e-12;  // log clamp for the linearized method
};

struct VerifyConfig {
  std::size_t samples = 50000;
  std::size_t first_step_trials = 200;
  std::size_t smoothness_trials = 1000;
  std::size_t width_samples = 10000;
  std::size_t phase_trials = 50;
  std::vector<double> norms{0.5, 1.0, 2.0};
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  PhantomConfig phantom;
  std::optional<std::string> volume_path;  // external truth volume instead of the phantom
  OperatorConfig op;
  NoiseSpec noise;
  ReconstructionConfig recon;
  VerifyConfig verify;
  std::vector<std::string> compare_presets{"soft", "bone", "metal"};
  nlohmann::json source = nlohmann::json::object();  // the document as given
};

// Validates every field; unknown keys and bad values raise ValidationError
// naming the field path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Smaller sample counts and trial numbers for a fast smoke run.
void apply_quick(ExperimentConfig& cfg);

std::unique_ptr<MeasurementOperator> build_operator(const OperatorConfig& cfg, const GridGeometry& grid,
                                                    std::uint64_t seed);

// Ground truth from the phantom block or the external volume.
Signal load_truth(const ExperimentConfig& cfg);

struct LogPreprocessResult {
  Vector yhat;
  std::size_t clamped = 0;
};
// -ln(max(1 - y_i, eps)); `clamped` counts entries where the clamp was active.
LogPreprocessResult log_preprocess(const Vector& y, double eps = 1e-12);

struct ReconstructionResult {
  Signal volume;
  Trajectory trajectory;
  std::optional<double> psnr;
  std::size_t clamped = 0;
  double step = 0.0;
};

// method "nonlinear" runs the Beer-Lambert data term on y; "linearized" runs
// the same descent on the linear model with log-preprocessed y.
ReconstructionResult reconstruct(const MeasurementOperator& op, const Vector& y, const GridGeometry& grid,
                                 const ReconstructionConfig& cfg, const Signal* truth = nullptr);

struct PresetComparison {
  std::string preset;
  double density = 0.0;
  double max_line_integral = 0.0;
  double max_measurement = 0.0;
  std::size_t saturated = 0;  // stored measurements equal to 1
  double psnr_nonlinear = 0.0;
  double psnr_linearized = 0.0;
  std::size_t clamped = 0;
  double seconds = 0.0;
};

// Phantom at each preset, simulated once, reconstructed by both methods with
// identical operator, budget, lambda and nonnegativity.
std::vector<PresetComparison> compare_methods(const ExperimentConfig& cfg);

// Measurements as raw little-endian float64 plus a JSON sidecar.
void save_measurements(const std::string& path, const MeasurementSet& ms);
MeasurementSet load_measurements(const std::string& path);

// FNV-1a 64 of the canonical JSON dump.
std::uint64_t config_hash(const nlohmann::json& j);
void write_manifest(const std::string& dir, const ExperimentConfig& cfg, const std::string& command);

// Command bodies. Each writes into cfg.output_dir and returns a JSON summary.
nlohmann::json cmd_phantom(const ExperimentConfig& cfg);
nlohmann::json cmd_simulate(const ExperimentConfig& cfg);
nlohmann::json cmd_reconstruct(const ExperimentConfig& cfg);
nlohmann::json cmd_verify(const ExperimentConfig& cfg);
nlohmann::json cmd_compare(const ExperimentConfig& cfg);

}  // namespace nlct
