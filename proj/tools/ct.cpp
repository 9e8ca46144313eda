#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlct/errors.hpp"
#include "nlct/experiment.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_validation = 2;
constexpr int exit_divergence = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quick = false;
  std::optional<std::string> method;
  std::optional<double> lambda;
  std::optional<std::size_t> iterations;
  std::optional<double> eps;
  std::optional<std::string> preset;
  std::optional<std::string> storage;
};

nlohmann::json read_document(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream f(path);
  if (!f) throw nlct::IoError("cannot read config " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw nlct::ValidationError("", std::string("not valid JSON: ") + e.what());
  }
}

// Command-line values are written into the document before validation, so
// they win over the file and are covered by the manifest hash.
nlohmann::json merged_document(const Overrides& o) {
  nlohmann::json j = read_document(o.config);
  if (!j.is_object()) throw nlct::ValidationError("", "expected an object");
  if (o.seed) j["seed"] = *o.seed;
  if (o.out) j["output_dir"] = *o.out;
  auto section = [&](const char* key) -> nlohmann::json& {
    if (!j.contains(key) || j[key].is_null()) j[key] = nlohmann::json::object();
    return j[key];
  };
  if (o.method) section("reconstruction")["method"] = *o.method;
  if (o.lambda) section("reconstruction")["lambda"] = *o.lambda;
  if (o.iterations) section("reconstruction")["iterations"] = *o.iterations;
  if (o.eps) section("reconstruction")["eps"] = *o.eps;
  if (o.storage) section("noise")["storage"] = *o.storage;
  if (o.preset) {
    auto& p = section("phantom");
    p.erase("test_ellipsoid_density");
    p["preset"] = *o.preset;
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear Beer-Lambert CT reconstruction and theory checks"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON experiment config");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_flag("--quick", o.quick, "reduced sample counts and iterations");
  };
  auto* phantom = app.add_subcommand("phantom", "write the phantom volume and a preview slice");
  auto* simulate = app.add_subcommand("simulate", "simulate Beer-Lambert measurements of the phantom");
  auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct from simulated measurements");
  auto* verify = app.add_subcommand("verify", "Monte Carlo checks of the convergence theory");
  auto* compare = app.add_subcommand("compare", "nonlinear vs linearized reconstruction over density presets");
  for (auto* sub : {phantom, simulate, reconstruct, verify, compare}) add_common(sub);
  for (auto* sub : {phantom, simulate, compare}) sub->add_option("--preset", o.preset, "test ellipsoid density preset");
  for (auto* sub : {simulate, compare}) sub->add_option("--storage", o.storage, "measurement storage: float64|float32");
  for (auto* sub : {reconstruct, compare}) {
    sub->add_option("--lambda", o.lambda, "TV weight");
    sub->add_option("--iterations", o.iterations, "iteration budget");
    sub->add_option("--eps", o.eps, "log clamp for the linearized method");
  }
  reconstruct->add_option("--method", o.method, "nonlinear|linearized");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_validation;
  }

  try {
    nlct::ExperimentConfig cfg = nlct::parse_config(merged_document(o));
    if (o.quick) nlct::apply_quick(cfg);
    nlohmann::json summary;
    if (phantom->parsed()) summary = nlct::cmd_phantom(cfg);
    else if (simulate->parsed()) summary = nlct::cmd_simulate(cfg);
    else if (reconstruct->parsed()) summary = nlct::cmd_reconstruct(cfg);
    else if (verify->parsed()) summary = nlct::cmd_verify(cfg);
    else summary = nlct::cmd_compare(cfg);
    std::cout << summary.dump(2) << '\n';
    return exit_ok;
  } catch (const nlct::ValidationError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return exit_validation;
  } catch (const nlct::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return exit_divergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_failure;
  }
}
