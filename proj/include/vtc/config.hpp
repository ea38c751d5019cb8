#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vtc/adjoint.hpp"
#include "vtc/builtins.hpp"
#include "vtc/forward.hpp"

namespace vtc {

/// Builtin name, or a parameterised family with its parameters, plus
/// optional overrides of the problem constants.
struct ProblemSelection {
  std::string builtin = "example-affine";
  std::string family;
  nlohmann::json params = nlohmann::json::object();
  std::optional<double> horizon;
  std::optional<double> threshold;
  std::optional<std::vector<double>> x0;
  std::optional<std::vector<double>> box_lo;
  std::optional<std::vector<double>> box_hi;
};

/// "reference", or a constant value per control coordinate.
struct ControlSelection {
  bool reference = true;
  std::vector<double> value;
};

struct ExperimentConfig {
  ProblemSelection problem;
  std::size_t grid = 2000;
  std::size_t paths = 1;
  std::uint64_t seed = 0;
  /// Unset: rk4 for diffusion-free single-path runs, euler otherwise.
  std::optional<Scheme> scheme;
  bool force_monte_carlo = false;
  std::optional<AdjointMode> adjoint;
  ControlSelection control;
  std::vector<double> direction{1.0};
  std::vector<double> rho_list{0.1, -0.1, 0.01, -0.01};
  std::size_t probes = 11;
  double tol = 1e-6;
  std::optional<double> case_tol;
  std::size_t max_iters = 50;
  std::string out;
  int threads = 0;
};

/// Strict parse: unknown keys and wrong types throw ConfigError naming the key path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Checks N >= 10, M >= 1, probes >= 2 and similar ranges.
void validate_config(const ExperimentConfig& cfg);

/// Builds the selected problem with overrides applied. Throws RegistryError
/// for unknown builtins or families and ProblemError for invalid data.
BuiltinProblem build_problem(const ProblemSelection& sel);

TimeGrid make_grid(const ExperimentConfig& cfg, const ProblemSpec& spec);
SimulationOptions make_simulation(const ExperimentConfig& cfg, const ProblemSpec& spec);
ControlPath make_control(const ExperimentConfig& cfg, const BuiltinProblem& problem, const TimeGrid& grid);
Direction make_direction(const ExperimentConfig& cfg, const ProblemSpec& spec, const TimeGrid& grid);
HittingOptions make_hitting(const ExperimentConfig& cfg);

/// Parses a comma-separated list of numbers ("0.1,-0.1").
std::vector<double> parse_number_list(const std::string& text, const std::string& key);

}  // namespace vtc
