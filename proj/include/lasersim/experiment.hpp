#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lasersim/density.hpp"
#include "lasersim/params.hpp"

namespace lasersim {

enum class ExperimentKind { Steady, Evolve, Sweep, Stability, Verify };

std::string to_string(ExperimentKind k);
/// Throws ConfigError for unknown names.
ExperimentKind experiment_kind_from_string(const std::string& s);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitVerification = 3;

/// Parsed experiment file. See the README for the JSON layout.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Evolve;
  LaserParams params = LaserParams::from_decay(1.0, 1.0, 0.0, 1.0);
  nlohmann::json params_json;
  SpaceSpec space;

  double dt = 0.0;  ///< 0 selects the integrator default
  double t_end = 0.0;
  int sample_every = 1;

  std::string initial_state = "stationary";
  std::vector<std::string> observables;
  std::vector<std::string> bounds;
  std::vector<std::string> checks;  ///< verify only

  /// mean_field | linear | constant_drive | mb_driven
  std::string generator = "mean_field";
  bool rotating_frame = true;
  Complex alpha0{};
  Complex beta0{};
  bool drive_given = false;

  std::string sweep_variable;
  std::vector<double> sweep_grid;

  std::vector<int> truncation_n_max;
  double truncation_tol = 1e-8;
  double epsilon = 0.05;
  bool snapshot = false;

  /// The configuration with every default filled in.
  nlohmann::json resolved() const;
};

/// Validates kind-specific blocks. `expected`, when given, must match the
/// file's "kind" field if that field is present.
ExperimentConfig parse_config(const nlohmann::json& j,
                              std::optional<ExperimentKind> expected = std::nullopt);

/// Initial-state grammar:
///   stationary
///   limit_cycle:THETA
///   coherent:Z,atom:(P,C)      Z and C real or (re,im)
///   product_basis:N,ETA        ETA one of +, -
DensityMatrix make_initial_state(const std::string& spec, const LaserParams& p,
                                 const SpaceSpec& space);

struct RunOptions {
  bool check = false;
  std::optional<int> n_max;
  std::optional<double> dt;
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<std::string> messages;
  std::vector<std::string> files;
};

/// Runs the experiment and writes its artifacts plus manifest.json into
/// `out`. Library errors are mapped to exit codes; nothing is thrown for
/// errors that occur after the output directory exists.
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out,
                          const RunOptions& opt = {});

/// 1 for configuration problems, 2 for numerical aborts.
int exit_code_for(const std::exception& e);

const char* library_version();

}  // namespace lasersim
