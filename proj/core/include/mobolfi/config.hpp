#pragma once

#include <memory>
#include <optional>
#include <string>

#include "mobolfi/engine.hpp"

namespace mobolfi::engine {

/// Where the observed dataset comes from: simulated at the problem's
/// generating parameters with `seed`, or read from CSV files.
struct ObservedSpec {
  std::optional<Seed> seed;
  std::string x_path, w_path;  // toy
  std::string rt_ch_path;      // mlba
};

struct ProblemConfig {
  std::string name = "toy";  // toy | mlba
  ToySettings toy;
  MlbaSettings mlba;               // attributes loaded from attributes_path
  std::string attributes_path;     // empty: built-in synthetic matrix
  Vector theta_true;               // mlba generating parameters
  ObservedSpec observed;
};

/// Parsed configuration file. Paths are absolute after parsing.
struct ConfigFile {
  ProblemConfig problem;
  RunConfig run;
  PriorKind prior = PriorKind::standard;
  std::string source;  // file the config was read from, for diagnostics
};

/// JSON document with sections problem, acquisition, surrogate, sampler,
/// filter and scaling. Unknown keys raise ConfigError with the field path
/// and line; relative paths resolve against `base_dir`.
ConfigFile parse_config(const std::string& text, const std::string& base_dir,
                        const std::string& origin = "<config>");
ConfigFile load_config(const std::string& path);

/// Normalized JSON echo with every default filled in; parse_config of the
/// echo yields the same configuration.
std::string config_echo(const ConfigFile& cfg, int indent = -1);
/// 16 hex digits of FNV-1a over the compact echo.
std::string config_hash(const ConfigFile& cfg);

/// Generating parameters of the observed data (toy: alternating reference,
/// misspecified: (theta_x); mlba: problem.theta_true).
Vector reference_theta(const ProblemConfig& p);

/// Builds the problem and binds its observed data.
std::unique_ptr<Problem> make_problem(const ConfigFile& cfg);

/// Seed of the auxiliary-summary calibration simulations.
inline Seed calibration_seed(Seed master) { return master + 7000; }

}  // namespace mobolfi::engine
