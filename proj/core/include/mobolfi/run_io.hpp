#pragma once

#include <string>

#include "mobolfi/config.hpp"
#include "mobolfi/engine.hpp"

namespace mobolfi::engine {

/// `<out>/run-<config hash>`.
std::string run_directory(const std::string& out, const ConfigFile& cfg);

/// Writes run.json, training.csv and acquisitions.csv. Safe to call on
/// partial results (observer callbacks); the manifest carries the status.
void write_run(const std::string& dir, const ConfigFile& cfg, const Problem& problem, const RunResult& result);

struct LoadedRun {
  ConfigFile config;
  RunResult result;
  std::vector<std::string> parameter_names;
};

/// Reads a run directory and reconditions the surrogate on the stored
/// training set and hyperparameters. IncompleteRunError unless the manifest
/// reports a completed run.
LoadedRun load_run(const std::string& dir);

struct PosteriorRecord {
  abc::Mode mode = abc::Mode::joint;
  PriorKind prior = PriorKind::standard;
  SamplerSettings sampler;
  Seed seed = 0;
};

/// posterior_<mode>.csv (theta_1..theta_p, log_post) and
/// posterior_<mode>.json (acceptance, chain means, per-coordinate moments
/// and quantiles); the summary is also recorded in run.json.
void write_posterior(const std::string& dir, const PosteriorRecord& rec, const PosteriorResult& post);

/// theta_1..theta_p.
std::vector<std::string> theta_header(std::size_t p);

}  // namespace mobolfi::engine
