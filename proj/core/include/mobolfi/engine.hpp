#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mobolfi/abc.hpp"
#include "mobolfi/acquisition.hpp"
#include "mobolfi/gp.hpp"
#include "mobolfi/problem.hpp"

namespace mobolfi::engine {

enum class Method { bolfi, mobolfi, mobolfi_aux };
std::string to_string(Method m);
Method parse_method(const std::string& name);

enum class PriorKind { standard, weak };
std::string to_string(PriorKind p);
PriorKind parse_prior(const std::string& name);

struct AcquisitionSettings {
  int restarts = 10;
  int candidates = 100;
  int polish_rounds = 20;
  int mc_samples = 128;
  std::optional<acq::EtaVariant> eta_variant;  // unset: reduced for p > 3
  double eps_eta = 0.1;
};

struct SurrogateSettings {
  int starts = 8;
  int refit_every = 25;      // full multi-start refit cadence
  int warm_evaluations = 150;
};

struct SamplerSettings {
  std::string method = "demc";  // demc | rwm
  int chains = 9;
  int steps = 16000;
  int burn_in = 13000;
  double rwm_scale = 0.05;  // proposal sd as a fraction of the box width
};

struct RunConfig {
  Method method = Method::mobolfi;
  int n_init = 100;
  int n_acquisitions = 150;
  Vector q_tolerance = Vector::Constant(2, 0.05);
  bool filter = true;              // pilot-quantile rejection in the init design
  double filter_quantile = 0.99;
  std::optional<Vector> weights;   // explicit V^{-1}; unset selects MAD scaling
  int n_sigma = 100;
  AcquisitionSettings acquisition;
  SurrogateSettings surrogate;
  SamplerSettings sampler;
  Seed seed = 1;

  std::size_t outputs() const { return method == Method::bolfi ? 1 : 2; }
  void validate() const;
};

/// Seeds of every stochastic stage, derived from the master seed.
struct RunSeeds {
  Seed init, pilot, sigma, sampler;
  Seed acquisition(int i) const { return acquisition_base + static_cast<Seed>(i); }
  Seed acquisition_base;
  static RunSeeds from_master(Seed master);
};

struct AcquisitionRecord {
  int iteration = 0;
  Vector theta;
  double acquisition_value = 0.0;
  Vector raw;
  Vector objective;
  bool full_refit = false;
  double log_marginal = 0.0;
  double progress = 0.0;  // hypervolume (K=2) or best objective (K=1)
  double seconds = 0.0;
};

struct SimulationCounts {
  std::size_t setup = 0, pilot = 0, init_attempts = 0, acquisitions = 0, sigma = 0;
  std::size_t total() const { return setup + pilot + init_attempts + acquisitions + sigma; }
};

struct RunResult {
  RunConfig config;
  gp::TrainingSet training;  // inputs and objectives (scaled discrepancies)
  Matrix raw;                // raw discrepancies per training row
  std::vector<int> origin;   // 0 init, i + 1 acquisition i
  std::vector<AcquisitionRecord> trace;
  abc::DiscrepancyScaling scaling;
  Vector threshold;          // scaled pilot quantiles (empty when unfiltered)
  std::shared_ptr<const gp::Surrogate> surrogate;
  abc::Tolerance tolerance;
  std::optional<gp::NoiseModel> noise;
  SimulationCounts counts;
  std::string observed_hash;
  double seconds = 0.0;
  bool complete = false;
  std::string status;

  /// Approximate likelihood in `mode`; CapabilityError when unavailable.
  abc::ApproxLikelihood likelihood(abc::Mode mode = abc::Mode::joint) const;
};

/// Map from raw discrepancies to the surrogate's objective vector.
Vector objective(const RunConfig& cfg, const abc::DiscrepancyScaling& scaling, const Vector& raw);

/// Raw discrepancies of `n` prior draws (rng make_rng(seed), simulation i
/// seeded derive_seed(seed, i)), simulated in parallel.
Matrix pilot_discrepancies(const Problem& problem, std::size_t n, Seed seed);

/// Scaling a run with this config uses: explicit weights, or MAD over the
/// pilot of n_init prior simulations.
abc::DiscrepancyScaling run_scaling(const RunConfig& cfg, const Problem& problem);

/// Pilot (when needed), filtered init design, acquisition loop, tolerance
/// and noise calibration. `observer` sees the partial result after the init
/// design, after every iteration and, with status set, on failure.
using RunObserver = std::function<void(const RunResult&)>;
RunResult run(const RunConfig& cfg, const Problem& problem, const RunObserver& observer = {});

struct PosteriorResult {
  Matrix samples;
  Vector log_post;
  Vector acceptance;   // per chain
  Matrix chain_means;  // chains x p
};

/// Samples log prior + approximate log-likelihood in `mode`. The weak prior
/// is flat on the problem box.
PosteriorResult posterior_sample(const abc::ApproxLikelihood& likelihood, const Problem& problem, PriorKind prior,
                                 const SamplerSettings& settings, Seed seed);

/// Same sampler settings applied to an arbitrary log-likelihood (exact oracles).
PosteriorResult sample_log_likelihood(const std::function<double(const Vector&)>& log_lik, const Problem& problem,
                                      PriorKind prior, const SamplerSettings& settings, Seed seed);

}  // namespace mobolfi::engine
