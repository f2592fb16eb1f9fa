#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mobolfi/mlba.hpp"
#include "mobolfi/random.hpp"
#include "mobolfi/toy.hpp"
#include "mobolfi/types.hpp"

namespace mobolfi::engine {

/// One simulator call reduced to raw discrepancies. `admissible` is false
/// when a problem-specific init filter rejects the simulated dataset.
struct SimulationOutcome {
  Vector raw;
  bool admissible = true;
};

/// A generative model bound to its observed data.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<std::string> parameter_names() const = 0;
  virtual std::vector<std::string> discrepancy_names() const = 0;
  /// Prior support; also the acquisition search box.
  virtual const Box& bounds() const = 0;
  /// Unnormalized log density of the standard prior inside bounds().
  virtual double log_prior(const Vector& theta) const = 0;
  virtual Vector prior_draw(Rng& rng) const = 0;
  /// First `count` points of the initial design stream for `seed`. Prefixes
  /// agree across counts.
  virtual Matrix design(std::size_t count, Seed seed) const;
  virtual SimulationOutcome simulate(const Vector& theta, Seed seed) const = 0;
  /// Exact log-likelihood when available.
  virtual std::optional<double> exact_log_likelihood(const Vector&) const { return std::nullopt; }
  /// FNV-1a digest of the observed data.
  virtual std::uint64_t observed_hash() const = 0;
  /// Simulations spent while binding the problem (auxiliary calibration).
  virtual std::size_t setup_simulations() const { return 0; }
};

/// Toy prior: N(0, I) restricted to [-bound, bound]^p.
struct ToySettings {
  toy::ToyConfig config;
  double bound = 4.0;
};

class ToyProblem final : public Problem {
 public:
  ToyProblem(ToySettings settings, toy::ToyData observed);

  std::string name() const override { return "toy"; }
  std::size_t dim() const override { return settings_.config.dim; }
  std::vector<std::string> parameter_names() const override;
  std::vector<std::string> discrepancy_names() const override { return {"x", "w"}; }
  const Box& bounds() const override { return box_; }
  double log_prior(const Vector& theta) const override;
  Vector prior_draw(Rng& rng) const override;
  SimulationOutcome simulate(const Vector& theta, Seed seed) const override;
  std::optional<double> exact_log_likelihood(const Vector& theta) const override;
  std::uint64_t observed_hash() const override;

  const toy::ToyData& observed() const { return observed_; }
  const ToySettings& settings() const { return settings_; }

 private:
  ToySettings settings_;
  toy::ToyData observed_;
  Box box_;
};

enum class ChoiceDiscrepancy { proportions, auxiliary };

struct MlbaSettings {
  mlba::MlbaConfig config;
  /// 0: discrepancies of one simulated dataset; S >= 1: log-averages over S replicates.
  int replicates = 0;
  /// Init filter Var(RT) >= ratio * Var(RT_obs); <= 0 disables.
  double variance_ratio = 0.7;
  ChoiceDiscrepancy choice = ChoiceDiscrepancy::proportions;
  /// Prior simulations used to scale the auxiliary score vector.
  int aux_calibration = 100;
};

class MlbaProblem final : public Problem {
 public:
  /// For the auxiliary choice discrepancy, fits the multinomial logit to the
  /// observed choices and scales its score components by their median
  /// absolute deviation over `aux_calibration` prior simulations (seeds
  /// derive_seed(calibration_seed, i)).
  MlbaProblem(MlbaSettings settings, mlba::MlbaData observed, Seed calibration_seed = 0);

  std::string name() const override { return "mlba"; }
  std::size_t dim() const override { return mlba::kParams; }
  std::vector<std::string> parameter_names() const override;
  std::vector<std::string> discrepancy_names() const override;
  const Box& bounds() const override { return box_; }
  double log_prior(const Vector& theta) const override;
  Vector prior_draw(Rng& rng) const override;
  /// Scrambled Sobol points (random Cranley-Patterson shift) mapped to the box.
  Matrix design(std::size_t count, Seed seed) const override;
  SimulationOutcome simulate(const Vector& theta, Seed seed) const override;
  std::optional<double> exact_log_likelihood(const Vector& theta) const override;
  std::uint64_t observed_hash() const override;
  std::size_t setup_simulations() const override { return setup_sims_; }

  const mlba::MlbaData& observed() const { return observed_; }
  const MlbaSettings& settings() const { return settings_; }
  const Vector& mnl_estimate() const { return xi_hat_; }
  const Vector& score_weights() const { return score_weights_; }

 private:
  double aux_discrepancy(const mlba::MlbaData& sim) const;

  MlbaSettings settings_;
  mlba::MlbaData observed_;
  Box box_;
  double obs_variance_ = 0.0;
  Matrix obs_one_hot_;
  Vector xi_hat_, score_weights_;
  std::size_t setup_sims_ = 0;
};

/// FNV-1a over the bytes of a sequence of doubles.
std::uint64_t fnv1a(const double* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t h);

}  // namespace mobolfi::engine
