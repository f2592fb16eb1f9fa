#pragma once

#include <functional>

#include "mobolfi/random.hpp"
#include "mobolfi/types.hpp"

namespace mobolfi::mcmc {

/// log prior + log likelihood restricted to a box: -inf outside.
struct LogPosterior {
  std::function<double(const Vector&)> log_prior;
  std::function<double(const Vector&)> log_lik;
  Box bounds;

  double operator()(const Vector& theta) const;
};

struct ChainResult {
  Matrix samples;   // steps x p, state after each step
  Vector log_post;  // steps
  double acceptance = 0.0;
};

/// Gaussian random-walk Metropolis with per-coordinate proposal sd `scale`.
ChainResult rwm_sample(const LogPosterior& lp, const Vector& init, int steps, const Vector& scale, Seed seed);

struct DemcOptions {
  int n_chains = 9;
  int steps = 16000;
  int burn_in = 13000;
  double gamma = 0.0;  // <= 0 selects 2.38 / sqrt(2p)
  double migration_rate = 0.5;
  double jitter = 1e-4;
  // Chain-wise acceptance of a cyclic shift does not leave the target
  // invariant (it contracts the spread), so migration stops after burn-in
  // unless this is set.
  bool migrate_after_burn_in = false;
};

struct DemcResult {
  Matrix samples;           // pooled post-burn-in draws, generation-major
  Vector log_post;          // matching log-posterior values
  Vector acceptance;        // crossover acceptance rate per chain
  Matrix chain_means;       // n_chains x p, post-burn-in
  double migration_acceptance = 0.0;
};

/// Differential-evolution MCMC. Each burn-in generation first (with
/// probability migration_rate) proposes a cyclic shift of states among a random subset
/// of 2..n_chains chains, accepted chain-wise by Metropolis, then moves
/// every chain to theta_i + gamma (theta_j - theta_k) + U[-jitter, jitter]^p
/// with distinct j, k != i. Proposals use only the previous generation's
/// states; random numbers are drawn serially, so output does not depend on
/// the thread count.
DemcResult demc_sample(const LogPosterior& lp, const Matrix& init, const DemcOptions& options, Seed seed);

/// Initial states drawn from `prior_draw`, redrawn (up to 1000 times per
/// chain) until inside the box with finite log posterior.
Matrix init_from_prior(const LogPosterior& lp, const std::function<Vector(Rng&)>& prior_draw, int n_chains,
                       Seed seed);

}  // namespace mobolfi::mcmc
