#pragma once

#include <string>

#include "mobolfi/types.hpp"

namespace mobolfi::toy {

/// shared: X and W both depend on theta. misspecified: the assumed model is
/// the 1-d shared model, while observed data come from separate theta_x and
/// theta_w. noshare: theta_1..theta_{p-2} drive both sources, theta_{p-1}
/// only X, theta_p only W (data dimension p-1).
enum class Variant { shared, misspecified, noshare };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

struct ToyConfig {
  Variant variant = Variant::shared;
  std::size_t dim = 10;  // parameter dimension (1 for misspecified)
  int n_x = 20;
  int n_w = 50;
  double sigma = 0.5;
  double horizon = 3.0;
  double theta_x = 0.3;   // observed-data generators for the misspecified variant
  double theta_w = -0.7;

  std::size_t data_dim() const { return variant == Variant::noshare ? dim - 1 : dim; }
  double delta() const { return horizon / (n_w - 1); }
  void validate() const;
};

/// (-0.7, 0.7, -0.7, ...) of length dim.
Vector theta_true(std::size_t dim);

struct ToyData {
  Matrix x;  // n_x x data_dim
  Matrix w;  // n_w x data_dim, row 0 is w(0) = 0
};

/// Means of X and drifts of W implied by theta under the assumed model.
void source_parameters(const Vector& theta, const ToyConfig& cfg, Vector& mean_x, Vector& drift_w);

/// X_n ~ N(mean_x, I); W increments ~ N(drift_w delta, sigma^2 delta I).
ToyData simulate_sources(const Vector& mean_x, const Vector& drift_w, const ToyConfig& cfg, Seed seed);

/// Simulation under the assumed model.
ToyData simulate(const Vector& theta, const ToyConfig& cfg, Seed seed);

/// Observed data: theta_true for shared/noshare, (theta_x, theta_w) for the
/// misspecified variant.
ToyData observed(const ToyConfig& cfg, Seed seed);

/// (||mean X - mean X_obs||, ||mean dW - mean dW_obs||).
Vector discrepancies(const ToyData& sim, const ToyData& obs);

/// Exact log p(X, W | theta) under the assumed model; `source` 0 = both,
/// 1 = X only, 2 = W only.
double log_likelihood(const Vector& theta, const ToyData& obs, const ToyConfig& cfg, int source = 0);

/// Diagonal Gaussian.
struct Gaussian {
  Vector mean;
  Vector var;
};

struct TruePosterior {
  Gaussian x_only;
  Gaussian w_only;
  Gaussian joint;
};

/// Conjugate posterior under a N(0, I) prior. X contributes precision n_x
/// per informed coordinate, W contributes (n_w - 1) delta / sigma^2.
TruePosterior true_posterior(const ToyData& obs, const ToyConfig& cfg);

}  // namespace mobolfi::toy
