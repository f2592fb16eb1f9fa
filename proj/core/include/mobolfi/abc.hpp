#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mobolfi/gp.hpp"
#include "mobolfi/random.hpp"
#include "mobolfi/types.hpp"

namespace mobolfi::abc {

/// Type-7 (linear interpolation) empirical quantile.
double quantile(std::vector<double> values, double q);

struct Tolerance {
  Vector t;  // one threshold per discrepancy column
  Vector q;  // quantile levels used
};

/// Column-wise type-7 quantiles of the training discrepancies.
Tolerance select_tolerance(const Matrix& discrepancies, const Vector& q);

/// Sample covariance (divisor n-1) of the rows of `draws` plus 1e-8 on the
/// diagonal.
gp::NoiseModel sample_noise(const Matrix& draws);

/// Training input minimizing (z_i - mu(x_i))' Sigma_n(x_i)^{-1} (z_i - mu(x_i)).
Vector noise_probe_point(const gp::Surrogate& s);

/// Discrepancy vector simulated at theta with the given seed.
using DiscrepancyFn = std::function<Vector(const Vector& theta, Seed seed)>;

/// Runs n_sigma simulations at noise_probe_point(s) with seeds
/// derive_seed(seed, j) and returns their sample covariance.
gp::NoiseModel estimate_noise_cov(const DiscrepancyFn& simulate, const gp::Surrogate& s,
                                  int n_sigma, Seed seed);

/// Median absolute deviation about the median.
double median_absolute_deviation(std::vector<double> values);

/// V = diag(v_1..v_K); scaled discrepancies are V^{-1} delta.
struct DiscrepancyScaling {
  Vector v;
  std::size_t sample_size = 0;

  static DiscrepancyScaling identity(std::size_t k);
  /// Scaling whose V^{-1} equals `weights` (explicit, e.g. (0.4, 1)).
  static DiscrepancyScaling from_weights(const Vector& weights);

  Vector weights() const { return v.cwiseInverse(); }
  Vector scale(const Vector& delta) const;
  /// Sum_k delta_k / v_k, the scalar discrepancy used by BOLFI.
  double combine(const Vector& delta) const;
};

/// MAD of each column of `discrepancies` (n x K). A zero MAD raises
/// ConfigError naming the column.
DiscrepancyScaling mad_scaling(const Matrix& discrepancies);

/// Draws n parameters from the prior, simulates their raw discrepancies
/// (seeds derive_seed(seed, i)) and applies mad_scaling.
DiscrepancyScaling mad_scaling(const std::function<Vector(Rng&)>& prior_draw,
                               const DiscrepancyFn& discrepancy, int n, Seed seed);

enum class Mode { joint, source1, source2, cond_2_given_1, cond_1_given_2 };

std::string to_string(Mode m);
Mode parse_mode(const std::string& name);
/// Modes meaningful for a K-output surrogate (K=1: joint only).
std::vector<Mode> available_modes(std::size_t k);

/// Log-likelihood of each mode from a surrogate prediction. With
/// S = Sigma_n(theta) + noise and margins standardized by sqrt(S_kk):
/// K=1 joint: log Phi((t - mu) / sqrt(s2_n + sigma2));
/// K=2 joint: log Phi2(h, k; rho); sourceK: log Phi of that margin;
/// cond_a_given_b: joint minus the conditioning marginal.
double log_likelihood(const gp::Prediction& pred, const Vector& t, const Matrix& noise, Mode mode);

/// Surrogate, tolerance and noise packaged as an evaluable log-likelihood.
/// Immutable; concurrent evaluation is safe.
class ApproxLikelihood {
 public:
  ApproxLikelihood(std::shared_ptr<const gp::Surrogate> surrogate, Vector t, gp::NoiseModel noise,
                   Mode mode = Mode::joint);

  double operator()(const Vector& theta) const { return evaluate(theta, mode_); }
  double evaluate(const Vector& theta, Mode mode) const;

  Mode mode() const { return mode_; }
  ApproxLikelihood with_mode(Mode mode) const;
  const gp::Surrogate& surrogate() const { return *surrogate_; }
  const Vector& tolerance() const { return t_; }
  const gp::NoiseModel& noise() const { return noise_; }

 private:
  std::shared_ptr<const gp::Surrogate> surrogate_;
  Vector t_;
  gp::NoiseModel noise_;
  Mode mode_;
};

}  // namespace mobolfi::abc
