#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobolfi/types.hpp"

namespace mobolfi::gp {

/// Matern-5/2 ARD kernel plus the constant prior mean of one output component.
struct KernelSpec {
  Vector lengthscales;
  double signal_variance = 1.0;
  double mean_constant = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(lengthscales.size()); }
  void validate() const;
};

/// Matern-5/2: s2 * (1 + sqrt5 r + 5 r^2 / 3) * exp(-sqrt5 r), r the
/// lengthscale-scaled Euclidean distance.
double kernel_eval(const Vector& a, const Vector& b, const KernelSpec& spec);

/// Cross-covariance matrix [k(A_i, B_j)] for row-wise point sets.
Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelSpec& spec);

/// Rows are parameter points (n x p); outputs hold one column per discrepancy
/// component (n x K).
struct TrainingSet {
  Matrix inputs;
  Matrix outputs;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(inputs.cols()); }
  std::size_t outputs_dim() const { return static_cast<std::size_t>(outputs.cols()); }

  /// Shape and finiteness checks; `min_rows` is 2 for fitting.
  void validate(std::size_t min_rows = 1) const;
  void append(const Vector& theta, const Vector& delta);
};

/// Observation noise: sigma^2 for K=1, a K x K covariance for K=2.
struct NoiseModel {
  Matrix cov;

  static NoiseModel scalar(double sigma2);
  static NoiseModel matrix(Matrix sigma);
  std::size_t dim() const { return static_cast<std::size_t>(cov.rows()); }
  double sigma2() const;
  void validate() const;
};

struct Hyperparameters;
struct FitOptions;
struct FitDiagnostics;

struct Prediction {
  Vector mean;  // K
  Matrix cov;   // K x K, latent (noise-free) predictive covariance
  bool extrapolated = false;
};

/// GP posterior over the latent expected discrepancy. The K output
/// components have independent kernels and are coupled only through the
/// correlated observation noise. Immutable once built; concurrent const
/// calls are safe.
class Surrogate {
 public:
  /// Conditions on the training data with fixed hyperparameters. Mean
  /// constants are taken from `kernels`. Escalates diagonal jitter from
  /// 1e-8 * signal variance by factors of 10 up to 1e-2 before failing.
  static Surrogate condition(TrainingSet training, std::vector<KernelSpec> kernels,
                             NoiseModel noise);

  Prediction predict(const Vector& q) const;
  /// Predictions for the rows of `q`; one triangular solve for the batch.
  std::vector<Prediction> predict_batch(const Matrix& q) const;
  double log_marginal_likelihood() const { return log_marginal_; }

  const TrainingSet& training() const { return training_; }
  const std::vector<KernelSpec>& kernels() const { return kernels_; }
  const NoiseModel& noise() const { return noise_; }
  /// Relative jitter factor applied to each component's gram diagonal.
  double jitter() const { return jitter_; }
  std::size_t outputs_dim() const { return kernels_.size(); }
  std::size_t dim() const { return training_.dim(); }

  /// Dense (nK x nK) covariance that was factorized: latent gram, noise
  /// blocks and jitter, component-major ordering.
  Matrix gram() const;
  /// Lower Cholesky factor of gram().
  const Matrix& cholesky() const { return chol_; }

  /// Joint posterior of the latent function at the rows of `points` (m x p),
  /// stacked component-major: all m values of component 1, then component 2.
  void latent_posterior(const Matrix& points, Vector& mean, Matrix& cov) const;
  void latent_posterior_at_training(Vector& mean, Matrix& cov) const {
    latent_posterior(training_.inputs, mean, cov);
  }

  /// Block-diagonal prior covariance between point sets, component-major
  /// (a.rows() K x b.rows() K).
  Matrix prior_covariance(const Matrix& a, const Matrix& b) const;
  /// L^{-1} C(training, q) with L = cholesky(); nK x mK.
  Matrix whitened_cross(const Matrix& q) const;
  /// Posterior mean at the rows of q, m x K.
  Matrix posterior_mean(const Matrix& q) const;

 private:
  Surrogate() = default;
  Matrix cross_covariance(const Vector& q) const;  // nK x K
  friend Surrogate fit(const TrainingSet&, std::span<const Hyperparameters>, const FitOptions&,
                       FitDiagnostics*);

  TrainingSet training_;
  std::vector<KernelSpec> kernels_;
  NoiseModel noise_;
  double jitter_ = 0.0;
  Matrix chol_;
  Vector alpha_;  // gram^{-1} (z - m)
  Vector box_lo_, box_hi_;
  double log_marginal_ = 0.0;
};

/// Log marginal likelihood for given hyperparameters, with the mean
/// constants replaced by their generalized-least-squares optimum. Returns
/// -inf when the gram cannot be factorized. `kernels` mean constants are
/// overwritten with the profiled values.
double profiled_log_marginal(const TrainingSet& training, std::vector<KernelSpec>& kernels,
                             const NoiseModel& noise);

/// Full hyperparameter state of a (possibly multi-output) surrogate.
struct Hyperparameters {
  std::vector<KernelSpec> kernels;
  NoiseModel noise;
};

struct FitOptions {
  int starts = 8;              // multi-start count (Latin hypercube in log space)
  int max_evaluations = 600;   // Nelder-Mead budget per start (univariate stage)
  int noise_evaluations = 120; // budget for the correlated-noise stage (K=2)
  int joint_evaluations = 200; // joint polish budget (K=2)
  Seed seed = 0;
};

struct FitDiagnostics {
  std::vector<double> start_log_marginals;  // best value reached from each start
  std::vector<double> seed_log_marginals;   // value at each supplied seed
  int evaluations = 0;
  std::string message;
};

/// Marginal-likelihood hyperparameter fit. Each component's kernel and
/// noise variance are fitted by multi-start Nelder-Mead over bounded log
/// parameters (lengthscales in [1e-3, 1e3] x input range, variances in
/// [1e-6, 1e3] x output variance). For K=2 a second stage fits the
/// correlated noise covariance through its log-Cholesky factor and a joint
/// polish follows. Supplied `seeds` are always evaluated; the returned
/// surrogate is at least as good as each of them.
Surrogate fit(const TrainingSet& training, std::span<const Hyperparameters> seeds,
              const FitOptions& options, FitDiagnostics* diagnostics = nullptr);

}  // namespace mobolfi::gp
