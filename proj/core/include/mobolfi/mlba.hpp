#pragma once

#include <limits>
#include <vector>

#include "mobolfi/types.hpp"

namespace mobolfi::mlba {

inline constexpr int kAttributes = 3;

/// Attribute matrix is n_obs x (M * 3), alternative-major: column a*3 + k
/// holds attribute k of alternative a. M is 1, 2 or 3.
struct MlbaConfig {
  Matrix attributes;
  double A = 1.0;
  double s = 1.0;
  double tau0 = 0.0;
  double delta1 = 0.0;
  double lambda2 = 0.8;
  double I0 = 2.0;
  double beta3 = -6.0;

  Eigen::Index n_obs() const { return attributes.rows(); }
  int n_alternatives() const { return static_cast<int>(attributes.cols() / kAttributes); }
  void validate() const;
};

/// theta = (lambda1, beta1, beta2, delta2, delta3, log(chi - A)).
inline constexpr int kParams = 6;
Vector theta_true();
/// Uniform prior box: width 8 centred on theta_true, lambda1 in [0, 1].
Box prior_box();

/// Seeded U[0,1] attribute matrix of n rows and 9 columns.
Matrix synthetic_attributes(Eigen::Index n, Seed seed);

struct Params {
  double lambda1, lambda2, I0, chi;
  Eigen::Vector3d beta;
  Eigen::Vector3d delta;
};
Params decode(const Vector& theta, const MlbaConfig& cfg);

/// Drift-rate means of one observation, clamped at 0.
Vector drift_means(const Vector& theta, const MlbaConfig& cfg, Eigen::Index obs);

struct MlbaData {
  Vector rt;
  std::vector<int> choice;  // 0-based alternative index
  Matrix one_hot(int n_alternatives = 3) const;
  Eigen::Index size() const { return rt.size(); }
};

/// Starting points U[0, A], drifts N(d, s^2) truncated to (0, inf); the
/// first accumulator to reach chi wins.
MlbaData simulate(const Vector& theta, const MlbaConfig& cfg, Seed seed);

/// Accumulator finishing-time density and CDF with drift truncated to (0, inf).
double lba_pdf(double t, double d, double A, double chi, double s);
double lba_cdf(double t, double d, double A, double chi, double s);

/// log of f_a(t) prod_{b != a} (1 - F_b(t)) with t = rt - tau0.
double log_joint_density(int choice, double rt, const Vector& d, const Params& p, const MlbaConfig& cfg);

double log_likelihood(const Vector& theta, const MlbaData& data, const MlbaConfig& cfg);

/// P(choice = a, lo < RT <= hi) for observation `obs`, by adaptive quadrature.
double joint_probability(const Vector& theta, const MlbaConfig& cfg, Eigen::Index obs, int a, double lo,
                         double hi = std::numeric_limits<double>::infinity());

/// (L1 distance of sorted log RT, (1/3)||mean |CH_obs - CH|||_1).
Vector discrepancies(const MlbaData& sim, const MlbaData& obs);

/// Log-averaged discrepancies over S replicates, floored at log(1e-12).
Vector replicated_discrepancies(const Vector& theta, const MlbaData& obs, const MlbaConfig& cfg, int S, Seed seed);
Vector replicated_discrepancies(const std::vector<MlbaData>& sims, const MlbaData& obs);

/// Sample variance of RT.
double rt_variance(const MlbaData& data);

}  // namespace mobolfi::mlba
