#include "mobolfi/abc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "mobolfi/error.hpp"
#include "mobolfi/normal.hpp"
#include "mobolfi/parallel.hpp"
#include "mobolfi/random.hpp"

namespace mobolfi::abc {

double quantile(std::vector<double> values, double q) {
  require(!values.empty(), "quantile: empty input");
  require(q >= 0.0 && q <= 1.0, "quantile: level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Tolerance select_tolerance(const Matrix& discrepancies, const Vector& q) {
  require(discrepancies.rows() >= 2, "select_tolerance: need at least two training rows");
  require(q.size() == discrepancies.cols(), "select_tolerance: one quantile level per column");
  Tolerance tol{Vector(q.size()), q};
  for (Eigen::Index c = 0; c < q.size(); ++c) {
    require(q[c] > 0.0 && q[c] < 1.0, "select_tolerance: quantile levels must lie in (0, 1)");
    const Vector col = discrepancies.col(c);
    tol.t[c] = quantile(std::vector<double>(col.data(), col.data() + col.size()), q[c]);
  }
  return tol;
}

gp::NoiseModel sample_noise(const Matrix& draws) {
  require(draws.rows() >= 2, "sample_noise: need at least two draws");
  const Matrix centered = draws.rowwise() - draws.colwise().mean();
  Matrix cov = centered.transpose() * centered / static_cast<double>(draws.rows() - 1);
  cov = 0.5 * (cov + cov.transpose());
  cov.diagonal().array() += 1e-8;
  return gp::NoiseModel::matrix(cov);
}

Vector noise_probe_point(const gp::Surrogate& s) {
  const auto& tr = s.training();
  const auto preds = s.predict_batch(tr.inputs);
  double best = std::numeric_limits<double>::infinity();
  Eigen::Index arg = 0;
  for (Eigen::Index i = 0; i < tr.inputs.rows(); ++i) {
    const auto& pr = preds[static_cast<std::size_t>(i)];
    const Vector r = tr.outputs.row(i).transpose() - pr.mean;
    Matrix c = pr.cov;
    c.diagonal().array() += 1e-12 * std::max(c.trace(), 1e-300);
    const double m = r.dot(c.ldlt().solve(r));
    if (std::isfinite(m) && m < best) {
      best = m;
      arg = i;
    }
  }
  return tr.inputs.row(arg).transpose();
}

gp::NoiseModel estimate_noise_cov(const DiscrepancyFn& simulate, const gp::Surrogate& s,
                                  int n_sigma, Seed seed) {
  require(n_sigma >= 2, "estimate_noise_cov: n_sigma must be >= 2");
  const Vector theta = noise_probe_point(s);
  const auto k = static_cast<Eigen::Index>(s.outputs_dim());
  Matrix draws(n_sigma, k);
  parallel_for(static_cast<std::size_t>(n_sigma), [&](std::size_t j) {
    const Seed sj = derive_seed(seed, j);
    Vector d;
    try {
      d = simulate(theta, sj);
    } catch (const SimulationError&) {
      throw;
    } catch (const std::exception& e) {
      throw SimulationError(e.what(), sj);
    }
    if (d.size() != k || !d.allFinite()) throw SimulationError("non-finite discrepancy", sj);
    draws.row(static_cast<Eigen::Index>(j)) = d.transpose();
  });
  return sample_noise(draws);
}

double median_absolute_deviation(std::vector<double> values) {
  require(!values.empty(), "median_absolute_deviation: empty input");
  const double med = quantile(values, 0.5);
  for (double& v : values) v = std::fabs(v - med);
  return quantile(std::move(values), 0.5);
}

DiscrepancyScaling DiscrepancyScaling::identity(std::size_t k) {
  return {Vector::Ones(static_cast<Eigen::Index>(k)), 0};
}

DiscrepancyScaling DiscrepancyScaling::from_weights(const Vector& weights) {
  require(weights.size() >= 1 && (weights.array() > 0.0).all() && weights.allFinite(),
          "DiscrepancyScaling: weights must be positive and finite");
  return {weights.cwiseInverse(), 0};
}

Vector DiscrepancyScaling::scale(const Vector& delta) const {
  require(delta.size() == v.size(), "DiscrepancyScaling: dimension mismatch");
  return delta.cwiseQuotient(v);
}

double DiscrepancyScaling::combine(const Vector& delta) const { return scale(delta).sum(); }

DiscrepancyScaling mad_scaling(const Matrix& discrepancies) {
  require(discrepancies.rows() >= 1, "mad_scaling: empty sample");
  DiscrepancyScaling out{Vector(discrepancies.cols()), static_cast<std::size_t>(discrepancies.rows())};
  for (Eigen::Index c = 0; c < discrepancies.cols(); ++c) {
    const Vector col = discrepancies.col(c);
    out.v[c] = median_absolute_deviation(std::vector<double>(col.data(), col.data() + col.size()));
    if (!(out.v[c] > 0.0))
      throw ConfigError("mad_scaling: discrepancy column " + std::to_string(c + 1) +
                        " has zero median absolute deviation");
  }
  return out;
}

DiscrepancyScaling mad_scaling(const std::function<Vector(Rng&)>& prior_draw,
                               const DiscrepancyFn& discrepancy, int n, Seed seed) {
  require(n >= 10, "mad_scaling: n must be >= 10");
  Rng rng = make_rng(seed);
  std::vector<Vector> thetas;
  for (int i = 0; i < n; ++i) thetas.push_back(prior_draw(rng));
  std::vector<Vector> rows(static_cast<std::size_t>(n));
  parallel_for(rows.size(), [&](std::size_t i) { rows[i] = discrepancy(thetas[i], derive_seed(seed, i)); });
  Matrix d(n, rows.front().size());
  for (int i = 0; i < n; ++i) d.row(i) = rows[static_cast<std::size_t>(i)].transpose();
  return mad_scaling(d);
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::joint: return "joint";
    case Mode::source1: return "source1";
    case Mode::source2: return "source2";
    case Mode::cond_2_given_1: return "cond_2_given_1";
    case Mode::cond_1_given_2: return "cond_1_given_2";
  }
  return "joint";
}

Mode parse_mode(const std::string& name) {
  for (Mode m : {Mode::joint, Mode::source1, Mode::source2, Mode::cond_2_given_1, Mode::cond_1_given_2})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown likelihood mode '" + name + "'");
}

std::vector<Mode> available_modes(std::size_t k) {
  if (k == 1) return {Mode::joint};
  return {Mode::joint, Mode::source1, Mode::source2, Mode::cond_2_given_1, Mode::cond_1_given_2};
}

double log_likelihood(const gp::Prediction& pred, const Vector& t, const Matrix& noise, Mode mode) {
  const auto k = pred.mean.size();
  require(t.size() == k && noise.rows() == k && noise.cols() == k,
          "log_likelihood: tolerance/noise dimension mismatch");
  if (k == 1) {
    if (mode != Mode::joint) throw CapabilityError("mode " + to_string(mode) + " needs two discrepancies");
    return log_normal_cdf((t[0] - pred.mean[0]) / std::sqrt(pred.cov(0, 0) + noise(0, 0)));
  }
  require(k == 2, "log_likelihood: at most two discrepancies are supported");
  const Eigen::Matrix2d s = pred.cov + noise;
  const double s1 = std::sqrt(s(0, 0)), s2 = std::sqrt(s(1, 1));
  if (!(s1 > 0.0 && s2 > 0.0)) throw NumericalError("log_likelihood: total covariance is not positive definite");
  const double h = (t[0] - pred.mean[0]) / s1;
  const double kk = (t[1] - pred.mean[1]) / s2;
  const double rho = std::clamp(0.5 * (s(0, 1) + s(1, 0)) / (s1 * s2), -1.0, 1.0);
  switch (mode) {
    case Mode::source1: return log_normal_cdf(h);
    case Mode::source2: return log_normal_cdf(kk);
    case Mode::joint: return log_bvn_cdf(h, kk, rho);
    case Mode::cond_2_given_1: return log_bvn_cdf(h, kk, rho) - log_normal_cdf(h);
    case Mode::cond_1_given_2: return log_bvn_cdf(h, kk, rho) - log_normal_cdf(kk);
  }
  return 0.0;
}

ApproxLikelihood::ApproxLikelihood(std::shared_ptr<const gp::Surrogate> surrogate, Vector t,
                                   gp::NoiseModel noise, Mode mode)
    : surrogate_(std::move(surrogate)), t_(std::move(t)), noise_(std::move(noise)), mode_(mode) {
  require(surrogate_ != nullptr, "ApproxLikelihood: null surrogate");
  require(t_.size() == static_cast<Eigen::Index>(surrogate_->outputs_dim()),
          "ApproxLikelihood: tolerance dimension must match the surrogate");
  noise_.validate();
  require(noise_.dim() == surrogate_->outputs_dim(), "ApproxLikelihood: noise dimension mismatch");
  const auto modes = available_modes(surrogate_->outputs_dim());
  if (std::find(modes.begin(), modes.end(), mode_) == modes.end())
    throw CapabilityError("mode " + to_string(mode_) + " is unavailable for a scalar-discrepancy surrogate");
}

double ApproxLikelihood::evaluate(const Vector& theta, Mode mode) const {
  return log_likelihood(surrogate_->predict(theta), t_, noise_.cov, mode);
}

ApproxLikelihood ApproxLikelihood::with_mode(Mode mode) const {
  return ApproxLikelihood(surrogate_, t_, noise_, mode);
}

}  // namespace mobolfi::abc
