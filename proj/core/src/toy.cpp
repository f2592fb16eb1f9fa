#include "mobolfi/toy.hpp"

#include <cmath>

#include "mobolfi/error.hpp"
#include "mobolfi/normal.hpp"
#include "mobolfi/random.hpp"

namespace mobolfi::toy {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::shared: return "shared";
    case Variant::misspecified: return "misspecified";
    case Variant::noshare: return "noshare";
  }
  return "shared";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::shared, Variant::misspecified, Variant::noshare})
    if (to_string(v) == name) return v;
  throw ConfigError("unknown toy variant '" + name + "'");
}

void ToyConfig::validate() const {
  if (n_x < 2 || n_w < 2) throw ConfigError("toy: n_x and n_w must be >= 2");
  if (!(sigma > 0.0) || !(horizon > 0.0)) throw ConfigError("toy: sigma and horizon must be positive");
  if (variant == Variant::misspecified && dim != 1) throw ConfigError("toy: the misspecified variant is 1-dimensional");
  if (variant == Variant::noshare && dim < 3) throw ConfigError("toy: the noshare variant needs dim >= 3");
  if (dim < 1) throw ConfigError("toy: dim must be >= 1");
}

Vector theta_true(std::size_t dim) {
  Vector t(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = i % 2 == 0 ? -0.7 : 0.7;
  return t;
}

void source_parameters(const Vector& theta, const ToyConfig& cfg, Vector& mean_x, Vector& drift_w) {
  require(theta.size() == static_cast<Eigen::Index>(cfg.dim), "toy: theta dimension mismatch");
  if (cfg.variant != Variant::noshare) {
    mean_x = theta;
    drift_w = theta;
    return;
  }
  const auto q = static_cast<Eigen::Index>(cfg.dim) - 2;
  mean_x.resize(q + 1);
  drift_w.resize(q + 1);
  mean_x.head(q) = theta.head(q);
  drift_w.head(q) = theta.head(q);
  mean_x[q] = theta[q];
  drift_w[q] = theta[q + 1];
}

ToyData simulate_sources(const Vector& mean_x, const Vector& drift_w, const ToyConfig& cfg, Seed seed) {
  const auto d = static_cast<Eigen::Index>(cfg.data_dim());
  require(mean_x.size() == d && drift_w.size() == d, "toy: source parameter dimension mismatch");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> nd;
  ToyData out{Matrix(cfg.n_x, d), Matrix::Zero(cfg.n_w, d)};
  for (int n = 0; n < cfg.n_x; ++n)
    for (Eigen::Index j = 0; j < d; ++j) out.x(n, j) = mean_x[j] + nd(rng);
  const double dt = cfg.delta();
  const double sd = cfg.sigma * std::sqrt(dt);
  for (int m = 1; m < cfg.n_w; ++m)
    for (Eigen::Index j = 0; j < d; ++j) out.w(m, j) = out.w(m - 1, j) + drift_w[j] * dt + sd * nd(rng);
  return out;
}

ToyData simulate(const Vector& theta, const ToyConfig& cfg, Seed seed) {
  Vector mx, dw;
  source_parameters(theta, cfg, mx, dw);
  return simulate_sources(mx, dw, cfg, seed);
}

ToyData observed(const ToyConfig& cfg, Seed seed) {
  cfg.validate();
  if (cfg.variant == Variant::misspecified)
    return simulate_sources(Vector::Constant(1, cfg.theta_x), Vector::Constant(1, cfg.theta_w), cfg, seed);
  return simulate(theta_true(cfg.dim), cfg, seed);
}

namespace {
Vector mean_increment(const Matrix& w) {
  return (w.row(w.rows() - 1) - w.row(0)).transpose() / static_cast<double>(w.rows() - 1);
}
}  // namespace

Vector discrepancies(const ToyData& sim, const ToyData& obs) {
  if (sim.x.rows() != obs.x.rows() || sim.x.cols() != obs.x.cols() || sim.w.rows() != obs.w.rows() ||
      sim.w.cols() != obs.w.cols())
    throw ContractViolation("toy discrepancies: shape mismatch between simulated and observed data");
  Vector d(2);
  d[0] = (sim.x.colwise().mean() - obs.x.colwise().mean()).norm();
  d[1] = (mean_increment(sim.w) - mean_increment(obs.w)).norm();
  return d;
}

double log_likelihood(const Vector& theta, const ToyData& obs, const ToyConfig& cfg, int source) {
  Vector mx, dw;
  source_parameters(theta, cfg, mx, dw);
  double ll = 0.0;
  if (source != 2) {
    for (Eigen::Index n = 0; n < obs.x.rows(); ++n)
      ll += -0.5 * (obs.x.row(n).transpose() - mx).squaredNorm() - kLogSqrt2Pi * static_cast<double>(mx.size());
  }
  if (source != 1) {
    const double dt = cfg.delta();
    const double var = cfg.sigma * cfg.sigma * dt;
    for (Eigen::Index m = 1; m < obs.w.rows(); ++m) {
      const Vector inc = (obs.w.row(m) - obs.w.row(m - 1)).transpose() - dw * dt;
      ll += -0.5 * inc.squaredNorm() / var - static_cast<double>(dw.size()) * (kLogSqrt2Pi + 0.5 * std::log(var));
    }
  }
  return ll;
}

TruePosterior true_posterior(const ToyData& obs, const ToyConfig& cfg) {
  const auto p = static_cast<Eigen::Index>(cfg.dim);
  const Vector xbar = obs.x.rows() > 0 ? Vector(obs.x.colwise().mean().transpose())
                                       : Vector(Vector::Zero(static_cast<Eigen::Index>(cfg.data_dim())));
  const double nx = static_cast<double>(obs.x.rows());
  const double dt = cfg.delta();
  const double m1 = obs.w.rows() > 1 ? static_cast<double>(obs.w.rows() - 1) : 0.0;
  const Vector what = obs.w.rows() > 1 ? Vector(mean_increment(obs.w) / dt)
                                       : Vector(Vector::Zero(static_cast<Eigen::Index>(cfg.data_dim())));
  const double lw = m1 * dt / (cfg.sigma * cfg.sigma);

  TruePosterior tp;
  for (auto* g : {&tp.x_only, &tp.w_only, &tp.joint}) {
    g->mean.resize(p);
    g->var.resize(p);
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    // Data coordinate informed by theta_j in each source, or -1.
    Eigen::Index jx = j, jw = j;
    if (cfg.variant == Variant::noshare) {
      if (j == p - 2) jw = -1;
      if (j == p - 1) jx = -1, jw = p - 2;
    }
    const double px = jx >= 0 ? nx : 0.0, pw = jw >= 0 ? lw : 0.0;
    const double sx = jx >= 0 ? nx * xbar[jx] : 0.0, sw = jw >= 0 ? lw * what[jw] : 0.0;
    tp.x_only.var[j] = 1.0 / (1.0 + px);
    tp.x_only.mean[j] = sx * tp.x_only.var[j];
    tp.w_only.var[j] = 1.0 / (1.0 + pw);
    tp.w_only.mean[j] = sw * tp.w_only.var[j];
    tp.joint.var[j] = 1.0 / (1.0 + px + pw);
    tp.joint.mean[j] = (sx + sw) * tp.joint.var[j];
  }
  return tp;
}

}  // namespace mobolfi::toy
