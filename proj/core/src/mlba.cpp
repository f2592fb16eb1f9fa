#include "mobolfi/mlba.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "mobolfi/normal.hpp"
#include "mobolfi/random.hpp"

namespace mobolfi::mlba {

void MlbaConfig::validate() const {
  if (attributes.rows() < 1) throw ConfigError("mlba: attribute matrix is empty");
  if (attributes.cols() % kAttributes != 0 || attributes.cols() < kAttributes || attributes.cols() > 3 * kAttributes)
    throw ConfigError("mlba: attribute matrix needs 3, 6 or 9 columns, found " + std::to_string(attributes.cols()));
  if (!attributes.allFinite()) throw ConfigError("mlba: attribute matrix has non-finite entries");
  if (!(A > 0.0)) throw ConfigError("mlba: A must be positive");
  if (!(s > 0.0)) throw ConfigError("mlba: s must be positive");
  if (!(tau0 >= 0.0)) throw ConfigError("mlba: tau0 must be non-negative");
}

Vector theta_true() {
  Vector t(kParams);
  t << 0.1, -5.0, -6.0, 3.0, 1.5, std::log(99.0);
  return t;
}

Box prior_box() {
  const Vector c = theta_true();
  Vector lo = c.array() - 4.0, hi = c.array() + 4.0;
  lo[0] = 0.0;
  hi[0] = 1.0;
  return Box(lo, hi);
}

Matrix synthetic_attributes(Eigen::Index n, Seed seed) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix x(n, 3 * kAttributes);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = u(rng);
  return x;
}

Params decode(const Vector& theta, const MlbaConfig& cfg) {
  require(theta.size() == kParams, "mlba: theta must have 6 components");
  Params p;
  p.lambda1 = theta[0];
  p.lambda2 = cfg.lambda2;
  p.I0 = cfg.I0;
  p.beta = {theta[1], theta[2], cfg.beta3};
  p.delta = {cfg.delta1, theta[3], theta[4]};
  p.chi = cfg.A + std::exp(theta[5]);
  return p;
}

namespace {

Vector drift_means(const Params& p, const MlbaConfig& cfg, Eigen::Index obs) {
  const int m = cfg.n_alternatives();
  Vector d(m);
  for (int a = 0; a < m; ++a) {
    double sum = 0.0;
    for (int b = 0; b < m; ++b) {
      if (b == a) continue;
      for (int k = 0; k < kAttributes; ++k) {
        const double diff = p.beta[k] * (cfg.attributes(obs, a * kAttributes + k) - cfg.attributes(obs, b * kAttributes + k));
        const double w = std::exp(-(diff >= 0.0 ? p.lambda1 : p.lambda2) * std::abs(diff));
        sum += w * diff;
      }
    }
    d[a] = std::max(p.I0 + p.delta[a] + sum, 0.0);
  }
  return d;
}

// Phi(b) - Phi(a) for a <= b, evaluated on the side with the smaller tail.
double normal_mass(double a, double b) {
  if (a > 0.0) return normal_cdf(-a) - normal_cdf(-b);
  return normal_cdf(b) - normal_cdf(a);
}

// Antiderivatives of Phi(-z) and Phi(z).
double upper_integral(double z) { return z * normal_cdf(-z) - normal_pdf(z); }
double lower_integral(double z) { return z * normal_cdf(z) + normal_pdf(z); }

// Truncated survival 1 - F(t), computed from whichever side avoids cancellation.
double lba_survival(double t, double d, double A, double chi, double s) {
  if (t <= 0.0) return 1.0;
  const double ts = t * s;
  const double z1 = (chi - A - t * d) / ts, z2 = (chi - t * d) / ts;
  const double mass = normal_cdf(d / s);
  const double cdf_raw = ts / A * (upper_integral(z2) - upper_integral(z1)) / mass;
  if (cdf_raw <= 0.5) return std::clamp(1.0 - cdf_raw, 0.0, 1.0);
  const double surv = (ts / A * (lower_integral(z2) - lower_integral(z1)) - normal_cdf(-d / s)) / mass;
  return std::clamp(surv, 0.0, 1.0);
}

double sample_truncated(Rng& rng, double d, double s) {
  std::normal_distribution<double> nd(d, s);
  for (int i = 0; i < 1000000; ++i) {
    const double v = nd(rng);
    if (v > 0.0) return v;
  }
  throw NumericalError("mlba: truncated-normal drift rejection exceeded 1e6 attempts");
}

void ensure_gsl_quiet() {
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

}  // namespace

Vector drift_means(const Vector& theta, const MlbaConfig& cfg, Eigen::Index obs) {
  require(obs >= 0 && obs < cfg.n_obs(), "mlba: observation index out of range");
  return drift_means(decode(theta, cfg), cfg, obs);
}

Matrix MlbaData::one_hot(int n_alternatives) const {
  Matrix m = Matrix::Zero(rt.size(), n_alternatives);
  for (std::size_t i = 0; i < choice.size(); ++i) m(static_cast<Eigen::Index>(i), choice[i]) = 1.0;
  return m;
}

MlbaData simulate(const Vector& theta, const MlbaConfig& cfg, Seed seed) {
  const Params p = decode(theta, cfg);
  require(p.chi > cfg.A, "mlba: threshold must exceed A");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, cfg.A);
  const int m = cfg.n_alternatives();
  MlbaData out{Vector(cfg.n_obs()), std::vector<int>(static_cast<std::size_t>(cfg.n_obs()))};
  std::vector<double> q(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < cfg.n_obs(); ++i) {
    const Vector d = drift_means(p, cfg, i);
    for (auto& qa : q) qa = u(rng);
    double best = std::numeric_limits<double>::infinity();
    int winner = 0;
    for (int a = 0; a < m; ++a) {
      const double v = sample_truncated(rng, d[a], cfg.s);
      const double time = (p.chi - q[static_cast<std::size_t>(a)]) / v;
      if (time < best) best = time, winner = a;
    }
    out.rt[i] = best + cfg.tau0;
    out.choice[static_cast<std::size_t>(i)] = winner;
  }
  return out;
}

double lba_pdf(double t, double d, double A, double chi, double s) {
  if (t <= 0.0) return 0.0;
  const double ts = t * s;
  const double z1 = (chi - A - t * d) / ts, z2 = (chi - t * d) / ts;
  const double f = (d * normal_mass(z1, z2) + s * (normal_pdf(z1) - normal_pdf(z2))) / A;
  return std::max(f / normal_cdf(d / s), 0.0);
}

double lba_cdf(double t, double d, double A, double chi, double s) { return 1.0 - lba_survival(t, d, A, chi, s); }

double log_joint_density(int choice, double rt, const Vector& d, const Params& p, const MlbaConfig& cfg) {
  constexpr double floor = 1e-300;
  const double t = rt - cfg.tau0;
  double ll = std::log(std::max(lba_pdf(t, d[choice], cfg.A, p.chi, cfg.s), floor));
  for (Eigen::Index b = 0; b < d.size(); ++b)
    if (b != choice) ll += std::log(std::max(lba_survival(t, d[b], cfg.A, p.chi, cfg.s), floor));
  return ll;
}

double log_likelihood(const Vector& theta, const MlbaData& data, const MlbaConfig& cfg) {
  require(data.size() == cfg.n_obs(), "mlba: data and attribute matrix differ in rows");
  const Params p = decode(theta, cfg);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if (!(data.rt[i] - cfg.tau0 > 0.0))
      throw ContractViolation("mlba: response time in row " + std::to_string(i) + " does not exceed tau0");
    const double term = log_joint_density(data.choice[static_cast<std::size_t>(i)], data.rt[i], drift_means(p, cfg, i), p, cfg);
    if (!std::isfinite(term)) throw NumericalError("mlba: non-finite log-likelihood term in row " + std::to_string(i));
    ll += term;
  }
  return ll;
}

double joint_probability(const Vector& theta, const MlbaConfig& cfg, Eigen::Index obs, int a, double lo, double hi) {
  ensure_gsl_quiet();
  const Params p = decode(theta, cfg);
  const Vector d = drift_means(p, cfg, obs);
  require(a >= 0 && a < d.size(), "mlba: alternative index out of range");
  struct Ctx {
    const Params* p;
    const MlbaConfig* cfg;
    const Vector* d;
    int a;
  } ctx{&p, &cfg, &d, a};
  gsl_function fn;
  fn.function = [](double t, void* raw) {
    const auto* c = static_cast<const Ctx*>(raw);
    if (t <= 0.0) return 0.0;
    double f = lba_pdf(t, (*c->d)[c->a], c->cfg->A, c->p->chi, c->cfg->s);
    for (Eigen::Index b = 0; b < c->d->size(); ++b)
      if (b != c->a) f *= lba_survival(t, (*c->d)[b], c->cfg->A, c->p->chi, c->cfg->s);
    return f;
  };
  fn.params = &ctx;
  const double t0 = std::max(lo - cfg.tau0, 0.0);
  std::unique_ptr<gsl_integration_workspace, void (*)(gsl_integration_workspace*)> ws(
      gsl_integration_workspace_alloc(2000), gsl_integration_workspace_free);
  double result = 0.0, err = 0.0;
  int status;
  if (std::isinf(hi)) {
    status = gsl_integration_qagiu(&fn, t0, 1e-13, 1e-10, 2000, ws.get(), &result, &err);
  } else {
    const double t1 = hi - cfg.tau0;
    if (t1 <= t0) return 0.0;
    status = gsl_integration_qags(&fn, t0, t1, 1e-13, 1e-10, 2000, ws.get(), &result, &err);
  }
  if (status != GSL_SUCCESS && err > 1e-8)
    throw NumericalError(std::string("mlba: quadrature failed: ") + gsl_strerror(status));
  return result;
}

Vector discrepancies(const MlbaData& sim, const MlbaData& obs) {
  if (sim.size() != obs.size() || sim.choice.size() != obs.choice.size())
    throw ContractViolation("mlba discrepancies: simulated and observed data differ in size");
  const auto n = sim.size();
  std::vector<double> a(sim.rt.data(), sim.rt.data() + n), b(obs.rt.data(), obs.rt.data() + n);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d1 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) d1 += std::abs(std::log(a[i]) - std::log(b[i]));
  Eigen::Index mismatches = 0;
  for (std::size_t i = 0; i < sim.choice.size(); ++i) mismatches += sim.choice[i] != obs.choice[i];
  Vector out(2);
  out << d1, 2.0 * static_cast<double>(mismatches) / (3.0 * static_cast<double>(n));
  return out;
}

Vector replicated_discrepancies(const std::vector<MlbaData>& sims, const MlbaData& obs) {
  require(!sims.empty(), "mlba: at least one replicate is required");
  const double S = static_cast<double>(sims.size());
  const double N = static_cast<double>(obs.size());
  const Matrix ch_obs = obs.one_hot();
  double w1 = 0.0, sse = 0.0;
  for (const auto& sim : sims) {
    w1 += discrepancies(sim, obs)[0];
    sse += (sim.one_hot() - ch_obs).colwise().sum().squaredNorm();
  }
  Vector out(2);
  out << std::log(std::max(w1 / (3.0 * S), 1e-12)), std::log(std::max(sse / (9.0 * S * N * N), 1e-12));
  return out;
}

Vector replicated_discrepancies(const Vector& theta, const MlbaData& obs, const MlbaConfig& cfg, int S, Seed seed) {
  require(S >= 1, "mlba: S must be >= 1");
  std::vector<MlbaData> sims;
  sims.reserve(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) sims.push_back(simulate(theta, cfg, derive_seed(seed, static_cast<Seed>(s))));
  return replicated_discrepancies(sims, obs);
}

double rt_variance(const MlbaData& data) {
  const auto n = static_cast<double>(data.size());
  if (n < 2) return 0.0;
  return (data.rt.array() - data.rt.mean()).square().sum() / (n - 1.0);
}

}  // namespace mobolfi::mlba
