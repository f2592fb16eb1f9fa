#include "mobolfi/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mobolfi/random.hpp"
#include "nelder_mead.hpp"

namespace mobolfi::gp {

namespace {

constexpr double kSqrt5 = 2.23606797749978969641;
constexpr double kLog2Pi = 1.83787706640934548356;
constexpr double kJitterStart = 1e-8;
constexpr double kJitterMax = 1e-2;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double matern52_from_r(double r, double s2) {
  const double sr = kSqrt5 * r;
  return s2 * (1.0 + sr + sr * sr / 3.0) * std::exp(-sr);
}

Vector stack_outputs(const Matrix& outputs) {
  return Eigen::Map<const Vector>(outputs.data(), outputs.size());
}

// Latent gram (component-major block diagonal) plus noise blocks; jitter is
// applied separately so it can be escalated.
Matrix build_gram(const TrainingSet& t, const std::vector<KernelSpec>& kernels,
                  const NoiseModel& noise) {
  const auto n = static_cast<Eigen::Index>(t.size());
  const auto k = static_cast<Eigen::Index>(kernels.size());
  Matrix g = Matrix::Zero(n * k, n * k);
  for (Eigen::Index c = 0; c < k; ++c)
    g.block(c * n, c * n, n, n) = kernel_matrix(t.inputs, t.inputs, kernels[c]);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      g.block(a * n, b * n, n, n).diagonal().array() += noise.cov(a, b);
  return g;
}

void add_jitter(Matrix& g, std::size_t n, const std::vector<KernelSpec>& kernels, double rel) {
  const auto nn = static_cast<Eigen::Index>(n);
  for (std::size_t c = 0; c < kernels.size(); ++c)
    g.block(static_cast<Eigen::Index>(c) * nn, static_cast<Eigen::Index>(c) * nn, nn, nn)
            .diagonal()
            .array() += rel * kernels[c].signal_variance;
}

bool try_cholesky(const Matrix& g, Matrix& l) {
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) return false;
  l = llt.matrixL();
  const auto d = l.diagonal();
  return d.allFinite() && (d.array() > 0.0).all();
}

// Factorizes gram + jitter with escalation. Returns the jitter used or a
// negative value on failure.
double factorize(const Matrix& base, std::size_t n, const std::vector<KernelSpec>& kernels,
                 Matrix& l) {
  for (double rel = kJitterStart; rel <= kJitterMax * 1.0000001; rel *= 10.0) {
    Matrix g = base;
    add_jitter(g, n, kernels, rel);
    if (try_cholesky(g, l)) return rel;
  }
  return -1.0;
}

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double s) { return std::log(s / (1.0 - s)); }

// A bounded log-scale coordinate: value = exp(lo + (hi - lo) * sigmoid(u)).
struct LogBound {
  double lo, hi;
  double to_value(double u) const { return std::exp(lo + (hi - lo) * sigmoid(u)); }
  double to_free(double value) const {
    const double s = std::clamp((std::log(value) - lo) / (hi - lo), 1e-6, 1.0 - 1e-6);
    return logit(s);
  }
};

// Parameter map for one output component: p lengthscales, signal variance,
// noise variance.
struct ComponentSpace {
  std::vector<LogBound> lengthscale;
  LogBound signal, noise;

  ComponentSpace(const Matrix& x, const Vector& y) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      double range = x.col(j).maxCoeff() - x.col(j).minCoeff();
      if (!(range > 0.0)) range = 1.0;
      lengthscale.push_back({std::log(1e-3 * range), std::log(1e3 * range)});
    }
    double var = y.size() > 1 ? (y.array() - y.mean()).square().sum() / (y.size() - 1) : 0.0;
    if (!(var > 0.0)) var = 1.0;
    signal = {std::log(1e-6 * var), std::log(1e3 * var)};
    noise = signal;
  }
  Eigen::Index size() const { return static_cast<Eigen::Index>(lengthscale.size()) + 2; }

  void decode(const Vector& u, KernelSpec& k, double& noise_var) const {
    const auto p = static_cast<Eigen::Index>(lengthscale.size());
    k.lengthscales.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) k.lengthscales[j] = lengthscale[j].to_value(u[j]);
    k.signal_variance = signal.to_value(u[p]);
    noise_var = noise.to_value(u[p + 1]);
  }
  Vector encode(const KernelSpec& k, double noise_var) const {
    const auto p = static_cast<Eigen::Index>(lengthscale.size());
    Vector u(p + 2);
    for (Eigen::Index j = 0; j < p; ++j) u[j] = lengthscale[j].to_free(k.lengthscales[j]);
    u[p] = signal.to_free(k.signal_variance);
    u[p + 1] = noise.to_free(noise_var);
    return u;
  }
  // Latin-hypercube starts over the central half (in log space) of each bound.
  std::vector<Vector> latin_hypercube(int count, Rng& rng) const {
    const Eigen::Index d = size();
    std::vector<Vector> starts(static_cast<std::size_t>(count), Vector(d));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index j = 0; j < d; ++j) {
      std::vector<int> perm(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i) perm[static_cast<std::size_t>(i)] = i;
      std::shuffle(perm.begin(), perm.end(), rng);
      for (int i = 0; i < count; ++i) {
        const double s = (perm[static_cast<std::size_t>(i)] + unif(rng)) / count;
        starts[static_cast<std::size_t>(i)][j] = logit(0.25 + 0.5 * s);
      }
    }
    return starts;
  }
};

// Log-Cholesky parameterization of a 2x2 noise covariance with bounded
// diagonal factors.
struct NoiseSpace2 {
  LogBound d1, d2;  // bounds on the Cholesky diagonal entries

  NoiseSpace2(const Matrix& y) {
    auto var_of = [](const Vector& c) {
      double v = c.size() > 1 ? (c.array() - c.mean()).square().sum() / (c.size() - 1) : 0.0;
      return v > 0.0 ? v : 1.0;
    };
    const double v1 = var_of(y.col(0)), v2 = var_of(y.col(1));
    d1 = {0.5 * std::log(1e-6 * v1), 0.5 * std::log(1e3 * v1)};
    d2 = {0.5 * std::log(1e-6 * v2), 0.5 * std::log(1e3 * v2)};
  }
  Matrix decode(const Vector& u) const {
    const double l11 = d1.to_value(u[0]), l21 = u[1], l22 = d2.to_value(u[2]);
    Matrix s(2, 2);
    s(0, 0) = l11 * l11;
    s(1, 0) = s(0, 1) = l11 * l21;
    s(1, 1) = l21 * l21 + l22 * l22;
    return s;
  }
  Vector encode(const Matrix& s) const {
    const double l11 = std::sqrt(s(0, 0));
    const double l21 = s(1, 0) / l11;
    const double l22 = std::sqrt(std::max(s(1, 1) - l21 * l21, 1e-300));
    Vector u(3);
    u << d1.to_free(l11), l21, d2.to_free(l22);
    return u;
  }
};

struct ComponentFit {
  KernelSpec kernel;
  double noise_var;
  double log_marginal;
};

ComponentFit fit_component(const Matrix& x, const Vector& y,
                           const std::vector<std::pair<KernelSpec, double>>& seeds,
                           const FitOptions& opt, Rng& rng, FitDiagnostics* diag) {
  TrainingSet t{x, y};
  const ComponentSpace space(x, y);
  auto objective = [&](const Vector& u) {
    std::vector<KernelSpec> k(1);
    double nv;
    space.decode(u, k[0], nv);
    const double lml = profiled_log_marginal(t, k, NoiseModel::scalar(nv));
    return std::isfinite(lml) ? -lml : 1e300;
  };

  std::vector<Vector> starts;
  for (const auto& [k, nv] : seeds) starts.push_back(space.encode(k, nv));
  const int lhs = std::max(0, opt.starts - static_cast<int>(seeds.size()));
  for (auto& s : space.latin_hypercube(lhs, rng)) starts.push_back(std::move(s));

  ComponentFit best{{}, 0.0, kNegInf};
  for (const auto& s0 : starts) {
    auto r = detail::nelder_mead(objective, s0, 1.0, opt.max_evaluations);
    if (diag) {
      diag->evaluations += r.evaluations;
      diag->start_log_marginals.push_back(-r.value);
    }
    if (-r.value > best.log_marginal) {
      std::vector<KernelSpec> k(1);
      double nv;
      space.decode(r.x, k[0], nv);
      best.log_marginal = profiled_log_marginal(t, k, NoiseModel::scalar(nv));
      best.kernel = k[0];
      best.noise_var = nv;
    }
  }
  return best;
}

}  // namespace

void KernelSpec::validate() const {
  require(lengthscales.size() > 0, "KernelSpec: empty lengthscales");
  require((lengthscales.array() > 0.0).all() && lengthscales.allFinite(),
          "KernelSpec: lengthscales must be positive and finite");
  require(signal_variance > 0.0 && std::isfinite(signal_variance),
          "KernelSpec: signal_variance must be positive");
  require(std::isfinite(mean_constant), "KernelSpec: mean_constant must be finite");
}

double kernel_eval(const Vector& a, const Vector& b, const KernelSpec& spec) {
  require(a.size() == spec.lengthscales.size() && b.size() == spec.lengthscales.size(),
          "kernel_eval: dimension mismatch");
  const double r = ((a - b).array() / spec.lengthscales.array()).matrix().norm();
  return matern52_from_r(r, spec.signal_variance);
}

Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelSpec& spec) {
  require(a.cols() == spec.lengthscales.size() && b.cols() == spec.lengthscales.size(),
          "kernel_matrix: dimension mismatch");
  const Eigen::RowVectorXd inv_ls = spec.lengthscales.cwiseInverse().transpose();
  const Matrix as = a.array().rowwise() * inv_ls.array();
  const Matrix bs = b.array().rowwise() * inv_ls.array();
  Matrix k(a.rows(), b.rows());
  const bool same = &a == &b;
  for (Eigen::Index j = 0; j < bs.rows(); ++j) {
    const Eigen::Index i0 = same ? j : 0;
    for (Eigen::Index i = i0; i < as.rows(); ++i) {
      const double r = (as.row(i) - bs.row(j)).norm();
      k(i, j) = matern52_from_r(r, spec.signal_variance);
      if (same) k(j, i) = k(i, j);
    }
  }
  return k;
}

void TrainingSet::validate(std::size_t min_rows) const {
  require(inputs.rows() == outputs.rows(), "TrainingSet: inputs/outputs row mismatch");
  require(static_cast<std::size_t>(inputs.rows()) >= min_rows,
          "TrainingSet: not enough training rows");
  require(inputs.cols() >= 1 && outputs.cols() >= 1, "TrainingSet: empty dimension");
  require(inputs.allFinite(), "TrainingSet: non-finite input");
  require(outputs.allFinite(), "TrainingSet: non-finite output");
}

void TrainingSet::append(const Vector& theta, const Vector& delta) {
  if (inputs.size() == 0) {
    inputs.resize(0, theta.size());
    outputs.resize(0, delta.size());
  }
  require(theta.size() == inputs.cols() && delta.size() == outputs.cols(),
          "TrainingSet::append: dimension mismatch");
  inputs.conservativeResize(inputs.rows() + 1, Eigen::NoChange);
  outputs.conservativeResize(outputs.rows() + 1, Eigen::NoChange);
  inputs.row(inputs.rows() - 1) = theta.transpose();
  outputs.row(outputs.rows() - 1) = delta.transpose();
}

NoiseModel NoiseModel::scalar(double sigma2) {
  NoiseModel m;
  m.cov = Matrix::Constant(1, 1, sigma2);
  m.validate();
  return m;
}

NoiseModel NoiseModel::matrix(Matrix sigma) {
  NoiseModel m;
  m.cov = std::move(sigma);
  m.validate();
  return m;
}

double NoiseModel::sigma2() const {
  require(cov.rows() == 1, "NoiseModel::sigma2 on a multivariate noise model");
  return cov(0, 0);
}

void NoiseModel::validate() const {
  require(cov.rows() >= 1 && cov.rows() == cov.cols(), "NoiseModel: must be square");
  require(cov.allFinite(), "NoiseModel: non-finite entry");
  require((cov - cov.transpose()).cwiseAbs().maxCoeff() == 0.0,
          "NoiseModel: covariance must be exactly symmetric");
  Eigen::LLT<Matrix> llt(cov);
  require(llt.info() == Eigen::Success && (cov.diagonal().array() > 0.0).all(),
          "NoiseModel: covariance must be positive definite");
}

Surrogate Surrogate::condition(TrainingSet training, std::vector<KernelSpec> kernels,
                               NoiseModel noise) {
  training.validate(1);
  require(kernels.size() == training.outputs_dim(), "Surrogate: one kernel per output required");
  require(noise.dim() == kernels.size(), "Surrogate: noise dimension mismatch");
  for (const auto& k : kernels) {
    k.validate();
    require(k.dim() == training.dim(), "Surrogate: kernel dimension mismatch");
  }
  noise.validate();

  Surrogate s;
  const Matrix base = build_gram(training, kernels, noise);
  s.jitter_ = factorize(base, training.size(), kernels, s.chol_);
  if (s.jitter_ < 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(base, Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << "Surrogate: gram matrix not positive definite after jitter escalation (eigenvalue range "
       << es.eigenvalues().minCoeff() << " .. " << es.eigenvalues().maxCoeff() << ")";
    throw NumericalError(os.str());
  }
  const auto n = static_cast<Eigen::Index>(training.size());
  Vector resid = stack_outputs(training.outputs);
  for (std::size_t c = 0; c < kernels.size(); ++c)
    resid.segment(static_cast<Eigen::Index>(c) * n, n).array() -= kernels[c].mean_constant;
  const auto llt = s.chol_.triangularView<Eigen::Lower>();
  const Vector w = llt.solve(resid);
  s.alpha_ = s.chol_.transpose().triangularView<Eigen::Upper>().solve(w);
  s.log_marginal_ = -0.5 * w.squaredNorm() - s.chol_.diagonal().array().log().sum() -
                    0.5 * static_cast<double>(resid.size()) * kLog2Pi;
  s.box_lo_ = training.inputs.colwise().minCoeff().transpose();
  s.box_hi_ = training.inputs.colwise().maxCoeff().transpose();
  s.training_ = std::move(training);
  s.kernels_ = std::move(kernels);
  s.noise_ = std::move(noise);
  return s;
}

Matrix Surrogate::cross_covariance(const Vector& q) const {
  const auto n = static_cast<Eigen::Index>(training_.size());
  const auto k = static_cast<Eigen::Index>(kernels_.size());
  Matrix c = Matrix::Zero(n * k, k);
  for (Eigen::Index comp = 0; comp < k; ++comp) {
    const auto& spec = kernels_[static_cast<std::size_t>(comp)];
    const Vector inv_ls = spec.lengthscales.cwiseInverse();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r =
          ((training_.inputs.row(i).transpose() - q).array() * inv_ls.array()).matrix().norm();
      c(comp * n + i, comp) = matern52_from_r(r, spec.signal_variance);
    }
  }
  return c;
}

Prediction Surrogate::predict(const Vector& q) const {
  require(q.size() == static_cast<Eigen::Index>(dim()), "predict: dimension mismatch");
  const auto k = static_cast<Eigen::Index>(kernels_.size());
  const Matrix c = cross_covariance(q);
  Prediction out;
  out.mean = c.transpose() * alpha_;
  const Matrix v = chol_.triangularView<Eigen::Lower>().solve(c);
  out.cov = -v.transpose() * v;
  for (Eigen::Index comp = 0; comp < k; ++comp) {
    out.mean[comp] += kernels_[static_cast<std::size_t>(comp)].mean_constant;
    out.cov(comp, comp) += kernels_[static_cast<std::size_t>(comp)].signal_variance;
  }
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  for (Eigen::Index comp = 0; comp < k; ++comp) out.cov(comp, comp) = std::max(out.cov(comp, comp), 0.0);
  out.extrapolated = (q.array() < box_lo_.array()).any() || (q.array() > box_hi_.array()).any();
  return out;
}

Matrix Surrogate::gram() const { return chol_ * chol_.transpose(); }

Matrix Surrogate::prior_covariance(const Matrix& a, const Matrix& b) const {
  const auto k = static_cast<Eigen::Index>(kernels_.size());
  Matrix out = Matrix::Zero(a.rows() * k, b.rows() * k);
  for (Eigen::Index c = 0; c < k; ++c)
    out.block(c * a.rows(), c * b.rows(), a.rows(), b.rows()) =
        kernel_matrix(a, b, kernels_[static_cast<std::size_t>(c)]);
  return out;
}

Matrix Surrogate::whitened_cross(const Matrix& q) const {
  require(q.cols() == static_cast<Eigen::Index>(dim()), "whitened_cross: dimension mismatch");
  return chol_.triangularView<Eigen::Lower>().solve(prior_covariance(training_.inputs, q));
}

Matrix Surrogate::posterior_mean(const Matrix& q) const {
  require(q.cols() == static_cast<Eigen::Index>(dim()), "posterior_mean: dimension mismatch");
  const auto n = static_cast<Eigen::Index>(training_.size());
  const auto k = static_cast<Eigen::Index>(kernels_.size());
  Matrix out(q.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto& spec = kernels_[static_cast<std::size_t>(c)];
    out.col(c) = kernel_matrix(q, training_.inputs, spec) * alpha_.segment(c * n, n);
    out.col(c).array() += spec.mean_constant;
  }
  return out;
}

std::vector<Prediction> Surrogate::predict_batch(const Matrix& q) const {
  require(q.cols() == static_cast<Eigen::Index>(dim()), "predict_batch: dimension mismatch");
  const auto m = q.rows();
  const auto k = static_cast<Eigen::Index>(kernels_.size());
  const Matrix mean = posterior_mean(q);
  const Matrix v = whitened_cross(q);
  std::vector<Prediction> out(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    auto& pr = out[static_cast<std::size_t>(j)];
    pr.mean = mean.row(j).transpose();
    pr.cov.resize(k, k);
    for (Eigen::Index c = 0; c < k; ++c) {
      for (Eigen::Index d = 0; d <= c; ++d) {
        double s = -v.col(c * m + j).dot(v.col(d * m + j));
        if (c == d) s = std::max(s + kernels_[static_cast<std::size_t>(c)].signal_variance, 0.0);
        pr.cov(c, d) = pr.cov(d, c) = s;
      }
    }
    const Vector qj = q.row(j).transpose();
    pr.extrapolated = (qj.array() < box_lo_.array()).any() || (qj.array() > box_hi_.array()).any();
  }
  return out;
}

void Surrogate::latent_posterior(const Matrix& points, Vector& mean, Matrix& cov) const {
  const Matrix pm = posterior_mean(points);
  mean = Eigen::Map<const Vector>(pm.data(), pm.size());
  const Matrix v = whitened_cross(points);
  cov = prior_covariance(points, points) - v.transpose() * v;
  cov = 0.5 * (cov + cov.transpose());
}

double profiled_log_marginal(const TrainingSet& training, std::vector<KernelSpec>& kernels,
                             const NoiseModel& noise) {
  const auto n = static_cast<Eigen::Index>(training.size());
  const auto k = static_cast<Eigen::Index>(kernels.size());
  const Matrix base = build_gram(training, kernels, noise);
  Matrix l;
  if (factorize(base, training.size(), kernels, l) < 0.0) return kNegInf;
  const auto llt = l.triangularView<Eigen::Lower>();

  const Vector z = stack_outputs(training.outputs);
  Matrix h = Matrix::Zero(n * k, k);
  for (Eigen::Index c = 0; c < k; ++c) h.block(c * n, c, n, 1).setOnes();
  const Matrix lh = llt.solve(h);
  const Vector lz = llt.solve(z);
  const Vector means = (lh.transpose() * lh).ldlt().solve(lh.transpose() * lz);
  if (!means.allFinite()) return kNegInf;
  for (Eigen::Index c = 0; c < k; ++c) kernels[static_cast<std::size_t>(c)].mean_constant = means[c];
  const Vector w = lz - lh * means;
  const double lml = -0.5 * w.squaredNorm() - l.diagonal().array().log().sum() -
                     0.5 * static_cast<double>(n * k) * kLog2Pi;
  return std::isfinite(lml) ? lml : kNegInf;
}

Surrogate fit(const TrainingSet& training, std::span<const Hyperparameters> seeds,
              const FitOptions& options, FitDiagnostics* diagnostics) {
  training.validate(2);
  const std::size_t kdim = training.outputs_dim();
  require(kdim == 1 || kdim == 2, "fit: only K in {1, 2} is supported");
  for (const auto& s : seeds) {
    require(s.kernels.size() == kdim && s.noise.dim() == kdim, "fit: seed dimension mismatch");
  }
  Rng rng = make_rng(options.seed);
  FitDiagnostics local;
  FitDiagnostics& diag = diagnostics ? *diagnostics : local;

  // Stage 1: each output component on its own.
  std::vector<KernelSpec> kernels(kdim);
  std::vector<double> noise_var(kdim);
  for (std::size_t c = 0; c < kdim; ++c) {
    std::vector<std::pair<KernelSpec, double>> comp_seeds;
    for (const auto& s : seeds) comp_seeds.emplace_back(s.kernels[c], s.noise.cov(c, c));
    auto cf = fit_component(training.inputs, training.outputs.col(static_cast<Eigen::Index>(c)),
                            comp_seeds, options, rng, &diag);
    if (!std::isfinite(cf.log_marginal)) {
      throw NumericalError("fit: marginal likelihood non-finite at every start for component " +
                           std::to_string(c + 1));
    }
    kernels[c] = cf.kernel;
    noise_var[c] = cf.noise_var;
  }

  Hyperparameters best;
  double best_lml = kNegInf;
  if (kdim == 1) {
    best = {kernels, NoiseModel::scalar(noise_var[0])};
    best_lml = profiled_log_marginal(training, best.kernels, best.noise);
  } else {
    // Stage 2: correlated noise with kernels held fixed. Start from the
    // residual correlation of the independent fits.
    const NoiseSpace2 nspace(training.outputs);
    double rho = 0.0;
    {
      Vector r[2];
      for (int c = 0; c < 2; ++c) {
        auto s1 = Surrogate::condition(
            TrainingSet{training.inputs, training.outputs.col(c)},
            {kernels[static_cast<std::size_t>(c)]}, NoiseModel::scalar(noise_var[static_cast<std::size_t>(c)]));
        r[c] = s1.alpha_ * noise_var[static_cast<std::size_t>(c)];  // z - posterior mean
      }
      const double num = (r[0].array() - r[0].mean()).matrix().dot((r[1].array() - r[1].mean()).matrix());
      const double den = std::sqrt((r[0].array() - r[0].mean()).square().sum() *
                                   (r[1].array() - r[1].mean()).square().sum());
      if (den > 0.0) rho = std::clamp(num / den, -0.9, 0.9);
    }
    Matrix sigma0(2, 2);
    sigma0 << noise_var[0], rho * std::sqrt(noise_var[0] * noise_var[1]),
        rho * std::sqrt(noise_var[0] * noise_var[1]), noise_var[1];

    auto noise_objective = [&](const Vector& u) {
      std::vector<KernelSpec> k = kernels;
      NoiseModel nm;
      nm.cov = nspace.decode(u);
      const double lml = profiled_log_marginal(training, k, nm);
      return std::isfinite(lml) ? -lml : 1e300;
    };
    auto nres = detail::nelder_mead(noise_objective, nspace.encode(sigma0), 0.5,
                                    options.noise_evaluations);
    diag.evaluations += nres.evaluations;

    // Stage 3: joint polish over both kernels and the noise factor.
    const ComponentSpace cs0(training.inputs, training.outputs.col(0));
    const ComponentSpace cs1(training.inputs, training.outputs.col(1));
    const Eigen::Index p = static_cast<Eigen::Index>(training.dim());
    auto pack = [&](const Hyperparameters& h) {
      Vector u(2 * (p + 1) + 3);
      u.segment(0, p + 1) = cs0.encode(h.kernels[0], 1.0).head(p + 1);
      u.segment(p + 1, p + 1) = cs1.encode(h.kernels[1], 1.0).head(p + 1);
      u.tail(3) = nspace.encode(h.noise.cov);
      return u;
    };
    auto unpack = [&](const Vector& u) {
      Hyperparameters h;
      h.kernels.resize(2);
      double dummy;
      Vector u0(p + 2), u1(p + 2);
      u0 << u.segment(0, p + 1), 0.0;
      u1 << u.segment(p + 1, p + 1), 0.0;
      cs0.decode(u0, h.kernels[0], dummy);
      cs1.decode(u1, h.kernels[1], dummy);
      h.noise.cov = nspace.decode(u.tail(3));
      return h;
    };
    auto joint_objective = [&](const Vector& u) {
      Hyperparameters h = unpack(u);
      const double lml = profiled_log_marginal(training, h.kernels, h.noise);
      return std::isfinite(lml) ? -lml : 1e300;
    };

    Hyperparameters staged{kernels, NoiseModel{}};
    staged.noise.cov = nspace.decode(nres.x);
    std::vector<Hyperparameters> candidates{staged};
    for (const auto& s : seeds) candidates.push_back(s);
    for (const auto& cand : candidates) {
      Hyperparameters h = cand;
      double lml = profiled_log_marginal(training, h.kernels, h.noise);
      if (&cand != &candidates.front()) diag.seed_log_marginals.push_back(lml);
      if (lml > best_lml) {
        best_lml = lml;
        best = h;
      }
    }
    if (options.joint_evaluations > 0 && std::isfinite(best_lml)) {
      auto jres = detail::nelder_mead(joint_objective, pack(best), 0.3, options.joint_evaluations);
      diag.evaluations += jres.evaluations;
      Hyperparameters h = unpack(jres.x);
      const double lml = profiled_log_marginal(training, h.kernels, h.noise);
      if (lml > best_lml) {
        best_lml = lml;
        best = h;
      }
    }
  }

  if (kdim == 1) {
    for (const auto& s : seeds) {
      Hyperparameters h = s;
      const double lml = profiled_log_marginal(training, h.kernels, h.noise);
      diag.seed_log_marginals.push_back(lml);
      if (lml > best_lml) {
        best_lml = lml;
        best = h;
      }
    }
  }
  if (!std::isfinite(best_lml)) {
    throw NumericalError("fit: marginal likelihood non-finite at all starts");
  }
  diag.message = "log marginal likelihood " + std::to_string(best_lml);
  return Surrogate::condition(training, best.kernels, best.noise);
}

}  // namespace mobolfi::gp
