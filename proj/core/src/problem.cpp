#include "mobolfi/problem.hpp"

#include <boost/random/sobol.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>

#include "mobolfi/abc.hpp"
#include "mobolfi/mnl.hpp"
#include "mobolfi/parallel.hpp"

namespace mobolfi::engine {

std::uint64_t fnv1a(const double* data, std::size_t n, std::uint64_t h) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Matrix Problem::design(std::size_t count, Seed seed) const {
  Rng rng = make_rng(seed);
  Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim()));
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) = prior_draw(rng).transpose();
  return out;
}

// ---------------------------------------------------------------- toy

ToyProblem::ToyProblem(ToySettings settings, toy::ToyData observed)
    : settings_(std::move(settings)), observed_(std::move(observed)) {
  settings_.config.validate();
  if (!(settings_.bound > 0.0)) throw ConfigError("toy: prior bound must be positive");
  const auto d = static_cast<Eigen::Index>(settings_.config.data_dim());
  if (observed_.x.rows() != settings_.config.n_x || observed_.x.cols() != d ||
      observed_.w.rows() != settings_.config.n_w || observed_.w.cols() != d)
    throw ConfigError("toy: observed data shape does not match the configuration");
  box_ = Box::cube(settings_.config.dim, -settings_.bound, settings_.bound);
}

std::vector<std::string> ToyProblem::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= dim(); ++i) names.push_back("theta" + std::to_string(i));
  return names;
}

double ToyProblem::log_prior(const Vector& theta) const { return -0.5 * theta.squaredNorm(); }

Vector ToyProblem::prior_draw(Rng& rng) const {
  std::normal_distribution<double> nd;
  Vector t(static_cast<Eigen::Index>(dim()));
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    do t[i] = nd(rng);
    while (std::abs(t[i]) > settings_.bound);
  }
  return t;
}

SimulationOutcome ToyProblem::simulate(const Vector& theta, Seed seed) const {
  return {toy::discrepancies(toy::simulate(theta, settings_.config, seed), observed_), true};
}

std::optional<double> ToyProblem::exact_log_likelihood(const Vector& theta) const {
  return toy::log_likelihood(theta, observed_, settings_.config);
}

std::uint64_t ToyProblem::observed_hash() const {
  return fnv1a(observed_.w.data(), static_cast<std::size_t>(observed_.w.size()),
               fnv1a(observed_.x.data(), static_cast<std::size_t>(observed_.x.size())));
}

// ---------------------------------------------------------------- mlba

MlbaProblem::MlbaProblem(MlbaSettings settings, mlba::MlbaData observed, Seed calibration_seed)
    : settings_(std::move(settings)), observed_(std::move(observed)), box_(mlba::prior_box()) {
  settings_.config.validate();
  if (settings_.config.n_alternatives() != 3) throw ConfigError("mlba: inference needs three alternatives");
  if (observed_.size() != settings_.config.n_obs())
    throw ConfigError("mlba: observed data has " + std::to_string(observed_.size()) + " rows, attributes have " +
                      std::to_string(settings_.config.n_obs()));
  if (settings_.replicates < 0) throw ConfigError("mlba: replicates must be >= 0");
  obs_variance_ = mlba::rt_variance(observed_);
  obs_one_hot_ = observed_.one_hot();

  if (settings_.choice == ChoiceDiscrepancy::auxiliary) {
    if (settings_.aux_calibration < 10) throw ConfigError("mlba: aux_calibration must be >= 10");
    xi_hat_ = mnl::fit_mle(obs_one_hot_, settings_.config.attributes);
    const auto n = static_cast<std::size_t>(settings_.aux_calibration);
    Matrix scores(static_cast<Eigen::Index>(n), mnl::kParams);
    Rng rng = make_rng(calibration_seed);
    std::vector<Vector> thetas(n);
    for (auto& t : thetas) t = prior_draw(rng);
    parallel_for(n, [&](std::size_t i) {
      const auto sim = mlba::simulate(thetas[i], settings_.config, derive_seed(calibration_seed, i));
      scores.row(static_cast<Eigen::Index>(i)) =
          mnl::score(sim.one_hot(), settings_.config.attributes, xi_hat_).transpose();
    });
    score_weights_ = abc::mad_scaling(scores).weights();
    setup_sims_ = n;
  }
}

std::vector<std::string> MlbaProblem::parameter_names() const {
  return {"lambda1", "beta1", "beta2", "delta2", "delta3", "log_chi_minus_A"};
}

std::vector<std::string> MlbaProblem::discrepancy_names() const {
  return {"rt", settings_.choice == ChoiceDiscrepancy::auxiliary ? "choice_score" : "choice"};
}

double MlbaProblem::log_prior(const Vector&) const { return 0.0; }

Vector MlbaProblem::prior_draw(Rng& rng) const { return uniform_in_box(rng, box_); }

Matrix MlbaProblem::design(std::size_t count, Seed seed) const {
  const auto p = static_cast<unsigned>(dim());
  boost::random::sobol sobol(p);
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector shift(p);
  for (unsigned j = 0; j < p; ++j) shift[j] = u(rng);
  const double scale = 1.0 / (static_cast<double>(sobol.max()) + 1.0);
  Matrix out(static_cast<Eigen::Index>(count), p);
  const Vector width = box_.width();
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (unsigned j = 0; j < p; ++j) {
      double v = static_cast<double>(sobol()) * scale + shift[j];
      v -= std::floor(v);
      out(i, j) = box_.lower[j] + v * width[j];
    }
  return out;
}

double MlbaProblem::aux_discrepancy(const mlba::MlbaData& sim) const {
  return mnl::score_summary(sim.one_hot(), settings_.config.attributes, xi_hat_, score_weights_).norm();
}

SimulationOutcome MlbaProblem::simulate(const Vector& theta, Seed seed) const {
  SimulationOutcome out;
  const bool aux = settings_.choice == ChoiceDiscrepancy::auxiliary;
  if (settings_.replicates == 0) {
    const auto sim = mlba::simulate(theta, settings_.config, seed);
    out.raw = mlba::discrepancies(sim, observed_);
    if (aux) out.raw[1] = aux_discrepancy(sim);
    out.admissible = settings_.variance_ratio <= 0.0 || mlba::rt_variance(sim) >= settings_.variance_ratio * obs_variance_;
    return out;
  }
  std::vector<mlba::MlbaData> sims;
  for (int s = 0; s < settings_.replicates; ++s)
    sims.push_back(mlba::simulate(theta, settings_.config, derive_seed(seed, static_cast<Seed>(s))));
  out.raw = mlba::replicated_discrepancies(sims, observed_);
  if (aux) {
    double mean = 0.0;
    for (const auto& s : sims) mean += aux_discrepancy(s);
    out.raw[1] = mean / static_cast<double>(sims.size());
  }
  out.admissible =
      settings_.variance_ratio <= 0.0 || mlba::rt_variance(sims.front()) >= settings_.variance_ratio * obs_variance_;
  return out;
}

std::optional<double> MlbaProblem::exact_log_likelihood(const Vector& theta) const {
  return mlba::log_likelihood(theta, observed_, settings_.config);
}

std::uint64_t MlbaProblem::observed_hash() const {
  const Vector ch = Eigen::Map<const Eigen::VectorXi>(observed_.choice.data(),
                                                      static_cast<Eigen::Index>(observed_.choice.size()))
                        .cast<double>();
  return fnv1a(ch.data(), static_cast<std::size_t>(ch.size()),
               fnv1a(observed_.rt.data(), static_cast<std::size_t>(observed_.rt.size())));
}

}  // namespace mobolfi::engine
