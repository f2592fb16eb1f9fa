#include "mobolfi/samplers.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "mobolfi/parallel.hpp"

namespace mobolfi::mcmc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe(double v) { return std::isnan(v) ? kNegInf : v; }
}  // namespace

double LogPosterior::operator()(const Vector& theta) const {
  if (!bounds.contains(theta)) return kNegInf;
  const double prior = log_prior ? log_prior(theta) : 0.0;
  if (!(prior > kNegInf)) return kNegInf;
  return safe(prior + log_lik(theta));
}

ChainResult rwm_sample(const LogPosterior& lp, const Vector& init, int steps, const Vector& scale, Seed seed) {
  require(steps >= 1, "rwm_sample: steps must be positive");
  require(scale.size() == init.size() && (scale.array() >= 0.0).all(), "rwm_sample: invalid proposal scale");
  if (!lp.bounds.contains(init)) throw ContractViolation("rwm_sample: initial state outside the prior box");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> unif;
  Vector x = init;
  double fx = lp(x);
  ChainResult out{Matrix(steps, init.size()), Vector(steps), 0.0};
  int accepted = 0;
  for (int s = 0; s < steps; ++s) {
    Vector y = x;
    for (Eigen::Index j = 0; j < y.size(); ++j) y[j] += scale[j] * nd(rng);
    const double fy = lp(y);
    const double u = unif(rng);
    if (fy > kNegInf && (fy >= fx || std::log(u) < fy - fx)) {
      x = std::move(y);
      fx = fy;
      ++accepted;
    }
    out.samples.row(s) = x.transpose();
    out.log_post[s] = fx;
  }
  out.acceptance = static_cast<double>(accepted) / steps;
  return out;
}

Matrix init_from_prior(const LogPosterior& lp, const std::function<Vector(Rng&)>& prior_draw, int n_chains,
                       Seed seed) {
  Rng rng = make_rng(seed);
  Matrix init(n_chains, static_cast<Eigen::Index>(lp.bounds.dim()));
  for (int c = 0; c < n_chains; ++c) {
    int tries = 0;
    for (;;) {
      Vector x = prior_draw(rng);
      if (lp.bounds.contains(x) && lp(x) > kNegInf) {
        init.row(c) = x.transpose();
        break;
      }
      if (++tries >= 1000) throw NumericalError("init_from_prior: no prior draw with finite posterior density");
    }
  }
  return init;
}

DemcResult demc_sample(const LogPosterior& lp, const Matrix& init, const DemcOptions& opt, Seed seed) {
  const int n = opt.n_chains;
  require(n >= 4, "demc_sample: need at least 4 chains");
  require(opt.burn_in >= 0 && opt.burn_in < opt.steps, "demc_sample: burn_in must be < steps");
  require(init.rows() == n && init.cols() == static_cast<Eigen::Index>(lp.bounds.dim()),
          "demc_sample: init must be n_chains x p");
  require(opt.migration_rate >= 0.0 && opt.migration_rate <= 1.0, "demc_sample: migration_rate in [0, 1]");
  const auto p = init.cols();
  const double gamma = opt.gamma > 0.0 ? opt.gamma : 2.38 / std::sqrt(2.0 * static_cast<double>(p));

  Matrix x = init;
  Vector fx(n);
  for (int c = 0; c < n; ++c) {
    if (!lp.bounds.contains(x.row(c).transpose())) throw ContractViolation("demc_sample: initial state outside the prior box");
    fx[c] = lp(x.row(c).transpose());
  }

  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unif;
  const int kept = opt.steps - opt.burn_in;
  DemcResult out;
  out.samples.resize(static_cast<Eigen::Index>(kept) * n, p);
  out.log_post.resize(static_cast<Eigen::Index>(kept) * n);
  out.chain_means = Matrix::Zero(n, p);
  std::vector<int> accepted(static_cast<std::size_t>(n), 0);
  int migration_proposals = 0, migration_accepted = 0;

  Matrix proposal(n, p);
  Vector fprop(n);
  std::vector<double> log_u(static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n));

  for (int g = 0; g < opt.steps; ++g) {
    const bool may_migrate = g < opt.burn_in || opt.migrate_after_burn_in;
    if (may_migrate && unif(rng) < opt.migration_rate) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      const int size = 2 + static_cast<int>(unif(rng) * (n - 1));
      const int len = std::min(size, n);
      const Matrix before = x;
      const Vector fbefore = fx;
      for (int l = 0; l < len; ++l) {
        const int dst = order[static_cast<std::size_t>(l)];
        const int src = order[static_cast<std::size_t>((l + 1) % len)];
        const double u = unif(rng);
        ++migration_proposals;
        if (fbefore[src] > kNegInf && (fbefore[src] >= fbefore[dst] || std::log(u) < fbefore[src] - fbefore[dst])) {
          x.row(dst) = before.row(src);
          fx[dst] = fbefore[src];
          ++migration_accepted;
        }
      }
    }

    for (int i = 0; i < n; ++i) {
      int j, k;
      do j = static_cast<int>(unif(rng) * n); while (j == i || j >= n);
      do k = static_cast<int>(unif(rng) * n); while (k == i || k == j || k >= n);
      for (Eigen::Index d = 0; d < p; ++d) {
        const double eps = opt.jitter * (2.0 * unif(rng) - 1.0);
        proposal(i, d) = x(i, d) + gamma * (x(j, d) - x(k, d)) + eps;
      }
      log_u[static_cast<std::size_t>(i)] = std::log(unif(rng));
    }
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
      const auto r = static_cast<Eigen::Index>(i);
      fprop[r] = lp(proposal.row(r).transpose());
    });
    for (int i = 0; i < n; ++i) {
      if (fprop[i] > kNegInf && (fprop[i] >= fx[i] || log_u[static_cast<std::size_t>(i)] < fprop[i] - fx[i])) {
        x.row(i) = proposal.row(i);
        fx[i] = fprop[i];
        ++accepted[static_cast<std::size_t>(i)];
      }
    }

    if (g >= opt.burn_in) {
      const auto base = static_cast<Eigen::Index>(g - opt.burn_in) * n;
      out.samples.middleRows(base, n) = x;
      out.log_post.segment(base, n) = fx;
      out.chain_means += x;
    }
  }
  out.chain_means /= static_cast<double>(kept);
  out.acceptance.resize(n);
  for (int i = 0; i < n; ++i) out.acceptance[i] = static_cast<double>(accepted[static_cast<std::size_t>(i)]) / opt.steps;
  out.migration_acceptance =
      migration_proposals > 0 ? static_cast<double>(migration_accepted) / migration_proposals : 0.0;
  return out;
}

}  // namespace mobolfi::mcmc
