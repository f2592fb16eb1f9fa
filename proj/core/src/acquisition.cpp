#include "mobolfi/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mobolfi/linalg.hpp"
#include "mobolfi/parallel.hpp"
#include "mobolfi/random.hpp"

namespace mobolfi::acq {

namespace {

bool dominates(const Vector& a, const Vector& b) {
  return (a.array() >= b.array()).all() && (a.array() > b.array()).any();
}

using Pt = std::array<double, 2>;

// Staircase of the points strictly above ref: first objective descending,
// second ascending.
std::vector<Pt> staircase(std::vector<Pt> pts, const Pt& ref) {
  std::erase_if(pts, [&](const Pt& p) { return !(p[0] > ref[0] && p[1] > ref[1]); });
  std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) {
    return a[0] != b[0] ? a[0] > b[0] : a[1] > b[1];
  });
  std::vector<Pt> out;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    if (p[1] > best) {
      out.push_back(p);
      best = p[1];
    }
  }
  return out;
}

// Indices of the nondomination layers (minimization sense), in layer order.
std::vector<std::vector<Eigen::Index>> nondomination_layers(const Matrix& f) {
  std::vector<Eigen::Index> left(static_cast<std::size_t>(f.rows()));
  std::iota(left.begin(), left.end(), 0);
  std::vector<std::vector<Eigen::Index>> layers;
  while (!left.empty()) {
    std::vector<Eigen::Index> layer, rest;
    for (auto i : left) {
      bool dominated = false;
      for (auto j : left) {
        if (j != i && (f.row(j).array() <= f.row(i).array()).all() &&
            (f.row(j).array() < f.row(i).array()).any()) {
          dominated = true;
          break;
        }
      }
      (dominated ? rest : layer).push_back(i);
    }
    layers.push_back(std::move(layer));
    left = std::move(rest);
  }
  return layers;
}

}  // namespace

std::vector<Vector> pareto_filter(const std::vector<Vector>& points) {
  if (points.empty()) return {};
  const auto k = points.front().size();
  for (const auto& p : points) {
    require(p.size() == k && k >= 1, "pareto_filter: inconsistent objective dimension");
    require(p.allFinite(), "pareto_filter: non-finite objective");
  }
  if (k == 2) {
    std::vector<std::size_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const auto& pa = points[a];
      const auto& pb = points[b];
      return pa[0] != pb[0] ? pa[0] > pb[0] : pa[1] > pb[1];
    });
    std::vector<Vector> out;
    double best = -std::numeric_limits<double>::infinity();
    for (auto i : idx) {
      if (points[i][1] > best) {
        out.push_back(points[i]);
        best = points[i][1];
      }
    }
    return out;
  }
  std::vector<Vector> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < points.size() && keep; ++j) {
      if (j == i) continue;
      if (dominates(points[j], points[i])) keep = false;
      if (j < i && points[j] == points[i]) keep = false;
    }
    if (keep) out.push_back(points[i]);
  }
  return out;
}

double hypervolume_2d(const std::vector<Vector>& front, const Vector& ref) {
  require(ref.size() == 2, "hypervolume_2d: reference point must be 2-d");
  std::vector<Pt> pts;
  pts.reserve(front.size());
  for (const auto& p : front) {
    require(p.size() == 2, "hypervolume_2d: front points must be 2-d");
    require(p[0] >= ref[0] && p[1] >= ref[1], "hypervolume_2d: reference point not dominated");
    pts.push_back({p[0], p[1]});
  }
  const Pt r{ref[0], ref[1]};
  double area = 0.0, height = r[1];
  for (const auto& p : staircase(std::move(pts), r)) {
    area += (p[0] - r[0]) * (p[1] - height);
    height = p[1];
  }
  return area;
}

double hypervolume_improvement(const std::vector<Pt>& stairs, const Pt& y, const Pt& ref) {
  if (!(y[0] > ref[0] && y[1] > ref[1])) return 0.0;
  // Box [ref, y] minus its intersection with the dominated region; the
  // clipped staircase keeps its ordering, so one sweep suffices.
  double covered = 0.0, height = ref[1];
  for (const auto& p : stairs) {
    const double x0 = std::min(p[0], y[0]);
    const double x1 = std::min(p[1], y[1]);
    if (x1 > height) {
      covered += (x0 - ref[0]) * (x1 - height);
      height = x1;
    }
  }
  return std::max((y[0] - ref[0]) * (y[1] - ref[1]) - covered, 0.0);
}

Vector reference_point(const Matrix& discrepancies, double margin) {
  require(discrepancies.rows() > 0, "reference_point: no observations");
  return (-discrepancies).colwise().minCoeff().transpose().array() - margin;
}

EtaVariant default_eta_variant(std::size_t p) {
  return p > 3 ? EtaVariant::reduced : EtaVariant::standard;
}

double eta_squared(std::size_t n, std::size_t p, double eps, EtaVariant variant) {
  require(eps > 0.0, "eta_squared: eps must be positive");
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  const double power = variant == EtaVariant::standard ? 0.5 * static_cast<double>(p) + 2.0 : 2.0;
  const double eta2 = 2.0 * (power * std::log(static_cast<double>(n)) + std::log(pi2 / (3.0 * eps)));
  require(eta2 > 0.0, "eta_squared: non-positive exploration weight (n too small for eps)");
  return eta2;
}

double lcb(const Vector& q, const gp::Surrogate& s, double eps, EtaVariant variant) {
  require(s.outputs_dim() == 1, "lcb: surrogate must have a single output");
  const double eta2 = eta_squared(s.training().size(), s.dim(), eps, variant);
  const auto pr = s.predict(q);
  return pr.mean[0] - std::sqrt(eta2 * pr.cov(0, 0));
}

Vector lcb_batch(const Matrix& q, const gp::Surrogate& s, double eta2) {
  require(s.outputs_dim() == 1, "lcb: surrogate must have a single output");
  const auto preds = s.predict_batch(q);
  Vector out(q.rows());
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const auto& pr = preds[static_cast<std::size_t>(i)];
    out[i] = pr.mean[0] - std::sqrt(eta2 * pr.cov(0, 0));
  }
  return out;
}

Nehvi::Nehvi(const gp::Surrogate& s, Vector ref, Seed seed, NehviOptions options)
    : s_(&s), ref_(std::move(ref)), options_(options) {
  require(s.outputs_dim() == 2, "nehvi: surrogate must have two outputs");
  require(ref_.size() == 2, "nehvi: reference point must be 2-d");
  require(options_.mc_samples >= 16, "nehvi: mc_samples must be >= 16");
  require(options_.baseline_min >= 1 && options_.baseline_max >= options_.baseline_min,
          "nehvi: invalid baseline limits");

  const Matrix& x = s.training().inputs;
  const Matrix mean = s.posterior_mean(x);
  std::vector<Eigen::Index> chosen;
  for (const auto& layer : nondomination_layers(mean)) {
    for (auto i : layer) {
      if (static_cast<int>(chosen.size()) < options_.baseline_max) chosen.push_back(i);
    }
    if (static_cast<int>(chosen.size()) >= options_.baseline_min) break;
  }
  std::sort(chosen.begin(), chosen.end());
  const auto m = static_cast<Eigen::Index>(chosen.size());
  baseline_.resize(m, x.cols());
  for (Eigen::Index i = 0; i < m; ++i) baseline_.row(i) = x.row(chosen[static_cast<std::size_t>(i)]);

  Vector mu_b;
  Matrix cov_b;
  s.latent_posterior(baseline_, mu_b, cov_b);
  base_whitened_ = s.whitened_cross(baseline_);
  base_chol_ = robust_cholesky(cov_b);

  const int n_draws = options_.mc_samples;
  Rng rng = make_rng(seed);
  Matrix z_base(2 * m, n_draws);
  for (int d = 0; d < n_draws; ++d) z_base.col(d) = standard_normal_vector(rng, 2 * m);
  z_candidate_.resize(2, n_draws);
  for (int d = 0; d < n_draws; ++d) z_candidate_.col(d) = standard_normal_vector(rng, 2);
  base_u_ = base_chol_.transpose().triangularView<Eigen::Upper>().solve(z_base);

  const Matrix f_base = (base_chol_ * z_base).colwise() + mu_b;
  const Pt r{ref_[0], ref_[1]};
  fronts_.resize(static_cast<std::size_t>(n_draws));
  for (int d = 0; d < n_draws; ++d) {
    std::vector<Pt> pts(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) pts[static_cast<std::size_t>(i)] = {-f_base(i, d), -f_base(m + i, d)};
    fronts_[static_cast<std::size_t>(d)] = staircase(std::move(pts), r);
  }
}

Matrix Nehvi::draw_matrix(const Matrix& candidates) const {
  const auto nc = candidates.rows();
  const auto m = baseline_.rows();
  const int n_draws = options_.mc_samples;
  const Matrix mean = s_->posterior_mean(candidates);
  const Matrix v = s_->whitened_cross(candidates);  // nK x 2nc
  const Matrix prior_bc = s_->prior_covariance(baseline_, candidates);
  const Pt r{ref_[0], ref_[1]};
  Matrix out(nc, n_draws);
  parallel_for(static_cast<std::size_t>(nc), [&](std::size_t jj) {
    const auto j = static_cast<Eigen::Index>(jj);
    Eigen::Matrix<double, Eigen::Dynamic, 2> vj(v.rows(), 2);
    vj.col(0) = v.col(j);
    vj.col(1) = v.col(nc + j);
    Eigen::Matrix2d post = -vj.transpose() * vj;
    post(0, 0) += s_->kernels()[0].signal_variance;
    post(1, 1) += s_->kernels()[1].signal_variance;
    Eigen::Matrix<double, Eigen::Dynamic, 2> c(2 * m, 2);
    c.col(0) = prior_bc.col(j);
    c.col(1) = prior_bc.col(nc + j);
    c -= base_whitened_.transpose() * vj;
    const Eigen::Matrix<double, Eigen::Dynamic, 2> g =
        base_chol_.triangularView<Eigen::Lower>().solve(c);
    const Eigen::Matrix2d rest = cholesky_2x2_psd(post - g.transpose() * g);
    const Eigen::Matrix<double, 2, Eigen::Dynamic> f =
        ((c.transpose() * base_u_ + rest * z_candidate_).colwise() + mean.row(j).transpose());
    for (int d = 0; d < n_draws; ++d)
      out(j, d) = hypervolume_improvement(fronts_[static_cast<std::size_t>(d)], {-f(0, d), -f(1, d)}, r);
  });
  return out;
}

Vector Nehvi::evaluate_batch(const Matrix& candidates) const {
  require(candidates.cols() == static_cast<Eigen::Index>(s_->dim()), "nehvi: dimension mismatch");
  return draw_matrix(candidates).rowwise().mean();
}

double Nehvi::evaluate(const Vector& candidate) const { return evaluate_batch(Matrix(candidate.transpose()))[0]; }

Vector Nehvi::draws(const Vector& candidate) const {
  require(candidate.size() == static_cast<Eigen::Index>(s_->dim()), "nehvi: dimension mismatch");
  return draw_matrix(Matrix(candidate.transpose())).row(0).transpose();
}

double Nehvi::baseline_hypervolume() const {
  double total = 0.0;
  for (const auto& stairs : fronts_) {
    double height = ref_[1];
    for (const auto& p : stairs) {
      total += (p[0] - ref_[0]) * (p[1] - height);
      height = p[1];
    }
  }
  return total / static_cast<double>(fronts_.size());
}

OptimizerResult optimize_acquisition(const BatchObjective& objective, const Box& bounds,
                                     const OptimizerOptions& options, Seed seed) {
  require(options.restarts >= 1 && options.candidates_per_restart >= 1,
          "optimize_acquisition: restarts and candidates must be positive");
  const auto p = static_cast<Eigen::Index>(bounds.dim());
  const Vector width = bounds.width();
  Rng rng = make_rng(seed);
  OptimizerResult best{Vector(), std::numeric_limits<double>::infinity()};

  for (int r = 0; r < options.restarts; ++r) {
    Matrix cand(options.candidates_per_restart, p);
    const Eigen::Index n_local =
        options.anchors.rows() > 0
            ? static_cast<Eigen::Index>(std::floor(options.local_fraction * static_cast<double>(cand.rows())))
            : 0;
    for (Eigen::Index i = 0; i < cand.rows() - n_local; ++i) cand.row(i) = uniform_in_box(rng, bounds).transpose();
    if (n_local > 0) {
      require(options.anchors.cols() == p, "optimize_acquisition: anchor dimension mismatch");
      std::uniform_int_distribution<Eigen::Index> pick(0, options.anchors.rows() - 1);
      std::uniform_real_distribution<double> logscale(std::log(options.local_scale_min),
                                                      std::log(options.local_scale_max));
      std::normal_distribution<double> nd;
      for (Eigen::Index i = cand.rows() - n_local; i < cand.rows(); ++i) {
        Vector y = options.anchors.row(pick(rng)).transpose();
        const double sd = std::exp(logscale(rng));
        for (Eigen::Index j = 0; j < p; ++j) y[j] += sd * width[j] * nd(rng);
        cand.row(i) = bounds.clamp(y).transpose();
      }
    }
    const Vector values = objective(cand);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i)
      if (values[i] < values[arg] || !std::isfinite(values[arg])) arg = i;
    Vector x = cand.row(arg).transpose();
    double fx = values[arg];
    double step = options.initial_step;

    for (int round = 0; round < options.polish_rounds; ++round) {
      Matrix trial(2 * p, p);
      for (Eigen::Index j = 0; j < p; ++j) {
        for (int sgn = 0; sgn < 2; ++sgn) {
          Vector y = x;
          y[j] += (sgn == 0 ? -step : step) * width[j];
          trial.row(2 * j + sgn) = bounds.clamp(y).transpose();
        }
      }
      const Vector tv = objective(trial);
      Eigen::Index ta = -1;
      for (Eigen::Index i = 0; i < tv.size(); ++i)
        if (tv[i] < fx && (ta < 0 || tv[i] < tv[ta])) ta = i;
      if (ta >= 0) {
        x = trial.row(ta).transpose();
        fx = tv[ta];
      } else {
        step *= 0.5;
      }
    }
    if (best.x.size() == 0 || fx < best.value) best = {x, fx};
  }
  return best;
}

}  // namespace mobolfi::acq
