// Acceptance suite: one PASS/FAIL line per criterion.
//   mobolfi_acceptance [--criterion N]... [--work DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mobolfi/acquisition.hpp"
#include "mobolfi/config.hpp"
#include "mobolfi/gp.hpp"
#include "mobolfi/mlba.hpp"
#include "mobolfi/normal.hpp"
#include "mobolfi/run_io.hpp"
#include "mobolfi/samplers.hpp"
#include "support/oracles.hpp"

using namespace mobolfi;
using namespace mobolfi::engine;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string work_dir = "acceptance-work";

std::string format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string format(const char* fmt, ...) {
  char buf[2048];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

std::string config_path(const std::string& name) { return std::string(MOBOLFI_SOURCE_DIR) + "/configs/" + name; }

double rel_err(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

// ---------------------------------------------------------------- 1

Outcome gp_oracle() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + trial % 2;
    const int n = 2 + static_cast<int>(u(rng) * 19.0);  // 2..20
    const int p = 1 + static_cast<int>(u(rng) * 5.0);   // 1..5
    gp::TrainingSet t;
    t.inputs.resize(n, p);
    t.outputs.resize(n, k);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) t.inputs(i, j) = 2.0 * u(rng) - 1.0;
      for (int c = 0; c < k; ++c) t.outputs(i, c) = std::cos(2.0 * t.inputs(i, 0) + c) + 0.2 * u(rng);
    }
    std::vector<gp::KernelSpec> ks;
    std::vector<oracle::Component> oc;
    for (int c = 0; c < k; ++c) {
      gp::KernelSpec s;
      s.lengthscales.resize(p);
      for (int j = 0; j < p; ++j) s.lengthscales[j] = 0.2 + 1.5 * u(rng);
      s.signal_variance = 0.3 + 2.0 * u(rng);
      s.mean_constant = u(rng) - 0.5;
      ks.push_back(s);
      oc.push_back({s.lengthscales, s.signal_variance, s.mean_constant});
    }
    Matrix noise(k, k);
    if (k == 1) {
      noise << 0.005 + 0.05 * u(rng);
    } else {
      const double a = 0.005 + 0.05 * u(rng), b = 0.005 + 0.05 * u(rng), r = 1.6 * u(rng) - 0.8;
      noise << a, r * std::sqrt(a * b), r * std::sqrt(a * b), b;
    }
    const auto s = gp::Surrogate::condition(t, ks, gp::NoiseModel::matrix(noise));
    Vector extra(k);
    for (int c = 0; c < k; ++c) extra[c] = s.jitter() * ks[static_cast<std::size_t>(c)].signal_variance;
    for (int rep = 0; rep < 5; ++rep) {
      Vector q(p);
      for (int j = 0; j < p; ++j) q[j] = 3.0 * u(rng) - 1.5;
      const auto pr = s.predict(q);
      const auto ref = oracle::condition(t.inputs, t.outputs, oc, noise, extra, q);
      for (int a = 0; a < k; ++a) {
        worst = std::max(worst, rel_err(pr.mean[a], ref.mean[a]));
        for (int b = 0; b < k; ++b) worst = std::max(worst, rel_err(pr.cov(a, b), ref.cov(a, b)));
      }
    }
  }
  return {worst <= 1e-8, format("50 problems x 5 queries, max relative error %.2e (tol 1e-8)", worst)};
}

// ---------------------------------------------------------------- 2

Outcome hypervolume() {
  Vector a(2), b(2), ref = Vector::Zero(2);
  a << 1.0, 2.0;
  b << 2.0, 1.0;
  const double hand = acq::hypervolume_2d({a, b}, ref);
  bool ok = std::fabs(hand - 3.0) < 1e-12;

  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n_mc = 1000000;
  int within = 0;
  double worst_z = 0.0;
  for (int f = 0; f < 100; ++f) {
    const int m = 1 + static_cast<int>(u(rng) * 15.0);
    std::vector<Vector> pts;
    Vector hi = Vector::Zero(2);
    for (int i = 0; i < m; ++i) {
      Vector v(2);
      v << 0.05 + 2.0 * u(rng), 0.05 + 3.0 * u(rng);
      hi = hi.cwiseMax(v);
      pts.push_back(v);
    }
    const double exact = acq::hypervolume_2d(pts, ref);
    std::uniform_real_distribution<double> ux(0.0, hi[0]), uy(0.0, hi[1]);
    long hits = 0;
    for (int s = 0; s < n_mc; ++s) {
      const double x = ux(rng), y = uy(rng);
      for (const auto& p : pts)
        if (x <= p[0] && y <= p[1]) {
          ++hits;
          break;
        }
    }
    const double area = hi[0] * hi[1];
    const double frac = static_cast<double>(hits) / n_mc;
    const double se = area * std::sqrt(frac * (1.0 - frac) / n_mc);
    const double z = se > 0 ? std::fabs(frac * area - exact) / se : (std::fabs(frac * area - exact) > 1e-12 ? 1e9 : 0.0);
    worst_z = std::max(worst_z, z);
    if (z <= 3.0) ++within;
  }
  ok = ok && within == 100;
  return {ok, format("hand front %.15g (expect 3); %d/100 random fronts within 3 MC SE of 1e6 samples (max |z| %.2f)",
                     hand, within, worst_z)};
}

// ---------------------------------------------------------------- 3

Outcome bivariate_cdf() {
  const double orthant = bvn_cdf(0.0, 0.0, 0.5);
  bool ok = std::fabs(orthant - 1.0 / 3.0) <= 1e-6;

  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Triple {
    double h, k, rho, s, exact;
    long hits;
  };
  std::vector<Triple> tr(1000);
  for (auto& t : tr) {
    t.h = 6.0 * u(rng) - 3.0;
    t.k = 6.0 * u(rng) - 3.0;
    t.rho = 1.98 * u(rng) - 0.99;
    t.s = std::sqrt(1.0 - t.rho * t.rho);
    t.exact = bvn_cdf(t.h, t.k, t.rho);
    t.hits = 0;
  }
  // Every triple sees the same 1e7 standard normal pairs.
  const long n = 10000000, chunk = 1000000;
  std::normal_distribution<double> nd;
  std::vector<double> z1(chunk), z2(chunk);
  for (long done = 0; done < n; done += chunk) {
    for (long i = 0; i < chunk; ++i) z1[i] = nd(rng), z2[i] = nd(rng);
    for (auto& t : tr) {
      long c = 0;
      for (long i = 0; i < chunk; ++i) c += (z1[i] <= t.h) & (t.rho * z1[i] + t.s * z2[i] <= t.k);
      t.hits += c;
    }
  }
  int within = 0;
  double worst_z = 0.0;
  for (const auto& t : tr) {
    const double est = static_cast<double>(t.hits) / n;
    const double se = std::sqrt(std::max(t.exact * (1.0 - t.exact), 1e-300) / n);
    const double z = std::fabs(est - t.exact) / se;
    worst_z = std::max(worst_z, z);
    if (z <= 4.0) ++within;
  }
  ok = ok && within == 1000;
  return {ok, format("bvn_cdf(0,0,0.5) - 1/3 = %.1e; %d/1000 triples within 4 MC SE of 1e7 samples (max |z| %.2f)",
                     orthant - 1.0 / 3.0, within, worst_z)};
}

// ---------------------------------------------------------------- 4

Outcome chain_rule() {
  auto cfg = load_config(config_path("toy_shared.json"));
  cfg.run.n_acquisitions = 10;
  const auto problem = make_problem(cfg);
  const auto r = run(cfg.run, *problem);
  Rng rng = make_rng(99);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vector th = uniform_in_box(rng, problem->bounds());
    const double joint = r.likelihood(abc::Mode::joint)(th);
    const double a = r.likelihood(abc::Mode::source1)(th) + r.likelihood(abc::Mode::cond_2_given_1)(th);
    const double b = r.likelihood(abc::Mode::source2)(th) + r.likelihood(abc::Mode::cond_1_given_2)(th);
    worst = std::max({worst, rel_err(a, joint), rel_err(b, joint)});
  }
  return {worst <= 1e-9, format("1000 theta on a fitted 10-d toy surrogate, max |joint - marginal - conditional| "
                                "%.2e (relative, tol 1e-9)",
                                worst)};
}

// ---------------------------------------------------------------- shared runs

struct RunBundle {
  ConfigFile cfg;
  std::unique_ptr<Problem> problem;
  RunResult result;
  std::string dir;
};

RunBundle run_config(const std::string& name) {
  RunBundle b;
  b.cfg = load_config(config_path(name));
  b.problem = make_problem(b.cfg);
  b.dir = run_directory(work_dir, b.cfg);
  std::fprintf(stderr, "  running %s -> %s\n", name.c_str(), b.dir.c_str());
  b.result = run(b.cfg.run, *b.problem, [&](const RunResult& r) {
    if (!r.trace.empty() && r.trace.size() % 50 == 0 && r.status == "running")
      std::fprintf(stderr, "    iteration %zu, %.0f s\n", r.trace.size(), r.seconds);
  });
  write_run(b.dir, b.cfg, *b.problem, b.result);
  return b;
}

PosteriorResult sample(const RunBundle& b, abc::Mode mode, PriorKind prior) {
  PosteriorRecord rec;
  rec.mode = mode;
  rec.prior = prior;
  rec.sampler = b.cfg.run.sampler;
  rec.seed = RunSeeds::from_master(b.cfg.run.seed).sampler;
  auto post = posterior_sample(b.result.likelihood(mode), *b.problem, prior, rec.sampler, rec.seed);
  write_posterior(b.dir, rec, post);
  return post;
}

Vector column_means(const Matrix& s) { return s.colwise().mean(); }

Vector column_vars(const Matrix& s) {
  const Vector m = column_means(s);
  return ((s.rowwise() - m.transpose()).array().square().colwise().sum() / static_cast<double>(s.rows() - 1)).matrix();
}

double column_quantile(const Matrix& s, Eigen::Index j, double q) {
  std::vector<double> c(s.col(j).data(), s.col(j).data() + s.rows());
  return abc::quantile(c, q);
}

// ---------------------------------------------------------------- 5

Outcome toy_end_to_end() {
  const auto b = run_config("toy_shared.json");
  const auto* tp = dynamic_cast<const ToyProblem*>(b.problem.get());
  const auto truth = toy::true_posterior(tp->observed(), tp->settings().config);
  const auto joint = sample(b, abc::Mode::joint, b.cfg.prior);
  const auto s1 = sample(b, abc::Mode::source1, b.cfg.prior);
  const auto s2 = sample(b, abc::Mode::source2, b.cfg.prior);
  const Vector jm = column_means(joint.samples), jv = column_vars(joint.samples);
  const double m1 = column_means(s1.samples)[0], m2 = column_means(s2.samples)[0];
  const double d_joint = std::fabs(jm[0] - truth.joint.mean[0]);
  const double d1 = std::fabs(m1 - truth.x_only.mean[0]), d2 = std::fabs(m2 - truth.w_only.mean[0]);
  const bool ok = d_joint <= 0.3 && jv[0] >= truth.joint.var[0] && d1 <= 0.35 && d2 <= 0.35 &&
                  b.result.training.size() == 250;
  return {ok, format("%zu training simulations; joint theta1 mean %.3f vs %.3f (|d| %.3f <= 0.3), var %.4f >= %.4f; "
                     "source1 mean %.3f vs %.3f (|d| %.3f), source2 mean %.3f vs %.3f (|d| %.3f) (<= 0.35)",
                     b.result.training.size(), jm[0], truth.joint.mean[0], d_joint, jv[0], truth.joint.var[0], m1,
                     truth.x_only.mean[0], d1, m2, truth.w_only.mean[0], d2)};
}


// ---------------------------------------------------------------- 6

double posterior_mode(const PosteriorResult& post) {
  Eigen::Index best = 0;
  post.log_post.maxCoeff(&best);
  return post.samples(best, 0);
}

Outcome misspecified() {
  const auto b = run_config("toy_misspecified.json");
  const auto& c = b.cfg.problem.toy.config;
  const auto s1 = sample(b, abc::Mode::source1, b.cfg.prior);
  const auto s2 = sample(b, abc::Mode::source2, b.cfg.prior);
  const double mode1 = posterior_mode(s1), mode2 = posterior_mode(s2);
  int near_x = 0, near_w = 0;
  for (const auto& rec : b.result.trace) {
    near_x += std::fabs(rec.theta[0] - c.theta_x) <= 0.2;
    near_w += std::fabs(rec.theta[0] - c.theta_w) <= 0.2;
  }
  const bool ok = std::fabs(mode1 - c.theta_x) <= 0.25 && std::fabs(mode2 - c.theta_w) <= 0.25 && near_x > 0 &&
                  near_w > 0;
  const auto& obs = dynamic_cast<const ToyProblem*>(b.problem.get())->observed();
  const double xbar = obs.x.col(0).mean();
  const double what = (obs.w(obs.w.rows() - 1, 0) - obs.w(0, 0)) / (c.delta() * static_cast<double>(obs.w.rows() - 1));
  return {ok, format("%s prior; source1 mode %.3f vs %.1f, source2 mode %.3f vs %.1f (tol 0.25); acquisitions "
                     "within 0.2: %d near %.1f, %d near %.1f; observed-data estimates x %.3f, w %.3f",
                     to_string(b.cfg.prior).c_str(), mode1, c.theta_x, mode2, c.theta_w, near_x, c.theta_x, near_w,
                     c.theta_w, xbar, what)};
}

// ---------------------------------------------------------------- 7

Outcome mlba_oracle() {
  const Matrix attributes = mlba::synthetic_attributes(320, 20240101);
  const Box box = mlba::prior_box();
  Rng rng = make_rng(31337);
  const int n = 100000;
  int cells = 0, inside = 0;
  double worst_z = 0.0;
  std::string thetas;
  for (int r = 0; r < 3; ++r) {
    const Vector theta = uniform_in_box(rng, box);
    // Observation r's choice set repeated n times: n independent trials.
    mlba::MlbaConfig cfg;
    cfg.attributes = attributes.row(r).replicate(n, 1);
    mlba::MlbaConfig one = cfg;
    one.attributes = attributes.row(r);
    const auto sim = mlba::simulate(theta, cfg, derive_seed(500, static_cast<Seed>(r)));

    // RT bin edges: quintiles of an independent pilot.
    mlba::MlbaConfig pilot_cfg = cfg;
    pilot_cfg.attributes = attributes.row(r).replicate(10000, 1);
    const auto pilot = mlba::simulate(theta, pilot_cfg, derive_seed(600, static_cast<Seed>(r)));
    std::vector<double> rts(pilot.rt.data(), pilot.rt.data() + pilot.rt.size());
    std::vector<double> edges{0.0};
    for (double q : {0.2, 0.4, 0.6, 0.8}) edges.push_back(abc::quantile(rts, q));
    edges.push_back(INFINITY);

    auto check = [&](long count, double prob) {
      const double sd = std::sqrt(n * prob * (1.0 - prob));
      const double diff = std::fabs(static_cast<double>(count) - n * prob);
      const double z = sd > 0 ? diff / sd : (diff > 0 ? 1e9 : 0.0);
      worst_z = std::max(worst_z, z);
      ++cells;
      inside += z <= 3.0;
    };
    for (int a = 0; a < 3; ++a) {
      const long chosen = std::count(sim.choice.begin(), sim.choice.end(), a);
      check(chosen, mlba::joint_probability(theta, one, 0, a, 0.0, INFINITY));
      for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        long count = 0;
        for (Eigen::Index i = 0; i < sim.size(); ++i)
          count += sim.choice[static_cast<std::size_t>(i)] == a && sim.rt[i] > edges[e] && sim.rt[i] <= edges[e + 1];
        check(count, mlba::joint_probability(theta, one, 0, a, edges[e], edges[e + 1]));
      }
    }
    std::ostringstream os;
    os << (r ? "; " : "") << "theta" << r + 1 << " = (";
    for (Eigen::Index j = 0; j < theta.size(); ++j) os << (j ? ", " : "") << format("%.3g", theta[j]);
    os << ")";
    thetas += os.str();
  }
  return {inside == cells,
          format("%d/%d cells (choice proportions and choice x RT-quintile frequencies, 1e5 trials) within 3 sigma, "
                 "max |z| %.2f; %s",
                 inside, cells, worst_z, thetas.c_str())};
}

// ---------------------------------------------------------------- 8

Outcome mlba_inference() {
  const auto mob = run_config("mlba_mobolfi.json");
  const auto bol = run_config("mlba_bolfi.json");
  const auto pm = sample(mob, abc::Mode::joint, mob.cfg.prior);
  const auto pb = sample(bol, abc::Mode::joint, bol.cfg.prior);
  const Vector truth = mob.cfg.problem.theta_true;
  const Vector sd_m = column_vars(pm.samples).cwiseSqrt(), sd_b = column_vars(pb.samples).cwiseSqrt();
  int covered = 0, narrower = 0;
  std::ostringstream os;
  const auto names = mob.problem->parameter_names();
  for (Eigen::Index j = 0; j < truth.size(); ++j) {
    const double lo = column_quantile(pm.samples, j, 0.025), hi = column_quantile(pm.samples, j, 0.975);
    const bool cov = lo <= truth[j] && truth[j] <= hi;
    covered += cov;
    narrower += sd_m[j] <= sd_b[j];
    os << format("%s%s [%.3g, %.3g]%s sd %.3g/%.3g", j ? "; " : "", names[static_cast<std::size_t>(j)].c_str(), lo,
                 hi, cov ? "" : " (miss)", sd_m[j], sd_b[j]);
  }
  const bool ok = covered >= 4 && narrower >= 4;
  return {ok, format("MOBOLFI 95%% intervals cover theta_true in %d/6 (need 4), MOBOLFI sd <= BOLFI sd in %d/6 "
                     "(need 4); %zu+%zu training points; %s",
                     covered, narrower, mob.result.training.size(), bol.result.training.size(), os.str().c_str())};
}

// ---------------------------------------------------------------- 9

mcmc::LogPosterior gaussian(const Vector& mean, const Matrix& cov) {
  const Matrix prec = cov.inverse();
  mcmc::LogPosterior lp;
  lp.log_lik = [mean, prec](const Vector& x) {
    const Vector d = x - mean;
    return -0.5 * d.dot(prec * d);
  };
  lp.bounds = Box(mean.array() - 12.0, mean.array() + 12.0);
  return lp;
}

bool moments_ok(const Matrix& s, const Vector& mean, const Matrix& cov, double& worst_mean, double& worst_cov) {
  const Vector m = column_means(s);
  const Matrix c = (s.rowwise() - m.transpose()).transpose() * (s.rowwise() - m.transpose()) /
                   static_cast<double>(s.rows() - 1);
  bool ok = true;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    worst_mean = std::max(worst_mean, std::fabs(m[i] - mean[i]));
    ok = ok && std::fabs(m[i] - mean[i]) <= 0.05;
    for (Eigen::Index j = 0; j < mean.size(); ++j) {
      const double e = std::fabs(c(i, j) - cov(i, j)) / std::sqrt(cov(i, i) * cov(j, j));
      worst_cov = std::max(worst_cov, e);
      ok = ok && e <= 0.1;
    }
  }
  return ok;
}

Outcome sampler_calibration() {
  double wm = 0.0, wc = 0.0;
  bool ok = true;
  std::string parts;

  {  // rwm, standard normal, 50k steps, scale 2.4
    const Vector mean = Vector::Zero(1);
    const Matrix cov = Matrix::Identity(1, 1);
    const auto res = mcmc::rwm_sample(gaussian(mean, cov), mean, 50000, Vector::Constant(1, 2.4), 11);
    const bool r = moments_ok(res.samples.bottomRows(45000), mean, cov, wm, wc);
    ok = ok && r;
    parts += format("rwm N(0,1) %s", r ? "ok" : "FAIL");
  }
  Vector mean(2);
  mean << 1.0, -0.5;
  Matrix cov(2, 2);
  cov << 1.0, 0.8 * std::sqrt(2.0), 0.8 * std::sqrt(2.0), 2.0;
  const auto lp = gaussian(mean, cov);
  {  // rwm, correlated 2-d, four pooled chains
    Matrix pooled(0, 2);
    for (int c = 0; c < 4; ++c) {
      Vector scale(2);
      scale << 2.38 / std::sqrt(2.0) * 0.6, 2.38 / std::sqrt(2.0) * 0.6 * std::sqrt(2.0);
      const auto res = mcmc::rwm_sample(lp, mean, 100000, scale, derive_seed(12, static_cast<Seed>(c)));
      Matrix keep = res.samples.bottomRows(90000);
      pooled.conservativeResize(pooled.rows() + keep.rows(), Eigen::NoChange);
      pooled.bottomRows(keep.rows()) = keep;
    }
    const bool r = moments_ok(pooled, mean, cov, wm, wc);
    ok = ok && r;
    parts += format("; rwm correlated 2-d %s", r ? "ok" : "FAIL");
  }
  {  // demc, same target, 9 chains, 20k steps
    mcmc::DemcOptions opt;
    opt.steps = 20000;
    opt.burn_in = 2000;
    const Matrix init = mcmc::init_from_prior(
        lp, [&](Rng& r) { return Vector(mean + standard_normal_vector(r, 2)); }, opt.n_chains, 13);
    const auto res = mcmc::demc_sample(lp, init, opt, 14);
    const bool r = moments_ok(res.samples, mean, cov, wm, wc);
    ok = ok && r;
    parts += format("; demc correlated 2-d %s", r ? "ok" : "FAIL");
  }
  {  // demc, 5-d Gaussian with mixed scales
    const int p = 5;
    Vector m5(p);
    m5 << 0.5, -1.0, 2.0, 0.0, 1.5;
    Matrix a = Matrix::Random(p, p);
    std::mt19937_64 rng(15);
    std::normal_distribution<double> nd;
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
    const Matrix c5 = a * a.transpose() / p + 0.3 * Matrix::Identity(p, p);
    const auto lp5 = gaussian(m5, c5);
    mcmc::DemcOptions opt;
    opt.n_chains = 12;
    opt.steps = 40000;
    opt.burn_in = 5000;
    const Matrix init = mcmc::init_from_prior(
        lp5, [&](Rng& r) { return Vector(m5 + standard_normal_vector(r, p)); }, opt.n_chains, 16);
    const auto res = mcmc::demc_sample(lp5, init, opt, 17);
    const bool r = moments_ok(res.samples, m5, c5, wm, wc);
    ok = ok && r;
    parts += format("; demc 5-d %s", r ? "ok" : "FAIL");
  }
  return {ok, format("%s; max mean error %.3f (tol 0.05), max covariance error %.3f of sd_i sd_j (tol 0.10)",
                     parts.c_str(), wm, wc)};
}

// ---------------------------------------------------------------- 10

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"toy_shared.json", "mlba_mobolfi.json", "mlba_bolfi.json"}) {
    const auto cfg = load_config(config_path(name));
    const auto first = fs::path(run_directory(work_dir, cfg)) / "training.csv";
    std::string reference;
    const bool reused = fs::exists(first) && slurp(fs::path(run_directory(work_dir, cfg)) / "run.json")
                                                     .find("\"complete\": true") != std::string::npos;
    const auto problem = make_problem(cfg);
    std::fprintf(stderr, "  replaying %s\n", name);
    if (reused) {
      reference = slurp(first);
    } else {
      const auto r = run(cfg.run, *problem);
      const auto dir = fs::path(work_dir) / "replay-a";
      write_run(dir.string(), cfg, *problem, r);
      reference = slurp(dir / "training.csv");
    }
    const auto r = run(cfg.run, *problem);
    const auto dir = fs::path(work_dir) / "replay-b";
    write_run(dir.string(), cfg, *problem, r);
    const bool same = slurp(dir / "training.csv") == reference && !reference.empty();
    ok = ok && same;
    detail += format("%s%s %s (%zu rows%s)", detail.empty() ? "" : "; ", name, same ? "identical" : "DIFFERS",
                     r.training.size(), reused ? ", against the criterion run" : ", two fresh runs");
  }
  return {ok, "training logs byte-compared: " + detail};
}

struct Criterion {
  int id;
  const char* title;
  double limit_seconds;
  std::function<Outcome()> body;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--criterion") && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else if (!std::strcmp(argv[i], "--work") && i + 1 < argc) {
      work_dir = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]... [--work DIR]\n", argv[0]);
      return 2;
    }
  }
  fs::create_directories(work_dir);

  const std::vector<Criterion> all = {
      {1, "GP oracle equivalence", 10, gp_oracle},
      {2, "hypervolume exactness", 30, hypervolume},
      {3, "bivariate normal CDF", 120, bivariate_cdf},
      {4, "likelihood chain rule", 60, chain_rule},
      {5, "toy end-to-end", 900, toy_end_to_end},
      {6, "misspecified toy conflict detection", 900, misspecified},
      {7, "MLBA simulator vs closed form", 600, mlba_oracle},
      {8, "MLBA desk-scale inference", 7200, mlba_inference},
      {9, "sampler calibration", 300, sampler_calibration},
      {10, "determinism", 7200, determinism},
  };

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("criterion %d %s: %s: %s [%.1f s, limit %.0f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.title,
                o.detail.c_str(), secs, c.limit_seconds, in_time ? "" : ", OVER TIME");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
