#include "mobolfi/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mobolfi/parallel.hpp"
#include "mobolfi/samplers.hpp"

namespace mobolfi::engine {

std::string to_string(Method m) {
  switch (m) {
    case Method::bolfi: return "bolfi";
    case Method::mobolfi: return "mobolfi";
    case Method::mobolfi_aux: return "mobolfi_aux";
  }
  return "mobolfi";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::bolfi, Method::mobolfi, Method::mobolfi_aux})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown method '" + name + "' (expected bolfi, mobolfi or mobolfi_aux)");
}

std::string to_string(PriorKind p) { return p == PriorKind::standard ? "standard" : "weak"; }

PriorKind parse_prior(const std::string& name) {
  if (name == "standard") return PriorKind::standard;
  if (name == "weak") return PriorKind::weak;
  throw ConfigError("unknown prior '" + name + "' (expected standard or weak)");
}

void RunConfig::validate() const {
  if (n_init < 2) throw ConfigError("n_init must be >= 2");
  if (n_acquisitions < 0) throw ConfigError("n_acquisitions must be >= 0");
  if (q_tolerance.size() != static_cast<Eigen::Index>(outputs()))
    throw ConfigError("q_tolerance needs " + std::to_string(outputs()) + " entries for method " + to_string(method));
  if (!((q_tolerance.array() > 0.0).all() && (q_tolerance.array() < 1.0).all()))
    throw ConfigError("q_tolerance entries must lie in (0, 1)");
  if (!(filter_quantile > 0.0 && filter_quantile <= 1.0)) throw ConfigError("filter quantile must lie in (0, 1]");
  if (weights && (weights->size() != 2 || !(weights->array() > 0.0).all()))
    throw ConfigError("scaling weights must be two positive numbers");
  if (n_sigma < 2) throw ConfigError("n_sigma must be >= 2");
  const auto& a = acquisition;
  if (a.restarts < 1 || a.candidates < 1 || a.polish_rounds < 0 || a.mc_samples < 1)
    throw ConfigError("acquisition counts must be positive");
  if (!(a.eps_eta > 0.0)) throw ConfigError("eps_eta must be positive");
  if (surrogate.starts < 1 || surrogate.refit_every < 1 || surrogate.warm_evaluations < 1)
    throw ConfigError("surrogate settings must be positive");
  if (sampler.method != "demc" && sampler.method != "rwm")
    throw ConfigError("sampler method must be demc or rwm");
  if (sampler.chains < (sampler.method == "demc" ? 3 : 1)) throw ConfigError("too few sampler chains");
  if (sampler.burn_in < 0 || sampler.steps <= sampler.burn_in) throw ConfigError("sampler steps must exceed burn_in");
  if (!(sampler.rwm_scale > 0.0)) throw ConfigError("rwm_scale must be positive");
}

RunSeeds RunSeeds::from_master(Seed master) {
  RunSeeds s;
  s.init = master + 1;
  s.pilot = master + 2;
  s.acquisition_base = master + 1000;
  s.sigma = master + 5000;
  s.sampler = master + 9000;
  return s;
}

abc::ApproxLikelihood RunResult::likelihood(abc::Mode mode) const {
  if (!surrogate || !noise) throw ContractViolation("run result has no calibrated surrogate");
  const auto modes = abc::available_modes(surrogate->outputs_dim());
  if (std::find(modes.begin(), modes.end(), mode) == modes.end())
    throw CapabilityError("mode " + abc::to_string(mode) + " is unavailable for a " + to_string(config.method) + " run");
  return abc::ApproxLikelihood(surrogate, tolerance.t, *noise, mode);
}

Vector objective(const RunConfig& cfg, const abc::DiscrepancyScaling& scaling, const Vector& raw) {
  if (cfg.method == Method::bolfi) return Vector::Constant(1, scaling.combine(raw));
  return scaling.scale(raw);
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<SimulationOutcome> simulate_all(const Problem& problem, const Matrix& thetas, std::size_t offset,
                                            Seed base) {
  std::vector<SimulationOutcome> out(static_cast<std::size_t>(thetas.rows()));
  parallel_for(out.size(), [&](std::size_t i) {
    const Seed seed = derive_seed(base, offset + i);
    try {
      out[i] = problem.simulate(thetas.row(static_cast<Eigen::Index>(i)).transpose(), seed);
    } catch (const SimulationError&) {
      throw;
    } catch (const std::exception& e) {
      throw SimulationError(e.what(), seed);
    }
    if (!out[i].raw.allFinite()) throw SimulationError("simulator returned a non-finite discrepancy", seed);
  });
  return out;
}

double front_hypervolume(const Matrix& objectives, const Vector& ref) {
  std::vector<Vector> pts;
  for (Eigen::Index i = 0; i < objectives.rows(); ++i) {
    const Vector y = -objectives.row(i).transpose();
    if ((y.array() >= ref.array()).all()) pts.push_back(y);
  }
  return pts.empty() ? 0.0 : acq::hypervolume_2d(pts, ref);
}

// Observed Pareto set (K=2) or the best five points (K=1).
Matrix incumbents(const gp::TrainingSet& t) {
  std::vector<Eigen::Index> rows;
  const auto n = t.inputs.rows();
  if (t.outputs.cols() == 1) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    const auto k = std::min<std::size_t>(5, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](Eigen::Index a, Eigen::Index b) { return t.outputs(a, 0) < t.outputs(b, 0); });
    rows.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      bool dominated = false;
      for (Eigen::Index j = 0; j < n && !dominated; ++j)
        dominated = j != i && (t.outputs.row(j).array() <= t.outputs.row(i).array()).all() &&
                    (t.outputs.row(j).array() < t.outputs.row(i).array()).any();
      if (!dominated) rows.push_back(i);
    }
  }
  Matrix out(static_cast<Eigen::Index>(rows.size()), t.inputs.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = t.inputs.row(rows[i]);
  return out;
}

}  // namespace

Matrix pilot_discrepancies(const Problem& problem, std::size_t n, Seed seed) {
  Rng rng = make_rng(seed);
  Matrix thetas(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(problem.dim()));
  for (Eigen::Index i = 0; i < thetas.rows(); ++i) thetas.row(i) = problem.prior_draw(rng).transpose();
  const auto out = simulate_all(problem, thetas, 0, seed);
  Matrix raw(thetas.rows(), static_cast<Eigen::Index>(problem.discrepancy_names().size()));
  for (std::size_t i = 0; i < out.size(); ++i) raw.row(static_cast<Eigen::Index>(i)) = out[i].raw.transpose();
  return raw;
}

abc::DiscrepancyScaling run_scaling(const RunConfig& cfg, const Problem& problem) {
  if (cfg.weights) return abc::DiscrepancyScaling::from_weights(*cfg.weights);
  return abc::mad_scaling(
      pilot_discrepancies(problem, static_cast<std::size_t>(cfg.n_init), RunSeeds::from_master(cfg.seed).pilot));
}

RunResult run(const RunConfig& cfg, const Problem& problem, const RunObserver& observer) {
  cfg.validate();
  const auto t0 = Clock::now();
  const RunSeeds seeds = RunSeeds::from_master(cfg.seed);
  const std::size_t kraw = problem.discrepancy_names().size();
  const auto n_init = static_cast<std::size_t>(cfg.n_init);

  RunResult r;
  r.config = cfg;
  r.observed_hash = hex64(problem.observed_hash());
  r.counts.setup = problem.setup_simulations();
  r.status = "running";
  auto notify = [&] {
    r.seconds = since(t0);
    if (observer) observer(r);
  };

  try {
    // Unfiltered pilot: MAD scaling and the rejection threshold.
    Matrix pilot_raw;
    if (cfg.filter || !cfg.weights) {
      pilot_raw = pilot_discrepancies(problem, n_init, seeds.pilot);
      r.counts.pilot = n_init;
    }
    r.scaling = cfg.weights ? abc::DiscrepancyScaling::from_weights(*cfg.weights) : abc::mad_scaling(pilot_raw);
    if (r.scaling.v.size() != static_cast<Eigen::Index>(kraw))
      throw ConfigError("scaling has " + std::to_string(r.scaling.v.size()) + " entries, problem has " +
                        std::to_string(kraw) + " discrepancies");
    if (cfg.filter) {
      r.threshold.resize(static_cast<Eigen::Index>(kraw));
      for (std::size_t k = 0; k < kraw; ++k) {
        std::vector<double> col;
        for (Eigen::Index i = 0; i < pilot_raw.rows(); ++i) col.push_back(r.scaling.scale(pilot_raw.row(i).transpose())[k]);
        r.threshold[static_cast<Eigen::Index>(k)] = abc::quantile(col, cfg.filter_quantile);
      }
    }

    // Initial design with rejection.
    const std::size_t max_attempts = 100 * n_init;
    std::size_t attempts = 0;
    while (r.training.size() < n_init) {
      if (attempts >= max_attempts)
        throw ConfigError("init design accepted " + std::to_string(r.training.size()) + " of " +
                          std::to_string(attempts) + " candidates (below 1%); review the prior or the filters");
      const std::size_t batch = n_init - r.training.size();
      const Matrix thetas = problem.design(attempts + batch, seeds.init).bottomRows(static_cast<Eigen::Index>(batch));
      const auto out = simulate_all(problem, thetas, attempts, seeds.init);
      attempts += batch;
      for (std::size_t i = 0; i < batch; ++i) {
        const Vector scaled = r.scaling.scale(out[i].raw);
        if (!out[i].admissible) continue;
        if (cfg.filter && (scaled.array() > r.threshold.array()).any()) continue;
        const Vector theta = thetas.row(static_cast<Eigen::Index>(i)).transpose();
        r.training.append(theta, objective(cfg, r.scaling, out[i].raw));
        r.raw.conservativeResize(static_cast<Eigen::Index>(r.training.size()), static_cast<Eigen::Index>(kraw));
        r.raw.bottomRows(1) = out[i].raw.transpose();
        r.origin.push_back(0);
      }
    }
    r.counts.init_attempts = attempts;

    gp::FitOptions full;
    full.starts = cfg.surrogate.starts;
    full.seed = derive_seed(seeds.init, 1ULL << 40);
    r.surrogate = std::make_shared<const gp::Surrogate>(gp::fit(r.training, {}, full));
    notify();

    const Box& box = problem.bounds();
    const std::size_t kobj = cfg.outputs();
    acq::OptimizerOptions opt;
    opt.restarts = cfg.acquisition.restarts;
    opt.candidates_per_restart = cfg.acquisition.candidates;
    opt.polish_rounds = cfg.acquisition.polish_rounds;
    const auto eta_variant = cfg.acquisition.eta_variant.value_or(acq::default_eta_variant(problem.dim()));

    for (int it = 0; it < cfg.n_acquisitions; ++it) {
      const auto ti = Clock::now();
      const Seed s = seeds.acquisition(it);
      const gp::Surrogate& sur = *r.surrogate;
      AcquisitionRecord rec;
      rec.iteration = it;
      acq::OptimizerResult best;
      opt.anchors = incumbents(r.training);
      if (kobj == 1) {
        const double eta2 = acq::eta_squared(r.training.size(), problem.dim(), cfg.acquisition.eps_eta, eta_variant);
        best = acq::optimize_acquisition([&](const Matrix& q) { return acq::lcb_batch(q, sur, eta2); }, box, opt,
                                         derive_seed(s, 0));
        rec.acquisition_value = best.value;
      } else {
        const Vector ref = acq::reference_point(r.training.outputs);
        acq::NehviOptions nopt;
        nopt.mc_samples = cfg.acquisition.mc_samples;
        const acq::Nehvi nehvi(sur, ref, derive_seed(s, 1), nopt);
        best = acq::optimize_acquisition([&](const Matrix& q) { return Vector(-nehvi.evaluate_batch(q)); }, box, opt,
                                         derive_seed(s, 0));
        rec.acquisition_value = -best.value;
      }

      const Seed sim_seed = derive_seed(s, 2);
      SimulationOutcome out;
      try {
        out = problem.simulate(best.x, sim_seed);
      } catch (const SimulationError&) {
        throw;
      } catch (const std::exception& e) {
        throw SimulationError(e.what(), sim_seed);
      }
      if (!out.raw.allFinite()) throw SimulationError("simulator returned a non-finite discrepancy", sim_seed);
      ++r.counts.acquisitions;
      const Vector obj = objective(cfg, r.scaling, out.raw);
      r.training.append(best.x, obj);
      r.raw.conservativeResize(r.raw.rows() + 1, Eigen::NoChange);
      r.raw.bottomRows(1) = out.raw.transpose();
      r.origin.push_back(it + 1);

      const bool full_refit = (it + 1) % cfg.surrogate.refit_every == 0 || it + 1 == cfg.n_acquisitions;
      gp::FitOptions fo;
      fo.seed = derive_seed(s, 3);
      if (full_refit) {
        fo.starts = cfg.surrogate.starts;
      } else {
        fo.starts = 1;
        fo.max_evaluations = cfg.surrogate.warm_evaluations;
        fo.noise_evaluations = cfg.surrogate.warm_evaluations / 3;
        fo.joint_evaluations = cfg.surrogate.warm_evaluations / 2;
      }
      const gp::Hyperparameters current{sur.kernels(), sur.noise()};
      r.surrogate = std::make_shared<const gp::Surrogate>(gp::fit(r.training, std::span(&current, 1), fo));

      rec.theta = best.x;
      rec.raw = out.raw;
      rec.objective = obj;
      rec.full_refit = full_refit;
      rec.log_marginal = r.surrogate->log_marginal_likelihood();
      rec.progress = kobj == 1 ? r.training.outputs.col(0).minCoeff()
                               : front_hypervolume(r.training.outputs, acq::reference_point(r.training.outputs));
      rec.seconds = since(ti);
      r.trace.push_back(std::move(rec));
      notify();
    }

    r.tolerance = abc::select_tolerance(r.training.outputs, cfg.q_tolerance);
    if (kobj == 1) {
      r.noise = r.surrogate->noise();
    } else {
      const abc::DiscrepancyFn fn = [&](const Vector& theta, Seed seed) {
        return objective(cfg, r.scaling, problem.simulate(theta, seed).raw);
      };
      r.noise = abc::estimate_noise_cov(fn, *r.surrogate, cfg.n_sigma, seeds.sigma);
      r.counts.sigma = static_cast<std::size_t>(cfg.n_sigma);
    }
    r.complete = true;
    r.status = "complete";
    notify();
  } catch (const std::exception& e) {
    r.status = std::string("failed: ") + e.what();
    notify();
    throw;
  }
  return r;
}

PosteriorResult sample_log_likelihood(const std::function<double(const Vector&)>& log_lik, const Problem& problem,
                                      PriorKind prior, const SamplerSettings& settings, Seed seed) {
  mcmc::LogPosterior lp;
  if (prior == PriorKind::standard)
    lp.log_prior = [&problem](const Vector& t) { return problem.log_prior(t); };
  else
    lp.log_prior = [](const Vector&) { return 0.0; };
  lp.log_lik = log_lik;
  lp.bounds = problem.bounds();
  const auto prior_draw = [&problem](Rng& rng) { return problem.prior_draw(rng); };
  const Matrix init = mcmc::init_from_prior(lp, prior_draw, settings.chains, derive_seed(seed, 0));

  PosteriorResult out;
  if (settings.method == "demc") {
    mcmc::DemcOptions opts;
    opts.n_chains = settings.chains;
    opts.steps = settings.steps;
    opts.burn_in = settings.burn_in;
    auto res = mcmc::demc_sample(lp, init, opts, derive_seed(seed, 1));
    out.samples = std::move(res.samples);
    out.log_post = std::move(res.log_post);
    out.acceptance = std::move(res.acceptance);
    out.chain_means = std::move(res.chain_means);
    return out;
  }
  if (settings.method != "rwm") throw ConfigError("unknown sampler '" + settings.method + "'");
  const auto chains = static_cast<std::size_t>(settings.chains);
  const Vector scale = settings.rwm_scale * problem.bounds().width();
  std::vector<mcmc::ChainResult> res(chains);
  parallel_for(chains, [&](std::size_t c) {
    res[c] = mcmc::rwm_sample(lp, init.row(static_cast<Eigen::Index>(c)).transpose(), settings.steps, scale,
                              derive_seed(seed, 2 + c));
  });
  const Eigen::Index keep = settings.steps - settings.burn_in;
  const auto p = static_cast<Eigen::Index>(problem.dim());
  out.samples.resize(keep * static_cast<Eigen::Index>(chains), p);
  out.log_post.resize(out.samples.rows());
  out.acceptance.resize(static_cast<Eigen::Index>(chains));
  out.chain_means.resize(static_cast<Eigen::Index>(chains), p);
  for (std::size_t c = 0; c < chains; ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    out.samples.middleRows(ci * keep, keep) = res[c].samples.bottomRows(keep);
    out.log_post.segment(ci * keep, keep) = res[c].log_post.tail(keep);
    out.acceptance[ci] = res[c].acceptance;
    out.chain_means.row(ci) = res[c].samples.bottomRows(keep).colwise().mean();
  }
  return out;
}

PosteriorResult posterior_sample(const abc::ApproxLikelihood& likelihood, const Problem& problem, PriorKind prior,
                                 const SamplerSettings& settings, Seed seed) {
  const auto modes = abc::available_modes(likelihood.surrogate().outputs_dim());
  if (std::find(modes.begin(), modes.end(), likelihood.mode()) == modes.end())
    throw CapabilityError("mode " + abc::to_string(likelihood.mode()) + " is unavailable for this surrogate");
  return sample_log_likelihood([&likelihood](const Vector& t) { return likelihood(t); }, problem, prior, settings,
                               seed);
}

}  // namespace mobolfi::engine
