#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mobolfi/config.hpp"
#include "mobolfi/csv.hpp"
#include "mobolfi/dataset.hpp"
#include "mobolfi/parallel.hpp"
#include "mobolfi/run_io.hpp"

namespace fs = std::filesystem;
using namespace mobolfi;
using namespace mobolfi::engine;
using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kConfig = 1, kIo = 2, kEngine = 3, kIncomplete = 4, kCapability = 5 };

Vector parse_point(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--theta: '" + item + "' is not a number");
    }
  }
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix theta_rows(const std::string& point, const std::string& grid, std::size_t p) {
  Matrix rows;
  if (!grid.empty()) {
    rows = read_csv(grid).data;
  } else if (!point.empty()) {
    rows = parse_point(point).transpose();
  } else {
    throw ConfigError("give --theta or --grid");
  }
  if (rows.cols() != static_cast<Eigen::Index>(p))
    throw ConfigError("theta rows need " + std::to_string(p) + " columns, got " + std::to_string(rows.cols()));
  return rows;
}

void emit(const std::string& out, const std::vector<std::string>& header, const Matrix& table) {
  if (!out.empty() && out != "-") {
    write_csv(out, header, table);
    return;
  }
  for (std::size_t j = 0; j < header.size(); ++j) std::printf("%s%s", j ? "," : "", header[j].c_str());
  std::printf("\n");
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) std::printf("%s%.17g", j ? "," : "", table(i, j));
    std::printf("\n");
  }
}

std::string fmt(const Vector& v) {
  std::ostringstream s;
  s << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  s << ")";
  return s.str();
}

int cmd_simulate(const std::string& config, const std::string& theta_text, std::optional<Seed> seed,
                 const std::string& out) {
  const auto cfg = load_config(config);
  const auto& p = cfg.problem;
  const Vector theta = theta_text.empty() ? reference_theta(p) : parse_point(theta_text);
  const Seed s = seed.value_or(p.observed.seed.value_or(cfg.run.seed));
  io::ensure_directory(out);
  if (p.name == "toy") {
    const auto& c = p.toy.config;
    const auto expect = c.variant == toy::Variant::misspecified ? 1 : c.dim;
    if (theta.size() != static_cast<Eigen::Index>(expect))
      throw ConfigError("theta needs " + std::to_string(expect) + " entries");
    toy::ToyData data;
    if (c.variant == toy::Variant::misspecified && theta_text.empty()) {
      data = toy::observed(c, s);
    } else {
      data = toy::simulate(theta, c, s);
    }
    io::write_toy(out, data);
    const Vector mx = data.x.colwise().mean();
    const Vector dw = (data.w.bottomRows(data.w.rows() - 1) - data.w.topRows(data.w.rows() - 1)).colwise().mean();
    std::printf("X: %ld rows, mean %s\n", static_cast<long>(data.x.rows()), fmt(mx).c_str());
    std::printf("W: %ld rows, mean increment %s\n", static_cast<long>(data.w.rows()), fmt(dw).c_str());
  } else {
    if (theta.size() != mlba::kParams) throw ConfigError("theta needs 6 entries");
    const auto data = mlba::simulate(theta, p.mlba.config, s);
    io::write_rt_ch((fs::path(out) / "rt_ch.csv").string(), data);
    io::write_attributes((fs::path(out) / "attributes.csv").string(), p.mlba.config.attributes);
    const double mean = data.rt.mean();
    Vector prop = Vector::Zero(3);
    for (int c : data.choice) prop[c] += 1.0 / static_cast<double>(data.size());
    std::printf("rt_ch: %ld rows, RT mean %.6g, RT variance %.6g\n", static_cast<long>(data.size()), mean,
                mlba::rt_variance(data));
    std::printf("choice proportions %s\n", fmt(prop).c_str());
  }
  return kOk;
}

int cmd_run(const std::string& config, std::optional<Seed> seed, const std::string& out, bool force) {
  auto cfg = load_config(config);
  if (seed) cfg.run.seed = *seed;
  const auto dir = run_directory(out, cfg);
  if (fs::exists(fs::path(dir) / "run.json") && !force)
    throw IoError("run directory '" + dir + "' exists; pass --force to overwrite");
  io::ensure_directory(dir);
  const auto problem = make_problem(cfg);
  std::fprintf(stderr, "run %s: %s on %s, %d init + %d acquisitions\n", dir.c_str(), to_string(cfg.run.method).c_str(),
               problem->name().c_str(), cfg.run.n_init, cfg.run.n_acquisitions);
  const auto observer = [&](const RunResult& r) {
    write_run(dir, cfg, *problem, r);
    if (!r.trace.empty() && r.status == "running") {
      const auto& rec = r.trace.back();
      const Vector best = r.training.outputs.colwise().minCoeff();
      std::fprintf(stderr, "iter %d/%d best %s %s %.6g (%.2fs)\n", rec.iteration + 1, cfg.run.n_acquisitions,
                   fmt(best).c_str(), cfg.run.outputs() == 2 ? "hypervolume" : "best", rec.progress, rec.seconds);
    } else if (r.trace.empty() && r.status == "running") {
      std::fprintf(stderr, "init design: %zu points from %zu attempts\n", r.training.size(), r.counts.init_attempts);
    }
  };
  RunResult r;
  try {
    r = run(cfg.run, *problem, observer);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "partial manifest retained in %s\n", dir.c_str());
    throw;
  }
  std::fprintf(stderr, "done in %.1fs, %zu simulations, tolerance %s\n", r.seconds, r.counts.total(),
               fmt(r.tolerance.t).c_str());
  std::printf("%s\n", dir.c_str());
  return kOk;
}

struct PosteriorArgs {
  std::string run_dir, mode = "joint", prior, sampler, out;
  std::optional<Seed> seed;
  std::optional<int> chains, steps, burn_in;
};

int cmd_posterior(const PosteriorArgs& a) {
  const auto loaded = load_run(a.run_dir);
  const auto& cfg = loaded.config;
  const auto problem = make_problem(cfg);
  if (hex64(problem->observed_hash()) != loaded.result.observed_hash)
    throw ConfigError("observed data no longer matches the run's hash " + loaded.result.observed_hash);
  PosteriorRecord rec;
  rec.mode = abc::parse_mode(a.mode);
  rec.prior = a.prior.empty() ? cfg.prior : parse_prior(a.prior);
  rec.sampler = cfg.run.sampler;
  if (!a.sampler.empty()) rec.sampler.method = a.sampler;
  if (a.chains) rec.sampler.chains = *a.chains;
  if (a.steps) rec.sampler.steps = *a.steps;
  if (a.burn_in) rec.sampler.burn_in = *a.burn_in;
  RunConfig check = cfg.run;
  check.sampler = rec.sampler;
  check.validate();
  rec.seed = a.seed.value_or(RunSeeds::from_master(cfg.run.seed).sampler);
  const auto lik = loaded.result.likelihood(rec.mode);
  const auto post = posterior_sample(lik, *problem, rec.prior, rec.sampler, rec.seed);
  const auto out = a.out.empty() ? a.run_dir : a.out;
  write_posterior(out, rec, post);
  std::fprintf(stderr, "%s posterior: %ld draws, mean acceptance %.3f\n", a.mode.c_str(),
               static_cast<long>(post.samples.rows()), post.acceptance.mean());
  std::printf("%s\n", (fs::path(out) / ("posterior_" + a.mode + ".csv")).string().c_str());
  return kOk;
}

int cmd_loglik(const std::string& run_dir, const std::string& mode, const std::string& point, const std::string& grid,
               const std::string& out) {
  const auto loaded = load_run(run_dir);
  const auto lik = loaded.result.likelihood(abc::parse_mode(mode));
  const Matrix rows = theta_rows(point, grid, loaded.parameter_names.size());
  Matrix table(rows.rows(), rows.cols() + 1);
  table.leftCols(rows.cols()) = rows;
  parallel_for(static_cast<std::size_t>(rows.rows()), [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    table(r, rows.cols()) = lik(rows.row(r).transpose());
  });
  auto header = theta_header(static_cast<std::size_t>(rows.cols()));
  header.push_back("loglik");
  emit(out, header, table);
  return kOk;
}

int cmd_oracle(const std::string& config, const std::string& point, const std::string& grid, std::optional<Seed> seed,
               const std::string& out) {
  const auto cfg = load_config(config);
  const auto problem = make_problem(cfg);
  const std::size_t p = problem->dim();
  const Vector probe = 0.5 * (problem->bounds().lower + problem->bounds().upper);
  if (!problem->exact_log_likelihood(probe)) throw CapabilityError("problem " + problem->name() + " has no oracle");

  if (!grid.empty() || !point.empty()) {
    const Matrix rows = theta_rows(point, grid, p);
    const bool toy = cfg.problem.name == "toy";
    Matrix table(rows.rows(), rows.cols() + (toy ? 3 : 1));
    table.leftCols(rows.cols()) = rows;
    const auto* tp = dynamic_cast<const ToyProblem*>(problem.get());
    parallel_for(static_cast<std::size_t>(rows.rows()), [&](std::size_t i) {
      const auto r = static_cast<Eigen::Index>(i);
      const Vector th = rows.row(r).transpose();
      table(r, rows.cols()) = *problem->exact_log_likelihood(th);
      if (toy) {
        table(r, rows.cols() + 1) = toy::log_likelihood(th, tp->observed(), tp->settings().config, 1);
        table(r, rows.cols() + 2) = toy::log_likelihood(th, tp->observed(), tp->settings().config, 2);
      }
    });
    auto header = theta_header(p);
    header.push_back("loglik");
    if (toy) {
      header.push_back("loglik_source1");
      header.push_back("loglik_source2");
    }
    emit(out.empty() ? "-" : (fs::path(out) / "oracle_loglik.csv").string(), header, table);
    return kOk;
  }

  if (cfg.problem.name == "toy") {
    const auto* tp = dynamic_cast<const ToyProblem*>(problem.get());
    const auto post = toy::true_posterior(tp->observed(), tp->settings().config);
    Matrix table(static_cast<Eigen::Index>(p), 7);
    for (Eigen::Index j = 0; j < table.rows(); ++j)
      table.row(j) << static_cast<double>(j + 1), post.x_only.mean[j], post.x_only.var[j], post.w_only.mean[j],
          post.w_only.var[j], post.joint.mean[j], post.joint.var[j];
    emit(out.empty() ? "-" : (fs::path(out) / "true_posterior.csv").string(),
         {"coordinate", "source1_mean", "source1_var", "source2_mean", "source2_var", "joint_mean", "joint_var"},
         table);
    return kOk;
  }

  SamplerSettings s;
  s.method = "demc";
  s.chains = 9;
  s.steps = 20000;
  s.burn_in = 18000;
  PosteriorRecord rec;
  rec.sampler = s;
  rec.prior = cfg.prior;
  rec.seed = seed.value_or(RunSeeds::from_master(cfg.run.seed).sampler);
  const auto post = sample_log_likelihood([&](const Vector& t) { return *problem->exact_log_likelihood(t); },
                                          *problem, rec.prior, s, rec.seed);
  if (out.empty()) throw ConfigError("--out is required for oracle posterior sampling");
  write_posterior(out, rec, post);
  const auto from = fs::path(out) / "posterior_joint.csv";
  const auto to = fs::path(out) / "oracle_posterior.csv";
  fs::rename(from, to);
  fs::rename(fs::path(out) / "posterior_joint.json", fs::path(out) / "oracle_posterior.json");
  std::printf("%s\n", to.string().c_str());
  return kOk;
}

int cmd_scale(const std::string& config, std::optional<Seed> seed) {
  auto cfg = load_config(config);
  if (seed) cfg.run.seed = *seed;
  const auto problem = make_problem(cfg);
  const auto sc = run_scaling(cfg.run, *problem);
  json j;
  j["discrepancies"] = problem->discrepancy_names();
  j["v"] = std::vector<double>(sc.v.data(), sc.v.data() + sc.v.size());
  const Vector w = sc.weights();
  j["weights"] = std::vector<double>(w.data(), w.data() + w.size());
  j["source"] = cfg.run.weights ? "explicit" : "auto_mad";
  j["simulations"] = cfg.run.weights ? 0 : cfg.run.n_init;
  std::printf("%s\n", j.dump(2).c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihood-free inference with BOLFI and MOBOLFI"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0: hardware concurrency)");

  std::string config, out, run_out, theta, grid, run_dir, mode = "joint";
  std::optional<Seed> seed;
  bool force = false;
  PosteriorArgs pa;

  auto* sim = app.add_subcommand("simulate", "Write a dataset simulated at theta");
  sim->add_option("--config", config, "Config file")->required();
  sim->add_option("--theta", theta, "Comma-separated parameters (default: generating parameters)");
  sim->add_option("--seed", seed, "Simulation seed (default: observed seed)");
  sim->add_option("--out", out, "Output directory")->required();

  auto* run_cmd = app.add_subcommand("run", "Run inference and write a run directory");
  run_cmd->add_option("--config", config, "Config file")->required();
  run_cmd->add_option("--seed", seed, "Override the master seed");
  run_cmd->add_option("--out", run_out, "Parent directory of run-<hash>")->default_val("runs");
  run_cmd->add_flag("--force", force, "Overwrite an existing run directory");

  auto* post = app.add_subcommand("posterior", "Sample an approximate posterior of a completed run");
  post->add_option("--run", pa.run_dir, "Run directory")->required();
  post->add_option("--mode", pa.mode, "joint, source1, source2, cond_2_given_1, cond_1_given_2");
  post->add_option("--prior", pa.prior, "standard or weak (default: config)");
  post->add_option("--sampler", pa.sampler, "demc or rwm (default: config)");
  post->add_option("--chains", pa.chains, "Chains");
  post->add_option("--steps", pa.steps, "Steps per chain");
  post->add_option("--burn-in", pa.burn_in, "Burn-in steps per chain");
  post->add_option("--seed", pa.seed, "Sampler seed (default: master + 9000)");
  post->add_option("--out", pa.out, "Output directory (default: the run directory)");

  auto* ll = app.add_subcommand("loglik", "Evaluate an approximate log-likelihood");
  ll->add_option("--run", run_dir, "Run directory")->required();
  ll->add_option("--mode", mode, "Likelihood mode");
  ll->add_option("--theta", theta, "Comma-separated parameter point");
  ll->add_option("--grid", grid, "CSV of parameter rows");
  ll->add_option("--out", out, "Output CSV (default: standard output)");

  auto* orc = app.add_subcommand("oracle", "Exact log-likelihood or reference posterior");
  orc->add_option("--config", config, "Config file")->required();
  orc->add_option("--theta", theta, "Comma-separated parameter point");
  orc->add_option("--grid", grid, "CSV of parameter rows");
  orc->add_option("--seed", seed, "Sampler seed (default: master + 9000)");
  orc->add_option("--out", out, "Output directory (default: standard output where possible)");

  auto* scale = app.add_subcommand("scale", "Print the discrepancy scaling V for a config");
  scale->add_option("--config", config, "Config file")->required();
  scale->add_option("--seed", seed, "Override the master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  if (threads > 0) set_max_threads(threads);

  try {
    if (*sim) return cmd_simulate(config, theta, seed, out);
    if (*run_cmd) return cmd_run(config, seed, run_out, force);
    if (*post) return cmd_posterior(pa);
    if (*ll) return cmd_loglik(run_dir, mode, theta, grid, out);
    if (*orc) return cmd_oracle(config, theta, grid, seed, out);
    if (*scale) return cmd_scale(config, seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIo;
  } catch (const IncompleteRunError& e) {
    std::fprintf(stderr, "incomplete run: %s\n", e.what());
    return kIncomplete;
  } catch (const CapabilityError& e) {
    std::fprintf(stderr, "capability error: %s\n", e.what());
    return kCapability;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "engine error: %s\n", e.what());
    return kEngine;
  }
  return kOk;
}
