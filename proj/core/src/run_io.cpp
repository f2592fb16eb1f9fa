#include "mobolfi/run_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mobolfi/csv.hpp"
#include "mobolfi/dataset.hpp"

namespace mobolfi::engine {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json vec(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json mat(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
  return rows;
}

Vector to_vec(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Matrix to_mat(const json& j) {
  if (j.empty()) return {};
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t i = 0; i < j.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = to_vec(j[i]).transpose();
  return m;
}

std::vector<std::string> numbered(const std::string& prefix, std::size_t n) {
  std::vector<std::string> h;
  for (std::size_t i = 0; i < n; ++i) h.push_back(prefix + std::to_string(i + 1));
  return h;
}

void append(std::vector<std::string>& a, const std::vector<std::string>& b) { a.insert(a.end(), b.begin(), b.end()); }

void write_text(const fs::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << text;
    if (!out) throw IoError("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

json surrogate_json(const gp::Surrogate& s) {
  json kernels = json::array();
  for (const auto& k : s.kernels())
    kernels.push_back(
        {{"lengthscales", vec(k.lengthscales)}, {"signal_variance", k.signal_variance}, {"mean_constant", k.mean_constant}});
  return {{"kernels", kernels},
          {"noise", mat(s.noise().cov)},
          {"jitter", s.jitter()},
          {"log_marginal", s.log_marginal_likelihood()},
          {"training_size", s.training().size()}};
}

json summary(const PosteriorResult& post) {
  json coords = json::array();
  for (Eigen::Index j = 0; j < post.samples.cols(); ++j) {
    std::vector<double> c(post.samples.col(j).data(), post.samples.col(j).data() + post.samples.rows());
    const double mean = post.samples.col(j).mean();
    const double var = post.samples.rows() > 1
                           ? (post.samples.col(j).array() - mean).square().sum() / static_cast<double>(post.samples.rows() - 1)
                           : 0.0;
    json q;
    for (double level : {0.025, 0.25, 0.5, 0.75, 0.975}) {
      std::ostringstream key;
      key << level;
      q[key.str()] = abc::quantile(c, level);
    }
    coords.push_back({{"name", "theta_" + std::to_string(j + 1)}, {"mean", mean}, {"variance", var}, {"quantiles", q}});
  }
  return {{"draws", post.samples.rows()}, {"acceptance", vec(post.acceptance)}, {"coordinates", coords}};
}

}  // namespace

std::vector<std::string> theta_header(std::size_t p) { return numbered("theta_", p); }

std::string run_directory(const std::string& out, const ConfigFile& cfg) {
  return (fs::path(out) / ("run-" + config_hash(cfg))).string();
}

void write_run(const std::string& dir, const ConfigFile& cfg, const Problem& problem, const RunResult& r) {
  io::ensure_directory(dir);
  const fs::path d(dir);
  const std::size_t p = problem.dim();
  const auto names = problem.discrepancy_names();
  const auto k = static_cast<std::size_t>(r.training.outputs.cols());

  // training.csv
  std::vector<std::string> th = theta_header(p);
  append(th, numbered("delta_", k));
  for (const auto& n : names) th.push_back("raw_" + n);
  th.push_back("origin");
  const auto n = static_cast<Eigen::Index>(r.training.size());
  Matrix t(n, static_cast<Eigen::Index>(th.size()));
  if (n > 0) {
    t.leftCols(static_cast<Eigen::Index>(p)) = r.training.inputs;
    t.middleCols(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)) = r.training.outputs;
    t.middleCols(static_cast<Eigen::Index>(p + k), static_cast<Eigen::Index>(names.size())) = r.raw;
    for (Eigen::Index i = 0; i < n; ++i) t(i, t.cols() - 1) = r.origin[static_cast<std::size_t>(i)];
  }
  write_csv((d / "training.csv").string(), th, t);

  // acquisitions.csv
  std::vector<std::string> ah{"iteration"};
  append(ah, theta_header(p));
  ah.push_back("acquisition_value");
  append(ah, numbered("delta_", k));
  for (const auto& nm : names) ah.push_back("raw_" + nm);
  for (const char* c : {"full_refit", "log_marginal", "progress", "seconds"}) ah.emplace_back(c);
  Matrix a(static_cast<Eigen::Index>(r.trace.size()), static_cast<Eigen::Index>(ah.size()));
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const auto& rec = r.trace[i];
    Vector row(a.cols());
    row << static_cast<double>(rec.iteration), rec.theta, rec.acquisition_value, rec.objective, rec.raw,
        rec.full_refit ? 1.0 : 0.0, rec.log_marginal, rec.progress, rec.seconds;
    a.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  write_csv((d / "acquisitions.csv").string(), ah, a);

  const auto seeds = RunSeeds::from_master(cfg.run.seed);
  json m;
  m["format"] = "mobolfi-run";
  m["version"] = 1;
  m["status"] = r.status;
  m["complete"] = r.complete;
  m["config_hash"] = config_hash(cfg);
  m["config"] = json::parse(config_echo(cfg));
  m["observed_hash"] = r.observed_hash;
  m["parameter_names"] = problem.parameter_names();
  m["discrepancy_names"] = names;
  m["seeds"] = {{"master", cfg.run.seed},
                {"init", seeds.init},
                {"pilot", seeds.pilot},
                {"acquisition_base", seeds.acquisition_base},
                {"sigma", seeds.sigma},
                {"sampler", seeds.sampler},
                {"calibration", calibration_seed(cfg.run.seed)}};
  m["simulations"] = {{"setup", r.counts.setup},
                      {"pilot", r.counts.pilot},
                      {"init_attempts", r.counts.init_attempts},
                      {"acquisitions", r.counts.acquisitions},
                      {"sigma", r.counts.sigma},
                      {"total", r.counts.total()}};
  m["scaling"] = {{"v", vec(r.scaling.v)}, {"weights", vec(r.scaling.weights())}};
  m["threshold"] = vec(r.threshold);
  m["tolerance"] = {{"q", vec(r.tolerance.q)}, {"t", vec(r.tolerance.t)}};
  m["noise"] = r.noise ? mat(r.noise->cov) : json();
  m["surrogate"] = r.surrogate ? surrogate_json(*r.surrogate) : json();
  m["wall_seconds"] = r.seconds;
  const auto manifest = d / "run.json";
  if (fs::exists(manifest)) {
    // Keep posterior summaries recorded by earlier sampling of the same run.
    try {
      const auto old = read_json(manifest);
      if (old.contains("posteriors") && old.value("config_hash", "") == m["config_hash"]) m["posteriors"] = old["posteriors"];
    } catch (const IoError&) {
    }
  }
  write_text(manifest, m.dump(2) + "\n");
}

LoadedRun load_run(const std::string& dir) {
  const fs::path d(dir);
  if (!fs::is_directory(d)) throw IoError("'" + dir + "' is not a run directory");
  const json m = read_json(d / "run.json");
  if (m.value("format", "") != "mobolfi-run") throw IoError((d / "run.json").string() + ": not a run manifest");
  if (!m.value("complete", false))
    throw IncompleteRunError("run in '" + dir + "' is not complete (status: " + m.value("status", "?") + ")");

  LoadedRun out;
  out.config = parse_config(m.at("config").dump(), "/", (d / "run.json").string());
  out.parameter_names = m.at("parameter_names").get<std::vector<std::string>>();
  auto& r = out.result;
  r.config = out.config.run;
  r.complete = true;
  r.status = m.at("status").get<std::string>();
  r.observed_hash = m.at("observed_hash").get<std::string>();
  r.seconds = m.at("wall_seconds").get<double>();
  r.scaling.v = to_vec(m.at("scaling").at("v"));
  r.threshold = to_vec(m.at("threshold"));
  r.tolerance.q = to_vec(m.at("tolerance").at("q"));
  r.tolerance.t = to_vec(m.at("tolerance").at("t"));
  r.noise = gp::NoiseModel{to_mat(m.at("noise"))};
  const auto& sim = m.at("simulations");
  r.counts.setup = sim.at("setup");
  r.counts.pilot = sim.at("pilot");
  r.counts.init_attempts = sim.at("init_attempts");
  r.counts.acquisitions = sim.at("acquisitions");
  r.counts.sigma = sim.at("sigma");

  const std::size_t p = out.parameter_names.size();
  const auto kraw = m.at("discrepancy_names").size();
  const auto t = read_csv((d / "training.csv").string());
  const auto k = static_cast<Eigen::Index>(t.data.cols()) - static_cast<Eigen::Index>(p + kraw + 1);
  if (k < 1) throw IoError((d / "training.csv").string() + ": unexpected columns");
  r.training.inputs = t.data.leftCols(static_cast<Eigen::Index>(p));
  r.training.outputs = t.data.middleCols(static_cast<Eigen::Index>(p), k);
  r.raw = t.data.middleCols(static_cast<Eigen::Index>(p) + k, static_cast<Eigen::Index>(kraw));
  for (Eigen::Index i = 0; i < t.data.rows(); ++i) r.origin.push_back(static_cast<int>(t.data(i, t.data.cols() - 1)));

  const auto a = read_csv((d / "acquisitions.csv").string());
  for (Eigen::Index i = 0; i < a.data.rows(); ++i) {
    const Vector row = a.data.row(i).transpose();
    AcquisitionRecord rec;
    Eigen::Index c = 0;
    rec.iteration = static_cast<int>(row[c++]);
    rec.theta = row.segment(c, static_cast<Eigen::Index>(p));
    c += static_cast<Eigen::Index>(p);
    rec.acquisition_value = row[c++];
    rec.objective = row.segment(c, k);
    c += k;
    rec.raw = row.segment(c, static_cast<Eigen::Index>(kraw));
    c += static_cast<Eigen::Index>(kraw);
    rec.full_refit = row[c++] != 0.0;
    rec.log_marginal = row[c++];
    rec.progress = row[c++];
    rec.seconds = row[c++];
    r.trace.push_back(std::move(rec));
  }

  const auto& s = m.at("surrogate");
  std::vector<gp::KernelSpec> kernels;
  for (const auto& kj : s.at("kernels"))
    kernels.push_back({to_vec(kj.at("lengthscales")), kj.at("signal_variance").get<double>(),
                       kj.at("mean_constant").get<double>()});
  r.surrogate = std::make_shared<const gp::Surrogate>(
      gp::Surrogate::condition(r.training, std::move(kernels), gp::NoiseModel{to_mat(s.at("noise"))}));
  return out;
}

void write_posterior(const std::string& dir, const PosteriorRecord& rec, const PosteriorResult& post) {
  io::ensure_directory(dir);
  const fs::path d(dir);
  const auto mode = abc::to_string(rec.mode);
  const auto p = static_cast<std::size_t>(post.samples.cols());
  auto header = theta_header(p);
  header.push_back("log_post");
  Matrix table(post.samples.rows(), post.samples.cols() + 1);
  table << post.samples, post.log_post;
  write_csv((d / ("posterior_" + mode + ".csv")).string(), header, table);

  json diag = summary(post);
  diag["mode"] = mode;
  diag["prior"] = to_string(rec.prior);
  diag["seed"] = rec.seed;
  diag["sampler"] = {{"method", rec.sampler.method},
                     {"chains", rec.sampler.chains},
                     {"steps", rec.sampler.steps},
                     {"burn_in", rec.sampler.burn_in},
                     {"rwm_scale", rec.sampler.rwm_scale}};
  diag["chain_means"] = mat(post.chain_means);
  write_text(d / ("posterior_" + mode + ".json"), diag.dump(2) + "\n");

  const auto manifest = d / "run.json";
  if (fs::exists(manifest)) {
    json m = read_json(manifest);
    json brief = diag;
    brief.erase("chain_means");
    m["posteriors"][mode] = brief;
    write_text(manifest, m.dump(2) + "\n");
  }
}

}  // namespace mobolfi::engine
