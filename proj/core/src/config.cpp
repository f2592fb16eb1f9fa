#include "mobolfi/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mobolfi/dataset.hpp"

namespace mobolfi::engine {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Source {
  std::string origin;
  std::string text;

  int line_of(std::size_t offset) const {
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + std::min(offset, text.size()), '\n'));
  }
  /// First line mentioning "key"; 0 when absent.
  int line_of_key(const std::string& key) const {
    const auto pos = text.find("\"" + key + "\"");
    return pos == std::string::npos ? 0 : line_of(pos);
  }
};

class Section {
 public:
  Section(const json* node, std::string path, const Source& src) : node_(node), path_(std::move(path)), src_(src) {
    if (node_ && !node_->is_object()) fail(path_.empty() ? "document" : path_, "must be an object");
  }

  bool has(const std::string& key) const { return node_ && node_->contains(key); }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(has(key) ? &node_->at(key) : nullptr, join(key), src_);
  }

  long long integer(const std::string& key, long long def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_number_integer()) fail(key, "expected an integer");
    return v->get<long long>();
  }
  int count(const std::string& key, int def) { return static_cast<int>(integer(key, def)); }
  Seed seed(const std::string& key, Seed def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
    return v->get<Seed>();
  }
  double number(const std::string& key, double def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_number()) fail(key, "expected a number");
    return v->get<double>();
  }
  bool boolean(const std::string& key, bool def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_boolean()) fail(key, "expected true or false");
    return v->get<bool>();
  }
  std::string string(const std::string& key, const std::string& def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_string()) fail(key, "expected a string");
    return v->get<std::string>();
  }
  std::optional<Vector> vector(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_array() || v->empty()) fail(key, "expected a non-empty array of numbers");
    Vector out(static_cast<Eigen::Index>(v->size()));
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) fail(key, "expected a non-empty array of numbers");
      out[static_cast<Eigen::Index>(i)] = (*v)[i].get<double>();
    }
    return out;
  }
  template <class F>
  auto parsed(const std::string& key, const std::string& def, F parse) {
    const auto s = string(key, def);
    try {
      return parse(s);
    } catch (const std::exception& e) {
      fail(key, e.what());
    }
  }

  /// Rejects keys that were never read.
  void finish() const {
    if (!node_) return;
    for (const auto& [k, _] : node_->items())
      if (!seen_.count(k)) fail(k, "unknown key");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const int line = src_.line_of_key(key);
    std::string where = src_.origin;
    if (line > 0) where += ":" + std::to_string(line);
    throw ConfigError(where + ": field '" + join(key) + "': " + msg);
  }

 private:
  const json* get(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return nullptr;
    const json* v = &node_->at(key);
    return v->is_null() ? nullptr : v;
  }
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* node_;
  std::string path_;
  const Source& src_;
  std::set<std::string> seen_;
};

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_relative()) path = fs::path(base_dir) / path;
  return fs::absolute(path).lexically_normal().string();
}

Matrix builtin_attributes() { return mlba::synthetic_attributes(320, 20240101); }

void parse_problem(Section s, ProblemConfig& p, const std::string& base_dir) {
  p.name = s.string("name", "toy");
  if (p.name == "toy") {
    auto& c = p.toy.config;
    c.variant = s.parsed("variant", "shared", toy::parse_variant);
    const std::size_t def_dim = c.variant == toy::Variant::misspecified ? 1 : 10;
    const auto dim = s.integer("dim", static_cast<long long>(def_dim));
    if (dim < 1) s.fail("dim", "must be positive");
    c.dim = static_cast<std::size_t>(dim);
    c.n_x = s.count("n_x", c.n_x);
    c.n_w = s.count("n_w", c.n_w);
    c.sigma = s.number("sigma", c.sigma);
    c.horizon = s.number("horizon", c.horizon);
    c.theta_x = s.number("theta_x", c.theta_x);
    c.theta_w = s.number("theta_w", c.theta_w);
    p.toy.bound = s.number("prior_bound", p.toy.bound);
    if (!(p.toy.bound > 0.0)) s.fail("prior_bound", "must be positive");
    try {
      c.validate();
    } catch (const std::exception& e) {
      s.fail("variant", e.what());
    }
  } else if (p.name == "mlba") {
    auto& m = p.mlba;
    p.attributes_path = resolve(base_dir, s.string("attributes", ""));
    m.config.A = s.number("A", m.config.A);
    m.config.s = s.number("s", m.config.s);
    m.config.tau0 = s.number("tau0", m.config.tau0);
    m.config.delta1 = s.number("delta1", m.config.delta1);
    m.config.lambda2 = s.number("lambda2", m.config.lambda2);
    m.config.I0 = s.number("I0", m.config.I0);
    m.config.beta3 = s.number("beta3", m.config.beta3);
    m.replicates = s.count("replicates", m.replicates);
    if (m.replicates < 0) s.fail("replicates", "must be >= 0");
    m.variance_ratio = s.number("variance_ratio", m.variance_ratio);
    m.aux_calibration = s.count("aux_calibration", m.aux_calibration);
    if (m.aux_calibration < 10) s.fail("aux_calibration", "must be >= 10");
    p.theta_true = s.vector("theta_true").value_or(mlba::theta_true());
    if (p.theta_true.size() != mlba::kParams) s.fail("theta_true", "expected 6 entries");
    m.config.attributes = p.attributes_path.empty() ? builtin_attributes() : io::read_attributes(p.attributes_path);
    try {
      m.config.validate();
    } catch (const std::exception& e) {
      s.fail(p.attributes_path.empty() ? "name" : "attributes", e.what());
    }
  } else {
    s.fail("name", "expected toy or mlba");
  }

  auto o = s.child("observed");
  if (o.has("seed")) p.observed.seed = o.seed("seed", 0);
  if (p.name == "toy") {
    p.observed.x_path = resolve(base_dir, o.string("x", ""));
    p.observed.w_path = resolve(base_dir, o.string("w", ""));
    const bool files = !p.observed.x_path.empty() || !p.observed.w_path.empty();
    if (files && (p.observed.x_path.empty() || p.observed.w_path.empty()))
      o.fail("x", "toy observed data needs both x and w");
    if (files == p.observed.seed.has_value()) o.fail("seed", "give either a seed or data files");
  } else {
    p.observed.rt_ch_path = resolve(base_dir, o.string("rt_ch", ""));
    if (p.observed.rt_ch_path.empty() == !p.observed.seed.has_value())
      o.fail("seed", "give either a seed or an rt_ch file");
  }
  o.finish();
  s.finish();
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const ConfigFile& c) {
  const auto& r = c.run;
  json j;
  json p;
  p["name"] = c.problem.name;
  if (c.problem.name == "toy") {
    const auto& t = c.problem.toy.config;
    p["variant"] = toy::to_string(t.variant);
    p["dim"] = t.dim;
    p["n_x"] = t.n_x;
    p["n_w"] = t.n_w;
    p["sigma"] = t.sigma;
    p["horizon"] = t.horizon;
    p["theta_x"] = t.theta_x;
    p["theta_w"] = t.theta_w;
    p["prior_bound"] = c.problem.toy.bound;
  } else {
    const auto& m = c.problem.mlba;
    if (!c.problem.attributes_path.empty()) p["attributes"] = c.problem.attributes_path;
    p["A"] = m.config.A;
    p["s"] = m.config.s;
    p["tau0"] = m.config.tau0;
    p["delta1"] = m.config.delta1;
    p["lambda2"] = m.config.lambda2;
    p["I0"] = m.config.I0;
    p["beta3"] = m.config.beta3;
    p["replicates"] = m.replicates;
    p["variance_ratio"] = m.variance_ratio;
    p["aux_calibration"] = m.aux_calibration;
    p["theta_true"] = vector_json(c.problem.theta_true);
  }
  json o = json::object();
  const auto& ob = c.problem.observed;
  if (ob.seed) o["seed"] = *ob.seed;
  if (!ob.x_path.empty()) o["x"] = ob.x_path;
  if (!ob.w_path.empty()) o["w"] = ob.w_path;
  if (!ob.rt_ch_path.empty()) o["rt_ch"] = ob.rt_ch_path;
  p["observed"] = o;
  j["problem"] = p;

  j["method"] = to_string(r.method);
  j["seed"] = r.seed;
  j["n_init"] = r.n_init;
  j["n_acquisitions"] = r.n_acquisitions;
  j["q_tolerance"] = vector_json(r.q_tolerance);
  j["n_sigma"] = r.n_sigma;
  j["filter"] = {{"enabled", r.filter}, {"quantile", r.filter_quantile}};
  if (r.weights)
    j["scaling"] = {{"kind", "explicit"}, {"weights", vector_json(*r.weights)}};
  else
    j["scaling"] = {{"kind", "auto_mad"}};
  const auto& a = r.acquisition;
  j["acquisition"] = {{"restarts", a.restarts},
                      {"candidates", a.candidates},
                      {"polish_rounds", a.polish_rounds},
                      {"mc_samples", a.mc_samples},
                      {"eta_variant", !a.eta_variant                               ? "auto"
                                      : *a.eta_variant == acq::EtaVariant::reduced ? "reduced"
                                                                                   : "standard"},
                      {"eps_eta", a.eps_eta}};
  const auto& g = r.surrogate;
  j["surrogate"] = {{"starts", g.starts}, {"refit_every", g.refit_every}, {"warm_evaluations", g.warm_evaluations}};
  const auto& sm = r.sampler;
  j["sampler"] = {{"method", sm.method},   {"chains", sm.chains},       {"steps", sm.steps},
                  {"burn_in", sm.burn_in}, {"rwm_scale", sm.rwm_scale}, {"prior", to_string(c.prior)}};
  return j;
}

std::uint64_t fnv1a_bytes(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

ConfigFile parse_config(const std::string& text, const std::string& base_dir, const std::string& origin) {
  Source src{origin, text};
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ":" + std::to_string(src.line_of(e.byte > 0 ? e.byte - 1 : 0)) +
                      ": malformed JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(origin + ": top level must be an object");

  ConfigFile c;
  c.source = origin;
  Section root(&doc, "", src);
  parse_problem(root.child("problem"), c.problem, base_dir);

  auto& r = c.run;
  r.method = root.parsed("method", "mobolfi", parse_method);
  if (r.method == Method::mobolfi_aux && c.problem.name != "mlba")
    root.fail("method", "mobolfi_aux needs the mlba problem");
  if (r.method == Method::mobolfi_aux) c.problem.mlba.choice = ChoiceDiscrepancy::auxiliary;
  r.seed = root.seed("seed", r.seed);
  r.n_init = root.count("n_init", r.n_init);
  r.n_acquisitions = root.count("n_acquisitions", r.n_acquisitions);
  r.q_tolerance = root.vector("q_tolerance").value_or(Vector::Constant(static_cast<Eigen::Index>(r.outputs()), 0.05));
  r.n_sigma = root.count("n_sigma", r.n_sigma);

  auto f = root.child("filter");
  r.filter = f.boolean("enabled", r.filter);
  r.filter_quantile = f.number("quantile", r.filter_quantile);
  f.finish();

  auto sc = root.child("scaling");
  const auto kind = sc.string("kind", "auto_mad");
  if (kind == "explicit") {
    r.weights = sc.vector("weights");
    if (!r.weights) sc.fail("weights", "required for explicit scaling");
  } else if (kind != "auto_mad") {
    sc.fail("kind", "expected auto_mad or explicit");
  }
  sc.finish();

  auto a = root.child("acquisition");
  r.acquisition.restarts = a.count("restarts", r.acquisition.restarts);
  r.acquisition.candidates = a.count("candidates", r.acquisition.candidates);
  r.acquisition.polish_rounds = a.count("polish_rounds", r.acquisition.polish_rounds);
  r.acquisition.mc_samples = a.count("mc_samples", r.acquisition.mc_samples);
  const auto eta = a.string("eta_variant", "auto");
  if (eta == "standard")
    r.acquisition.eta_variant = acq::EtaVariant::standard;
  else if (eta == "reduced")
    r.acquisition.eta_variant = acq::EtaVariant::reduced;
  else if (eta != "auto")
    a.fail("eta_variant", "expected auto, standard or reduced");
  r.acquisition.eps_eta = a.number("eps_eta", r.acquisition.eps_eta);
  a.finish();

  auto g = root.child("surrogate");
  r.surrogate.starts = g.count("starts", r.surrogate.starts);
  r.surrogate.refit_every = g.count("refit_every", r.surrogate.refit_every);
  r.surrogate.warm_evaluations = g.count("warm_evaluations", r.surrogate.warm_evaluations);
  g.finish();

  auto sm = root.child("sampler");
  r.sampler.method = sm.string("method", r.sampler.method);
  r.sampler.chains = sm.count("chains", r.sampler.chains);
  r.sampler.steps = sm.count("steps", r.sampler.steps);
  r.sampler.burn_in = sm.count("burn_in", r.sampler.burn_in);
  r.sampler.rwm_scale = sm.number("rwm_scale", r.sampler.rwm_scale);
  c.prior = sm.parsed("prior", "standard", parse_prior);
  sm.finish();

  root.finish();
  try {
    r.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = fs::absolute(fs::path(path)).parent_path().string();
  return parse_config(ss.str(), dir, path);
}

std::string config_echo(const ConfigFile& cfg, int indent) { return to_json(cfg).dump(indent); }

std::string config_hash(const ConfigFile& cfg) { return hex64(fnv1a_bytes(config_echo(cfg))); }

Vector reference_theta(const ProblemConfig& p) {
  if (p.name == "mlba") return p.theta_true;
  const auto& c = p.toy.config;
  if (c.variant == toy::Variant::misspecified) return Vector::Constant(static_cast<Eigen::Index>(c.dim), c.theta_x);
  return toy::theta_true(c.dim);
}

std::unique_ptr<Problem> make_problem(const ConfigFile& cfg) {
  const auto& p = cfg.problem;
  const auto& ob = p.observed;
  if (p.name == "toy") {
    auto data = ob.seed ? toy::observed(p.toy.config, *ob.seed) : io::read_toy(ob.x_path, ob.w_path, p.toy.config);
    return std::make_unique<ToyProblem>(p.toy, std::move(data));
  }
  auto data = ob.seed ? mlba::simulate(p.theta_true, p.mlba.config, *ob.seed) : io::read_rt_ch(ob.rt_ch_path);
  if (data.size() != p.mlba.config.n_obs())
    throw ConfigError("observed data has " + std::to_string(data.size()) + " rows but the attribute matrix has " +
                      std::to_string(p.mlba.config.n_obs()));
  return std::make_unique<MlbaProblem>(p.mlba, std::move(data), calibration_seed(cfg.run.seed));
}

}  // namespace mobolfi::engine
