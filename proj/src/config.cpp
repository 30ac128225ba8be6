#include "kgram/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "kgram/errors.hpp"
#include "kgram/hash.hpp"

#ifndef KGRAM_VERSION
#define KGRAM_VERSION "unknown"
#endif

namespace kgram {

const char* code_version() { return KGRAM_VERSION; }

namespace {

int line_of(const YAML::Node& n) {
  const int line = n.Mark().line;
  return line >= 0 ? line + 1 : 0;
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& where, const char* expected) {
  if (!n.IsScalar()) throw ConfigError(where + ": expected " + expected, line_of(n));
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + ": expected " + expected + ", got '" + n.Scalar() + "'", line_of(n));
  }
}

// A mapping whose keys are checked against the ones actually consumed.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsMap()) throw ConfigError(label() + "must be a mapping", line_of(node_));
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return static_cast<bool>(node_[key]);
  }

  YAML::Node required(const std::string& key) {
    used_.insert(key);
    YAML::Node n = node_[key];
    if (!n) throw ConfigError(label() + "missing required key '" + key + "'", line_of(node_));
    return n;
  }

  YAML::Node optional(const std::string& key) {
    used_.insert(key);
    return node_[key];
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!used_.count(key)) {
        throw ConfigError("unknown key '" + where(key) + "'", line_of(kv.first));
      }
    }
  }

  const YAML::Node& node() const { return node_; }

 private:
  std::string label() const { return path_.empty() ? "" : path_ + ": "; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

double get_double(Section& s, const std::string& key) {
  return scalar<double>(s.required(key), s.where(key), "a number");
}

long get_long(Section& s, const std::string& key) {
  return scalar<long>(s.required(key), s.where(key), "an integer");
}

std::vector<double> number_list(const YAML::Node& n, const std::string& where) {
  if (!n.IsSequence()) throw ConfigError(where + ": expected a list of numbers", line_of(n));
  std::vector<double> out;
  for (const auto& item : n) out.push_back(scalar<double>(item, where, "a number"));
  return out;
}

Eigen::MatrixXd matrix(const YAML::Node& n, const std::string& where) {
  if (!n.IsSequence() || n.size() == 0) {
    throw ConfigError(where + ": expected a non-empty list of rows", line_of(n));
  }
  std::vector<std::vector<double>> rows;
  for (const auto& row : n) rows.push_back(number_list(row, where));
  const size_t cols = rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols || cols == 0) {
      throw ConfigError(where + ": rows must have equal, non-zero length", line_of(n));
    }
    for (size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

PolynomialSystemSpec parse_polynomial(Section s) {
  PolynomialSystemSpec spec;
  spec.n = static_cast<int>(get_long(s, "n"));
  const YAML::Node drift = s.required("drift");
  if (!drift.IsSequence()) throw ConfigError(s.where("drift") + ": expected a list", line_of(drift));
  for (const auto& row : drift) {
    if (!row.IsSequence()) {
      throw ConfigError(s.where("drift") + ": each state needs a list of monomials", line_of(row));
    }
    std::vector<Monomial> terms;
    for (const auto& term : row) {
      Section t(term, s.where("drift[]"));
      Monomial mono;
      mono.coef = get_double(t, "coef");
      for (double p : number_list(t.required("powers"), t.where("powers"))) {
        mono.powers.push_back(static_cast<int>(p));
        if (static_cast<double>(mono.powers.back()) != p) {
          throw ConfigError(t.where("powers") + ": powers must be integers", line_of(term));
        }
      }
      t.finish();
      terms.push_back(std::move(mono));
    }
    spec.drift.push_back(std::move(terms));
  }
  spec.input = matrix(s.required("input"), s.where("input"));
  spec.output = matrix(s.required("output"), s.where("output"));
  s.finish();
  return spec;
}

SystemConfig parse_system(Section s) {
  SystemConfig cfg;
  cfg.builtin = scalar<std::string>(s.required("builtin"), s.where("builtin"), "a name");
  if (cfg.builtin == "polynomial") {
    cfg.polynomial = parse_polynomial(Section(s.required("polynomial"), s.where("polynomial")));
  }
  if (YAML::Node params = s.optional("params")) {
    if (!params.IsMap()) throw ConfigError(s.where("params") + ": expected a mapping", line_of(params));
    for (const auto& kv : params) {
      const std::string key = kv.first.as<std::string>();
      cfg.params[key] = scalar<double>(kv.second, s.where("params." + key), "a number");
    }
  }
  s.finish();
  try {
    (void)cfg.build();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("system: ") + e.what(), line_of(s.node()));
  }
  return cfg;
}

BoxConfig parse_box(Section s) {
  BoxConfig box;
  box.lo = number_list(s.required("lo"), s.where("lo"));
  box.hi = number_list(s.required("hi"), s.where("hi"));
  box.resolution = get_long(s, "resolution");
  if (s.has("seed")) box.seed = scalar<std::uint64_t>(s.required("seed"), s.where("seed"), "an integer");
  s.finish();
  try {
    box.domain().validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string(e.what()), line_of(s.node()));
  }
  return box;
}

}  // namespace

ControlSystem SystemConfig::build() const {
  if (builtin == "polynomial") {
    if (!polynomial) throw InputError("polynomial system needs coefficient tables");
    if (!params.empty()) throw InputError("polynomial systems take no params");
    return make_polynomial_system(*polynomial);
  }
  return make_builtin_system(builtin, params);
}

std::function<double(const Eigen::VectorXd&)> SystemConfig::stationary_density() const {
  if (builtin == "polynomial") return {};
  return builtin_stationary_density(builtin, params);
}

KernelSpec KernelConfig::resolve(const PointSet& samples) const {
  KernelSpec spec;
  spec.family = family;
  spec.degree = degree;
  if (family == KernelFamily::kGaussian || family == KernelFamily::kLaplacian ||
      family == KernelFamily::kExponentialL1) {
    spec.bandwidth = bandwidth ? *bandwidth : median_pairwise_distance(samples);
  }
  spec.validate();
  return spec;
}

EvaluationDomain BoxConfig::domain() const {
  if (lo.size() != hi.size() || lo.empty()) {
    throw InputError("box lo and hi must be non-empty and of equal length");
  }
  return EvaluationDomain(Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size())),
                          Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size())),
                          resolution, seed);
}

std::string ExperimentConfig::hash() const {
  return Fnv1a().add(std::string_view(canonical)).hex();
}

ExperimentConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("parse error: " + e.msg, e.mark.line >= 0 ? e.mark.line + 1 : 0);
  }
  if (!root || root.IsNull()) throw ConfigError("empty configuration");

  ExperimentConfig cfg;
  Section top(root, "");
  if (top.has("name")) cfg.name = scalar<std::string>(top.required("name"), "name", "a string");
  cfg.system = parse_system(Section(top.required("system"), "system"));

  {
    Section g(top.required("grid"), "grid");
    cfg.grid.horizon = get_double(g, "T");
    cfg.grid.steps = get_long(g, "N");
    g.finish();
    try {
      cfg.grid.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("grid: ") + e.what(), line_of(g.node()));
    }
  }

  {
    Section e(top.required("ensembles"), "ensembles");
    if (e.has("impulse")) cfg.ensembles.impulse = scalar<bool>(e.required("impulse"), e.where("impulse"), "true/false");
    if (e.has("release")) cfg.ensembles.release = scalar<bool>(e.required("release"), e.where("release"), "true/false");
    if (e.has("stationary")) {
      YAML::Node node = e.required("stationary");
      if (seed_override) node["seed"] = *seed_override;
      Section s(node, e.where("stationary"));
      StationaryConfig st;
      st.n_paths = get_long(s, "paths");
      st.burn_in = get_double(s, "burn_in");
      if (!s.has("seed")) {
        throw ConfigError(s.where("seed") + ": a seed is required for stochastic simulation",
                          line_of(node));
      }
      st.seed = scalar<std::uint64_t>(s.required("seed"), s.where("seed"), "a non-negative integer");
      if (s.has("samples_per_path")) st.samples_per_path = get_long(s, "samples_per_path");
      if (s.has("stride")) st.stride = get_long(s, "stride");
      s.finish();
      if (st.n_paths < 1 || st.samples_per_path < 1 || st.stride < 1 || !(st.burn_in >= 0.0)) {
        throw ConfigError(s.where("") + " paths, samples_per_path and stride must be positive, burn_in >= 0",
                          line_of(node));
      }
      cfg.ensembles.stationary = st;
    }
    e.finish();
    if (!cfg.ensembles.impulse && !cfg.ensembles.release && !cfg.ensembles.stationary) {
      throw ConfigError("ensembles: nothing to simulate", line_of(e.node()));
    }
  }

  if (top.has("kernel")) {
    Section k(top.required("kernel"), "kernel");
    YAML::Node fam = k.required("family");
    try {
      cfg.kernel.family = kernel_family_from_string(scalar<std::string>(fam, k.where("family"), "a name"));
    } catch (const std::invalid_argument& err) {
      throw ConfigError(err.what(), line_of(fam));
    }
    if (k.has("degree")) cfg.kernel.degree = static_cast<int>(get_long(k, "degree"));
    if (k.has("bandwidth")) {
      YAML::Node bw = k.required("bandwidth");
      if (bw.IsScalar() && bw.Scalar() == "median") {
        cfg.kernel.bandwidth.reset();
      } else {
        cfg.kernel.bandwidth = scalar<double>(bw, k.where("bandwidth"), "a number or 'median'");
      }
    }
    k.finish();
  }

  if (top.has("lambda")) {
    YAML::Node l = top.required("lambda");
    if (l.IsScalar() && l.Scalar() == "schedule") {
      cfg.lambda.schedule = true;
    } else {
      cfg.lambda.value = scalar<double>(l, "lambda", "a positive number or 'schedule'");
      if (!(cfg.lambda.value > 0.0)) throw ConfigError("lambda must be positive", line_of(l));
    }
  } else {
    cfg.lambda.schedule = true;
  }

  if (top.has("scaling")) {
    YAML::Node s = top.required("scaling");
    try {
      cfg.scaling = gramian_scaling_from_string(scalar<std::string>(s, "scaling", "a name"));
    } catch (const std::invalid_argument& err) {
      throw ConfigError(err.what(), line_of(s));
    }
  }
  if (top.has("center")) cfg.center = scalar<bool>(top.required("center"), "center", "true/false");
  if (top.has("fit_source")) {
    YAML::Node f = top.required("fit_source");
    cfg.fit_source = scalar<std::string>(f, "fit_source", "a name");
    if (cfg.fit_source != "stationary" && cfg.fit_source != "impulse") {
      throw ConfigError("fit_source must be 'stationary' or 'impulse'", line_of(f));
    }
  } else if (!cfg.ensembles.stationary) {
    cfg.fit_source = "impulse";
  }
  if ((cfg.fit_source == "stationary" && !cfg.ensembles.stationary) ||
      (cfg.fit_source == "impulse" && !cfg.ensembles.impulse)) {
    throw ConfigError("fit_source '" + cfg.fit_source + "' is not among the simulated ensembles");
  }

  if (top.has("domain")) cfg.domain = parse_box(Section(top.required("domain"), "domain"));
  if (top.has("probes")) {
    YAML::Node node = top.required("probes");
    if (node.IsMap() && node["points"]) {
      Section p(node, "probes");
      cfg.probe_points = matrix(p.required("points"), "probes.points");
      p.finish();
    } else {
      cfg.probes = parse_box(Section(node, "probes"));
    }
  }
  const int n = cfg.system.build().state_dim();
  for (const auto* box : {&cfg.domain, &cfg.probes}) {
    if (*box && static_cast<int>((*box)->lo.size()) != n) {
      throw ConfigError("box dimension does not match the system state dimension " + std::to_string(n));
    }
  }
  if (cfg.probe_points && cfg.probe_points->cols() != n) {
    throw ConfigError("probes.points: rows must have the state dimension " + std::to_string(n));
  }

  if (top.has("density")) {
    Section d(top.required("density"), "density");
    cfg.support_mass = get_double(d, "support_mass");
    d.finish();
    if (!(cfg.support_mass > 0.0 && cfg.support_mass < 1.0)) {
      throw ConfigError("density.support_mass must lie in (0, 1)", line_of(d.node()));
    }
  }
  if (top.has("output")) {
    cfg.output_dir = scalar<std::string>(top.required("output"), "output", "a path");
  }
  top.finish();

  YAML::Emitter out;
  out << root;
  cfg.canonical = out.c_str();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), seed_override);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace kgram
