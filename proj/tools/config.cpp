#include "config.hpp"

#include "partly/format.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#ifndef PARTLY_VERSION
#define PARTLY_VERSION "0.0.0"
#endif

namespace partly::cli {

namespace {

namespace fs = std::filesystem;

struct Ctx {
  std::string source;
  std::string base_dir;
};

[[noreturn]] void fail(const Ctx& ctx, const YAML::Node& node, const std::string& field,
                       const std::string& message) {
  std::ostringstream out;
  out << ctx.source << ": " << field << ": " << message;
  if (node.IsDefined() && !node.Mark().is_null()) out << " (line " << node.Mark().line + 1 << ")";
  throw InputError(out.str());
}

void check_keys(const Ctx& ctx, const YAML::Node& node, const std::string& field,
                const std::set<std::string>& allowed) {
  if (!node.IsDefined() || node.IsNull()) return;
  if (!node.IsMap()) fail(ctx, node, field, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      fail(ctx, kv.first, field.empty() ? key : field + "." + key, "unknown key");
    }
  }
}

template <class T>
T scalar(const Ctx& ctx, const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) fail(ctx, node, field, "expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(ctx, node, field, "cannot parse '" + node.Scalar() + "'");
  }
}

template <class T>
void read(const Ctx& ctx, const YAML::Node& parent, const std::string& key,
          const std::string& section, T& target) {
  const YAML::Node node = parent[key];
  if (node.IsDefined() && !node.IsNull()) target = scalar<T>(ctx, node, section + "." + key);
}

template <class T>
void read(const Ctx& ctx, const YAML::Node& parent, const std::string& key,
          const std::string& section, std::optional<T>& target) {
  const YAML::Node node = parent[key];
  if (node.IsDefined() && !node.IsNull()) target = scalar<T>(ctx, node, section + "." + key);
}

template <class T>
void read(const Ctx& ctx, const YAML::Node& parent, const std::string& key,
          const std::string& section, std::vector<T>& target) {
  const YAML::Node node = parent[key];
  if (!node.IsDefined() || node.IsNull()) return;
  const std::string field = section + "." + key;
  if (!node.IsSequence()) fail(ctx, node, field, "expected a list");
  target.clear();
  for (std::size_t i = 0; i < node.size(); ++i) {
    target.push_back(scalar<T>(ctx, node[i], field + "[" + std::to_string(i) + "]"));
  }
}

std::string resolve(const Ctx& ctx, const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_relative() && !ctx.base_dir.empty()) p = fs::path(ctx.base_dir) / p;
  return fs::absolute(p).lexically_normal().string();
}

void one_of(const Ctx& ctx, const YAML::Node& node, const std::string& field,
            const std::string& value, const std::set<std::string>& allowed) {
  if (allowed.count(value)) return;
  std::string list;
  for (const auto& a : allowed) list += (list.empty() ? "" : "|") + a;
  fail(ctx, node, field, "expected one of " + list + ", got '" + value + "'");
}

ColumnLaw parse_column(const Ctx& ctx, const YAML::Node& node, const std::string& field,
                       const std::vector<std::string>& earlier, std::string& name) {
  check_keys(ctx, node, field, {"name", "law", "a", "b", "value", "plus"});
  read(ctx, node, "name", field, name);
  std::string law = "uniform";
  read(ctx, node, "law", field, law);
  one_of(ctx, node["law"], field + ".law", law, {"uniform", "constant"});
  ColumnLaw out;
  if (law == "constant") {
    double v = 1.0;
    read(ctx, node, "value", field, v);
    out = ColumnLaw::constant(v);
  } else {
    double a = 0.0, b = 1.0;
    read(ctx, node, "a", field, a);
    read(ctx, node, "b", field, b);
    out = ColumnLaw::uniform(a, b);
  }
  const YAML::Node plus = node["plus"];
  if (plus.IsDefined() && !plus.IsNull()) {
    if (!plus.IsSequence()) fail(ctx, plus, field + ".plus", "expected a list");
    for (std::size_t i = 0; i < plus.size(); ++i) {
      const std::string pf = field + ".plus[" + std::to_string(i) + "]";
      check_keys(ctx, plus[i], pf, {"column", "coef"});
      std::string column;
      double coef = 0.0;
      read(ctx, plus[i], "column", pf, column);
      read(ctx, plus[i], "coef", pf, coef);
      auto it = std::find(earlier.begin(), earlier.end(), column);
      if (it == earlier.end()) fail(ctx, plus[i], pf + ".column", "must name an earlier column");
      out = out.with(static_cast<Index>(it - earlier.begin()), coef);
    }
  }
  return out;
}

CensorLaw parse_censor(const Ctx& ctx, const YAML::Node& node, const std::string& field) {
  if (!node.IsDefined() || node.IsNull()) return CensorLaw::none();
  check_keys(ctx, node, field, {"law", "a", "b", "at", "rate"});
  std::string law = "none";
  read(ctx, node, "law", field, law);
  one_of(ctx, node["law"], field + ".law", law, {"none", "uniform", "degenerate", "exponential"});
  if (law == "uniform") {
    double a = 0.0, b = 1.0;
    read(ctx, node, "a", field, a);
    read(ctx, node, "b", field, b);
    return CensorLaw::uniform(a, b);
  }
  if (law == "degenerate") {
    double at = 1.0;
    read(ctx, node, "at", field, at);
    return CensorLaw::degenerate(at);
  }
  if (law == "exponential") {
    double rate = 1.0;
    read(ctx, node, "rate", field, rate);
    return CensorLaw::exponential(rate);
  }
  return CensorLaw::none();
}

Scenario parse_scenario_ctx(const Ctx& ctx, const YAML::Node& node) {
  const std::string field = "scenario";
  check_keys(ctx, node, field, {"name", "n", "p", "tau", "covariates", "truth", "censoring"});
  Scenario sc;
  read(ctx, node, "name", field, sc.name);
  read(ctx, node, "n", field, sc.n);
  read(ctx, node, "p", field, sc.p);
  read(ctx, node, "tau", field, sc.tau);
  const YAML::Node cov = node["covariates"];
  if (!cov.IsSequence() || cov.size() == 0) {
    fail(ctx, node, field + ".covariates", "expected a nonempty list");
  }
  for (std::size_t j = 0; j < cov.size(); ++j) {
    std::string name = "z" + std::to_string(j + 1);
    sc.covariates.push_back(parse_column(ctx, cov[j], field + ".covariates[" + std::to_string(j) + "]",
                                         sc.names, name));
    sc.names.push_back(name);
  }
  const YAML::Node truth = node["truth"];
  if (!truth.IsSequence() || truth.size() != cov.size()) {
    fail(ctx, node, field + ".truth", "expected one entry per covariate");
  }
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const std::string tf = field + ".truth[" + std::to_string(j) + "]";
    check_keys(ctx, truth[j], tf, {"family", "theta"});
    std::string family;
    std::vector<double> theta;
    read(ctx, truth[j], "family", tf, family);
    read(ctx, truth[j], "theta", tf, theta);
    HazardFamily f;
    try {
      f = HazardFamily::from_name(family);
    } catch (const InputError& e) {
      fail(ctx, truth[j]["family"], tf + ".family", e.what());
    }
    if (static_cast<Index>(theta.size()) != f.size()) {
      fail(ctx, truth[j], tf + ".theta",
           "family " + family + " needs " + std::to_string(f.size()) + " parameters");
    }
    sc.truth.families.push_back(f);
    sc.truth.theta.push_back(Eigen::Map<const Vector>(theta.data(), f.size()));
  }
  sc.censor = parse_censor(ctx, node["censoring"], field + ".censoring");
  try {
    validate_scenario(sc);
  } catch (const InputError& e) {
    fail(ctx, node, field, e.what());
  } catch (const DomainError& e) {
    fail(ctx, node, field, e.what());
  }
  return sc;
}

SimulateConfig parse_simulate(const Ctx& ctx, const YAML::Node& node) {
  SimulateConfig s;
  if (!node.IsDefined() || node.IsNull()) return s;
  const std::string f = "simulate";
  check_keys(ctx, node, f, {"reps", "estimators", "times", "fit_tau", "vn", "se", "level"});
  read(ctx, node, "reps", f, s.reps);
  read(ctx, node, "estimators", f, s.estimators);
  read(ctx, node, "times", f, s.times);
  read(ctx, node, "fit_tau", f, s.fit_tau);
  read(ctx, node, "vn", f, s.vn);
  read(ctx, node, "se", f, s.se);
  read(ctx, node, "level", f, s.level);
  for (const auto& e : s.estimators) one_of(ctx, node["estimators"], f + ".estimators", e, {"aalen", "mle", "partly"});
  one_of(ctx, node["vn"], f + ".vn", s.vn, {"plain", "optimal"});
  one_of(ctx, node["se"], f + ".se", s.se, {"plugin", "monte_carlo"});
  return s;
}

void emit_list(YAML::Emitter& e, const std::vector<double>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (double x : v) e << format_double(x);
  e << YAML::EndSeq;
}

template <class T>
void emit_plain_list(YAML::Emitter& e, const std::vector<T>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (const auto& x : v) e << x;
  e << YAML::EndSeq;
}

void emit_scenario(YAML::Emitter& e, const Scenario& sc) {
  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << sc.name;
  e << YAML::Key << "n" << YAML::Value << sc.n;
  e << YAML::Key << "p" << YAML::Value << sc.p;
  if (std::isfinite(sc.tau)) e << YAML::Key << "tau" << YAML::Value << format_double(sc.tau);
  e << YAML::Key << "covariates" << YAML::Value << YAML::BeginSeq;
  for (std::size_t j = 0; j < sc.covariates.size(); ++j) {
    const ColumnLaw& c = sc.covariates[j];
    e << YAML::Flow << YAML::BeginMap;
    e << YAML::Key << "name" << YAML::Value
      << (j < sc.names.size() ? sc.names[j] : "z" + std::to_string(j + 1));
    if (c.kind == ColumnLaw::Kind::constant) {
      e << YAML::Key << "law" << YAML::Value << "constant";
      e << YAML::Key << "value" << YAML::Value << format_double(c.a);
    } else {
      e << YAML::Key << "law" << YAML::Value << "uniform";
      e << YAML::Key << "a" << YAML::Value << format_double(c.a);
      e << YAML::Key << "b" << YAML::Value << format_double(c.b);
    }
    if (!c.plus.empty()) {
      e << YAML::Key << "plus" << YAML::Value << YAML::BeginSeq;
      for (const auto& [k, coef] : c.plus) {
        e << YAML::BeginMap << YAML::Key << "column" << YAML::Value
          << sc.names[static_cast<std::size_t>(k)] << YAML::Key << "coef" << YAML::Value
          << format_double(coef) << YAML::EndMap;
      }
      e << YAML::EndSeq;
    }
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "truth" << YAML::Value << YAML::BeginSeq;
  for (std::size_t j = 0; j < sc.truth.families.size(); ++j) {
    const Vector& th = sc.truth.theta[j];
    e << YAML::Flow << YAML::BeginMap;
    e << YAML::Key << "family" << YAML::Value << sc.truth.families[j].name();
    e << YAML::Key << "theta" << YAML::Value;
    emit_list(e, std::vector<double>(th.data(), th.data() + th.size()));
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "censoring" << YAML::Value << YAML::Flow << YAML::BeginMap;
  switch (sc.censor.kind) {
    case CensorLaw::Kind::none:
      e << YAML::Key << "law" << YAML::Value << "none";
      break;
    case CensorLaw::Kind::uniform:
      e << YAML::Key << "law" << YAML::Value << "uniform" << YAML::Key << "a" << YAML::Value
        << format_double(sc.censor.a) << YAML::Key << "b" << YAML::Value << format_double(sc.censor.b);
      break;
    case CensorLaw::Kind::degenerate:
      e << YAML::Key << "law" << YAML::Value << "degenerate" << YAML::Key << "at" << YAML::Value
        << format_double(sc.censor.a);
      break;
    case CensorLaw::Kind::exponential:
      e << YAML::Key << "law" << YAML::Value << "exponential" << YAML::Key << "rate"
        << YAML::Value << format_double(sc.censor.a);
      break;
  }
  e << YAML::EndMap;
  e << YAML::EndMap;
}

void emit_simulate(YAML::Emitter& e, const SimulateConfig& s) {
  e << YAML::BeginMap;
  e << YAML::Key << "reps" << YAML::Value << s.reps;
  e << YAML::Key << "estimators" << YAML::Value;
  emit_plain_list(e, s.estimators);
  e << YAML::Key << "times" << YAML::Value;
  emit_list(e, s.times);
  if (s.fit_tau) e << YAML::Key << "fit_tau" << YAML::Value << format_double(*s.fit_tau);
  e << YAML::Key << "vn" << YAML::Value << s.vn;
  e << YAML::Key << "se" << YAML::Value << s.se;
  e << YAML::Key << "level" << YAML::Value << format_double(s.level);
  e << YAML::EndMap;
}

struct SetupFlags {
  bool r = false, p = false, q = false;
};

void set_setup_value(GammaSetup& gs, SetupFlags& flags, const std::string& key,
                     const std::string& value) {
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
  } catch (const std::exception&) {
    throw InputError("setup value for " + key + " is not a number: '" + value + "'");
  }
  auto count = [&](double x) {
    if (x < 0.0 || x != std::floor(x)) throw InputError("setup " + key + " must be a whole number");
    return static_cast<Index>(x);
  };
  if (key == "c") gs.c = v;
  else if (key == "gamma") gs.gamma = v;
  else if (key == "alpha") gs.alpha = v;
  else if (key == "k") gs.k = v;
  else if (key == "r") gs.r = count(v), flags.r = true;
  else if (key == "p") gs.p = count(v), flags.p = true;
  else if (key == "q") gs.q = count(v), flags.q = true;
  else throw InputError("unknown setup key '" + key + "' (expected c, gamma, alpha, r, p, q, k)");
}

void settle_dimensions(GammaSetup& gs, const SetupFlags& f) {
  if (f.r && !f.p && !f.q) {
    gs.p = std::min<Index>(1, gs.r);
    gs.q = gs.r - gs.p;
  } else if (f.r && f.p && !f.q) {
    gs.q = gs.r - gs.p;
  } else if (f.r && !f.p && f.q) {
    gs.p = gs.r - gs.q;
  } else if (!f.r) {
    gs.r = gs.p + gs.q;
  }
}

EfficiencyConfig parse_efficiency(const Ctx& ctx, const YAML::Node& node) {
  EfficiencyConfig ec;
  if (!node.IsDefined() || node.IsNull()) return ec;
  const std::string f = "efficiency";
  check_keys(ctx, node, f,
             {"setup", "curve", "u_grid", "printed", "sieve", "K_grid", "family", "theta", "tau"});
  const YAML::Node setup = node["setup"];
  if (setup.IsDefined() && !setup.IsNull()) {
    check_keys(ctx, setup, f + ".setup", {"c", "gamma", "alpha", "r", "p", "q", "k"});
    SetupFlags flags;
    for (const auto& kv : setup) {
      try {
        set_setup_value(ec.setup, flags, kv.first.as<std::string>(),
                        scalar<std::string>(ctx, kv.second, f + ".setup"));
      } catch (const InputError& e) {
        fail(ctx, kv.second, f + ".setup." + kv.first.as<std::string>(), e.what());
      }
    }
    settle_dimensions(ec.setup, flags);
  }
  read(ctx, node, "curve", f, ec.curve);
  one_of(ctx, node["curve"], f + ".curve", ec.curve, {"are", "param", "backfit"});
  read(ctx, node, "u_grid", f, ec.u_grid);
  read(ctx, node, "printed", f, ec.printed);
  read(ctx, node, "sieve", f, ec.sieve);
  read(ctx, node, "K_grid", f, ec.K_grid);
  read(ctx, node, "family", f, ec.family);
  read(ctx, node, "theta", f, ec.theta);
  read(ctx, node, "tau", f, ec.tau);
  return ec;
}

}  // namespace

void apply_setup_tokens(GammaSetup& setup, const std::vector<std::string>& tokens) {
  SetupFlags flags;
  for (const auto& token : tokens) {
    std::stringstream ss(token);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw InputError("setup entries look like key=value, got '" + item + "'");
      set_setup_value(setup, flags, item.substr(0, eq), item.substr(eq + 1));
    }
  }
  settle_dimensions(setup, flags);
}

RunConfig parse_config(const YAML::Node& root, const std::string& base_dir,
                       const std::string& source) {
  const Ctx ctx{source, base_dir};
  RunConfig c;
  if (!root.IsDefined() || root.IsNull()) return c;
  check_keys(ctx, root, "",
             {"command", "version", "versions", "artifacts", "dataset", "model", "fit", "gof",
              "scenario", "simulate", "efficiency", "seed", "threads", "out"});
  read(ctx, root, "command", "", c.command);

  const YAML::Node ds = root["dataset"];
  check_keys(ctx, ds, "dataset", {"path", "time", "status", "parametric", "nonparametric"});
  if (ds.IsDefined() && !ds.IsNull()) {
    read(ctx, ds, "path", "dataset", c.dataset.path);
    c.dataset.path = resolve(ctx, c.dataset.path);
    read(ctx, ds, "time", "dataset", c.dataset.time);
    read(ctx, ds, "status", "dataset", c.dataset.status);
    read(ctx, ds, "parametric", "dataset", c.dataset.parametric);
    read(ctx, ds, "nonparametric", "dataset", c.dataset.nonparametric);
  }
  const YAML::Node model = root["model"];
  check_keys(ctx, model, "model", {"families", "theta_init"});
  if (model.IsDefined() && !model.IsNull()) {
    read(ctx, model, "families", "model", c.model.families);
    read(ctx, model, "theta_init", "model", c.model.theta_init);
  }
  const YAML::Node fit = root["fit"];
  check_keys(ctx, fit, "fit",
             {"mode", "weights", "vn", "tau", "bandwidth", "xi_times", "survival_z", "survival_times"});
  if (fit.IsDefined() && !fit.IsNull()) {
    read(ctx, fit, "mode", "fit", c.fit.mode);
    read(ctx, fit, "weights", "fit", c.fit.weights);
    read(ctx, fit, "vn", "fit", c.fit.vn);
    read(ctx, fit, "tau", "fit", c.fit.tau);
    read(ctx, fit, "bandwidth", "fit", c.fit.bandwidth);
    read(ctx, fit, "xi_times", "fit", c.fit.xi_times);
    read(ctx, fit, "survival_z", "fit", c.fit.survival_z);
    read(ctx, fit, "survival_times", "fit", c.fit.survival_times);
    one_of(ctx, fit["mode"], "fit.mode", c.fit.mode, {"aalen", "mle", "partly"});
    one_of(ctx, fit["weights"], "fit.weights", c.fit.weights, {"plain", "optimal"});
    one_of(ctx, fit["vn"], "fit.vn", c.fit.vn, {"plain", "optimal"});
  }
  const YAML::Node gof = root["gof"];
  check_keys(ctx, gof, "gof",
             {"components", "test", "windows", "boundaries", "method", "B", "weight", "simultaneous"});
  if (gof.IsDefined() && !gof.IsNull()) {
    read(ctx, gof, "components", "gof", c.gof.components);
    read(ctx, gof, "test", "gof", c.gof.test);
    read(ctx, gof, "windows", "gof", c.gof.windows);
    read(ctx, gof, "boundaries", "gof", c.gof.boundaries);
    read(ctx, gof, "method", "gof", c.gof.method);
    read(ctx, gof, "B", "gof", c.gof.B);
    read(ctx, gof, "weight", "gof", c.gof.weight);
    read(ctx, gof, "simultaneous", "gof", c.gof.simultaneous);
    one_of(ctx, gof["test"], "gof.test", c.gof.test, {"chisq", "ks", "both"});
    one_of(ctx, gof["method"], "gof.method", c.gof.method, {"gaussian", "bootstrap"});
    one_of(ctx, gof["weight"], "gof.weight", c.gof.weight, {"unit", "estimating"});
  }
  const YAML::Node sc = root["scenario"];
  if (sc.IsDefined() && !sc.IsNull()) {
    if (sc.IsScalar()) {
      c.scenario = load_scenario(resolve(ctx, sc.as<std::string>()));
    } else {
      c.scenario = parse_scenario_ctx(ctx, sc);
    }
  }
  c.simulate = parse_simulate(ctx, root["simulate"]);
  c.efficiency = parse_efficiency(ctx, root["efficiency"]);
  std::optional<std::uint64_t> seed;
  read(ctx, root, "seed", "", seed);
  c.seed = seed;
  read(ctx, root, "threads", "", c.threads);
  read(ctx, root, "out", "", c.out);
  if (root["out"].IsDefined()) c.out = resolve(ctx, c.out);
  return c;
}

RunConfig load_config(const std::string& path) {
  if (!fs::exists(path)) throw InputError("config file not found: " + path);
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return parse_config(root, fs::absolute(path).parent_path().string(), path);
}

Scenario parse_scenario(const YAML::Node& node, const std::string& source) {
  return parse_scenario_ctx(Ctx{source, ""}, node);
}

namespace {

YAML::Node load_yaml(const std::string& path) {
  if (!fs::exists(path)) throw InputError("file not found: " + path);
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  const YAML::Node root = load_yaml(path);
  const Ctx ctx{path, fs::absolute(path).parent_path().string()};
  // A scenario file holds a `scenario` section and optionally `simulate`.
  if (root["scenario"].IsDefined()) return parse_scenario_ctx(ctx, root["scenario"]);
  return parse_scenario_ctx(ctx, root);
}

SimulateConfig load_simulate_section(const std::string& path) {
  const YAML::Node root = load_yaml(path);
  return parse_simulate(Ctx{path, ""}, root["simulate"]);
}

void validate(const RunConfig& c) {
  if (c.threads < 1) throw InputError("threads must be at least 1");
  if (c.command == "fit" || c.command == "gof") {
    if (c.dataset.path.empty()) throw InputError("no dataset given");
    const bool partly = c.command == "gof" || c.fit.mode == "partly";
    if (partly && c.dataset.parametric.empty()) throw InputError("partly mode requires p ≥ 1");
    if (c.fit.mode == "mle" && c.command == "fit" && c.model.families.empty()) {
      throw InputError("mle mode needs model.families for every covariate");
    }
    if (partly && c.model.families.size() != c.dataset.parametric.size()) {
      throw InputError("model.families needs one family per parametric column");
    }
  }
  if (c.command == "gof") {
    if (c.gof.test != "chisq" && c.gof.B < 100) throw InputError("B ≥ 100 required");
    if (c.gof.test != "chisq" && !c.seed) throw InputError("--seed is required for KS tests");
  }
  if (c.command == "simulate") {
    if (!c.scenario) throw InputError("no scenario given");
    if (!c.seed) throw InputError("--seed is required for simulate");
    if (c.simulate.reps < 1) throw InputError("reps must be at least 1");
  }
}

std::string scenario_text(const Scenario& sc) {
  YAML::Emitter e;
  e << YAML::BeginMap << YAML::Key << "scenario" << YAML::Value;
  emit_scenario(e, sc);
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::string manifest_text(const RunConfig& c, const std::vector<std::string>& artifacts) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "command" << YAML::Value << c.command;
  e << YAML::Key << "version" << YAML::Value << PARTLY_VERSION;
  e << YAML::Key << "versions" << YAML::Value << YAML::Flow << YAML::BeginMap;
  e << YAML::Key << "eigen" << YAML::Value
    << (std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
        std::to_string(EIGEN_MINOR_VERSION));
  e << YAML::Key << "boost" << YAML::Value
    << (std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) +
        "." + std::to_string(BOOST_VERSION % 100));
  e << YAML::EndMap;
  if (c.seed) e << YAML::Key << "seed" << YAML::Value << *c.seed;
  e << YAML::Key << "threads" << YAML::Value << c.threads;
  e << YAML::Key << "out" << YAML::Value << c.out;

  if (c.command == "fit" || c.command == "gof") {
    e << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "path" << YAML::Value << c.dataset.path;
    e << YAML::Key << "time" << YAML::Value << c.dataset.time;
    e << YAML::Key << "status" << YAML::Value << c.dataset.status;
    e << YAML::Key << "parametric" << YAML::Value;
    emit_plain_list(e, c.dataset.parametric);
    e << YAML::Key << "nonparametric" << YAML::Value;
    emit_plain_list(e, c.dataset.nonparametric);
    e << YAML::EndMap;
    e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "families" << YAML::Value;
    emit_plain_list(e, c.model.families);
    e << YAML::Key << "theta_init" << YAML::Value;
    emit_list(e, c.model.theta_init);
    e << YAML::EndMap;
    e << YAML::Key << "fit" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "mode" << YAML::Value << c.fit.mode;
    e << YAML::Key << "weights" << YAML::Value << c.fit.weights;
    e << YAML::Key << "vn" << YAML::Value << c.fit.vn;
    if (c.fit.tau) e << YAML::Key << "tau" << YAML::Value << format_double(*c.fit.tau);
    if (c.fit.bandwidth) e << YAML::Key << "bandwidth" << YAML::Value << format_double(*c.fit.bandwidth);
    if (!c.fit.xi_times.empty()) {
      e << YAML::Key << "xi_times" << YAML::Value;
      emit_list(e, c.fit.xi_times);
    }
    if (!c.fit.survival_z.empty()) {
      e << YAML::Key << "survival_z" << YAML::Value;
      emit_list(e, c.fit.survival_z);
      e << YAML::Key << "survival_times" << YAML::Value;
      emit_list(e, c.fit.survival_times);
    }
    e << YAML::EndMap;
  }
  if (c.command == "gof") {
    e << YAML::Key << "gof" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "components" << YAML::Value;
    emit_plain_list(e, c.gof.components);
    e << YAML::Key << "test" << YAML::Value << c.gof.test;
    e << YAML::Key << "windows" << YAML::Value << c.gof.windows;
    e << YAML::Key << "boundaries" << YAML::Value;
    emit_list(e, c.gof.boundaries);
    e << YAML::Key << "method" << YAML::Value << c.gof.method;
    e << YAML::Key << "B" << YAML::Value << c.gof.B;
    e << YAML::Key << "weight" << YAML::Value << c.gof.weight;
    e << YAML::Key << "simultaneous" << YAML::Value << c.gof.simultaneous;
    e << YAML::EndMap;
  }
  if (c.command == "simulate") {
    e << YAML::Key << "scenario" << YAML::Value;
    emit_scenario(e, *c.scenario);
    e << YAML::Key << "simulate" << YAML::Value;
    emit_simulate(e, c.simulate);
  }
  if (c.command == "efficiency") {
    const EfficiencyConfig& ec = c.efficiency;
    e << YAML::Key << "efficiency" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "setup" << YAML::Value << YAML::Flow << YAML::BeginMap;
    e << YAML::Key << "c" << YAML::Value << format_double(ec.setup.c);
    e << YAML::Key << "gamma" << YAML::Value << format_double(ec.setup.gamma);
    e << YAML::Key << "alpha" << YAML::Value << format_double(ec.setup.alpha);
    e << YAML::Key << "r" << YAML::Value << ec.setup.r;
    e << YAML::Key << "p" << YAML::Value << ec.setup.p;
    e << YAML::Key << "q" << YAML::Value << ec.setup.q;
    e << YAML::Key << "k" << YAML::Value << format_double(ec.setup.k);
    e << YAML::EndMap;
    e << YAML::Key << "curve" << YAML::Value << ec.curve;
    e << YAML::Key << "u_grid" << YAML::Value;
    emit_list(e, ec.u_grid);
    e << YAML::Key << "printed" << YAML::Value << ec.printed;
    e << YAML::Key << "sieve" << YAML::Value << ec.sieve;
    e << YAML::Key << "K_grid" << YAML::Value;
    emit_plain_list(e, ec.K_grid);
    e << YAML::Key << "family" << YAML::Value << ec.family;
    e << YAML::Key << "theta" << YAML::Value;
    emit_list(e, ec.theta);
    e << YAML::Key << "tau" << YAML::Value << format_double(ec.tau);
    e << YAML::EndMap;
  }
  e << YAML::Key << "artifacts" << YAML::Value;
  emit_plain_list(e, artifacts);
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace partly::cli
