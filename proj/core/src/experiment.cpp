#include "tumor/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "tumor/contour.hpp"
#include "tumor/errors.hpp"
#include "tumor/metrics.hpp"

namespace tumor::experiment {

namespace fs = std::filesystem;

std::string code_version() { return TUMORSIM_VERSION; }

Command parse_command(const std::string& name) {
  if (name == "radial") return Command::radial;
  if (name == "spectrum") return Command::spectrum;
  if (name == "dlcm") return Command::dlcm;
  if (name == "pde") return Command::pde;
  if (name == "modes") return Command::modes;
  if (name == "fit-effective") return Command::fit_effective;
  if (name == "sweep") return Command::sweep;
  throw ConfigError("unknown command '" + name + "'");
}

std::string command_name(Command c) {
  switch (c) {
    case Command::radial: return "radial";
    case Command::spectrum: return "spectrum";
    case Command::dlcm: return "dlcm";
    case Command::pde: return "pde";
    case Command::modes: return "modes";
    case Command::fit_effective: return "fit-effective";
    case Command::sweep: return "sweep";
  }
  return "?";
}

// ---------------------------------------------------------------- parsing

namespace {

std::string where(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  if (m.line < 0) return "";
  return "line " + std::to_string(m.line + 1) + ": ";
}

// Reads one mapping section, remembering which keys were used so that the
// rest can be reported as unknown.
class Section {
 public:
  Section(YAML::Node node, std::string name, const std::set<std::string>& overridden)
      : node_(std::move(node)), name_(std::move(name)), overridden_(overridden) {
    if (node_ && !node_.IsNull() && !node_.IsMap())
      throw ConfigError(where(node_) + "section '" + name_ + "' must be a mapping");
  }

  template <class T>
  bool get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_.IsMap()) return false;
    const YAML::Node v = node_[key];
    if (!v) return false;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(locate(v, key) + "cannot read '" + path(key) + "' as " + type_name<T>());
    }
    return true;
  }

  template <class T, class Check>
  bool get(const std::string& key, T& out, Check check, const char* what) {
    if (!get(key, out)) return false;
    if (!check(out)) throw ConfigError(locate(node_[key], key) + "'" + path(key) + "' " + what);
    return true;
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!seen_.count(k))
        throw ConfigError(locate(kv.first, k) + "unknown key '" + path(k) + "'");
    }
  }

  // Wraps validation errors of a whole block with the section's position.
  template <class F>
  void check(F f) const {
    try {
      f();
    } catch (const ConfigError& e) {
      std::string at = node_ && node_.IsMap() ? where(node_) : std::string();
      for (const auto& o : overridden_)
        if (o.rfind(name_ + ".", 0) == 0) at = "--set " + o + ": ";
      throw ConfigError(at + "[" + name_ + "] " + e.what());
    }
  }

 private:
  std::string path(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }
  std::string locate(const YAML::Node& n, const std::string& key) const {
    if (overridden_.count(path(key))) return "--set " + path(key) + ": ";
    return where(n);
  }
  template <class T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, double>) return "a number";
    else if constexpr (std::is_same_v<T, bool>) return "true/false";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else return "text";
  }

  YAML::Node node_;
  std::string name_;
  const std::set<std::string>& overridden_;
  std::set<std::string> seen_;
};

const auto positive = [](double v) { return v > 0.0; };
const auto nonneg = [](double v) { return v >= 0.0; };

void apply_override(YAML::Node& root, const std::string& assignment, std::set<std::string>& overridden) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == assignment.size())
    throw ConfigError("--set " + assignment + ": expected key=value");
  const std::string key = assignment.substr(0, eq);
  YAML::Node value;
  try {
    value = YAML::Load(assignment.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ConfigError("--set " + key + ": " + e.msg);
  }
  const auto dot = key.find('.');
  if (dot == std::string::npos) {
    root[key] = value;
  } else {
    const std::string sec = key.substr(0, dot);
    if (root[sec] && !root[sec].IsMap() && !root[sec].IsNull())
      throw ConfigError("--set " + key + ": section '" + sec + "' is not a mapping");
    root[sec][key.substr(dot + 1)] = value;
  }
  overridden.insert(key);
}

void read_radial(Section s, RadialSetup& r) {
  s.get("lambda", r.params.lambda);
  s.get("kappa_prol", r.params.kappa_prol);
  s.get("kappa_death", r.params.kappa_death);
  s.get("mu_death", r.params.mu_death);
  s.get("init_radius", r.init_radius, [](double v) { return v > 0.0 && v < 1.0; }, "must lie in (0, 1)");
  s.get("t_end", r.t_end, positive, "must be positive");
  s.get("dt", r.dt, positive, "must be positive");
  s.get("record_every", r.record_every, [](int v) { return v >= 1; }, "must be at least 1");
  s.finish();
  s.check([&] { radial::validate(r.params); });
}

void read_stability(Section s, SpectrumSetup& st) {
  const bool explicit_radius = s.get("r_p", st.state.r_p);
  s.get("r_q", st.state.r_q);
  s.get("r_n", st.state.r_n);
  if (!s.get("stationary", st.stationary) && explicit_radius) st.stationary = false;
  s.get("mu_death", st.mu_death, nonneg, "must be nonnegative");
  s.get("D_ext", st.D_ext, positive, "must be positive");
  s.get("sigma", st.sigma, nonneg, "must be nonnegative");
  s.get("p_ext", st.p_ext);
  s.get("k_max", st.k_max, [](int v) { return v >= 1; }, "must be at least 1");
  s.finish();
  if (!st.stationary)
    s.check([&] {
      try {
        radial::validate(st.state);
      } catch (const InfeasibleState& e) {
        throw ConfigError(e.what());
      }
    });
}

void read_dlcm(Section s, DlcmSetup& d) {
  auto& p = d.params;
  s.get("mu_prol", p.mu_prol);
  s.get("mu_death", p.mu_death);
  s.get("mu_deg", p.mu_deg);
  s.get("kappa_prol", p.kappa_prol);
  s.get("kappa_death", p.kappa_death);
  s.get("lambda", p.lambda);
  s.get("sigma", p.sigma);
  s.get("D1", p.D1);
  s.get("D2", p.D2);
  s.get("p_ext", p.p_ext);
  s.get("f_min", p.f_min);
  s.get("curvature_smoothing", p.curvature_smoothing);
  s.get("dx", d.dx, positive, "must be positive");
  s.get("t_end", d.t_end, positive, "must be positive");
  s.get("sample_dt", d.sample_dt, positive, "must be positive");
  s.get("snapshot_dt", d.snapshot_dt, nonneg, "must be nonnegative");
  s.get("field_update_stride", d.field_update_stride, [](int v) { return v >= 1; },
        "must be at least 1");
  s.get("init_radius", d.init_radius, [](double v) { return v > 0.0 && v < 1.0; },
        "must lie in (0, 1)");
  s.get("necrotic_radius", d.necrotic_radius, nonneg, "must be nonnegative");
  s.get("perturb_mode_k", d.perturb_mode_k, [](int v) { return v >= 0; }, "must be nonnegative");
  s.get("perturb_eps", d.perturb_eps, [](double v) { return std::abs(v) < 1.0; },
        "must satisfy |eps| < 1");
  s.get("max_events", d.max_events, [](long v) { return v >= 0; }, "must be nonnegative");
  s.finish();
  s.check([&] { dlcm::validate(p); });
}

void read_pde(Section s, PdeSetup& d) {
  auto& p = d.params;
  s.get("mu_prol_eff", p.mu_prol);
  s.get("mu_death_eff", p.mu_death);
  s.get("lambda_eff", p.lambda);
  s.get("kappa_prol", p.kappa_prol);
  s.get("kappa_death", p.kappa_death);
  s.get("sigma", p.sigma);
  s.get("rho_thresh", p.rho_thresh);
  s.get("omega", p.omega);
  s.get("p_ext", p.p_ext);
  s.get("f_min", p.f_min);
  s.get("curvature_smoothing", p.curvature_smoothing);
  std::string cutoff = p.cutoff == pde::Cutoff::kappa_death ? "kappa_death" : "kappa_prol";
  s.get("consumption_cutoff", cutoff, [](const std::string& v) {
    return v == "kappa_death" || v == "kappa_prol";
  }, "must be kappa_death or kappa_prol");
  p.cutoff = cutoff == "kappa_death" ? pde::Cutoff::kappa_death : pde::Cutoff::kappa_prol;
  std::string method = p.oxygen_method == pde::OxygenMethod::active_set ? "active_set" : "pseudo_time";
  s.get("oxygen_method", method, [](const std::string& v) {
    return v == "active_set" || v == "pseudo_time";
  }, "must be active_set or pseudo_time");
  p.oxygen_method =
      method == "active_set" ? pde::OxygenMethod::active_set : pde::OxygenMethod::pseudo_time;
  s.get("dtau", p.dtau);
  s.get("oxygen_tol", p.oxygen_tol);
  s.get("oxygen_max_iter", p.oxygen_max_iter);
  s.get("dx", d.dx, positive, "must be positive");
  s.get("t_end", d.t_end, positive, "must be positive");
  s.get("sample_dt", d.sample_dt, positive, "must be positive");
  s.get("snapshot_dt", d.snapshot_dt, nonneg, "must be nonnegative");
  s.get("init_radius", d.init_radius, [](double v) { return v > 0.0 && v < 1.0; },
        "must lie in (0, 1)");
  s.get("perturb_mode_k", d.perturb_mode_k, [](int v) { return v >= 0; }, "must be nonnegative");
  s.get("perturb_eps", d.perturb_eps, [](double v) { return std::abs(v) < 1.0; },
        "must satisfy |eps| < 1");
  s.finish();
  s.check([&] { pde::validate(p); });
}

void read_modes(Section s, ModesSetup& m) {
  s.get("k_min", m.k_min, [](int v) { return v >= 1; }, "must be at least 1");
  s.get("k_max", m.k_max, [](int v) { return v >= 1; }, "must be at least 1");
  s.get("eps", m.eps, [](double v) { return v > 0.0 && v < 1.0; }, "must lie in (0, 1)");
  s.get("t_span", m.t_span, positive, "must be positive");
  s.get("sample_dt", m.sample_dt, positive, "must be positive");
  s.get("mu_death_eff", m.mu_death_eff, nonneg, "must be nonnegative");
  s.get("time_scale", m.time_scale, positive, "must be positive");
  s.finish();
  if (m.k_min > m.k_max) throw ConfigError("modes.k_min exceeds modes.k_max");
}

void read_sweep(const YAML::Node& node, SweepSetup& sw) {
  sw.axes.clear();
  if (!node || node.IsNull()) return;
  if (!node.IsMap()) throw ConfigError(where(node) + "section 'sweep' must be a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (key.find('.') == std::string::npos)
      throw ConfigError(where(kv.first) + "sweep key '" + key + "' must be section.key");
    std::vector<std::string> values;
    if (kv.second.IsSequence()) {
      for (const auto& v : kv.second) {
        if (!v.IsScalar()) throw ConfigError(where(v) + "sweep values must be scalars");
        values.push_back(v.Scalar());
      }
    } else if (kv.second.IsScalar()) {
      values.push_back(kv.second.Scalar());
    }
    if (values.empty()) throw ConfigError(where(kv.second) + "sweep '" + key + "' has no values");
    sw.axes.emplace_back(key, std::move(values));
  }
}

Config parse_node(YAML::Node root, const std::set<std::string>& overridden) {
  if (!root.IsMap()) throw ConfigError(where(root) + "config must be a mapping");
  Config c;
  Section top(root, "", overridden);
  top.get("model", c.model, [](const std::string& m) {
    return m == "radial" || m == "stability" || m == "dlcm" || m == "pde";
  }, "must be radial, stability, dlcm or pde");
  std::string out = c.output.string();
  top.get("output", out);
  c.output = out;
  top.get("seed", c.seed);
  top.get("replicates", c.replicates, [](int v) { return v >= 1; }, "must be at least 1");
  for (const char* sec : {"radial", "stability", "dlcm", "pde", "modes", "fit", "sweep"}) {
    YAML::Node dummy;
    top.get(sec, dummy);
  }
  top.finish();
  read_radial(Section(root["radial"], "radial", overridden), c.radial);
  read_stability(Section(root["stability"], "stability", overridden), c.stability);
  read_dlcm(Section(root["dlcm"], "dlcm", overridden), c.dlcm);
  read_pde(Section(root["pde"], "pde", overridden), c.pde);
  read_modes(Section(root["modes"], "modes", overridden), c.modes);
  {
    Section s(root["fit"], "fit", overridden);
    s.get("time_scale", c.fit.time_scale, positive, "must be positive");
    s.finish();
  }
  read_sweep(root["sweep"], c.sweep);
  return c;
}

}  // namespace

Config parse_config(const std::string& yaml, const std::vector<std::string>& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (root.IsMap() && root["command"] && root["config"]) root = root["config"];
  std::set<std::string> overridden;
  for (const auto& o : overrides) apply_override(root, o, overridden);
  return parse_node(root, overridden);
}

Config load_config(const fs::path& file, const std::vector<std::string>& overrides) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), overrides);
  } catch (const ConfigError& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

Command manifest_command(const fs::path& manifest) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(manifest.string());
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot open manifest " + manifest.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError(manifest.string() + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap() || !root["command"] || !root["config"])
    throw ConfigError(manifest.string() + ": not a manifest (needs command and config)");
  return parse_command(root["command"].as<std::string>());
}

// ---------------------------------------------------------------- dumping

namespace {

// Shortest text that reads back to the same double.
std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  if (std::isnan(v)) return ".nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

struct Emit {
  YAML::Emitter& e;
  void operator()(const char* key, double v) { e << YAML::Key << key << YAML::Value << num(v); }
  void operator()(const char* key, int v) { e << YAML::Key << key << YAML::Value << v; }
  void operator()(const char* key, long v) { e << YAML::Key << key << YAML::Value << v; }
  void operator()(const char* key, bool v) { e << YAML::Key << key << YAML::Value << v; }
  void operator()(const char* key, const std::string& v) {
    e << YAML::Key << key << YAML::Value << v;
  }
};

void emit_config(YAML::Emitter& e, const Config& c) {
  Emit kv{e};
  e << YAML::BeginMap;
  kv("model", c.model);
  kv("output", c.output.string());
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  kv("replicates", c.replicates);

  e << YAML::Key << "radial" << YAML::Value << YAML::BeginMap;
  kv("lambda", c.radial.params.lambda);
  kv("kappa_prol", c.radial.params.kappa_prol);
  kv("kappa_death", c.radial.params.kappa_death);
  kv("mu_death", c.radial.params.mu_death);
  kv("init_radius", c.radial.init_radius);
  kv("t_end", c.radial.t_end);
  kv("dt", c.radial.dt);
  kv("record_every", c.radial.record_every);
  e << YAML::EndMap;

  const auto& st = c.stability;
  e << YAML::Key << "stability" << YAML::Value << YAML::BeginMap;
  kv("stationary", st.stationary);
  kv("r_n", st.state.r_n);
  kv("r_q", st.state.r_q);
  kv("r_p", st.state.r_p);
  kv("mu_death", st.mu_death);
  kv("D_ext", st.D_ext);
  kv("sigma", st.sigma);
  kv("p_ext", st.p_ext);
  kv("k_max", st.k_max);
  e << YAML::EndMap;

  const auto& d = c.dlcm;
  e << YAML::Key << "dlcm" << YAML::Value << YAML::BeginMap;
  kv("mu_prol", d.params.mu_prol);
  kv("mu_death", d.params.mu_death);
  kv("mu_deg", d.params.mu_deg);
  kv("kappa_prol", d.params.kappa_prol);
  kv("kappa_death", d.params.kappa_death);
  kv("lambda", d.params.lambda);
  kv("sigma", d.params.sigma);
  kv("D1", d.params.D1);
  kv("D2", d.params.D2);
  kv("p_ext", d.params.p_ext);
  kv("f_min", d.params.f_min);
  kv("curvature_smoothing", d.params.curvature_smoothing);
  kv("dx", d.dx);
  kv("t_end", d.t_end);
  kv("sample_dt", d.sample_dt);
  kv("snapshot_dt", d.snapshot_dt);
  kv("field_update_stride", d.field_update_stride);
  kv("init_radius", d.init_radius);
  kv("necrotic_radius", d.necrotic_radius);
  kv("perturb_mode_k", d.perturb_mode_k);
  kv("perturb_eps", d.perturb_eps);
  kv("max_events", d.max_events);
  e << YAML::EndMap;

  const auto& q = c.pde;
  e << YAML::Key << "pde" << YAML::Value << YAML::BeginMap;
  kv("mu_prol_eff", q.params.mu_prol);
  kv("mu_death_eff", q.params.mu_death);
  kv("lambda_eff", q.params.lambda);
  kv("kappa_prol", q.params.kappa_prol);
  kv("kappa_death", q.params.kappa_death);
  kv("sigma", q.params.sigma);
  kv("rho_thresh", q.params.rho_thresh);
  kv("omega", q.params.omega);
  kv("p_ext", q.params.p_ext);
  kv("f_min", q.params.f_min);
  kv("curvature_smoothing", q.params.curvature_smoothing);
  kv("consumption_cutoff",
     std::string(q.params.cutoff == pde::Cutoff::kappa_death ? "kappa_death" : "kappa_prol"));
  kv("oxygen_method", std::string(q.params.oxygen_method == pde::OxygenMethod::active_set
                                      ? "active_set"
                                      : "pseudo_time"));
  kv("dtau", q.params.dtau);
  kv("oxygen_tol", q.params.oxygen_tol);
  kv("oxygen_max_iter", q.params.oxygen_max_iter);
  kv("dx", q.dx);
  kv("t_end", q.t_end);
  kv("sample_dt", q.sample_dt);
  kv("snapshot_dt", q.snapshot_dt);
  kv("init_radius", q.init_radius);
  kv("perturb_mode_k", q.perturb_mode_k);
  kv("perturb_eps", q.perturb_eps);
  e << YAML::EndMap;

  const auto& m = c.modes;
  e << YAML::Key << "modes" << YAML::Value << YAML::BeginMap;
  kv("k_min", m.k_min);
  kv("k_max", m.k_max);
  kv("eps", m.eps);
  kv("t_span", m.t_span);
  kv("sample_dt", m.sample_dt);
  kv("mu_death_eff", m.mu_death_eff);
  kv("time_scale", m.time_scale);
  e << YAML::EndMap;

  e << YAML::Key << "fit" << YAML::Value << YAML::BeginMap;
  kv("time_scale", c.fit.time_scale);
  e << YAML::EndMap;

  e << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  for (const auto& [key, values] : c.sweep.axes) {
    e << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& v : values) e << v;
    e << YAML::EndSeq;
  }
  e << YAML::EndMap;
  e << YAML::EndMap;
}

}  // namespace

std::string dump_config(const Config& c) {
  YAML::Emitter e;
  emit_config(e, c);
  return std::string(e.c_str()) + "\n";
}

// ---------------------------------------------------------------- presets

Config defaults() { return Config{}; }

std::vector<std::string> preset_names() {
  return {"fig4a", "fig4b", "fig5", "fig6", "fig7", "fig8", "fig9-dlcm", "fig9-pde",
          "calibration"};
}

Config preset(const std::string& name) {
  Config c = defaults();
  c.output = "out/" + name;
  if (name == "fig4a") {
    c.model = "radial";
  } else if (name == "fig4b") {
    c.model = "stability";
    c.sweep.axes = {{"stability.sigma", {"0", "5e-4", "2e-3", "3.2e-3"}}};
  } else if (name == "fig5") {
    c.model = "dlcm";
    c.dlcm.params.sigma = 1e-4;
    c.replicates = 20;
  } else if (name == "fig6") {
    c.pde.params.sigma = 3.2e-3;
    c.pde.t_end = 80.0;
    c.pde.snapshot_dt = 10.0;
  } else if (name == "fig7" || name == "fig8") {
    c.pde.params.sigma = name == "fig7" ? 2e-3 : 5e-4;
    c.pde.snapshot_dt = 5.0;
  } else if (name == "fig9-dlcm") {
    c.model = "dlcm";
    c.dlcm.params.kappa_death = 0.92;
    c.dlcm.t_end = 30.0;
    c.dlcm.snapshot_dt = 30.0;
    c.sweep.axes = {{"dlcm.sigma", {"2e-3", "7e-4", "1e-4", "0"}}};
  } else if (name == "fig9-pde") {
    c.pde.params.kappa_death = 0.92;
    c.pde.params.mu_death = 1.0;
    c.pde.params.lambda = 1.1;
    c.pde.snapshot_dt = 30.0;
    c.sweep.axes = {{"pde.sigma", {"2e-3", "7e-4", "1e-4", "0"}}};
  } else if (name == "calibration") {
    c.model = "dlcm";
    c.replicates = 5;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

// ---------------------------------------------------------------- workers

int worker_count() {
  if (const char* env = std::getenv("TUMOR_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1)
      throw ConfigError(std::string("TUMOR_WORKERS must be a positive integer, got '") + env + "'");
    return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, int workers, const std::function<void(int)>& job) {
  std::vector<std::exception_ptr> errors(std::max(n, 0));
  std::atomic<int> next{0};
  auto loop = [&] {
    for (int i; (i = next++) < n;) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int t = std::clamp(workers, 1, std::max(n, 1));
  if (t == 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < t; ++i) pool.emplace_back(loop);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------- runners

namespace {

std::ofstream open_out(const fs::path& file) {
  fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  return out;
}

fs::path rep_dir(const Config& c, int r) {
  return c.replicates > 1 ? c.output / ("rep-" + std::to_string(r)) : c.output;
}

std::string snapshot_name(double t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "t%09.4f.csv", t);
  return buf;
}

// Calls write(t) at the first sample at or after every multiple of dt.
class SnapshotClock {
 public:
  explicit SnapshotClock(double dt) : dt_(dt) {}
  bool due(double t) {
    if (dt_ <= 0.0 || t + 1e-9 < next_) return false;
    while (next_ <= t + 1e-9) next_ += dt_;
    return true;
  }

 private:
  double dt_;
  double next_ = 0.0;
};

struct RunOut {
  std::vector<Sample> series;
  std::string end_reason;
  double extra = 0.0;  // events (dlcm) or clamped mass (pde)
};

RunOut run_dlcm_once(const DlcmSetup& d, std::uint64_t seed, const fs::path& dir) {
  const Grid grid = Grid::standard(d.dx);
  dlcm::SimConfig cfg;
  cfg.params = d.params;
  cfg.t_end = d.t_end;
  cfg.seed = seed;
  cfg.field_update_stride = d.field_update_stride;
  cfg.sample_dt = d.sample_dt;
  cfg.max_events = d.max_events;
  SnapshotClock clock(d.snapshot_dt);
  auto observer = [&](const dlcm::State& s, const dlcm::Fields& f, const Sample& smp) {
    if (!clock.due(smp.t)) return;
    auto out = open_out(dir / "snapshots" / snapshot_name(smp.t));
    dlcm::write_snapshot_csv(out, s, f.oxygen, f.pressure);
  };
  const dlcm::State init = dlcm::disk(grid, d.init_radius, d.perturb_mode_k,
                                      d.perturb_eps * d.init_radius, d.necrotic_radius);
  dlcm::Result r = dlcm::simulate(init, cfg, observer);
  auto out = open_out(dir / "timeseries.csv");
  write_series_csv(out, r.series);
  return {std::move(r.series), r.end_reason, static_cast<double>(r.events)};
}

RunOut run_pde_once(const PdeSetup& d, std::uint64_t seed, const fs::path& dir) {
  const Grid grid = Grid::standard(d.dx);
  pde::SimConfig cfg;
  cfg.params = d.params;
  cfg.t_end = d.t_end;
  cfg.seed = seed;
  cfg.sample_dt = d.sample_dt;
  SnapshotClock clock(d.snapshot_dt);
  auto observer = [&](const pde::State& s, const Sample& smp) {
    if (!clock.due(smp.t)) return;
    auto out = open_out(dir / "snapshots" / snapshot_name(smp.t));
    const auto rho = s.rho.values();
    write_snapshot_csv(out, grid, std::vector<double>(rho.begin(), rho.end()), s.c, s.p);
  };
  pde::Result r = pde::simulate(
      pde::disk(grid, d.init_radius, d.perturb_mode_k, d.perturb_eps * d.init_radius), cfg,
      observer);
  auto out = open_out(dir / "timeseries.csv");
  write_series_csv(out, r.series);
  return {std::move(r.series), r.end_reason, r.clamped_mass};
}

void record_run(Summary& s, const std::string& prefix, const RunOut& r, const char* extra) {
  if (!r.series.empty()) {
    const Sample& last = r.series.back();
    s.values[prefix + "t_final"] = last.t;
    s.values[prefix + "V_p"] = last.volumes.V_p;
    s.values[prefix + "V_q"] = last.volumes.V_q;
    s.values[prefix + "V_n"] = last.volumes.V_n;
    s.values[prefix + "roundness"] = last.roundness;
  }
  s.values[prefix + extra] = r.extra;
  if (!s.message.empty()) s.message += "; ";
  s.message += prefix + "end_reason=" + r.end_reason;
}

template <class Once, class Setup>
Summary run_simulation(const Config& c, const Setup& setup, Once once, const char* extra,
                       int workers) {
  std::vector<RunOut> outs(c.replicates);
  parallel_for(c.replicates, workers, [&](int r) {
    outs[r] = once(setup, c.seed + static_cast<std::uint64_t>(r), rep_dir(c, r));
  });
  Summary s;
  for (int r = 0; r < c.replicates; ++r)
    record_run(s, c.replicates > 1 ? "rep-" + std::to_string(r) + "." : "", outs[r], extra);
  return s;
}

Summary run_radial(const Config& c) {
  const auto red = c.radial.params.reduced();
  const radial::Trajectory traj =
      radial::integrate(c.radial.init_radius, red, c.radial.t_end, c.radial.dt,
                        c.radial.record_every);
  auto out = open_out(c.output / "timeseries.csv");
  radial::write_trajectory_csv(out, traj);
  Summary s;
  const radial::State& last = traj.states.back();
  s.values["final.r_n"] = last.r_n;
  s.values["final.r_q"] = last.r_q;
  s.values["final.r_p"] = last.r_p;
  try {
    const radial::State eq = radial::stationary_state(red);
    s.values["stationary.r_n"] = eq.r_n;
    s.values["stationary.r_q"] = eq.r_q;
    s.values["stationary.r_p"] = eq.r_p;
    s.values["stationary.eigenvalue"] = radial::radial_eigenvalue(eq, red.mu_death).value;
  } catch (const NoEquilibrium& e) {
    s.message = std::string("no stationary state: ") + e.what();
  }
  if (traj.halted) s.message += (s.message.empty() ? "" : "; ") + traj.halt_reason;
  return s;
}

stability::Input spectrum_input(const Config& c) {
  stability::Input in;
  if (c.stability.stationary) {
    radial::ReducedParams red = c.radial.params.reduced();
    red.mu_death = c.stability.mu_death;
    in.state = radial::stationary_state(red);
  } else {
    in.state = c.stability.state;
  }
  in.mu_death = c.stability.mu_death;
  in.D_ext = c.stability.D_ext;
  in.sigma = c.stability.sigma;
  in.p_ext = c.stability.p_ext;
  return in;
}

Summary run_spectrum(const Config& c) {
  const stability::Input in = spectrum_input(c);
  auto out = open_out(c.output / "spectrum.csv");
  stability::write_spectrum_csv(out, in, c.stability.k_max);
  Summary s;
  s.values["r_n"] = in.state.r_n;
  s.values["r_q"] = in.state.r_q;
  s.values["r_p"] = in.state.r_p;
  s.values["creeping_rate"] = stability::creeping_rate(in);
  s.values["sigma_root_2"] = stability::sigma_root(in, 2);
  s.values["sigma_stable_2"] = stability::sigma_stable(in.state, 2);
  return s;
}

struct ModeRun {
  metrics::GrowthFit fit;
  double analytic = 0.0;
  int analytic_samples = 0;
};

ModeRun run_mode(const Config& c, const radial::State& eq, int k, std::uint64_t seed,
                 const fs::path& file) {
  const ModesSetup& m = c.modes;
  const Grid grid = Grid::standard(c.dlcm.dx);
  dlcm::SimConfig cfg;
  cfg.params = c.dlcm.params;
  cfg.t_end = m.t_span;
  cfg.seed = seed;
  cfg.field_update_stride = c.dlcm.field_update_stride;
  cfg.sample_dt = m.sample_dt;
  metrics::ModeSeries series;
  series.amplitude.assign(m.k_max, {});
  std::vector<Sample> samples;
  auto observer = [&](const dlcm::State& s, const dlcm::Fields&, const Sample& smp) {
    const Contour contour = dlcm::tumor_contour(s);
    if (contour.points.size() < 4) return;
    const metrics::Modes modes = metrics::boundary_modes(contour, {0.0, 0.0}, m.k_max);
    series.times.push_back(smp.t);
    for (int j = 0; j < m.k_max; ++j) series.amplitude[j].push_back(modes.amplitude[j]);
    samples.push_back(smp);
  };
  dlcm::simulate(dlcm::disk(grid, eq.r_p, k, m.eps * eq.r_p, eq.r_n), cfg, observer);
  {
    auto out = open_out(file);
    metrics::write_mode_series_csv(out, series);
  }
  const auto& a = series.amplitude[k - 1];
  const std::size_t n =
      std::min(a.size(), std::max<std::size_t>(metrics::doubling_window(series.times, a, m.t_span), 5));
  ModeRun run;
  run.fit = metrics::fit_growth(std::vector<double>(series.times.begin(), series.times.begin() + n),
                                std::vector<double>(a.begin(), a.begin() + n));
  double sum = 0.0;
  for (std::size_t i = 0; i < n && i < samples.size(); ++i) {
    const auto& V = samples[i].volumes;
    stability::Input in;
    in.state = {std::sqrt(V.V_n / std::numbers::pi), std::sqrt(V.V_q / std::numbers::pi),
                std::sqrt(V.V_p / std::numbers::pi)};
    in.mu_death = m.mu_death_eff;
    in.sigma = c.dlcm.params.sigma;
    in.p_ext = c.dlcm.params.p_ext;
    try {
      sum += stability::dispersion(in, k).Lambda / m.time_scale;
      ++run.analytic_samples;
    } catch (const Error&) {
      // radii outside the model's range for this sample
    }
  }
  run.analytic = run.analytic_samples ? sum / run.analytic_samples : std::nan("");
  return run;
}

Summary run_modes(const Config& c, int workers) {
  const ModesSetup& m = c.modes;
  const radial::State eq = radial::stationary_state(c.radial.params.reduced());
  const int nk = m.k_max - m.k_min + 1;
  const int reps = c.replicates;
  std::vector<ModeRun> runs(nk * reps);
  parallel_for(nk * reps, workers, [&](int j) {
    const int k = m.k_min + j / reps;
    const int r = j % reps;
    runs[j] = run_mode(c, eq, k, c.seed + r,
                       c.output / "mode_series" /
                           ("k" + std::to_string(k) + "-rep" + std::to_string(r) + ".csv"));
  });

  auto detail = open_out(c.output / "modes_runs.csv");
  detail << "k,replicate,seed,Lambda_est,stderr,samples,Lambda_analytic\n";
  std::vector<metrics::ModeComparison> rows;
  for (int ki = 0; ki < nk; ++ki) {
    const int k = m.k_min + ki;
    double mean = 0.0, analytic = 0.0;
    int na = 0;
    for (int r = 0; r < reps; ++r) {
      const ModeRun& run = runs[ki * reps + r];
      char buf[200];
      std::snprintf(buf, sizeof buf, "%d,%d,%llu,%.10g,%.10g,%d,%.10g\n", k, r,
                    static_cast<unsigned long long>(c.seed + r), run.fit.rate, run.fit.stderr_,
                    run.fit.samples, run.analytic);
      detail << buf;
      mean += run.fit.rate;
      if (std::isfinite(run.analytic)) {
        analytic += run.analytic;
        ++na;
      }
    }
    mean /= reps;
    double err = runs[ki * reps].fit.stderr_;
    if (reps > 1) {
      double var = 0.0;
      for (int r = 0; r < reps; ++r) var += std::pow(runs[ki * reps + r].fit.rate - mean, 2);
      err = std::sqrt(var / (reps - 1) / reps);
    }
    rows.push_back({k, mean, err, na ? analytic / na : std::nan("")});
  }
  auto out = open_out(c.output / "modes.csv");
  metrics::write_mode_comparison_csv(out, rows);

  Summary s;
  std::vector<double> est, ana;
  int agree = 0;
  for (const auto& row : rows) {
    s.values["Lambda_est." + std::to_string(row.k)] = row.Lambda_est;
    s.values["Lambda_analytic." + std::to_string(row.k)] = row.Lambda_analytic;
    if ((row.Lambda_est > 0) == (row.Lambda_analytic > 0)) ++agree;
    est.push_back(row.Lambda_est);
    ana.push_back(row.Lambda_analytic);
  }
  s.values["sign_agreement"] = agree;
  s.values["spearman"] = rows.size() > 1 ? metrics::spearman(est, ana) : std::nan("");
  return s;
}

Summary run_fit_effective(const Config& c, int workers) {
  std::vector<RunOut> outs(c.replicates);
  std::vector<pde::EffectiveParams> fits(c.replicates);
  std::vector<std::string> errors(c.replicates);
  parallel_for(c.replicates, workers, [&](int r) {
    outs[r] = run_dlcm_once(c.dlcm, c.seed + r, c.output / ("rep-" + std::to_string(r)));
    try {
      fits[r] = pde::fit_effective_params(outs[r].series, c.dlcm.params.mu_death,
                                          c.dlcm.params.kappa_prol);
    } catch (const ConfigError& e) {
      errors[r] = e.what();
    }
  });
  auto out = open_out(c.output / "effective.csv");
  out << "replicate,seed,mu_prol_eff,mu_death_eff,lambda_eff,exp_samples,stationary_samples\n";
  Summary s;
  double mp = 0.0, lam = 0.0;
  int ok = 0;
  for (int r = 0; r < c.replicates; ++r) {
    record_run(s, "rep-" + std::to_string(r) + ".", outs[r], "events");
    if (!errors[r].empty()) {
      s.message += "; rep-" + std::to_string(r) + ": " + errors[r];
      continue;
    }
    const auto& f = fits[r];
    char buf[200];
    std::snprintf(buf, sizeof buf, "%d,%llu,%.10g,%.10g,%.10g,%d,%d\n", r,
                  static_cast<unsigned long long>(c.seed + r), f.mu_prol, f.mu_death, f.lambda,
                  f.exp_samples, f.stationary_samples);
    out << buf;
    const std::string rep = "rep-" + std::to_string(r) + ".";
    s.values[rep + "mu_prol_eff"] = f.mu_prol;
    s.values[rep + "lambda_eff"] = f.lambda;
    mp += f.mu_prol;
    lam += f.lambda;
    ++ok;
  }
  if (ok) {
    s.values["mean.mu_prol_eff"] = mp / ok;
    s.values["mean.lambda_eff"] = lam / ok;
    s.values["mu_prol_ratio"] = c.dlcm.params.mu_prol / (mp / ok);
    s.values["expected.mu_prol_eff"] = c.dlcm.params.mu_prol / c.fit.time_scale;
  }
  if (ok < c.replicates) s.status = "partial";
  return s;
}

Summary run_with(Command command, const Config& c, int workers);

Summary run_sweep(const Config& c, int workers) {
  const Command cmd = c.model == "radial"      ? Command::radial
                      : c.model == "stability" ? Command::spectrum
                      : c.model == "dlcm"      ? Command::dlcm
                                               : Command::pde;
  Config base = c;
  base.sweep.axes.clear();
  const std::string text = dump_config(base);
  std::vector<std::vector<std::string>> combos{{}};
  for (const auto& axis : c.sweep.axes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& combo : combos)
      for (const auto& v : axis.second) {
        auto e = combo;
        e.push_back(axis.first + "=" + v);
        next.push_back(std::move(e));
      }
    combos = std::move(next);
  }
  std::vector<Config> configs;
  for (std::size_t i = 0; i < combos.size(); ++i) {
    auto ov = combos[i];
    ov.push_back("output=" + (c.output / ("run-" + std::to_string(i))).string());
    configs.push_back(parse_config(text, ov));
  }
  std::vector<Summary> results(configs.size());
  std::vector<std::string> failures(configs.size());
  parallel_for(static_cast<int>(configs.size()), workers, [&](int i) {
    try {
      results[i] = run_with(cmd, configs[i], 1);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  auto out = open_out(c.output / "sweep.csv");
  out << "run";
  for (const auto& axis : c.sweep.axes) out << "," << axis.first;
  out << ",status\n";
  Summary s;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    out << "run-" << i;
    for (const auto& o : combos[i]) out << "," << o.substr(o.find('=') + 1);
    const std::string status = failures[i].empty() ? results[i].status : "error";
    out << "," << status << "\n";
    if (!failures[i].empty()) {
      s.status = "partial";
      s.message += (s.message.empty() ? "" : "; ") + ("run-" + std::to_string(i) + ": " + failures[i]);
    }
  }
  s.values["runs"] = static_cast<double>(configs.size());
  return s;
}

Summary run_command(Command command, const Config& c, int workers) {
  switch (command) {
    case Command::radial: return run_radial(c);
    case Command::spectrum: return run_spectrum(c);
    case Command::dlcm:
      return run_simulation(c, c.dlcm, run_dlcm_once, "events", workers);
    case Command::pde:
      return run_simulation(c, c.pde, run_pde_once, "clamped_mass", workers);
    case Command::modes: return run_modes(c, workers);
    case Command::fit_effective: return run_fit_effective(c, workers);
    case Command::sweep: return run_sweep(c, workers);
  }
  throw ConfigError("unknown command");
}

void write_manifest(Command command, const Config& c, const Summary& s) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "command" << YAML::Value << command_name(command);
  e << YAML::Key << "code_version" << YAML::Value << code_version();
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "status" << YAML::Value << s.status;
  if (!s.message.empty()) e << YAML::Key << "message" << YAML::Value << s.message;
  e << YAML::Key << "config" << YAML::Value;
  emit_config(e, c);
  e << YAML::Key << "results" << YAML::Value << YAML::BeginMap;
  for (const auto& [k, v] : s.values) e << YAML::Key << k << YAML::Value << num(v);
  e << YAML::EndMap;
  e << YAML::EndMap;
  auto out = open_out(c.output / "manifest.yaml");
  out << e.c_str() << "\n";
}

Summary run_with(Command command, const Config& c, int workers) {
  fs::create_directories(c.output);
  Summary s;
  try {
    s = run_command(command, c, workers);
  } catch (const std::exception& e) {
    Summary failed;
    failed.status = "error";
    failed.message = e.what();
    write_manifest(command, c, failed);
    throw;
  }
  write_manifest(command, c, s);
  return s;
}

}  // namespace

Summary run(Command command, const Config& c) { return run_with(command, c, worker_count()); }

}  // namespace tumor::experiment
