#include "rmkit/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace rmkit {

namespace {

using nlohmann::json;

/// One JSON object being read: remembers which keys were consumed so the rest can be reported.
class Section {
public:
  Section(const json& j, std::string path, ValidationReport& report) : j_(j), path_(std::move(path)), report_(report) {
    if (!j_.is_object()) error("must be an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.is_object() && j_.contains(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      error("'" + key + "' has the wrong type");
      return fallback;
    }
  }

  template <typename T>
  T require(const std::string& key, T fallback) {
    if (!has(key)) {
      error("missing required key '" + key + "'");
      return fallback;
    }
    return get<T>(key, fallback);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string child(const std::string& key) const { return path_ + "." + key; }

  void error(const std::string& message) { report_.errors.push_back(path_ + ": " + message); }

  void finish() {
    if (!j_.is_object()) return;
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) error("unknown key '" + key + "'");
  }

private:
  const json& j_;
  std::string path_;
  ValidationReport& report_;
  std::set<std::string> used_;
};

template <typename Enum, typename Parse>
Enum parse_enum(Section& s, const std::string& key, Enum fallback, Parse parse) {
  if (!s.has(key)) return fallback;
  try {
    return parse(s.get<std::string>(key, ""));
  } catch (const Error& e) {
    s.error(e.what());
    return fallback;
  }
}

ScenarioConfig parse_scenario(const json& j, const std::string& path, ValidationReport& report) {
  Section s(j, path, report);
  ScenarioConfig c;
  c.kind = parse_enum(s, "kind", c.kind, scenario_kind_from_string);
  if (!s.has("kind")) s.error("missing required key 'kind'");
  c.label = s.get<std::string>("label", to_string(c.kind));
  c.sites = s.require<int>("L", c.sites);
  c.phase = parse_enum(s, "phase", c.phase, ssh_phase_from_string);
  if (s.has("couplings")) {
    Section cs(s.raw("couplings"), s.child("couplings"), report);
    c.couplings.strong = cs.get<double>("strong", c.couplings.strong);
    c.couplings.weak = cs.get<double>("weak", c.couplings.weak);
    c.couplings.j_nnn = cs.get<double>("j_nnn", c.couplings.j_nnn);
    c.couplings.mu_edge = cs.get<double>("mu_edge", c.couplings.mu_edge);
    cs.finish();
  }
  c.t_p = s.get<double>("T_P", c.t_p);
  if (s.has("ramp")) {
    Section rs(s.raw("ramp"), s.child("ramp"), report);
    c.ramp.pin_mhz = rs.get<double>("pin_mhz", c.ramp.pin_mhz);
    c.ramp.shape = parse_enum(rs, "shape", c.ramp.shape, ramp_shape_from_string);
    c.ramp.ramp_model = rs.get<bool>("ramp_model", c.ramp.ramp_model);
    c.ramp.evolve.tol = rs.get<double>("tol", c.ramp.evolve.tol);
    rs.finish();
  }
  if (s.has("quench")) {
    Section qs(s.raw("quench"), s.child("quench"), report);
    c.quench_j = qs.get<double>("J", c.quench_j);
    c.quench_t = qs.get<double>("T", c.quench_t);
    qs.finish();
  }
  s.finish();
  return c;
}

std::vector<int> parse_int_list(Section& s, const std::string& key, std::vector<int> fallback) {
  if (!s.has(key)) return fallback;
  const json& v = s.raw(key);
  if (v.is_number_integer()) return {v.get<int>()};
  try {
    return v.get<std::vector<int>>();
  } catch (const json::exception&) {
    s.error("'" + key + "' must be an integer or a list of integers");
    return fallback;
  }
}

ProtocolConfig parse_protocol(const json& j, const std::string& path, ValidationReport& report) {
  Section s(j, path, report);
  ProtocolConfig p;
  p.mode = parse_enum(s, "mode", p.mode, [](const std::string& m) {
    if (m == "ideal") return RecordMode::Ideal;
    if (m == "pulsed") return RecordMode::Pulsed;
    throw ConfigError("mode must be \"ideal\" or \"pulsed\", got \"" + m + "\"");
  });
  p.n_u = parse_int_list(s, "N_U", p.n_u);
  if (s.has("N_meas")) {
    const json& v = s.raw("N_meas");
    if (v.is_string() && v.get<std::string>() == "inf")
      p.n_meas = 0;
    else if (v.is_number_integer())
      p.n_meas = v.get<int>();
    else
      s.error("'N_meas' must be a positive integer or \"inf\"");
  }
  p.n_ave = s.get<int>("N_ave", p.n_ave);
  p.eps_percent = s.get<double>("eps_percent", p.eps_percent);
  if (s.has("readout")) {
    Section rs(s.raw("readout"), s.child("readout"), report);
    p.readout.p_up_given_down = rs.get<double>("p_up_given_down", 0.0);
    p.readout.p_down_given_up = rs.get<double>("p_down_given_up", 0.0);
    rs.finish();
  }
  p.scope = parse_enum(s, "fluctuation_scope", p.scope, fluctuation_scope_from_string);
  p.schedule = s.get<std::string>("schedule", p.schedule);
  p.interactions = s.get<bool>("interactions", p.interactions);
  p.evolve_tol = s.get<double>("evolve_tol", p.evolve_tol);
  s.finish();
  return p;
}

PauliStringSum parse_observable_terms(const json& terms, int sites, const std::string& path, ValidationReport& report) {
  PauliStringSum op(sites);
  if (!terms.is_array()) {
    report.errors.push_back(path + ": 'terms' must be a list");
    return op;
  }
  for (std::size_t i = 0; i < terms.size(); ++i) {
    Section t(terms[i], path + "[" + std::to_string(i) + "]", report);
    const double coefficient = t.require<double>("coefficient", 0.0);
    const std::string letters = t.require<std::string>("string", "");
    t.finish();
    if (static_cast<int>(letters.size()) != sites) {
      t.error("string '" + letters + "' must have L = " + std::to_string(sites) + " letters");
      continue;
    }
    try {
      op.add(coefficient, PauliString::from_letters(letters));
    } catch (const Error& e) {
      t.error(e.what());
    }
  }
  return op;
}

EstimatorConfig parse_estimators(const json& j, int sites, const std::string& path, ValidationReport& report) {
  Section s(j, path, report);
  EstimatorConfig e;
  if (s.has("purity")) {
    const json& list = s.raw("purity");
    if (!list.is_array()) s.error("'purity' must be a list");
    for (const auto& item : list) {
      if (item.is_number_integer()) {
        e.purity.push_back(left_block(item.get<int>()));
      } else if (item.is_array()) {
        try {
          e.purity.push_back(item.get<std::vector<int>>());
        } catch (const json::exception&) {
          s.error("'purity' entries must be a block size or a list of sites");
        }
      } else {
        s.error("'purity' entries must be a block size or a list of sites");
      }
    }
  }
  e.energy = s.get<bool>("energy", e.energy);
  e.variance = s.get<bool>("variance", e.variance);
  e.correction = parse_enum(s, "bias_correction", e.correction, [](const std::string& c) {
    if (c == "closed_form") return BiasCorrection::ClosedForm;
    if (c == "u_statistic") return BiasCorrection::UStatistic;
    throw ConfigError("bias_correction must be \"closed_form\" or \"u_statistic\", got \"" + c + "\"");
  });
  if (s.has("observables")) {
    const json& list = s.raw("observables");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string opath = s.child("observables") + "[" + std::to_string(i) + "]";
      Section os(list[i], opath, report);
      ObservableConfig o;
      o.name = os.require<std::string>("name", "observable" + std::to_string(i));
      if (os.has("terms")) o.op = parse_observable_terms(os.raw("terms"), sites, opath + ".terms", report);
      else os.error("missing required key 'terms'");
      os.finish();
      e.observables.push_back(std::move(o));
    }
  }
  s.finish();
  return e;
}

double max_coupling_mhz(const ScenarioConfig& c) {
  if (c.kind == ScenarioKind::Quench) return std::abs(c.quench_j);
  return std::max({std::abs(c.couplings.strong), std::abs(c.couplings.weak), std::abs(c.couplings.j_nnn)});
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::SshGroundState: return "ssh_gs";
    case ScenarioKind::Antiferromagnet: return "af";
    case ScenarioKind::Adiabatic: return "adiabatic";
    case ScenarioKind::Quench: return "quench";
  }
  return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "ssh_gs") return ScenarioKind::SshGroundState;
  if (s == "af") return ScenarioKind::Antiferromagnet;
  if (s == "adiabatic") return ScenarioKind::Adiabatic;
  if (s == "quench") return ScenarioKind::Quench;
  throw ConfigError("scenario kind must be one of ssh_gs, af, adiabatic, quench; got \"" + s + "\"");
}

PauliStringSum ScenarioConfig::model() const {
  if (kind == ScenarioKind::Quench) return build_staggered_xy(sites, kTwoPi * quench_j);
  return ssh_spec(sites, phase, couplings).build();
}

StateVector ScenarioConfig::prepare() const {
  switch (kind) {
    case ScenarioKind::SshGroundState: return prepare_exact_gs(sites, phase, couplings);
    case ScenarioKind::Antiferromagnet: return prepare_af(sites);
    case ScenarioKind::Adiabatic: return prepare_adiabatic(model(), t_p, ramp);
    case ScenarioKind::Quench: return quench(prepare_domain_wall(sites), quench_j, quench_t);
  }
  throw DomainError("unknown scenario kind");
}

ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                              ValidationReport& report) {
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  cfg.hash = config_hash(doc);
  Section top(doc, "config", report);
  cfg.name = top.get<std::string>("name", cfg.name);
  cfg.seed = top.get<std::uint64_t>("seed", cfg.seed);
  if (top.has("scenario")) {
    const json& sc = top.raw("scenario");
    if (sc.is_array()) {
      for (std::size_t i = 0; i < sc.size(); ++i)
        cfg.scenarios.push_back(parse_scenario(sc[i], "config.scenario[" + std::to_string(i) + "]", report));
    } else {
      cfg.scenarios.push_back(parse_scenario(sc, "config.scenario", report));
    }
  } else {
    top.error("missing required key 'scenario'");
  }
  if (top.has("protocol")) cfg.protocol = parse_protocol(top.raw("protocol"), "config.protocol", report);
  const int sites = cfg.scenarios.empty() ? 0 : cfg.scenarios.front().sites;
  if (top.has("estimators")) cfg.estimators = parse_estimators(top.raw("estimators"), sites, "config.estimators", report);
  if (top.has("output")) {
    Section os(top.raw("output"), "config.output", report);
    cfg.output.dir = os.get<std::string>("dir", cfg.output.dir);
    cfg.output.records = parse_enum(os, "records", cfg.output.records, [](const std::string& r) {
      if (r == "none") return RecordPolicy::None;
      if (r == "first") return RecordPolicy::First;
      if (r == "all") return RecordPolicy::All;
      throw ConfigError("records must be none, first or all; got \"" + r + "\"");
    });
    os.finish();
  }
  top.finish();
  return cfg;
}

void validate_config(const ExperimentConfig& cfg, bool allow_large, ValidationReport& report) {
  auto err = [&](const std::string& m) { report.errors.push_back(m); };
  if (cfg.scenarios.empty()) err("at least one scenario is required");
  std::set<std::string> labels;
  for (const auto& s : cfg.scenarios) {
    const std::string where = "scenario '" + s.label + "': ";
    if (!labels.insert(s.label).second) err(where + "duplicate label");
    if (s.sites < 2 || s.sites > StateVector::kMaxSites)
      err(where + "L must lie in [2, " + std::to_string(StateVector::kMaxSites) + "]");
    if (s.sites != cfg.scenarios.front().sites) err(where + "all scenarios must share the same L");
    if ((s.kind == ScenarioKind::SshGroundState || s.kind == ScenarioKind::Quench) && s.sites % 2)
      err(where + "L must be even");
    if (s.kind == ScenarioKind::SshGroundState && s.couplings.mu_edge == 0.0)
      err(where + "mu_edge = 0 leaves the ground state degenerate");
    if (s.kind == ScenarioKind::Adiabatic && !(s.t_p > 0.0)) err(where + "T_P must be positive");
    if (s.kind == ScenarioKind::Adiabatic && !(s.ramp.pin_mhz > 0.0)) err(where + "ramp.pin_mhz must be positive");
    if (s.kind == ScenarioKind::Quench && (!(s.quench_j > 0.0) || !(s.quench_t > 0.0)))
      err(where + "quench J and T must be positive");
  }
  const auto& p = cfg.protocol;
  if (p.n_u.empty()) err("protocol: N_U list is empty");
  for (int n : p.n_u)
    if (n < 1) err("protocol: N_U entries must be >= 1");
  if (p.n_meas < 0 || p.n_meas == 1) err("protocol: N_meas must be >= 2 or \"inf\"");
  if (p.n_ave < 1) err("protocol: N_ave must be >= 1");
  if (p.eps_percent < 0.0) err("protocol: eps_percent must be >= 0");
  if (p.mode == RecordMode::Ideal && p.eps_percent > 0.0) err("protocol: eps_percent only applies to pulsed mode");
  try {
    p.readout.validate();
  } catch (const Error& e) {
    err(std::string("protocol: ") + e.what());
  }
  if (p.scope == FluctuationScope::PerShot && p.n_meas == 0)
    err("protocol: per_shot fluctuations need a finite N_meas");
  if (p.n_meas == 0 && !p.readout.trivial())
    report.warnings.push_back("protocol: readout errors with N_meas = inf are applied as an exact channel");
  if (!allow_large && p.n_meas > 0)
    for (int n : p.n_u)
      if (static_cast<long long>(n) * p.n_meas > 100000)
        err("protocol: N_U * N_meas = " + std::to_string(static_cast<long long>(n) * p.n_meas) +
            " exceeds 1e5 (pass --allow-large to override)");

  if (p.mode == RecordMode::Pulsed && !cfg.scenarios.empty()) {
    try {
      const PulseSchedule schedule = load_schedule(cfg);
      if (p.interactions) {
        for (const auto& s : cfg.scenarios) {
          const double phase = kTwoPi * max_coupling_mhz(s) * schedule.duration();
          if (phase > 1.0) {
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "scenario '%s': interaction phase J*T = %.3g rad during the rotation window exceeds 1 rad",
                          s.label.c_str(), phase);
            report.warnings.push_back(buf);
          }
        }
      }
    } catch (const Error& e) {
      err(std::string("protocol.schedule: ") + e.what());
    }
  }

  const int sites = cfg.scenarios.empty() ? 0 : cfg.scenarios.front().sites;
  for (const auto& sub : cfg.estimators.purity) {
    if (sub.empty()) err("estimators: empty purity subsystem");
    for (int site : sub)
      if (site < 1 || site > sites) err("estimators: purity site " + std::to_string(site) + " outside [1, L]");
  }
  for (const auto& o : cfg.estimators.observables)
    if (!o.op.empty() && !o.op.is_hermitian()) err("estimators: observable '" + o.name + "' is not Hermitian");
  if (cfg.estimators.purity.empty() && !cfg.estimators.energy && !cfg.estimators.variance &&
      cfg.estimators.observables.empty())
    err("estimators: nothing to estimate");
}

ExperimentConfig load_config(const std::filesystem::path& path, bool allow_large, ValidationReport* out) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ValidationReport report;
  ExperimentConfig cfg = parse_config(doc, path.parent_path(), report);
  validate_config(cfg, allow_large, report);
  if (out) *out = report;
  if (!report.ok()) {
    std::ostringstream msg;
    msg << path.string() << ": " << report.errors.size() << " problem(s)";
    for (const auto& e : report.errors) msg << "\n  - " << e;
    throw ConfigError(msg.str());
  }
  return cfg;
}

std::string config_hash(const nlohmann::json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PulseSchedule load_schedule(const ExperimentConfig& cfg) {
  if (cfg.protocol.schedule == "ideal") return ideal_schedule(0.15, 20.0);
  const auto path = cfg.base_dir / cfg.protocol.schedule;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schedule file " + path.string());
  const auto doc = nlohmann::json::parse(in);
  if (!doc.contains("params")) throw ConfigError(path.string() + ": missing 'params'");
  return realistic_schedule(RealisticParams::from_json(doc.at("params")));
}

}  // namespace rmkit
