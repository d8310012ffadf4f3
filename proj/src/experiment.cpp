#include "rmkit/experiment.hpp"

#include <fstream>

#include "rmkit/parallel.hpp"

namespace rmkit {

namespace {

std::string scenario_target(const ScenarioConfig& s, const std::string& what) { return s.label + ":" + what; }

std::filesystem::path output_dir(const ExperimentConfig& config, const RunOptions& options) {
  return options.out_dir.empty() ? std::filesystem::path(config.output.dir) : options.out_dir;
}

}  // namespace

MeasurementRecord run_protocol(const ExperimentConfig& config, const StateVector& state, const PauliStringSum& h_mod,
                               const PulseSchedule& schedule, int n_u, std::uint64_t seed, int threads) {
  const auto& p = config.protocol;
  const auto samples = sample_unitaries(state.size(), n_u, derive_seed(seed, 1));
  ProtocolOptions options{p.n_meas, p.readout, derive_seed(seed, 2), threads};
  if (p.mode == RecordMode::Ideal) return run_ideal(state, samples, options);
  PulsedOptions pulsed;
  pulsed.fluctuations = {p.eps_percent, p.scope};
  pulsed.evolve.tol = p.evolve_tol;
  return run_pulsed(state, samples, schedule, p.interactions ? h_mod : PauliStringSum(state.size()), options, pulsed);
}

TargetList estimator_targets(const ExperimentConfig& config, const ScenarioConfig& scenario) {
  TargetList t;
  const auto& e = config.estimators;
  for (const auto& sub : e.purity) {
    t.quantity.push_back("purity");
    t.target.push_back(scenario_target(scenario, format_sites(sub)));
  }
  if (e.energy) {
    t.quantity.push_back("energy");
    t.target.push_back(scenario_target(scenario, "H"));
  }
  if (e.variance) {
    t.quantity.push_back("variance");
    t.target.push_back(scenario_target(scenario, "H"));
  }
  for (const auto& o : e.observables) {
    t.quantity.push_back("observable");
    t.target.push_back(scenario_target(scenario, o.name));
  }
  return t;
}

std::vector<double> evaluate_targets(const ExperimentConfig& config, const MeasurementRecord& record,
                                     const PauliStringSum& h_mod, const PauliStringSum& h_squared) {
  const auto& e = config.estimators;
  std::vector<double> out;
  for (const auto& sub : e.purity) out.push_back(purity_estimate(record, sub, e.correction).value);
  if (e.energy) out.push_back(observable_expectation(record, h_mod));
  if (e.variance) out.push_back(hamiltonian_variance(record, h_mod, h_squared).value);
  for (const auto& o : e.observables) out.push_back(observable_expectation(record, o.op));
  return out;
}

CsvMetadata csv_metadata(const ExperimentConfig& config) {
  CsvMetadata meta;
  meta.config_hash = config.hash;
  meta.master_seed = config.seed;
  meta.extra.emplace_back("name", config.name);
  for (const auto& s : config.scenarios) {
    std::string d = to_string(s.kind) + " L=" + std::to_string(s.sites);
    if (s.kind == ScenarioKind::SshGroundState || s.kind == ScenarioKind::Adiabatic)
      d += " phase=" + to_string(s.phase);
    if (s.kind == ScenarioKind::Quench) d += " domain_wall_site=" + std::to_string(domain_wall_site(s.sites));
    meta.extra.emplace_back("scenario." + s.label, d);
  }
  return meta;
}

std::vector<CsvRow> run_experiment(const ExperimentConfig& config, const RunOptions& options,
                                   const std::filesystem::path& records_dir) {
  const auto& p = config.protocol;
  const PulseSchedule schedule = p.mode == RecordMode::Pulsed ? load_schedule(config) : PulseSchedule();
  std::vector<CsvRow> rows;
  for (std::size_t si = 0; si < config.scenarios.size(); ++si) {
    const ScenarioConfig& scenario = config.scenarios[si];
    const StateVector state = scenario.prepare();
    const PauliStringSum h_mod = scenario.model();
    const PauliStringSum h_squared = config.estimators.variance ? square_observable(h_mod) : PauliStringSum(h_mod.size());
    const TargetList targets = estimator_targets(config, scenario);

    for (int n_u : p.n_u) {
      std::vector<std::vector<double>> values(static_cast<std::size_t>(p.n_ave));
      const int outer = p.n_ave > 1 ? options.threads : 1;
      const int inner = p.n_ave > 1 ? 1 : options.threads;
      parallel_for(values.size(), outer, [&](std::size_t r) {
        const std::uint64_t seed =
            derive_seed(derive_seed(config.seed, si, static_cast<std::uint64_t>(n_u)), r, 0xa9e);
        const MeasurementRecord record = run_protocol(config, state, h_mod, schedule, n_u, seed, inner);
        values[r] = evaluate_targets(config, record, h_mod, h_squared);
        const bool keep = config.output.records == RecordPolicy::All ||
                          (config.output.records == RecordPolicy::First && r == 0);
        if (keep && !records_dir.empty()) {
          const auto path = records_dir / (scenario.label + "_NU" + std::to_string(n_u) + "_rep" +
                                           std::to_string(r) + ".ndjson");
          std::ofstream out(path);
          if (!out) throw Error("cannot write record file " + path.string());
          nlohmann::json extra = {{"scenario", scenario.label},
                                  {"kind", to_string(scenario.kind)},
                                  {"repetition", r},
                                  {"repetition_seed", seed},
                                  {"eps_percent", p.eps_percent},
                                  {"readout", {p.readout.p_up_given_down, p.readout.p_down_given_up}}};
          if (scenario.kind == ScenarioKind::Quench) extra["domain_wall_site"] = domain_wall_site(scenario.sites);
          write_record(out, record, {config.hash, extra.dump()});
        }
      });
      for (std::size_t k = 0; k < targets.quantity.size(); ++k) {
        std::vector<double> column;
        for (const auto& v : values) column.push_back(v[k]);
        const EstimatorResult agg = aggregate(column);
        rows.push_back({targets.quantity[k], targets.target[k], scenario.sites, static_cast<std::size_t>(n_u),
                        p.n_meas, p.eps_percent, to_string(p.mode), agg.value, agg.std, config.seed});
      }
    }
  }
  return rows;
}

std::vector<CsvRow> oracle_rows(const ExperimentConfig& config) {
  std::vector<CsvRow> rows;
  for (const auto& scenario : config.scenarios) {
    const StateVector state = scenario.prepare();
    const PauliStringSum h_mod = scenario.model();
    const TargetList targets = estimator_targets(config, scenario);
    std::vector<double> values;
    for (const auto& sub : config.estimators.purity) values.push_back(exact_purity(state, sub));
    const double e = expectation(h_mod, state);
    if (config.estimators.energy) values.push_back(e);
    if (config.estimators.variance) {
      const double e2 = expectation(square_observable(h_mod), state);
      values.push_back((e2 - e * e) / e2);
    }
    for (const auto& o : config.estimators.observables) values.push_back(expectation(o.op, state));
    for (std::size_t k = 0; k < values.size(); ++k)
      rows.push_back({targets.quantity[k], targets.target[k], scenario.sites, 0, 0, 0.0, "oracle", values[k], 0.0,
                      config.seed});
  }
  return rows;
}

std::filesystem::path run_to_directory(const ExperimentConfig& config, const RunOptions& options) {
  const auto dir = output_dir(config, options);
  const auto records = dir / "records";
  std::filesystem::create_directories(records);
  const auto rows = run_experiment(config, options,
                                   config.output.records == RecordPolicy::None ? std::filesystem::path() : records);
  const auto path = dir / "results.csv";
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_csv(out, rows, csv_metadata(config));
  return path;
}

std::filesystem::path oracle_to_directory(const ExperimentConfig& config, const RunOptions& options) {
  const auto dir = output_dir(config, options);
  std::filesystem::create_directories(dir);
  const auto path = dir / "oracle.csv";
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_csv(out, oracle_rows(config), csv_metadata(config));
  return path;
}

}  // namespace rmkit
