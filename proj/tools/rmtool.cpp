#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "rmkit/config.hpp"
#include "rmkit/experiment.hpp"
#include "rmkit/pulses.hpp"

namespace {

using namespace rmkit;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool allow_large = false;
  std::string out;
};

ExperimentConfig load(const CommonFlags& flags) {
  ValidationReport report;
  ExperimentConfig cfg = load_config(flags.config, flags.allow_large, &report);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  if (flags.seed) cfg.seed = *flags.seed;
  return cfg;
}

int cmd_run(const CommonFlags& flags) {
  const ExperimentConfig cfg = load(flags);
  const auto path = run_to_directory(cfg, {flags.threads, flags.out});
  std::cout << path.string() << '\n';
  return 0;
}

int cmd_oracle(const CommonFlags& flags) {
  const ExperimentConfig cfg = load(flags);
  const auto path = oracle_to_directory(cfg, {flags.threads, flags.out});
  std::ifstream in(path);
  std::cout << in.rdbuf();
  return 0;
}

int cmd_validate(const CommonFlags& flags) {
  ValidationReport report;
  try {
    load_config(flags.config, flags.allow_large, &report);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    return 2;
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << flags.config << ": ok\n";
  return 0;
}

struct CalibrateFlags {
  std::string constraints;
  std::string out = "rstar_schedule.json";
  std::size_t mc_draws = 20000;
  double eps_percent = 3.0;
  std::uint64_t seed = 1;
  int threads = 1;
};

int cmd_calibrate(const CalibrateFlags& flags) {
  CalibrationOptions options;
  RealisticParams start = default_realistic_params(options.limits);
  if (!flags.constraints.empty()) {
    std::ifstream in(flags.constraints);
    if (!in) throw ConfigError("cannot open constraints file " + flags.constraints);
    const auto doc = nlohmann::json::parse(in);
    for (const auto& [key, value] : doc.items()) {
      if (key == "max_amplitude_mhz") options.limits.max_amplitude = kTwoPi * value.get<double>();
      else if (key == "max_slew_mhz_per_us") options.limits.max_slew = kTwoPi * value.get<double>();
      else if (key == "fidelity_floor") options.fidelity_floor = value.get<double>();
      else if (key == "restarts") options.restarts = value.get<int>();
      else if (key == "max_evaluations") options.max_evaluations = value.get<int>();
      else if (key == "start") start = RealisticParams::from_json(value);
      else throw ConfigError(flags.constraints + ": unknown key '" + key + "'");
    }
    if (!doc.contains("start")) start = default_realistic_params(options.limits);
  }
  options.seed = flags.seed;
  const CalibrationResult result = calibrate(start, options);
  const PulseSchedule schedule = realistic_schedule(result.params, options.limits);

  nlohmann::json report = {
      {"params", result.params.to_json()},
      {"fidelities", result.fidelities},
      {"fidelity_floor", options.fidelity_floor},
      {"evaluations", result.evaluations},
      {"limits", {{"max_amplitude", options.limits.max_amplitude}, {"max_slew", options.limits.max_slew}}},
      {"peak_amplitude", schedule.peak_amplitude()},
      {"peak_slew", schedule.peak_slew()},
      {"converged_steps", converged_steps(schedule)},
      {"rotation_ordering", std::string(kRotationOrdering)},
      {"ideal_set_figure_of_merit", figure_of_merit(ideal_rotations())},
  };
  if (flags.mc_draws > 0) {
    const auto stats = figure_of_merit_statistics(schedule, flags.eps_percent, flags.mc_draws, flags.seed, flags.threads);
    report["figure_of_merit"] = {{"eps_percent", flags.eps_percent},
                                 {"draws", stats.draws},
                                 {"seed", flags.seed},
                                 {"mean_half", stats.mean},
                                 {"std_half", stats.std}};
  }
  report["schedule"] = schedule.to_json();
  std::ofstream out(flags.out);
  if (!out) throw Error("cannot write " + flags.out);
  out << report.dump(2) << '\n';

  std::cout << "fidelities:";
  for (double f : result.fidelities) std::cout << ' ' << f;
  std::cout << '\n';
  if (report.contains("figure_of_merit")) {
    std::cout << "A/2 mean:";
    for (double m : report["figure_of_merit"]["mean_half"]) std::cout << ' ' << m;
    std::cout << '\n';
  }
  std::cout << "wrote " << flags.out << '\n';
  return 0;
}

void add_common(CLI::App* sub, CommonFlags& flags, bool with_seed) {
  sub->add_option("config", flags.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  if (with_seed) sub->add_option("--seed", flags.seed, "Override the master seed");
  sub->add_option("--threads", flags.threads, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_flag("--allow-large", flags.allow_large, "Permit N_U * N_meas above 1e5");
  sub->add_option("--out", flags.out, "Output directory (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized-measurement toolkit: experiments, calibration and exact references"};
  app.require_subcommand(1);

  CommonFlags run_flags, oracle_flags, validate_flags;
  CalibrateFlags cal_flags;
  auto* run = app.add_subcommand("run", "Run an experiment config and write results.csv plus records");
  add_common(run, run_flags, true);
  auto* oracle = app.add_subcommand("oracle", "Exact state-vector values for a config's targets");
  add_common(oracle, oracle_flags, false);
  auto* validate = app.add_subcommand("validate", "Check a config and list every problem");
  validate->add_option("config", validate_flags.config, "Experiment config (JSON)")->required();
  validate->add_flag("--allow-large", validate_flags.allow_large, "Permit N_U * N_meas above 1e5");
  auto* cal = app.add_subcommand("calibrate", "Optimize the realistic rotation schedule");
  cal->add_option("constraints", cal_flags.constraints, "Constraints JSON (optional)");
  cal->add_option("--out", cal_flags.out, "Output schedule file");
  cal->add_option("--mc-draws", cal_flags.mc_draws, "Monte Carlo draws for the figure of merit (0 disables)");
  cal->add_option("--eps", cal_flags.eps_percent, "Fluctuation level in percent");
  cal->add_option("--seed", cal_flags.seed, "Seed for restarts and Monte Carlo");
  cal->add_option("--threads", cal_flags.threads, "Worker threads")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_flags);
    if (*oracle) return cmd_oracle(oracle_flags);
    if (*validate) return cmd_validate(validate_flags);
    if (*cal) return cmd_calibrate(cal_flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
