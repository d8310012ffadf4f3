#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "../unit/helpers.hpp"
#include "CLI11.hpp"
#include "rmkit/config.hpp"
#include "rmkit/experiment.hpp"
#include "rmkit/parallel.hpp"

using namespace rmkit;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(RMKIT_SOURCE_DIR) / "configs";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

struct Stat {
  double mean = 0.0;
  double std = 0.0;
  int n = 0;
  double se() const { return std / std::sqrt(static_cast<double>(n)); }
};

Stat stat_of(const std::vector<double>& v) {
  const EstimatorResult r = aggregate(v);
  return {r.value, r.std, r.n_ave};
}

int g_threads = 1;

// 1. Full enumeration of the 3^L settings reproduces purities and expectations exactly.
Outcome criterion_design_exactness() {
  Rng rng(derive_seed(101, 0));
  double worst_purity = 0.0;
  double worst_observable = 0.0;
  int subsystems = 0;
  for (int k = 0; k < 50; ++k) {
    const int sites = 1 + k % 3;
    const StateVector psi = testing::random_state(sites, rng);
    const MeasurementRecord record = run_ideal(psi, enumerate_all_settings(sites), {0, {}, 1, 1});
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << sites); ++mask) {
      std::vector<int> sub;
      for (int s = 1; s <= sites; ++s)
        if (mask & (std::uint64_t{1} << (s - 1))) sub.push_back(s);
      worst_purity =
          std::max(worst_purity, std::abs(purity_estimate(record, sub).value - exact_purity(psi, sub)));
      ++subsystems;
    }
    const PauliStringSum h = testing::random_hermitian(sites, 6, rng);
    worst_observable = std::max(worst_observable, std::abs(observable_expectation(record, h) - expectation(h, psi)));
  }
  return {worst_purity <= 1e-10 && worst_observable <= 1e-10,
          fmt("50 states, %d subsystems: max purity error %.2e, max observable error %.2e", subsystems, worst_purity,
              worst_observable)};
}

// 2. Dimer purities for the exact SSH ground state across system sizes.
Outcome criterion_dimer_purities() {
  bool pass = true;
  std::ostringstream detail;
  for (int sites : {6, 8, 10, 12}) {
    const SshPhase phase = sites % 4 == 0 ? SshPhase::Topological : SshPhase::Trivial;
    const StateVector gs = prepare_exact_gs(sites, phase);
    const std::vector<int> ells{sites / 2, sites / 2 + 1};
    std::vector<std::vector<double>> reps(2, std::vector<double>(20));
    for (int r = 0; r < 20; ++r) {
      const std::uint64_t seed = derive_seed(202, static_cast<std::uint64_t>(sites), static_cast<std::uint64_t>(r));
      const MeasurementRecord rec = run_ideal(gs, sample_unitaries(sites, 100, seed), {0, {}, seed, g_threads});
      for (std::size_t k = 0; k < 2; ++k)
        reps[k][static_cast<std::size_t>(r)] = purity_estimate(rec, left_block(ells[k])).value;
    }
    for (std::size_t k = 0; k < 2; ++k) {
      const double oracle = exact_purity(gs, left_block(ells[k]));
      const double nearest = std::abs(oracle - 0.5) < std::abs(oracle - 1.0) ? 0.5 : 1.0;
      const double expected = k == 0 ? 0.5 : 1.0;
      const Stat s = stat_of(reps[k]);
      const bool ok = nearest == expected && std::abs(s.mean - oracle) <= 3.0 * s.std;
      pass = pass && ok;
      detail << fmt("L=%d %s l=%d oracle %.4f RM %.4f+-%.4f%s; ", sites, to_string(phase).c_str(), ells[k], oracle,
                    s.mean, s.std, ok ? "" : " (off)");
    }
  }
  return {pass, detail.str()};
}

// Shared pulsed data for criteria 3 to 5: per repetition, estimates at nested prefixes of one N_U = 100 record.
struct PulsedData {
  std::vector<int> prefixes{10, 20, 40, 70, 100};
  // [scenario][target][prefix index][repetition]; targets: purity 4, purity 5, variance.
  std::map<std::string, std::vector<std::vector<std::vector<double>>>> values;
  std::map<std::string, std::vector<double>> oracle;
  bool ready = false;
};

PulsedData& pulsed_data() {
  static PulsedData data;
  if (data.ready) return data;
  ExperimentConfig cfg = load_config(kConfigs / "fig4_L8.json", false);
  const PulseSchedule schedule = load_schedule(cfg);
  const int n_ave = cfg.protocol.n_ave;
  for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
    const ScenarioConfig& sc = cfg.scenarios[si];
    const StateVector psi = sc.prepare();
    const PauliStringSum h = sc.model();
    const PauliStringSum h2 = square_observable(h);
    auto& v = data.values[sc.label];
    v.assign(3, std::vector<std::vector<double>>(data.prefixes.size(), std::vector<double>(static_cast<std::size_t>(n_ave))));
    parallel_for(static_cast<std::size_t>(n_ave), g_threads, [&](std::size_t r) {
      const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, si, 100), r, 0xa9e);
      const MeasurementRecord full = run_protocol(cfg, psi, h, schedule, 100, seed, 1);
      for (std::size_t pi = 0; pi < data.prefixes.size(); ++pi) {
        const MeasurementRecord rec = full.prefix(static_cast<std::size_t>(data.prefixes[pi]));
        v[0][pi][r] = purity_estimate(rec, left_block(4)).value;
        v[1][pi][r] = purity_estimate(rec, left_block(5)).value;
        v[2][pi][r] = hamiltonian_variance(rec, h, h2).value;
      }
    });
    const double e = expectation(h, psi);
    const double e2 = expectation(h2, psi);
    data.oracle[sc.label] = {exact_purity(psi, left_block(4)), exact_purity(psi, left_block(5)), (e2 - e * e) / e2};
  }
  data.ready = true;
  return data;
}

// 3. Noisy pulsed pipeline separates the two partitions and stays at or slightly below the exact purities.
Outcome criterion_noisy_pipeline() {
  PulsedData& d = pulsed_data();
  const auto& gs = d.values.at("gs");
  const std::size_t last = d.prefixes.size() - 1;
  const Stat p4 = stat_of(gs[0][last]);
  const Stat p5 = stat_of(gs[1][last]);
  const double gap = std::abs(p5.mean - p4.mean) / std::hypot(p4.std, p5.std);
  bool pass = gap > 3.0;
  std::ostringstream detail;
  detail << fmt("l=4 %.4f+-%.4f, l=5 %.4f+-%.4f, separation %.2f combined std (%.2f combined SE); ", p4.mean,
                p4.std, p5.mean, p5.std, gap, std::abs(p5.mean - p4.mean) / std::hypot(p4.se(), p5.se()));
  const Stat ps[2] = {p4, p5};
  for (int k = 0; k < 2; ++k) {
    const double oracle = d.oracle.at("gs")[static_cast<std::size_t>(k)];
    const double shift = ps[k].mean - oracle;
    const bool ok = shift <= 3.0 * ps[k].se() && shift >= -0.1 * oracle - 3.0 * ps[k].se();
    pass = pass && ok;
    detail << fmt("l=%d oracle %.4f shift %+.4f (SE %.4f)%s; ", 4 + k, oracle, shift, ps[k].se(), ok ? "" : " (off)");
  }
  return {pass, detail.str()};
}

// 4. Repetition std of the l = L/2 purity falls as N_U^(-1/2).
Outcome criterion_error_scaling() {
  PulsedData& d = pulsed_data();
  const auto& gs = d.values.at("gs");
  std::vector<double> x, y4, y5;
  for (std::size_t pi = 0; pi < d.prefixes.size(); ++pi) {
    x.push_back(d.prefixes[pi]);
    y4.push_back(stat_of(gs[0][pi]).std);
    y5.push_back(stat_of(gs[1][pi]).std);
  }
  const double slope = loglog_slope(x, y4);
  std::ostringstream detail;
  detail << fmt("slope l=4 %.3f (l=5 %.3f); std l=4:", slope, loglog_slope(x, y5));
  for (double s : y4) detail << fmt(" %.4f", s);
  return {std::abs(slope + 0.5) <= 0.1, detail.str()};
}

// 5. Normalized variance distinguishes the ground state from the antiferromagnet.
Outcome criterion_variance_separation() {
  PulsedData& d = pulsed_data();
  const std::size_t last = d.prefixes.size() - 1;
  const Stat gs = stat_of(d.values.at("gs")[2][last]);
  const Stat af = stat_of(d.values.at("af")[2][last]);
  const double gap = std::abs(af.mean - gs.mean) / std::hypot(gs.std, af.std);

  const StateVector psi = prepare_exact_gs(8, SshPhase::Topological);
  const PauliStringSum h = ssh_spec(8, SshPhase::Topological).build();
  const MeasurementRecord all = run_ideal(psi, enumerate_all_settings(8), {0, {}, 1, g_threads});
  const double enumerated = hamiltonian_variance(all, h).value;
  const bool pass = gap > 3.0 && std::abs(enumerated) <= 1e-10;
  return {pass, fmt("GS %.4f+-%.4f (oracle %.2e), AF %.4f+-%.4f (oracle %.4f), separation %.2f combined std; "
                    "enumerated GS variance %.2e",
                    gs.mean, gs.std, d.oracle.at("gs")[2], af.mean, af.std, d.oracle.at("af")[2], gap, enumerated)};
}

// 6. Rotation statistics of the calibrated schedule.
Outcome criterion_rotation_statistics() {
  ExperimentConfig cfg = load_config(kConfigs / "fig4_L8.json", false);
  const PulseSchedule schedule = load_schedule(cfg);
  std::array<double, 3> fid{};
  for (int a = 1; a <= 3; ++a) {
    const CliffordLabel label = clifford_from_int(a);
    fid[static_cast<std::size_t>(a - 1)] = rotation_fidelity(single_qubit_propagator(schedule, label), label);
  }
  const auto ideal = figure_of_merit(ideal_rotations());
  const FigureOfMeritStats stats = figure_of_merit_statistics(schedule, 3.0, 100000, 606, g_threads);
  const std::array<double, 3> target{0.55, 0.56, 0.58};
  bool means_ok = true;
  for (std::size_t a = 0; a < 3; ++a) means_ok = means_ok && std::abs(stats.mean[a] - target[a]) <= 0.05;
  bool fid_ok = true;
  for (double f : fid) fid_ok = fid_ok && f >= 0.995;
  bool ideal_ok = true;
  for (double v : ideal) ideal_ok = ideal_ok && std::abs(v - 1.0) <= 1e-12;
  return {means_ok && fid_ok && ideal_ok,
          fmt("A/2 mean %.4f %.4f %.4f (std %.4f %.4f %.4f) vs 0.55 0.56 0.58%s; fidelities %.6f %.6f %.6f; "
              "ideal A %.12f %.12f %.12f",
              stats.mean[0], stats.mean[1], stats.mean[2], stats.std[0], stats.std[1], stats.std[2],
              means_ok ? "" : " (means off)", fid[0], fid[1], fid[2], ideal[0], ideal[1], ideal[2])};
}

// 7. Shot-noise bias correction is unbiased under multinomial resampling.
Outcome criterion_bias_correction() {
  const StateVector psi = prepare_exact_gs(6, SshPhase::Trivial);
  const auto samples = sample_unitaries(6, 20, 707);
  const MeasurementRecord exact = run_ideal(psi, samples, {0, {}, 1, 1});
  constexpr int kResamples = 10000;
  bool pass = true;
  std::ostringstream detail;
  for (BiasCorrection correction : {BiasCorrection::ClosedForm, BiasCorrection::UStatistic}) {
    std::vector<std::vector<double>> values(3, std::vector<double>(kResamples));
    parallel_for(kResamples, g_threads, [&](std::size_t b) {
      const MeasurementRecord rec = run_ideal(psi, samples, {50, {}, derive_seed(708, b), 1});
      for (int ell = 1; ell <= 3; ++ell)
        values[static_cast<std::size_t>(ell - 1)][b] = purity_estimate(rec, left_block(ell), correction).value;
    });
    for (int ell = 1; ell <= 3; ++ell) {
      const double reference = purity_estimate(exact, left_block(ell)).value;
      const Stat s = stat_of(values[static_cast<std::size_t>(ell - 1)]);
      const double z = (s.mean - reference) / s.se();
      pass = pass && std::abs(z) <= 5.0;
      detail << fmt("%s l=%d z=%+.2f; ", correction == BiasCorrection::ClosedForm ? "closed" : "ustat", ell, z);
    }
  }
  return {pass, detail.str()};
}

// 8. Entanglement profile after a domain-wall quench.
Outcome criterion_quench_profile() {
  const ExperimentConfig cfg = load_config(kConfigs / "fig7_quench.json", false);
  const auto rows = run_experiment(cfg, {g_threads, {}});
  const auto exact = oracle_rows(cfg);
  bool pass = true;
  std::ostringstream detail;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const bool ok = std::abs(rows[k].value - exact[k].value) <= 3.0 * rows[k].std;
    pass = pass && ok;
    detail << fmt("l=%zu %.4f+-%.4f oracle %.4f%s; ", k + 1, rows[k].value, rows[k].std, exact[k].value,
                  ok ? "" : " (off)");
  }
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const bool ok = rows[k + 1].value - rows[k].value <= std::hypot(rows[k].std, rows[k + 1].std);
    if (!ok) detail << fmt("rise between l=%zu and l=%zu; ", k + 1, k + 2);
    pass = pass && ok;
  }
  return {pass, detail.str()};
}

// 9. Adiabatic preparation approaches the ground state as the ramp slows down.
Outcome criterion_adiabatic_trend() {
  const int sites = 8;
  const PauliStringSum h = ssh_spec(sites, SshPhase::Topological).build();
  const PauliStringSum h2 = square_observable(h);
  const StateVector gs = prepare_exact_gs(sites, SshPhase::Topological);
  const double gs4 = exact_purity(gs, left_block(4));
  const double gs5 = exact_purity(gs, left_block(5));
  const std::vector<double> times{0.5, 1.0, 2.0, 5.0, 10.0};
  std::vector<double> variance(times.size()), gap(times.size());
  parallel_for(times.size(), g_threads, [&](std::size_t k) {
    const StateVector psi = prepare_adiabatic(h, times[k]);
    const double e = expectation(h, psi);
    const double e2 = expectation(h2, psi);
    variance[k] = (e2 - e * e) / e2;
    gap[k] = std::max(std::abs(exact_purity(psi, left_block(4)) - gs4), std::abs(exact_purity(psi, left_block(5)) - gs5));
  });
  bool monotone = true;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) monotone = monotone && variance[k + 1] < variance[k];
  const bool small = variance.back() < 0.05;
  const bool approach = gap.back() < gap.front() && gap.back() < 0.1;
  std::ostringstream detail;
  detail << "variance:";
  for (std::size_t k = 0; k < times.size(); ++k) detail << fmt(" T_P=%g %.4f", times[k], variance[k]);
  detail << "; max purity gap to GS:";
  for (double g : gap) detail << fmt(" %.4f", g);
  return {monotone && small && approach, detail.str()};
}

// Shrinks the sampling budget so every shipped config can be rerun within the suite.
ExperimentConfig reduced(ExperimentConfig cfg) {
  cfg.protocol.n_u = {std::min(cfg.protocol.n_u.front(), 10)};
  cfg.protocol.n_ave = std::min(cfg.protocol.n_ave, 3);
  return cfg;
}

// 10. Byte-identical CSV across reruns and thread counts.
Outcome criterion_determinism() {
  bool pass = true;
  std::ostringstream detail;
  for (const auto& entry : std::filesystem::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    nlohmann::json doc = nlohmann::json::parse(std::ifstream(entry.path()));
    if (!doc.contains("scenario")) continue;
    ExperimentConfig cfg = load_config(entry.path(), false);
    if (cfg.name != "quick") cfg = reduced(cfg);
    std::string first;
    bool same = true;
    for (int threads : {1, 3, 1}) {
      std::ostringstream out;
      write_csv(out, run_experiment(cfg, {threads, {}}), csv_metadata(cfg));
      if (first.empty()) first = out.str();
      else same = same && out.str() == first;
    }
    pass = pass && same;
    detail << entry.path().filename().string() << (same ? " identical" : " DIFFERS") << "; ";
  }
  return {pass, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-10"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--threads", g_threads, "Worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"2-design exactness", criterion_design_exactness},
      {"dimer purities", criterion_dimer_purities},
      {"noisy pipeline", criterion_noisy_pipeline},
      {"error scaling", criterion_error_scaling},
      {"variance separation", criterion_variance_separation},
      {"rotation statistics", criterion_rotation_statistics},
      {"bias correction", criterion_bias_correction},
      {"quench profile", criterion_quench_profile},
      {"adiabatic trend", criterion_adiabatic_trend},
      {"determinism", criterion_determinism},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << ", "
              << fmt("%.1f s", secs) << "): " << o.detail << std::endl;
  }
  std::cout << (failures ? std::to_string(failures) + " criterion(s) failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
