#include "rmkit/protocol.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>

#include "rmkit/parallel.hpp"

namespace rmkit {

namespace {

constexpr std::uint64_t kStreamLabels = 0x1abe1;
constexpr std::uint64_t kStreamShots = 0x5407;

Counts flip_counts(const Counts& counts, int sites, const ReadoutErrorModel& model, Rng& rng) {
  if (model.trivial()) return counts;
  Counts out;
  for (const auto& [bits, n] : counts)
    for (int k = 0; k < n; ++k) ++out[apply_readout_errors(bits, sites, model, rng)];
  return out;
}

Counts sample_with_readout(const Eigen::VectorXd& probs, int sites, int shots, const ReadoutErrorModel& model,
                           Rng& rng) {
  return flip_counts(sample_counts(probs, shots, rng), sites, model, rng);
}

}  // namespace

void ReadoutErrorModel::validate() const {
  auto ok = [](double p) { return p >= 0.0 && p < 1.0; };
  if (!ok(p_up_given_down) || !ok(p_down_given_up))
    throw DomainError("readout error probabilities must lie in [0, 1)");
}

std::string to_string(RecordMode mode) { return mode == RecordMode::Ideal ? "ideal" : "pulsed"; }

MeasurementRecord MeasurementRecord::prefix(std::size_t n) const {
  MeasurementRecord out = *this;
  out.outcomes.resize(std::min(n, outcomes.size()));
  return out;
}

void MeasurementRecord::validate() const {
  const Eigen::Index dim = Eigen::Index{1} << sites;
  for (const auto& o : outcomes) {
    if (static_cast<int>(o.sample.labels.size()) != sites) throw StructuralError("record: label count differs from L");
    if (exact()) {
      if (o.probabilities.size() != dim) throw StructuralError("record: probability vector has wrong length");
      if (std::abs(o.probabilities.sum() - 1.0) > 1e-12) throw StructuralError("record: probabilities do not sum to 1");
    } else {
      long total = 0;
      for (const auto& [bits, n] : o.counts) {
        if (bits >= static_cast<std::uint64_t>(dim)) throw StructuralError("record: bitstring longer than L");
        total += n;
      }
      if (total != shots) throw StructuralError("record: counts do not sum to N_meas");
    }
  }
}

std::vector<UnitarySample> sample_unitaries(int sites, int count, std::uint64_t seed) {
  if (count < 1) throw DomainError("sample_unitaries: need at least one unitary");
  if (sites < 1) throw DomainError("sample_unitaries: need at least one site");
  std::vector<UnitarySample> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i), kStreamLabels));
    std::uniform_int_distribution<int> pick(1, 3);
    auto& s = out[static_cast<std::size_t>(i)];
    s.id = static_cast<std::uint64_t>(i);
    s.labels.resize(static_cast<std::size_t>(sites));
    for (auto& l : s.labels) l = clifford_from_int(pick(rng));
  }
  return out;
}

std::vector<UnitarySample> enumerate_all_settings(int sites) {
  if (sites < 1 || sites > 10) throw DomainError("enumerate_all_settings: 1 <= L <= 10");
  std::size_t total = 1;
  for (int i = 0; i < sites; ++i) total *= 3;
  std::vector<UnitarySample> out(total);
  for (std::size_t k = 0; k < total; ++k) {
    out[k].id = k;
    out[k].labels.resize(static_cast<std::size_t>(sites));
    std::size_t rest = k;
    for (int m = sites - 1; m >= 0; --m) {
      out[k].labels[static_cast<std::size_t>(m)] = clifford_from_int(static_cast<int>(rest % 3) + 1);
      rest /= 3;
    }
  }
  return out;
}

std::uint64_t apply_readout_errors(std::uint64_t bits, int sites, const ReadoutErrorModel& model, Rng& rng) {
  if (model.trivial()) return bits;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < sites; ++k) {
    const std::uint64_t mask = std::uint64_t{1} << k;
    const double p = (bits & mask) ? model.p_down_given_up : model.p_up_given_down;
    if (u(rng) < p) bits ^= mask;
  }
  return bits;
}

Eigen::VectorXd apply_readout_errors(const Eigen::VectorXd& probabilities, int sites, const ReadoutErrorModel& model) {
  if (model.trivial()) return probabilities;
  Eigen::VectorXd p = probabilities;
  const double a = model.p_up_given_down;
  const double b = model.p_down_given_up;
  for (int k = 0; k < sites; ++k) {
    const Eigen::Index stride = Eigen::Index{1} << k;
    for (Eigen::Index block = 0; block < p.size(); block += 2 * stride)
      for (Eigen::Index i = block; i < block + stride; ++i) {
        const double p0 = p(i);
        const double p1 = p(i + stride);
        p(i) = (1.0 - a) * p0 + b * p1;
        p(i + stride) = a * p0 + (1.0 - b) * p1;
      }
  }
  return p;
}

MeasurementRecord run_ideal(const StateVector& psi, const std::vector<UnitarySample>& samples,
                            const ProtocolOptions& options) {
  options.readout.validate();
  if (options.shots < 0) throw DomainError("run_ideal: shots must be >= 0");
  MeasurementRecord record;
  record.sites = psi.size();
  record.shots = options.shots;
  record.mode = RecordMode::Ideal;
  record.master_seed = options.seed;
  record.outcomes.resize(samples.size());
  parallel_for(samples.size(), options.threads, [&](std::size_t i) {
    const auto& sample = samples[i];
    UnitaryOutcome& o = record.outcomes[i];
    o.sample = sample;
    o.seed = derive_seed(options.seed, sample.id, kStreamShots);
    const Eigen::VectorXd probs = apply_local_unitaries(psi, sample.labels).probabilities();
    if (options.shots == 0) {
      o.probabilities = apply_readout_errors(probs, psi.size(), options.readout);
    } else {
      Rng rng(o.seed);
      o.counts = sample_with_readout(probs, psi.size(), options.shots, options.readout, rng);
    }
  });
  return record;
}

MeasurementRecord run_pulsed(const StateVector& psi, const std::vector<UnitarySample>& samples,
                             const PulseSchedule& schedule, const PauliStringSum& h_mod,
                             const ProtocolOptions& options, const PulsedOptions& pulsed) {
  options.readout.validate();
  const int sites = psi.size();
  if (options.shots < 0) throw DomainError("run_pulsed: shots must be >= 0");
  if (pulsed.fluctuations.scope == FluctuationScope::PerShot && options.shots == 0)
    throw DomainError("run_pulsed: per-shot fluctuations need a finite number of shots");
  if (!h_mod.empty() && h_mod.size() != sites) throw StructuralError("run_pulsed: H_mod size differs from state");

  const StaticGenerator generator = h_mod.empty() ? StaticGenerator() : StaticGenerator(h_mod);
  const StaticGenerator* gen = h_mod.empty() ? nullptr : &generator;

  std::vector<CliffordLabel> mixed(static_cast<std::size_t>(sites));
  for (int m = 0; m < sites; ++m) mixed[static_cast<std::size_t>(m)] = clifford_from_int(m % 3 + 1);
  const Drive probe = make_drive(schedule, mixed);
  EvolveReport report;
  (void)evolve(psi, &probe, gen, 0.0, schedule.duration(), pulsed.evolve, &report);
  EvolveOptions fixed = pulsed.evolve;
  fixed.fixed_steps = report.steps_per_interval;

  MeasurementRecord record;
  record.sites = sites;
  record.shots = options.shots;
  record.mode = RecordMode::Pulsed;
  record.master_seed = options.seed;
  record.outcomes.resize(samples.size());

  parallel_for(samples.size(), options.threads, [&](std::size_t i) {
    const auto& sample = samples[i];
    UnitaryOutcome& o = record.outcomes[i];
    o.sample = sample;
    o.seed = derive_seed(options.seed, sample.id, kStreamShots);
    Rng rng(o.seed);
    auto run_once = [&](Rng& r) {
      const PulseSchedule noisy = perturb(schedule, pulsed.fluctuations, r);
      const Drive drive = make_drive(noisy, sample.labels);
      try {
        return evolve(psi, &drive, gen, 0.0, noisy.duration(), fixed).probabilities();
      } catch (const Error& e) {
        throw Error("unitary sample " + std::to_string(sample.id) + " (seed " + std::to_string(o.seed) +
                    "): " + e.what());
      }
    };
    if (pulsed.fluctuations.scope == FluctuationScope::PerUnitary) {
      const Eigen::VectorXd probs = run_once(rng);
      if (options.shots == 0)
        o.probabilities = apply_readout_errors(probs, sites, options.readout);
      else
        o.counts = sample_with_readout(probs, sites, options.shots, options.readout, rng);
    } else {
      for (int shot = 0; shot < options.shots; ++shot) {
        const Eigen::VectorXd probs = run_once(rng);
        for (const auto& [bits, n] : sample_with_readout(probs, sites, 1, options.readout, rng)) o.counts[bits] += n;
      }
    }
  });
  return record;
}

void write_record(std::ostream& out, const MeasurementRecord& record, const RecordHeader& header) {
  nlohmann::json head = {{"type", "header"},
                         {"format", "rmkit-record-1"},
                         {"config_hash", header.config_hash},
                         {"bit_convention", std::string(kBitConvention)},
                         {"rotation_ordering", std::string(kRotationOrdering)},
                         {"L", record.sites},
                         {"N_meas", record.exact() ? nlohmann::json("inf") : nlohmann::json(record.shots)},
                         {"N_U", record.unitaries()},
                         {"mode", to_string(record.mode)},
                         {"seed", record.master_seed},
                         {"extra", nlohmann::json::parse(header.extra_json)}};
  out << head.dump() << '\n';
  for (const auto& o : record.outcomes) {
    nlohmann::json line;
    std::vector<int> labels;
    for (auto l : o.sample.labels) labels.push_back(to_int(l));
    line["id"] = o.sample.id;
    line["labels"] = labels;
    line["seed"] = o.seed;
    if (record.exact()) {
      line["probabilities"] = std::vector<double>(o.probabilities.data(), o.probabilities.data() + o.probabilities.size());
    } else {
      nlohmann::json counts = nlohmann::json::object();
      for (const auto& [bits, n] : o.counts) counts[to_bitstring(bits, record.sites)] = n;
      line["counts"] = counts;
    }
    out << line.dump() << '\n';
  }
}

MeasurementRecord read_record(std::istream& in) {
  std::string text;
  if (!std::getline(in, text)) throw StructuralError("record: missing header line");
  const auto head = nlohmann::json::parse(text);
  if (head.value("type", "") != "header") throw StructuralError("record: first line is not a header");
  if (head.value("bit_convention", "") != kBitConvention)
    throw StructuralError("record: bit convention differs from " + std::string(kBitConvention));
  MeasurementRecord record;
  record.sites = head.at("L").get<int>();
  record.shots = head.at("N_meas").is_string() ? 0 : head.at("N_meas").get<int>();
  record.mode = head.at("mode").get<std::string>() == "ideal" ? RecordMode::Ideal : RecordMode::Pulsed;
  record.master_seed = head.at("seed").get<std::uint64_t>();
  while (std::getline(in, text)) {
    if (text.empty()) continue;
    const auto line = nlohmann::json::parse(text);
    UnitaryOutcome o;
    o.sample.id = line.at("id").get<std::uint64_t>();
    for (int l : line.at("labels").get<std::vector<int>>()) o.sample.labels.push_back(clifford_from_int(l));
    o.seed = line.at("seed").get<std::uint64_t>();
    if (record.exact()) {
      const auto p = line.at("probabilities").get<std::vector<double>>();
      o.probabilities = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    } else {
      for (const auto& [bits, n] : line.at("counts").items()) o.counts[parse_bitstring(bits)] = n.get<int>();
    }
    record.outcomes.push_back(std::move(o));
  }
  record.validate();
  return record;
}

}  // namespace rmkit
