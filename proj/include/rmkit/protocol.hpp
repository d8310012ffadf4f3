#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rmkit/evolve.hpp"
#include "rmkit/pauli.hpp"
#include "rmkit/pulses.hpp"
#include "rmkit/rng.hpp"
#include "rmkit/state.hpp"

namespace rmkit {

struct UnitarySample {
  std::vector<CliffordLabel> labels;
  std::uint64_t id = 0;
};

/// Independent flips at readout: 0 -> 1 with p_up_given_down, 1 -> 0 with p_down_given_up.
struct ReadoutErrorModel {
  double p_up_given_down = 0.0;
  double p_down_given_up = 0.0;

  bool trivial() const noexcept { return p_up_given_down == 0.0 && p_down_given_up == 0.0; }
  void validate() const;
};

enum class RecordMode { Ideal, Pulsed };
std::string to_string(RecordMode mode);

/// Outcome statistics of one unitary: empirical counts, or exact probabilities when shots == 0.
struct UnitaryOutcome {
  UnitarySample sample;
  Counts counts;
  Eigen::VectorXd probabilities;
  std::uint64_t seed = 0;
};

struct MeasurementRecord {
  int sites = 0;
  /// Shots per unitary; 0 means exact probabilities (N_meas = infinity).
  int shots = 0;
  RecordMode mode = RecordMode::Ideal;
  std::uint64_t master_seed = 0;
  std::vector<UnitaryOutcome> outcomes;

  bool exact() const noexcept { return shots == 0; }
  std::size_t unitaries() const noexcept { return outcomes.size(); }
  /// First `n` unitaries as a record of their own.
  MeasurementRecord prefix(std::size_t n) const;
  /// Throws StructuralError if counts do not sum to `shots` or probabilities to one.
  void validate() const;
};

/// i.i.d. uniform labels, one RNG stream per sample keyed by (seed, sample index).
std::vector<UnitarySample> sample_unitaries(int sites, int count, std::uint64_t seed);

/// All 3^L label assignments in lexicographic order (L <= 10).
std::vector<UnitarySample> enumerate_all_settings(int sites);

std::uint64_t apply_readout_errors(std::uint64_t bits, int sites, const ReadoutErrorModel& model, Rng& rng);
/// Exact readout channel applied to a probability vector.
Eigen::VectorXd apply_readout_errors(const Eigen::VectorXd& probabilities, int sites, const ReadoutErrorModel& model);

struct ProtocolOptions {
  /// 0 selects exact-probability mode.
  int shots = 0;
  ReadoutErrorModel readout;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Ideal local rotations without interactions.
MeasurementRecord run_ideal(const StateVector& psi, const std::vector<UnitarySample>& samples,
                            const ProtocolOptions& options);

struct PulsedOptions {
  FluctuationModel fluctuations;
  EvolveOptions evolve;
};

/// Evolves psi under the (perturbed) schedule plus H_mod for each sample. The record keeps the nominal
/// labels only. Step counts are fixed once from the nominal schedule with step doubling.
MeasurementRecord run_pulsed(const StateVector& psi, const std::vector<UnitarySample>& samples,
                             const PulseSchedule& schedule, const PauliStringSum& h_mod,
                             const ProtocolOptions& options, const PulsedOptions& pulsed = {});

/// Newline-delimited JSON: a header object then one object per unitary.
struct RecordHeader {
  std::string config_hash;
  std::string extra_json = "{}";
};
void write_record(std::ostream& out, const MeasurementRecord& record, const RecordHeader& header);
MeasurementRecord read_record(std::istream& in);

}  // namespace rmkit
