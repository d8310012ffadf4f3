#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rmkit/pauli.hpp"
#include "rmkit/protocol.hpp"

namespace rmkit {

struct EstimatorResult {
  double value = 0.0;
  /// Sample standard deviation over `n_ave` repetitions (0 for a single repetition).
  double std = 0.0;
  std::size_t n_u = 0;
  /// 0 stands for exact probabilities.
  int n_meas = 0;
  int n_ave = 1;
  std::string target;
};

/// Outcome distribution of one unitary restricted to `sites` (first listed site = most significant bit).
Eigen::VectorXd marginal_distribution(const UnitaryOutcome& outcome, const MeasurementRecord& record,
                                      std::span<const int> sites);

/// 2^l sum_{s,s'} (-2)^{-D[s,s']} P(s) P(s') for a distribution on l sites, by a per-site transform.
double purity_kernel(const Eigen::VectorXd& marginal, int ell);
/// Same quantity from the explicit double sum over (s, s'); O(4^l), for checks only.
double purity_kernel_direct(const Eigen::VectorXd& marginal, int ell);

enum class BiasCorrection { ClosedForm, UStatistic };

/// Average of the per-unitary kernel. For sampled records the closed-form correction
/// x N/(N-1) - 2^l/(N-1) is applied, or equivalently the kernel is summed over distinct shot pairs.
/// Values are not clipped to [0, 1].
EstimatorResult purity_estimate(const MeasurementRecord& record, std::span<const int> sites,
                                BiasCorrection correction = BiasCorrection::ClosedForm);

/// Classical-shadow estimate of <P>: each unitary contributes 3^|supp P| * sign * <prod z_m> when the
/// rotated string is diagonal, zero otherwise. Summed term by term this is the same linear functional of
/// the outcome probabilities as the randomized-measurement observable formula.
double pauli_expectation(const MeasurementRecord& record, const PauliString& p);

/// Linear combination over the terms; the identity term contributes its coefficient exactly.
double observable_expectation(const MeasurementRecord& record, const PauliStringSum& o);

/// (<H^2> - <H>^2) / <H^2>. Throws NumericalContractError when the <H^2> estimate is not positive.
EstimatorResult hamiltonian_variance(const MeasurementRecord& record, const PauliStringSum& h);
/// Same with H^2 supplied by the caller (built once with square_observable).
EstimatorResult hamiltonian_variance(const MeasurementRecord& record, const PauliStringSum& h,
                                     const PauliStringSum& h_squared);

/// Runs `experiment(seed, repetition)` for each repetition with seeds derived from the master seed and
/// returns the mean and sample std. Results do not depend on `threads`.
EstimatorResult repeat_and_aggregate(const std::function<double(std::uint64_t seed, int repetition)>& experiment,
                                     int n_ave, std::uint64_t master_seed, int threads = 1);
/// Mean and sample std of the values, CompensatedSum based.
EstimatorResult aggregate(std::span<const double> values);

/// Standard deviation of `estimator` over bootstrap resamples of the unitaries of one record.
double bootstrap_std(const MeasurementRecord& record,
                     const std::function<double(const MeasurementRecord&)>& estimator, int resamples,
                     std::uint64_t seed);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct CsvRow {
  std::string quantity;
  std::string target;
  int sites = 0;
  std::size_t n_u = 0;
  int n_meas = 0;
  double eps_percent = 0.0;
  std::string mode;
  double value = 0.0;
  double std = 0.0;
  std::uint64_t seed = 0;
};

struct CsvMetadata {
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::vector<std::pair<std::string, std::string>> extra;
};

/// Comment lines with the metadata, then the header
/// quantity,target,L,N_U,N_meas,eps_percent,mode,value,std,seed. Numbers use round-trip precision.
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows, const CsvMetadata& meta);

std::string format_sites(std::span<const int> sites);

}  // namespace rmkit
