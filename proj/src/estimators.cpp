#include "rmkit/estimators.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>

#include "rmkit/parallel.hpp"

namespace rmkit {

namespace {

constexpr std::uint64_t kStreamRepetition = 0xa9e;

struct SiteMap {
  std::vector<int> full_shift;
  int ell = 0;

  SiteMap(int sites, std::span<const int> subsystem) : ell(static_cast<int>(subsystem.size())) {
    if (ell < 1) throw DomainError("subsystem must contain at least one site");
    if (ell > sites) throw DomainError("subsystem larger than the chain");
    std::uint64_t seen = 0;
    for (int s : subsystem) {
      if (s < 1 || s > sites) throw DomainError("subsystem site " + std::to_string(s) + " outside [1, L]");
      const std::uint64_t bit = std::uint64_t{1} << (s - 1);
      if (seen & bit) throw DomainError("subsystem lists site " + std::to_string(s) + " twice");
      seen |= bit;
      full_shift.push_back(sites - s);
    }
  }

  std::uint64_t project(std::uint64_t b) const {
    std::uint64_t m = 0;
    for (int j = 0; j < ell; ++j) m = (m << 1) | ((b >> full_shift[static_cast<std::size_t>(j)]) & 1U);
    return m;
  }
};

double sample_std(std::span<const double> values, double mean) {
  if (values.size() < 2) return 0.0;
  CompensatedSum ss;
  for (double v : values) ss.add((v - mean) * (v - mean));
  return std::sqrt(ss.value() / static_cast<double>(values.size() - 1));
}

double real_sign(const PauliString& q) {
  const cplx ph = q.phase();
  if (std::abs(ph.imag()) > 1e-12) throw NumericalContractError("Pauli string " + q.to_string() + " is not Hermitian");
  return ph.real();
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Eigen::VectorXd marginal_distribution(const UnitaryOutcome& outcome, const MeasurementRecord& record,
                                      std::span<const int> sites) {
  const SiteMap map(record.sites, sites);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(Eigen::Index{1} << map.ell);
  if (record.exact()) {
    for (Eigen::Index b = 0; b < outcome.probabilities.size(); ++b)
      m(static_cast<Eigen::Index>(map.project(static_cast<std::uint64_t>(b)))) += outcome.probabilities(b);
  } else {
    for (const auto& [bits, n] : outcome.counts) m(static_cast<Eigen::Index>(map.project(bits))) += n;
    m /= static_cast<double>(record.shots);
  }
  return m;
}

double purity_kernel(const Eigen::VectorXd& marginal, int ell) {
  Eigen::VectorXd q = marginal;
  for (int k = 0; k < ell; ++k) {
    const Eigen::Index stride = Eigen::Index{1} << k;
    for (Eigen::Index block = 0; block < q.size(); block += 2 * stride)
      for (Eigen::Index i = block; i < block + stride; ++i) {
        const double a = q(i);
        const double b = q(i + stride);
        q(i) = 2.0 * a - b;
        q(i + stride) = 2.0 * b - a;
      }
  }
  return marginal.dot(q);
}

double purity_kernel_direct(const Eigen::VectorXd& marginal, int ell) {
  const Eigen::Index dim = marginal.size();
  double x = 0.0;
  for (Eigen::Index s = 0; s < dim; ++s)
    for (Eigen::Index t = 0; t < dim; ++t) {
      const int d = std::popcount(static_cast<std::uint64_t>(s ^ t));
      x += std::pow(2.0, ell) * std::pow(-2.0, -d) * marginal(s) * marginal(t);
    }
  return x;
}

EstimatorResult purity_estimate(const MeasurementRecord& record, std::span<const int> sites,
                                BiasCorrection correction) {
  if (record.outcomes.empty()) throw DomainError("purity_estimate: record has no unitaries");
  const SiteMap map(record.sites, sites);
  const int ell = map.ell;
  const double dim = std::ldexp(1.0, ell);
  if (!record.exact() && record.shots < 2) throw DomainError("purity_estimate: need at least two shots per unitary");

  std::vector<double> per_unitary(record.outcomes.size());
  for (std::size_t u = 0; u < record.outcomes.size(); ++u) {
    const auto& o = record.outcomes[u];
    if (record.exact() || correction == BiasCorrection::ClosedForm) {
      per_unitary[u] = purity_kernel(marginal_distribution(o, record, sites), ell);
      continue;
    }
    std::map<std::uint64_t, double> marginal_counts;
    for (const auto& [bits, n] : o.counts) marginal_counts[map.project(bits)] += n;
    double pairs = 0.0;
    for (const auto& [s, ns] : marginal_counts)
      for (const auto& [t, nt] : marginal_counts) {
        const int d = std::popcount(s ^ t);
        const double k = std::ldexp(d % 2 ? -1.0 : 1.0, ell - d);
        pairs += ns * (s == t ? nt - 1.0 : nt) * k;
      }
    const double n = record.shots;
    per_unitary[u] = pairs / (n * (n - 1.0));
  }

  CompensatedSum sum;
  for (double v : per_unitary) sum.add(v);
  double x = sum.value() / static_cast<double>(per_unitary.size());
  if (!record.exact() && correction == BiasCorrection::ClosedForm) {
    const double n = record.shots;
    x = x * n / (n - 1.0) - dim / (n - 1.0);
  }
  EstimatorResult r;
  r.value = x;
  r.n_u = record.unitaries();
  r.n_meas = record.shots;
  r.target = format_sites(sites);
  return r;
}

double pauli_expectation(const MeasurementRecord& record, const PauliString& p) {
  if (p.size() != record.sites) throw StructuralError("pauli_expectation: string length differs from L");
  if (record.outcomes.empty()) throw DomainError("pauli_expectation: record has no unitaries");
  if (p.is_identity()) return real_sign(p);
  const double weight_factor = std::pow(3.0, p.weight());

  CompensatedSum sum;
  for (const auto& o : record.outcomes) {
    const PauliString q = conjugate_by_labels(p, o.sample.labels);
    if (!q.is_diagonal()) continue;
    const std::uint64_t zmask = q.z_mask();
    auto parity = [zmask](std::uint64_t b) { return std::popcount(zmask & ~b) % 2 ? -1.0 : 1.0; };
    double mean = 0.0;
    if (record.exact()) {
      for (Eigen::Index b = 0; b < o.probabilities.size(); ++b)
        mean += o.probabilities(b) * parity(static_cast<std::uint64_t>(b));
    } else {
      for (const auto& [bits, n] : o.counts) mean += n * parity(bits);
      mean /= record.shots;
    }
    sum.add(weight_factor * real_sign(q) * mean);
  }
  return sum.value() / static_cast<double>(record.outcomes.size());
}

double observable_expectation(const MeasurementRecord& record, const PauliStringSum& o) {
  if (o.size() != record.sites && !o.empty()) throw StructuralError("observable_expectation: size differs from L");
  CompensatedSum sum;
  for (const auto& term : o.terms()) {
    if (term.string.is_identity()) {
      sum.add(term.coefficient.real());
      continue;
    }
    sum.add(term.coefficient.real() * pauli_expectation(record, term.string));
  }
  return sum.value();
}

EstimatorResult hamiltonian_variance(const MeasurementRecord& record, const PauliStringSum& h) {
  return hamiltonian_variance(record, h, square_observable(h));
}

EstimatorResult hamiltonian_variance(const MeasurementRecord& record, const PauliStringSum& h,
                                     const PauliStringSum& h_squared) {
  if (!h.is_hermitian()) throw NumericalContractError("hamiltonian_variance: H is not Hermitian");
  const double e = observable_expectation(record, h);
  const double e2 = observable_expectation(record, h_squared);
  if (!(e2 > 0.0))
    throw NumericalContractError("hamiltonian_variance: <H^2> estimate is " + format_number(e2) +
                                 ", cannot normalize");
  EstimatorResult r;
  r.value = (e2 - e * e) / e2;
  r.n_u = record.unitaries();
  r.n_meas = record.shots;
  r.target = "H";
  return r;
}

EstimatorResult aggregate(std::span<const double> values) {
  if (values.empty()) throw DomainError("aggregate: no values");
  CompensatedSum sum;
  for (double v : values) sum.add(v);
  EstimatorResult r;
  r.value = sum.value() / static_cast<double>(values.size());
  r.std = sample_std(values, r.value);
  r.n_ave = static_cast<int>(values.size());
  return r;
}

EstimatorResult repeat_and_aggregate(const std::function<double(std::uint64_t seed, int repetition)>& experiment,
                                     int n_ave, std::uint64_t master_seed, int threads) {
  if (n_ave < 1) throw DomainError("repeat_and_aggregate: N_ave must be >= 1");
  std::vector<double> values(static_cast<std::size_t>(n_ave));
  parallel_for(values.size(), threads, [&](std::size_t r) {
    values[r] = experiment(derive_seed(master_seed, r, kStreamRepetition), static_cast<int>(r));
  });
  return aggregate(values);
}

double bootstrap_std(const MeasurementRecord& record,
                     const std::function<double(const MeasurementRecord&)>& estimator, int resamples,
                     std::uint64_t seed) {
  if (resamples < 2) throw DomainError("bootstrap_std: need at least two resamples");
  if (record.outcomes.empty()) throw DomainError("bootstrap_std: record has no unitaries");
  std::vector<double> values(static_cast<std::size_t>(resamples));
  MeasurementRecord draw = record;
  std::uniform_int_distribution<std::size_t> pick(0, record.outcomes.size() - 1);
  for (int b = 0; b < resamples; ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b), 0xb007));
    for (auto& o : draw.outcomes) o = record.outcomes[pick(rng)];
    values[static_cast<std::size_t>(b)] = estimator(draw);
  }
  return aggregate(values).std;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_slope: need two or more matching points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("loglog_slope: values must be positive");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string format_sites(std::span<const int> sites) {
  std::string out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(sites[i]);
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows, const CsvMetadata& meta) {
  out << "# config_hash=" << meta.config_hash << '\n'
      << "# bit_convention=" << kBitConvention << '\n'
      << "# rotation_ordering=" << kRotationOrdering << '\n'
      << "# master_seed=" << meta.master_seed << '\n';
  for (const auto& [k, v] : meta.extra) out << "# " << k << '=' << v << '\n';
  out << "quantity,target,L,N_U,N_meas,eps_percent,mode,value,std,seed\n";
  for (const auto& r : rows) {
    out << r.quantity << ",\"" << r.target << "\"," << r.sites << ',' << r.n_u << ','
        << (r.n_meas == 0 ? std::string("inf") : std::to_string(r.n_meas)) << ',' << format_number(r.eps_percent)
        << ',' << r.mode << ',' << format_number(r.value) << ',' << format_number(r.std) << ',' << r.seed << '\n';
  }
}

}  // namespace rmkit
