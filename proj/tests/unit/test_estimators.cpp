#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "rmkit/estimators.hpp"
#include "rmkit/linalg.hpp"
#include "rmkit/scenarios.hpp"

using namespace rmkit;

namespace {

std::vector<std::vector<int>> all_subsystems(int sites) {
  std::vector<std::vector<int>> out;
  for (int mask = 1; mask < (1 << sites); ++mask) {
    std::vector<int> s;
    for (int m = 1; m <= sites; ++m)
      if (mask & (1 << (m - 1))) s.push_back(m);
    out.push_back(s);
  }
  return out;
}

double dense_variance(const PauliStringSum& h, const StateVector& psi) {
  const Eigen::MatrixXcd d = to_dense(h);
  const Eigen::VectorXcd v = psi.amplitudes();
  const double e = v.dot(d * v).real();
  const double e2 = (d * v).squaredNorm();
  return (e2 - e * e) / e2;
}

}  // namespace

TEST_CASE("2-design exactness of the purity estimator") {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const int sites = 1 + trial % 3;
    const auto psi = testing::random_state(sites, rng);
    const auto record = run_ideal(psi, enumerate_all_settings(sites), {});
    for (const auto& sub : all_subsystems(sites))
      CHECK(std::abs(purity_estimate(record, sub).value - exact_purity(psi, sub)) <= 1e-10);
  }
}

TEST_CASE("shadow exactness for random Hermitian sums") {
  Rng rng(202);
  for (int trial = 0; trial < 50; ++trial) {
    const int sites = 1 + trial % 3;
    const auto psi = testing::random_state(sites, rng);
    const auto record = run_ideal(psi, enumerate_all_settings(sites), {});
    const auto o = testing::random_hermitian(sites, 6, rng);
    CHECK(std::abs(observable_expectation(record, o) - expectation(o, psi)) <= 1e-10);
  }
}

TEST_CASE("closed-form bias correction arithmetic") {
  MeasurementRecord r;
  r.sites = 1;
  r.shots = 2;
  UnitaryOutcome a, b;
  a.sample.labels = b.sample.labels = {CliffordLabel::Identity};
  a.counts = {{0, 1}, {1, 1}};
  b.counts = {{0, 2}};
  r.outcomes = {a, b};
  const std::vector<int> one{1};
  CHECK(purity_kernel(marginal_distribution(a, r, one), 1) == doctest::Approx(0.5));
  CHECK(purity_kernel(marginal_distribution(b, r, one), 1) == doctest::Approx(2.0));
  CHECK(purity_estimate(r, one).value == doctest::Approx(2 * 1.25 - 2));
  CHECK(purity_estimate(r, one, BiasCorrection::UStatistic).value == doctest::Approx(0.5));
  const std::vector<int> two{1, 2};
  CHECK_THROWS_AS(purity_estimate(r, two), DomainError);
}

TEST_CASE("factorized kernel equals the direct double sum") {
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int ell = 1; ell <= 4; ++ell) {
    Eigen::VectorXd p(1 << ell);
    for (auto& x : p) x = u(rng);
    p /= p.sum();
    CHECK(std::abs(purity_kernel(p, ell) - purity_kernel_direct(p, ell)) <= 1e-12);
  }
}

TEST_CASE("U-statistic agrees with the closed form on sampled records") {
  Rng rng(9);
  const auto psi = testing::random_state(4, rng);
  const auto record = run_ideal(psi, sample_unitaries(4, 40, 3), {30, {0.01, 0.03}, 4, 1});
  for (const auto& sub : all_subsystems(4)) {
    const double a = purity_estimate(record, sub).value;
    const double b = purity_estimate(record, sub, BiasCorrection::UStatistic).value;
    CHECK(std::abs(a - b) <= 1e-12);
  }
}

TEST_CASE("corrected purity is unbiased under resampling") {
  Rng rng(13);
  const auto psi = testing::random_state(3, rng);
  const auto exact = run_ideal(psi, sample_unitaries(3, 5, 2), {});
  const std::vector<int> sub{1, 2};
  const double target = purity_estimate(exact, sub).value;
  const int resamples = 2000;
  double sum = 0, sq = 0;
  for (int k = 0; k < resamples; ++k) {
    MeasurementRecord r = exact;
    r.shots = 50;
    Rng g(derive_seed(77, static_cast<std::uint64_t>(k)));
    for (auto& o : r.outcomes) {
      o.counts = sample_counts(o.probabilities, 50, g);
      o.probabilities.resize(0);
    }
    const double v = purity_estimate(r, sub).value;
    sum += v;
    sq += v * v;
  }
  const double mean = sum / resamples;
  const double se = std::sqrt((sq / resamples - mean * mean) / (resamples - 1));
  CHECK(std::abs(mean - target) <= 5 * se);
}

TEST_CASE("Pauli expectations") {
  const std::vector<CliffordLabel> none;
  const auto up = run_ideal(StateVector::from_bits("1"), enumerate_all_settings(1), {});
  CHECK(pauli_expectation(up, PauliString::from_letters("Z")) == doctest::Approx(1.0));

  Eigen::VectorXcd plus = Eigen::VectorXcd::Constant(2, 1.0 / std::sqrt(2.0));
  const auto px = run_ideal(StateVector(1, plus), enumerate_all_settings(1), {});
  CHECK(pauli_expectation(px, PauliString::from_letters("X")) == doctest::Approx(1.0));

  Rng rng(4);
  const auto psi = testing::random_state(4, rng);
  const auto rec = run_ideal(psi, enumerate_all_settings(4), {});
  PauliStringSum xx(4);
  xx.add(1.0, PauliString::from_letters("XXII"));
  CHECK(std::abs(pauli_expectation(rec, PauliString::from_letters("XXII")) - expectation(xx, psi)) <= 1e-10);
}

TEST_CASE("identity rotations reduce to plain z correlators") {
  Rng rng(14);
  const auto psi = testing::random_state(3, rng);
  std::vector<UnitarySample> samples(5);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].id = i;
    samples[i].labels.assign(3, CliffordLabel::Identity);
  }
  const auto record = run_ideal(psi, samples, {100, {}, 3, 1});
  const auto zz = PauliString::from_letters("ZIZ");
  double direct = 0.0;
  for (const auto& o : record.outcomes)
    for (const auto& [bits, n] : o.counts) {
      const double z1 = (bits >> 2) & 1U ? 1.0 : -1.0;
      const double z3 = bits & 1U ? 1.0 : -1.0;
      direct += n * z1 * z3;
    }
  direct /= 500.0;
  CHECK(pauli_expectation(record, zz) == doctest::Approx(9.0 * direct).epsilon(1e-14));
}

TEST_CASE("observable expectations and energies") {
  const auto rec = run_ideal(StateVector::from_bits("10"), sample_unitaries(2, 3, 1), {});
  CHECK(observable_expectation(rec, PauliStringSum::identity(2, 2.5)) == doctest::Approx(2.5));

  const auto h = HamiltonianSpec{4, 0.484, -0.18, 0.04, 0.1, false}.build();
  const auto gs = ground_state(h);
  const auto full = run_ideal(gs.state, enumerate_all_settings(4), {});
  CHECK(std::abs(observable_expectation(full, h) - gs.energy) <= 1e-10);
  CHECK(std::abs(hamiltonian_variance(full, h).value) <= 1e-10);

  const auto af = prepare_af(6);
  const auto h6 = HamiltonianSpec{6, 0.484, -0.18, 0.04, 0.1, false}.build();
  const auto af_rec = run_ideal(af, enumerate_all_settings(6), {});
  CHECK(std::abs(hamiltonian_variance(af_rec, h6).value - dense_variance(h6, af)) <= 1e-10);

  PauliStringSum zero(2);
  zero.add(0.0, PauliString::from_letters("ZZ"));
  CHECK_THROWS_AS(hamiltonian_variance(rec, zero), NumericalContractError);
}

TEST_CASE("sampled energy of the L=8 ground state within bootstrap error") {
  const auto h = HamiltonianSpec{8, 0.484, -0.18, 0.04, 0.1, false}.build();
  const auto gs = ground_state(h);
  const auto rec = run_ideal(gs.state, sample_unitaries(8, 100, 21), {400, {}, 22, 1});
  const double e = observable_expectation(rec, h);
  const double sd = bootstrap_std(rec, [&](const MeasurementRecord& r) { return observable_expectation(r, h); }, 100, 5);
  CHECK(sd > 0.0);
  CHECK(std::abs(e - gs.energy) <= 4 * sd);
}

TEST_CASE("ground state and antiferromagnet variances separate under sampling") {
  const auto h = HamiltonianSpec{8, 0.484, -0.18, 0.04, 0.1, false}.build();
  const auto h2 = square_observable(h);
  const auto gs = ground_state(h).state;
  const auto af = prepare_af(8);
  auto run = [&](const StateVector& psi) {
    return repeat_and_aggregate(
        [&](std::uint64_t seed, int) {
          const auto rec = run_ideal(psi, sample_unitaries(8, 100, derive_seed(seed, 1)), {400, {}, derive_seed(seed, 2), 1});
          return hamiltonian_variance(rec, h, h2).value;
        },
        20, 3);
  };
  const auto a = run(gs);
  const auto b = run(af);
  CHECK(std::abs(a.value - b.value) > 3 * std::hypot(a.std, b.std));
}

TEST_CASE("SSH L=8 ideal exact-probability purities") {
  const auto gs = prepare_exact_gs(8, SshPhase::Topological);
  for (int ell : {4, 5}) {
    const auto sub = left_block(ell);
    const double exact = exact_purity(gs, sub);
    const auto agg = repeat_and_aggregate(
        [&](std::uint64_t seed, int) {
          return purity_estimate(run_ideal(gs, sample_unitaries(8, 100, seed), {}), sub).value;
        },
        20, 11);
    CHECK(std::abs(agg.value - exact) <= 3 * agg.std);
  }
}

TEST_CASE("aggregation helpers") {
  const auto flat = repeat_and_aggregate([](std::uint64_t, int) { return 0.25; }, 5, 1);
  CHECK(flat.value == 0.25);
  CHECK(flat.std == 0.0);
  auto noisy = [](std::uint64_t seed, int) { return static_cast<double>(seed % 1000); };
  const auto a = repeat_and_aggregate(noisy, 20, 4, 1);
  const auto b = repeat_and_aggregate(noisy, 20, 4, 3);
  CHECK(a.value == b.value);
  CHECK(a.std == b.std);
  CHECK_THROWS_AS(repeat_and_aggregate(noisy, 0, 4), DomainError);

  const std::vector<double> x{10, 20, 40, 70, 100};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 / std::sqrt(v));
  CHECK(loglog_slope(x, y) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("CSV layout") {
  std::ostringstream out;
  write_csv(out, {{"purity", "gs:1 2", 8, 100, 0, 3.0, "ideal", 0.5, 0.01, 7}}, {"hash", 7, {{"k", "v"}}});
  const std::string s = out.str();
  CHECK(s.find("# config_hash=hash\n") == 0);
  CHECK(s.find("# k=v\n") != std::string::npos);
  CHECK(s.find("quantity,target,L,N_U,N_meas,eps_percent,mode,value,std,seed\n") != std::string::npos);
  CHECK(s.find("purity,\"gs:1 2\",8,100,inf,3,ideal,0.5,0.01,7\n") != std::string::npos);
}
