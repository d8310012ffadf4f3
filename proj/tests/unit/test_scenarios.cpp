#include "doctest.h"
#include "helpers.hpp"
#include "rmkit/linalg.hpp"
#include "rmkit/pulses.hpp"
#include "rmkit/scenarios.hpp"

using namespace rmkit;

namespace {

double nearest_reference(double p) { return std::abs(p - 0.5) < std::abs(p - 1.0) ? 0.5 : 1.0; }

double normalized_variance(const PauliStringSum& h, const StateVector& psi) {
  const double e = expectation(h, psi);
  const double e2 = expectation(square_observable(h), psi);
  return (e2 - e * e) / e2;
}

}  // namespace

TEST_CASE("SSH ground-state purities follow the dimer picture") {
  const auto top8 = prepare_exact_gs(8, SshPhase::Topological);
  CHECK(nearest_reference(exact_purity(top8, left_block(4))) == 0.5);
  CHECK(nearest_reference(exact_purity(top8, left_block(5))) == 1.0);
  CHECK(exact_purity(top8, left_block(4)) == doctest::Approx(0.468).epsilon(0.01));
  CHECK(exact_purity(top8, left_block(5)) == doctest::Approx(0.845).epsilon(0.01));

  const auto triv6 = prepare_exact_gs(6, SshPhase::Trivial);
  CHECK(nearest_reference(exact_purity(triv6, left_block(3))) == 0.5);
  CHECK(nearest_reference(exact_purity(triv6, left_block(4))) == 1.0);
}

TEST_CASE("disjoint dimers give purities of exactly one half or one") {
  const SshCouplings dimers{0.484, 0.0, 0.0, 0.0};
  const auto h = ssh_spec(8, SshPhase::Trivial, dimers).build();
  const auto gs = ground_state(h).state;
  for (int ell = 1; ell < 8; ++ell) {
    const double expected = ell % 2 == 0 ? 1.0 : 0.5;
    CHECK(std::abs(exact_purity(gs, left_block(ell)) - expected) <= 1e-10);
  }
}

TEST_CASE("ground-state residual and phase assignment") {
  const auto spec = ssh_spec(8, SshPhase::Topological);
  CHECK(std::abs(spec.j_even) > std::abs(spec.j_odd));
  const auto h = spec.build();
  const auto gs = prepare_exact_gs(8, SshPhase::Topological);
  const double e = expectation(h, gs);
  const Eigen::VectorXcd r = to_sparse(h) * gs.amplitudes() - e * gs.amplitudes();
  CHECK(r.norm() <= 1e-8);
  CHECK_THROWS_AS(prepare_exact_gs(7, SshPhase::Topological), DomainError);
  CHECK(ssh_phase_from_string(to_string(SshPhase::Trivial)) == SshPhase::Trivial);
}

TEST_CASE("antiferromagnetic product state") {
  const auto af2 = prepare_af(2);
  CHECK(std::abs(af2[0b10]) == doctest::Approx(1.0));
  const auto af = prepare_af(6);
  for (int ell = 1; ell < 6; ++ell) CHECK(exact_purity(af, left_block(ell)) == doctest::Approx(1.0));
  const auto h = ssh_spec(6, SshPhase::Topological).build();
  const Eigen::MatrixXcd d = to_dense(h);
  const double dense = af.amplitudes().dot(d * af.amplitudes()).real();
  CHECK(expectation(h, af) == doctest::Approx(dense).epsilon(1e-12));
}

TEST_CASE("frozen pinning ramp returns the pinned product state") {
  const auto h = ssh_spec(6, SshPhase::Trivial).build();
  RampConfig ramp;
  ramp.frozen = true;
  ramp.ramp_model = true;
  const auto out = prepare_adiabatic(h, 1.0, ramp);
  CHECK(fidelity(out, prepare_af(6)) >= 1.0 - 1e-12);
  CHECK_THROWS_AS(prepare_adiabatic(h, 0.0), DomainError);
  CHECK(ramp_profile(RampShape::Linear, 0.25) == doctest::Approx(0.25));
  CHECK(ramp_profile(RampShape::Smooth, 0.0) == doctest::Approx(0.0));
  CHECK(ramp_profile(RampShape::Smooth, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("a sudden ramp misses the ground state") {
  const auto h = ssh_spec(8, SshPhase::Topological).build();
  const auto gs = ground_state(h).state;
  const auto fast = prepare_adiabatic(h, 0.1);
  CHECK(fidelity(fast, gs) < 0.5);
  const double v = normalized_variance(h, fast);
  CHECK(v >= 0.1);
  CHECK(v <= 1.0);
}

TEST_CASE("adiabatic preparation improves with ramp time") {
  const auto h = ssh_spec(6, SshPhase::Trivial).build();
  const auto gs = ground_state(h).state;
  double last_fid = 0.0;
  for (double t : {0.5, 2.0, 5.0}) {
    const double f = fidelity(prepare_adiabatic(h, t), gs);
    CHECK(f >= last_fid);
    last_fid = f;
  }
}

TEST_CASE("domain-wall quench") {
  const int sites = 8;
  const auto dw = prepare_domain_wall(sites);
  CHECK(domain_wall_site(sites) == 4);
  CHECK(std::abs(dw[0b00010000]) == doctest::Approx(1.0));
  for (int ell = 1; ell < sites; ++ell) CHECK(exact_purity(dw, left_block(ell)) == doctest::Approx(1.0));

  const auto out = quench(dw, 0.18, 1.0);
  std::vector<double> p;
  for (int ell = 1; ell <= 4; ++ell) p.push_back(exact_purity(out, left_block(ell)));
  CHECK(p[0] > p[1]);
  CHECK(p[1] > p[2]);
  CHECK(p[3] <= p[2] + 1e-5);
  CHECK(p[3] == doctest::Approx(0.5).epsilon(1e-3));
  double total = 0.0;
  for (int m = 1; m <= sites; ++m) total += expectation(number_operator(sites, m), out);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(prepare_domain_wall(7), DomainError);
  CHECK_THROWS_AS(quench(dw, 0.0, 1.0), DomainError);
}
