#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "rmkit/pulses.hpp"

using namespace rmkit;

namespace {

RealisticParams golden_params() {
  std::ifstream in(std::string(RMKIT_SOURCE_DIR) + "/configs/rstar_schedule.json");
  REQUIRE(in.good());
  return RealisticParams::from_json(nlohmann::json::parse(in).at("params"));
}

double angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

double up_overlap(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) { return std::norm((a * b.adjoint())(1, 1)); }

}  // namespace

TEST_CASE("ideal schedule realizes the target rotations") {
  for (double ratio : {10.0, 30.0, 100.0}) {
    const auto s = ideal_schedule(0.15, ratio);
    const double bound = 10.0 / (ratio * ratio);
    const auto u1 = single_qubit_propagator(s, CliffordLabel::RotX);
    CHECK(rotation_fidelity(u1, CliffordLabel::RotX) >= 1.0 - bound);
    const auto u3 = single_qubit_propagator(s, CliffordLabel::Identity);
    CHECK(std::norm(u3(1, 0)) <= bound);
    const auto u2 = single_qubit_propagator(s, CliffordLabel::RotY);
    if (ratio == 100.0) {
      const double angle = angle_deg(measured_axis(u2), measured_axis(clifford_matrix(CliffordLabel::RotY)));
      CHECK(angle <= 2.0);
    }
  }
}

TEST_CASE("ideal-schedule error shrinks quadratically with the ratio") {
  std::vector<double> ratios{10.0, 30.0, 100.0}, infid;
  for (double r : ratios)
    infid.push_back(1.0 - rotation_fidelity(single_qubit_propagator(ideal_schedule(0.15, r), CliffordLabel::RotX),
                                            CliffordLabel::RotX) + 1e-16);
  for (std::size_t k = 0; k < ratios.size(); ++k) CHECK(infid[k] * ratios[k] * ratios[k] <= 10.0);
  CHECK(infid[2] < infid[0]);
}

TEST_CASE("ideal schedule rejects bad arguments") {
  CHECK_THROWS_AS(ideal_schedule(0.0, 20.0), DomainError);
  CHECK_THROWS_AS(ideal_schedule(0.15, 5.0), DomainError);
  CHECK_THROWS_AS(ideal_schedule(0.15, 20.0, 100), DomainError);
}

TEST_CASE("realistic schedule honors the hardware limits") {
  const PulseLimits limits;
  const auto p = default_realistic_params(limits);
  const auto s = realistic_schedule(p, limits);
  CHECK(s.duration() == doctest::Approx(0.15));
  CHECK(s.peak_amplitude() <= limits.max_amplitude * (1 + 1e-9));
  CHECK(s.peak_slew() <= limits.max_slew * (1 + 1e-9));
  auto bad = p;
  bad.ramp = 0.0;
  CHECK_THROWS_AS(realistic_schedule(bad, limits), ConstraintError);
  auto loud = p;
  loud.omega1 = kTwoPi * 20.0;
  CHECK_THROWS_AS(realistic_schedule(loud, limits), ConstraintError);
}

TEST_CASE("calibrated golden schedule") {
  const auto s = realistic_schedule(golden_params());
  CHECK(s.duration() == doctest::Approx(0.15));
  std::array<Eigen::Matrix2cd, 3> r;
  for (int a = 1; a <= 3; ++a) {
    r[static_cast<std::size_t>(a - 1)] = single_qubit_propagator(s, clifford_from_int(a));
    CHECK(rotation_fidelity(r[static_cast<std::size_t>(a - 1)], clifford_from_int(a)) >= 0.995);
    const Eigen::Matrix2cd id = r[static_cast<std::size_t>(a - 1)] * r[static_cast<std::size_t>(a - 1)].adjoint();
    CHECK((id - Eigen::Matrix2cd::Identity()).norm() <= 1e-10);
  }
  const double o23 = up_overlap(r[1], r[2]);
  CHECK(o23 >= 0.45);
  CHECK(o23 <= 0.55);
}

TEST_CASE("perturbation statistics and determinism") {
  const auto s = ideal_schedule(0.15, 20.0);
  Rng rng(1);
  CHECK(perturb(s, {0.0, FluctuationScope::PerUnitary}, rng) == s);
  Rng fresh(1);
  CHECK(rng() == fresh());

  Rng a(5), b(5);
  CHECK(perturb(s, {3.0, FluctuationScope::PerUnitary}, a) == perturb(s, {3.0, FluctuationScope::PerUnitary}, b));

  const double nominal = s.omega().maxCoeff();
  double sum = 0, sq = 0;
  const int n = 10000;
  Rng g(77);
  for (int i = 0; i < n; ++i) {
    const double peak = perturb(s, {3.0, FluctuationScope::PerUnitary}, g).omega().maxCoeff() / nominal;
    sum += peak;
    sq += peak * peak;
  }
  const double mean = sum / n;
  const double std = std::sqrt((sq - n * mean * mean) / (n - 1));
  CHECK(std >= 0.028);
  CHECK(std <= 0.032);
}

TEST_CASE("zero schedule gives the identity propagator") {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(11);
  const PulseSchedule s(0.1, zero, zero, zero, {1.0, 2.0, 3.0});
  for (int a = 1; a <= 3; ++a)
    CHECK((single_qubit_propagator(s, clifford_from_int(a)) - Eigen::Matrix2cd::Identity()).norm() <= 1e-14);
}

TEST_CASE("figure of merit") {
  const auto ideal = figure_of_merit(ideal_rotations());
  for (double v : ideal) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

  const std::array<Eigen::Matrix2cd, 3> trivial{clifford_matrix(CliffordLabel::RotX), Eigen::Matrix2cd::Identity(),
                                                Eigen::Matrix2cd::Identity()};
  CHECK(figure_of_merit(trivial)[0] == doctest::Approx(2.0));

  auto phased = ideal_rotations();
  phased[1] *= std::exp(cplx(0.0, 0.83));
  const auto again = figure_of_merit(phased);
  for (std::size_t a = 0; a < 3; ++a) CHECK(again[a] == doctest::Approx(ideal[a]).epsilon(1e-14));

  const auto literal = figure_of_merit_literal(ideal_rotations());
  CHECK(literal[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(literal[1] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(literal[2] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("figure-of-merit statistics do not depend on the thread count") {
  const auto s = realistic_schedule(golden_params());
  const auto one = figure_of_merit_statistics(s, 3.0, 40, 9, 1);
  const auto three = figure_of_merit_statistics(s, 3.0, 40, 9, 3);
  CHECK(one.mean == three.mean);
  CHECK(one.std == three.std);
  const auto noiseless = figure_of_merit_statistics(s, 0.0, 3, 9, 1);
  CHECK(noiseless.std[0] == doctest::Approx(0.0));
}

TEST_CASE("schedule JSON round trip and strict keys") {
  const auto s = realistic_schedule(golden_params());
  CHECK(PulseSchedule::from_json(s.to_json()) == s);
  auto j = s.to_json();
  j["omgea"] = 1;
  CHECK_THROWS_AS(PulseSchedule::from_json(j), ConfigError);
  const auto p = golden_params();
  CHECK(RealisticParams::from_json(p.to_json()) == p);
}

TEST_CASE("calibration failures and determinism") {
  CalibrationOptions bad;
  bad.limits.max_amplitude = 0.0;
  CHECK_THROWS_AS(calibrate(default_realistic_params(), bad), CalibrationError);

  CalibrationOptions quick;
  quick.fidelity_floor = 0.0;
  quick.restarts = 1;
  quick.max_evaluations = 150;
  const auto a = calibrate(default_realistic_params(), quick);
  const auto b = calibrate(default_realistic_params(), quick);
  CHECK(a.params == b.params);
  CHECK(a.fidelities == b.fidelities);
}
