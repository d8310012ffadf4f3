#include "rmkit/scenarios.hpp"

#include <algorithm>
#include <cmath>

#include "rmkit/linalg.hpp"
#include "rmkit/pulses.hpp"

namespace rmkit {

std::string to_string(SshPhase phase) { return phase == SshPhase::Topological ? "topological" : "trivial"; }

SshPhase ssh_phase_from_string(const std::string& s) {
  if (s == "topological") return SshPhase::Topological;
  if (s == "trivial") return SshPhase::Trivial;
  throw ConfigError("unknown SSH phase '" + s + "'");
}

HamiltonianSpec ssh_spec(int sites, SshPhase phase, const SshCouplings& c) {
  HamiltonianSpec spec;
  spec.sites = sites;
  spec.j_even = phase == SshPhase::Topological ? c.strong : -c.weak;
  spec.j_odd = phase == SshPhase::Topological ? c.weak : -c.strong;
  spec.j_nnn = c.j_nnn;
  spec.mu_edge = c.mu_edge;
  spec.angular = false;
  return spec;
}

StateVector prepare_exact_gs(int sites, SshPhase phase, const SshCouplings& couplings) {
  if (sites < 2 || sites % 2 != 0) throw DomainError("prepare_exact_gs: L must be even and at least 2");
  return ground_state(ssh_spec(sites, phase, couplings).build()).state;
}

StateVector prepare_af(int sites) {
  std::string bits(static_cast<std::size_t>(sites), '0');
  for (int m = 1; m <= sites; m += 2) bits[static_cast<std::size_t>(m - 1)] = '1';
  return StateVector::from_bits(bits);
}

std::string to_string(RampShape shape) { return shape == RampShape::Linear ? "linear" : "smooth"; }

RampShape ramp_shape_from_string(const std::string& s) {
  if (s == "linear") return RampShape::Linear;
  if (s == "smooth") return RampShape::Smooth;
  throw ConfigError("unknown ramp shape '" + s + "'");
}

double ramp_profile(RampShape shape, double u) {
  u = std::clamp(u, 0.0, 1.0);
  return shape == RampShape::Linear ? u : u * u * (3.0 - 2.0 * u);
}

PauliStringSum pinning_hamiltonian(int sites, double h) {
  PauliStringSum out(sites);
  for (int m = 1; m <= sites; ++m) out += (m % 2 == 1 ? -h : h) * number_operator(sites, m);
  return out;
}

StateVector prepare_adiabatic(const PauliStringSum& h_mod, double t_p, const RampConfig& ramp) {
  if (!(t_p > 0.0)) throw DomainError("prepare_adiabatic: T_P must be positive");
  const int sites = h_mod.size();
  Eigen::VectorXcd amp = StateVector::basis_state(sites, 0).amplitudes();
  const Eigen::Matrix2cd flip = local_propagator(std::numbers::pi, 0.0, 1.0);
  for (int m = 1; m <= sites; m += 2) apply_single_site(amp, sites, m, flip);
  const StateVector pinned = StateVector::normalized(sites, std::move(amp));

  const double h = kTwoPi * ramp.pin_mhz;
  Drive drive;
  drive.sites = sites;
  const RampShape shape = ramp.shape;
  const bool frozen = ramp.frozen;
  auto progress = [shape, frozen, t_p](double t) { return frozen ? 0.0 : ramp_profile(shape, t / t_p); };
  drive.fill = [progress, h, sites](double t, LocalFields& f) {
    const double weight = 1.0 - progress(t);
    for (int m = 1; m <= sites; ++m) {
      f.rabi(m - 1) = 0.0;
      // -weight * h * (-1)^(m+1) n_m = -detuning * n_m
      f.detuning(m - 1) = weight * h * (m % 2 == 1 ? 1.0 : -1.0);
    }
  };
  if (ramp.ramp_model) drive.static_scale = progress;
  return evolve(pinned, &drive, &h_mod, 0.0, t_p, ramp.evolve);
}

int domain_wall_site(int sites) { return (sites + 1) / 2; }

StateVector prepare_domain_wall(int sites) {
  if (sites < 2 || sites % 2 != 0) throw DomainError("prepare_domain_wall: L must be even");
  std::string bits(static_cast<std::size_t>(sites), '0');
  bits[static_cast<std::size_t>(domain_wall_site(sites) - 1)] = '1';
  return StateVector::from_bits(bits);
}

StateVector quench(const StateVector& psi, double j_mhz, double duration, const EvolveOptions& options) {
  if (!(j_mhz > 0.0) || !(duration > 0.0)) throw DomainError("quench: J and T must be positive");
  const PauliStringSum h = build_staggered_xy(psi.size(), kTwoPi * j_mhz);
  return evolve(psi, nullptr, &h, 0.0, duration, options);
}

}  // namespace rmkit
