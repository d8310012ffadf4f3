#pragma once

#include <string>

#include "rmkit/evolve.hpp"
#include "rmkit/pauli.hpp"
#include "rmkit/state.hpp"

namespace rmkit {

enum class SshPhase { Topological, Trivial };

std::string to_string(SshPhase phase);
SshPhase ssh_phase_from_string(const std::string& s);

/// Coupling magnitudes in MHz. The topological chain puts `strong` on even bonds and `weak` on odd
/// bonds; the trivial chain swaps them.
struct SshCouplings {
  double strong = 0.484;
  double weak = -0.18;
  double j_nnn = 0.04;
  double mu_edge = 0.1;
};

HamiltonianSpec ssh_spec(int sites, SshPhase phase, const SshCouplings& couplings = {});

/// Exact ground state of the chain; throws DegeneracyError when the edge field is missing.
StateVector prepare_exact_gs(int sites, SshPhase phase, const SshCouplings& couplings = {});

/// |up down up down ...>, starting with up on site 1.
StateVector prepare_af(int sites);

enum class RampShape { Linear, Smooth };

std::string to_string(RampShape shape);
RampShape ramp_shape_from_string(const std::string& s);

struct RampConfig {
  /// Staggered pinning strength in MHz; odd sites are lowered by h, even sites raised by h.
  double pin_mhz = 5.0;
  RampShape shape = RampShape::Linear;
  /// Keep s(t) = 0 for the whole ramp (diagnostic).
  bool frozen = false;
  /// Also ramp the model in, H(s) = s H_mod + (1 - s) H_pin, instead of H_mod + (1 - s) H_pin.
  bool ramp_model = false;
  EvolveOptions evolve{};
};

/// s in [0, 1] at fraction u of the ramp.
double ramp_profile(RampShape shape, double u);

/// Staggered pinning operator -h * sum_m (-1)^(m+1) n_m (h in rad/us).
PauliStringSum pinning_hamiltonian(int sites, double h);

/// Starts from |down ... down>, flips the odd sites to reach the pinned product state, then evolves
/// under H_mod + (1 - s(t)) H_pin for t in [0, T_P].
StateVector prepare_adiabatic(const PauliStringSum& h_mod, double t_p, const RampConfig& ramp = {});

/// All down except up at site ceil(L/2).
StateVector prepare_domain_wall(int sites);
int domain_wall_site(int sites);

/// Evolves under the staggered XY chain with coupling J (MHz) for time T (us).
StateVector quench(const StateVector& psi, double j_mhz, double duration, const EvolveOptions& options = {});

}  // namespace rmkit
