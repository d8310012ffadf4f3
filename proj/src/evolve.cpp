#include "rmkit/evolve.hpp"

#include <algorithm>
#include <cmath>

namespace rmkit {

namespace {

// Yoshida triple-jump weights.
const double kW1 = 1.0 / (2.0 - std::cbrt(2.0));
const double kW0 = 1.0 - 2.0 * kW1;

class Stepper {
public:
  Stepper(const Drive* drive, const StaticGenerator* h_static, int sites)
      : drive_(drive), static_(h_static && !h_static->empty() ? h_static : nullptr), sites_(sites) {
    fields_.rabi = Eigen::VectorXd::Zero(sites);
    fields_.detuning = Eigen::VectorXd::Zero(sites);
  }

  void run(Eigen::VectorXcd& amp, const std::vector<double>& grid, int steps) {
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      const double a = grid[k];
      const double h = (grid[k + 1] - a) / steps;
      if (static_ && !drive_->static_scale) {
        fused_interval(amp, a, h, steps);
        continue;
      }
      for (int s = 0; s < steps; ++s) step(amp, a + s * h, h);
    }
  }

private:
  void static_part(Eigen::VectorXcd& amp, double t_mid, double dt) {
    if (!static_) return;
    const double g = drive_->static_scale ? drive_->static_scale(t_mid) : 1.0;
    expm_multiply(static_->matrix(), static_->norm_bound(), g * dt, amp);
  }

  void local_part(Eigen::VectorXcd& amp, double t_mid, double dt) {
    drive_->fill(t_mid, fields_);
    for (int site = 1; site <= sites_; ++site) {
      const double rabi = fields_.rabi(site - 1);
      const double det = fields_.detuning(site - 1);
      if (rabi == 0.0 && det == 0.0) continue;
      apply_single_site(amp, sites_, site, local_propagator(rabi, det, dt));
    }
  }

  void step(Eigen::VectorXcd& amp, double t, double h) {
    const double a = kW1 * h;
    const double b = kW0 * h;
    half_step(amp, t, a);
    half_step(amp, t + a, b);
    half_step(amp, t + a + b, a);
  }

  // Same sequence as repeated step() with neighbouring static factors merged; valid for a constant generator.
  void fused_interval(Eigen::VectorXcd& amp, double t, double h, int steps) {
    const double a = kW1 * h;
    const double b = kW0 * h;
    const double nrm = static_->norm_bound();
    expm_multiply(static_->matrix(), nrm, 0.5 * a, amp);
    for (int s = 0; s < steps; ++s) {
      const double t0 = t + s * h;
      local_part(amp, t0 + 0.5 * a, a);
      expm_multiply(static_->matrix(), nrm, 0.5 * (a + b), amp);
      local_part(amp, t0 + a + 0.5 * b, b);
      expm_multiply(static_->matrix(), nrm, 0.5 * (a + b), amp);
      local_part(amp, t0 + a + b + 0.5 * a, a);
      expm_multiply(static_->matrix(), nrm, s + 1 < steps ? a : 0.5 * a, amp);
    }
  }

  // Symmetric splitting: static over [t, t+tau/2], local at the midpoint, static over [t+tau/2, t+tau].
  void half_step(Eigen::VectorXcd& amp, double t, double tau) {
    static_part(amp, t + 0.25 * tau, 0.5 * tau);
    local_part(amp, t + 0.5 * tau, tau);
    static_part(amp, t + 0.75 * tau, 0.5 * tau);
  }

  const Drive* drive_;
  const StaticGenerator* static_;
  int sites_;
  LocalFields fields_;
};

std::vector<double> interval_grid(const Drive* drive, double t0, double t1) {
  std::vector<double> grid{t0};
  if (drive) {
    for (double k : drive->knots)
      if (k > t0 && k < t1) grid.push_back(k);
  }
  grid.push_back(t1);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double x, double y) { return std::abs(x - y) <= 1e-14 * std::max(1.0, std::abs(x)); }),
             grid.end());
  return grid;
}

StateVector finish(int sites, Eigen::VectorXcd amp) {
  const double drift = std::abs(amp.norm() - 1.0);
  if (drift > 1e-9) throw NumericalContractError("evolution drifted from unit norm by " + std::to_string(drift));
  return StateVector::normalized(sites, std::move(amp));
}

}  // namespace

StaticGenerator::StaticGenerator(const PauliStringSum& h)
    : sites_(h.size()), empty_(h.empty()), matrix_(to_sparse<cplx>(h)), norm_bound_(h.one_norm()) {
  if (!h.is_hermitian()) throw NumericalContractError("static generator must be Hermitian");
}

StaticGenerator StaticGenerator::negated() const {
  StaticGenerator out = *this;
  out.matrix_ = -matrix_;
  return out;
}

Eigen::Matrix2cd local_propagator(double rabi, double detuning, double dt) {
  // h = -detuning/2 * 1 + (rabi/2) X - (detuning/2) Z with Z = diag(-1, 1).
  const double ax = 0.5 * rabi;
  const double az = -0.5 * detuning;
  const double r = std::hypot(ax, az);
  const cplx global = std::exp(cplx(0.0, 0.5 * detuning * dt));
  const double c = std::cos(r * dt);
  const double s = r > 0.0 ? std::sin(r * dt) / r : dt;
  Eigen::Matrix2cd u;
  u(0, 0) = cplx(c, s * az);
  u(1, 1) = cplx(c, -s * az);
  u(0, 1) = u(1, 0) = cplx(0.0, -s * ax);
  return global * u;
}

StateVector evolve(const StateVector& psi, const Drive* drive, const StaticGenerator* h_static, double t0,
                   double t1, const EvolveOptions& options, EvolveReport* report) {
  if (!(t1 > t0)) throw DomainError("evolve: t1 must exceed t0");
  const bool has_static = h_static && !h_static->empty();
  if (!drive && !has_static) throw DomainError("evolve: nothing to evolve under");
  const int sites = psi.size();
  if (drive && drive->sites != sites) throw StructuralError("evolve: drive size does not match state");
  if (has_static && h_static->sites() != sites) throw StructuralError("evolve: generator size does not match state");

  if (!drive) {
    Eigen::VectorXcd amp = psi.amplitudes();
    expm_multiply(h_static->matrix(), h_static->norm_bound(), t1 - t0, amp);
    if (report) *report = {1, 0.0};
    return finish(sites, std::move(amp));
  }

  const std::vector<double> grid = interval_grid(drive, t0, t1);
  Stepper stepper(drive, has_static ? h_static : nullptr, sites);

  if (options.fixed_steps) {
    Eigen::VectorXcd amp = psi.amplitudes();
    stepper.run(amp, grid, std::max(1, *options.fixed_steps));
    if (report) *report = {*options.fixed_steps, 0.0};
    return finish(sites, std::move(amp));
  }

  double widest = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) widest = std::max(widest, grid[k + 1] - grid[k]);
  int steps = 1;
  if (has_static) steps = std::max(1, static_cast<int>(std::ceil(widest * h_static->norm_bound() / options.norm_dt)));

  Eigen::VectorXcd coarse = psi.amplitudes();
  stepper.run(coarse, grid, steps);
  for (int refinement = 0; refinement <= options.max_refinements; ++refinement) {
    Eigen::VectorXcd fine = psi.amplitudes();
    stepper.run(fine, grid, 2 * steps);
    const double error = (fine - coarse).norm();
    if (error <= options.tol) {
      if (report) *report = {2 * steps, error};
      return finish(sites, std::move(fine));
    }
    coarse = std::move(fine);
    steps *= 2;
  }
  throw ConvergenceError("evolve: step doubling did not reach tol after " + std::to_string(options.max_refinements) +
                         " refinements");
}

StateVector evolve(const StateVector& psi, const Drive* drive, const PauliStringSum* h_static, double t0,
                   double t1, const EvolveOptions& options, EvolveReport* report) {
  if (!h_static || h_static->empty()) return evolve(psi, drive, static_cast<const StaticGenerator*>(nullptr), t0, t1, options, report);
  const StaticGenerator gen(*h_static);
  return evolve(psi, drive, &gen, t0, t1, options, report);
}

Drive time_reversed(const Drive& drive, double t0, double t1) {
  Drive out;
  out.sites = drive.sites;
  for (double k : drive.knots) out.knots.push_back(t0 + t1 - k);
  std::sort(out.knots.begin(), out.knots.end());
  auto fill = drive.fill;
  out.fill = [fill, t0, t1](double t, LocalFields& f) {
    fill(t0 + t1 - t, f);
    f.rabi = -f.rabi;
    f.detuning = -f.detuning;
  };
  if (drive.static_scale) {
    auto scale = drive.static_scale;
    out.static_scale = [scale, t0, t1](double t) { return scale(t0 + t1 - t); };
  }
  return out;
}

}  // namespace rmkit
