#include "rmkit/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rmkit/parallel.hpp"

namespace rmkit {

PulseSchedule::PulseSchedule(double duration, Eigen::VectorXd omega, Eigen::VectorXd delta, Eigen::VectorXd f,
                             std::array<double, 3> delta_amps)
    : duration_(duration), omega_(std::move(omega)), delta_(std::move(delta)), f_(std::move(f)), amps_(delta_amps) {
  if (!(duration_ > 0.0)) throw DomainError("pulse schedule duration must be positive");
  if (omega_.size() < 2 || delta_.size() != omega_.size() || f_.size() != omega_.size())
    throw StructuralError("pulse waveforms need equal lengths of at least two samples");
  grid_dt_ = duration_ / static_cast<double>(omega_.size() - 1);
}

PulseSchedule::Sample PulseSchedule::at(double t) const {
  const double x = std::clamp(t / grid_dt_, 0.0, static_cast<double>(intervals()));
  const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(x), intervals() - 1);
  const double w = x - static_cast<double>(k);
  auto lerp = [&](const Eigen::VectorXd& v) { return (1.0 - w) * v(k) + w * v(k + 1); };
  return {lerp(omega_), lerp(delta_), lerp(f_)};
}

std::vector<double> PulseSchedule::knots() const {
  std::vector<double> out(static_cast<std::size_t>(omega_.size()));
  for (Eigen::Index k = 0; k < omega_.size(); ++k) out[static_cast<std::size_t>(k)] = static_cast<double>(k) * grid_dt_;
  out.back() = duration_;
  return out;
}

PulseSchedule PulseSchedule::scaled(double omega_scale, double delta_scale,
                                    const std::array<double, 3>& amp_scales) const {
  PulseSchedule out = *this;
  out.omega_ *= omega_scale;
  out.delta_ *= delta_scale;
  for (std::size_t a = 0; a < 3; ++a) out.amps_[a] *= amp_scales[a];
  return out;
}

double PulseSchedule::peak_amplitude() const {
  double peak = std::max(omega_.cwiseAbs().maxCoeff(), delta_.cwiseAbs().maxCoeff());
  for (double a : amps_) peak = std::max(peak, std::abs(a) * f_.cwiseAbs().maxCoeff());
  return peak;
}

double PulseSchedule::peak_slew() const {
  auto slope = [&](const Eigen::VectorXd& v) {
    return (v.tail(v.size() - 1) - v.head(v.size() - 1)).cwiseAbs().maxCoeff() / grid_dt_;
  };
  double peak = std::max(slope(omega_), slope(delta_));
  for (double a : amps_) peak = std::max(peak, std::abs(a) * slope(f_));
  return peak;
}

void PulseSchedule::check(const PulseLimits& limits) const {
  const double amp = peak_amplitude();
  if (amp > limits.max_amplitude * (1.0 + 1e-9))
    throw ConstraintError("pulse amplitude " + std::to_string(amp) + " rad/us exceeds limit " +
                          std::to_string(limits.max_amplitude));
  const double slew = peak_slew();
  if (slew > limits.max_slew * (1.0 + 1e-9))
    throw ConstraintError("pulse slew " + std::to_string(slew) + " rad/us^2 exceeds limit " +
                          std::to_string(limits.max_slew));
}

nlohmann::json PulseSchedule::to_json() const {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"T", duration_},       {"grid_dt", grid_dt_},          {"omega", vec(omega_)}, {"delta", vec(delta_)},
          {"f", vec(f_)},          {"delta_amps", amps_},           {"units", "rad_per_us"}};
}

PulseSchedule PulseSchedule::from_json(const nlohmann::json& j) {
  for (const auto& [key, value] : j.items()) {
    static const std::array<std::string, 7> known{"T", "grid_dt", "omega", "delta", "f", "delta_amps", "units"};
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("schedule: unknown key '" + key + "'");
  }
  if (j.value("units", std::string{}) != "rad_per_us") throw ConfigError("schedule: units must be \"rad_per_us\"");
  auto vec = [&](const char* key) {
    const auto v = j.at(key).get<std::vector<double>>();
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  PulseSchedule s(j.at("T").get<double>(), vec("omega"), vec("delta"), vec("f"),
                  j.at("delta_amps").get<std::array<double, 3>>());
  if (std::abs(s.grid_dt() - j.at("grid_dt").get<double>()) > 1e-9 * s.grid_dt())
    throw ConfigError("schedule: grid_dt inconsistent with T and sample count");
  return s;
}

Drive make_drive(const PulseSchedule& schedule, std::vector<CliffordLabel> labels) {
  Drive d;
  d.sites = static_cast<int>(labels.size());
  d.knots = schedule.knots();
  std::vector<double> shift(labels.size());
  for (std::size_t m = 0; m < labels.size(); ++m) shift[m] = schedule.delta_amp(labels[m]);
  d.fill = [schedule, shift](double t, LocalFields& out) {
    const auto s = schedule.at(t);
    for (std::size_t m = 0; m < shift.size(); ++m) {
      out.rabi(static_cast<Eigen::Index>(m)) = s.omega;
      out.detuning(static_cast<Eigen::Index>(m)) = s.delta - s.f * shift[m];
    }
  };
  return d;
}

std::string to_string(FluctuationScope scope) {
  return scope == FluctuationScope::PerUnitary ? "per_unitary" : "per_shot";
}

FluctuationScope fluctuation_scope_from_string(const std::string& s) {
  if (s == "per_unitary") return FluctuationScope::PerUnitary;
  if (s == "per_shot") return FluctuationScope::PerShot;
  throw ConfigError("unknown fluctuation scope '" + s + "'");
}

PulseSchedule perturb(const PulseSchedule& schedule, const FluctuationModel& model, Rng& rng) {
  if (model.eps_percent < 0.0) throw DomainError("eps_percent must be non-negative");
  if (model.eps_percent == 0.0) return schedule;
  std::normal_distribution<double> g(0.0, model.eps_percent / 100.0);
  const double omega = 1.0 + g(rng);
  const double delta = 1.0 + g(rng);
  std::array<double, 3> amps{};
  for (double& a : amps) a = 1.0 + g(rng);
  return schedule.scaled(omega, delta, amps);
}

PulseSchedule ideal_schedule(double duration, double ratio, int intervals) {
  if (!(duration > 0.0)) throw DomainError("ideal_schedule: T must be positive");
  if (ratio < 10.0) throw DomainError("ideal_schedule: ratio must be at least 10");
  if (intervals < 3 || intervals % 2 == 0) throw DomainError("ideal_schedule: interval count must be odd");
  const double omega = std::numbers::pi / duration;
  // f * delta_2 * T/2 = -pi/2 (mod 2 pi) with delta_2 >= ratio * Omega.
  const double k = std::ceil((ratio + 1.0) / 4.0);
  const double d2 = omega * (4.0 * k - 1.0);
  const double d3 = d2 + ratio * omega;
  const Eigen::Index n = intervals + 1;
  Eigen::VectorXd om = Eigen::VectorXd::Constant(n, omega);
  Eigen::VectorXd de(n);
  const double dt = duration / intervals;
  for (Eigen::Index i = 0; i < n; ++i) de(i) = static_cast<double>(i) * dt < 0.5 * duration ? 0.0 : d2;
  return PulseSchedule(duration, std::move(om), std::move(de), Eigen::VectorXd::Ones(n), {0.0, d2, d3});
}

nlohmann::json RealisticParams::to_json() const {
  return {{"T", duration},     {"grid_dt", grid_dt}, {"ramp", ramp}, {"switch_time", switch_time},
          {"omega1", omega1},  {"omega2", omega2},   {"delta1", delta1}, {"delta2", delta2},
          {"f2", f2},          {"delta_amps", amps}, {"units", "rad_per_us"}};
}

RealisticParams RealisticParams::from_json(const nlohmann::json& j) {
  static const std::array<std::string, 11> known{"T",      "grid_dt", "ramp", "switch_time", "omega1",    "omega2",
                                                 "delta1", "delta2",  "f2",   "delta_amps",  "units"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("realistic params: unknown key '" + key + "'");
  if (j.value("units", std::string{"rad_per_us"}) != "rad_per_us")
    throw ConfigError("realistic params: units must be \"rad_per_us\"");
  RealisticParams p;
  p.duration = j.value("T", p.duration);
  p.grid_dt = j.value("grid_dt", p.grid_dt);
  p.ramp = j.value("ramp", p.ramp);
  p.switch_time = j.value("switch_time", p.switch_time);
  p.omega1 = j.value("omega1", p.omega1);
  p.omega2 = j.value("omega2", p.omega2);
  p.delta1 = j.value("delta1", p.delta1);
  p.delta2 = j.value("delta2", p.delta2);
  p.f2 = j.value("f2", p.f2);
  if (j.contains("delta_amps")) p.amps = j.at("delta_amps").get<std::array<double, 3>>();
  return p;
}

namespace {

double trapezoid(double t, double level1, double level2, const RealisticParams& p) {
  const double a = p.switch_time - 0.5 * p.ramp;
  const double b = p.switch_time + 0.5 * p.ramp;
  if (t <= p.ramp) return level1 * t / p.ramp;
  if (t <= a) return level1;
  if (t <= b) return level1 + (level2 - level1) * (t - a) / p.ramp;
  if (t <= p.duration - p.ramp) return level2;
  return level2 * std::max(0.0, p.duration - t) / p.ramp;
}

}  // namespace

PulseSchedule realistic_schedule(const RealisticParams& p, const PulseLimits& limits) {
  if (!(p.duration > 0.0) || !(p.grid_dt > 0.0)) throw DomainError("realistic schedule: T and grid_dt must be positive");
  if (!(p.ramp > 0.0)) throw ConstraintError("realistic schedule: zero ramp time violates the slew limit");
  if (p.switch_time < 1.5 * p.ramp || p.switch_time > p.duration - 1.5 * p.ramp)
    throw ConstraintError("realistic schedule: switch time leaves no room for the ramps");
  const double steps = p.duration / p.grid_dt;
  const auto intervals = static_cast<Eigen::Index>(std::llround(steps));
  if (intervals < 2 || std::abs(steps - static_cast<double>(intervals)) > 1e-6)
    throw DomainError("realistic schedule: T must be a whole number of grid steps");

  Eigen::VectorXd om(intervals + 1), de(intervals + 1), f(intervals + 1);
  for (Eigen::Index k = 0; k <= intervals; ++k) {
    const double t = p.duration * static_cast<double>(k) / static_cast<double>(intervals);
    om(k) = trapezoid(t, p.omega1, p.omega2, p);
    de(k) = trapezoid(t, p.delta1, p.delta2, p);
    f(k) = trapezoid(t, 1.0, p.f2, p);
  }
  PulseSchedule s(p.duration, std::move(om), std::move(de), std::move(f), p.amps);
  s.check(limits);
  return s;
}

RealisticParams default_realistic_params(const PulseLimits& limits) {
  RealisticParams p;
  const double omega = std::numbers::pi / p.duration;
  p.omega1 = p.omega2 = omega;
  p.delta1 = 0.0;
  // Smallest light shift with f * delta_2 * T/2 = -pi/2.
  p.amps = {0.0, -omega, limits.max_amplitude};
  p.delta2 = p.amps[1];
  p.f2 = 1.0;
  return p;
}

// ---------------------------------------------------------------------------
// Single-site propagators and the figure of merit
// ---------------------------------------------------------------------------

namespace {

const double kW1 = 1.0 / (2.0 - std::cbrt(2.0));
const double kW0 = 1.0 - 2.0 * kW1;

Eigen::Matrix2cd propagate_fixed(const PulseSchedule& s, double shift, int steps) {
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  const double dt = s.grid_dt() / steps;
  auto sub = [&](double t_mid, double tau) {
    const auto v = s.at(t_mid);
    u = local_propagator(v.omega, v.delta - v.f * shift, tau) * u;
  };
  for (Eigen::Index k = 0; k < s.intervals(); ++k) {
    const double t0 = static_cast<double>(k) * s.grid_dt();
    for (int j = 0; j < steps; ++j) {
      const double t = t0 + j * dt;
      const double a = kW1 * dt;
      const double b = kW0 * dt;
      sub(t + 0.5 * a, a);
      sub(t + a + 0.5 * b, b);
      sub(t + a + b + 0.5 * a, a);
    }
  }
  return u;
}

}  // namespace

Eigen::Matrix2cd single_qubit_propagator(const PulseSchedule& schedule, CliffordLabel label,
                                         const PropagatorOptions& options) {
  const double shift = schedule.delta_amp(label);
  if (options.fixed_steps) return propagate_fixed(schedule, shift, std::max(1, *options.fixed_steps));
  int steps = 1;
  Eigen::Matrix2cd coarse = propagate_fixed(schedule, shift, steps);
  for (int r = 0; r <= options.max_refinements; ++r) {
    Eigen::Matrix2cd fine = propagate_fixed(schedule, shift, 2 * steps);
    if ((fine - coarse).norm() <= options.tol) return fine;
    coarse = fine;
    steps *= 2;
  }
  throw ConvergenceError("single_qubit_propagator: step doubling did not converge");
}

int converged_steps(const PulseSchedule& schedule, const PropagatorOptions& options) {
  int steps = 1;
  for (int r = 0; r <= options.max_refinements; ++r, steps *= 2) {
    bool ok = true;
    for (int a = 1; a <= 3 && ok; ++a) {
      const double shift = schedule.delta_amps()[static_cast<std::size_t>(a - 1)];
      ok = (propagate_fixed(schedule, shift, 2 * steps) - propagate_fixed(schedule, shift, steps)).norm() <= options.tol;
    }
    if (ok) return 2 * steps;
  }
  throw ConvergenceError("converged_steps: step doubling did not converge");
}

double rotation_fidelity(const Eigen::Matrix2cd& u, CliffordLabel label) {
  const Eigen::Matrix2cd m = u * clifford_matrix(label).adjoint();
  const double s = 0.5 * (std::abs(m(0, 0)) + std::abs(m(1, 1)));
  return s * s;
}

Eigen::Vector3d measured_axis(const Eigen::Matrix2cd& u) {
  Eigen::Matrix2cd z;
  z << -1, 0, 0, 1;
  const Eigen::Matrix2cd m = u.adjoint() * z * u;
  // Coefficients on X = [[0,1],[1,0]], Y = [[0,i],[-i,0]], Z = diag(-1,1).
  return {m(0, 1).real(), m(0, 1).imag(), 0.5 * (m(1, 1) - m(0, 0)).real()};
}

namespace {

cplx up_overlap(const Eigen::Matrix2cd& rb, const Eigen::Matrix2cd& rc) { return (rb * rc.adjoint())(1, 1); }

}  // namespace

std::array<double, 3> figure_of_merit(const std::array<Eigen::Matrix2cd, 3>& r) {
  std::array<double, 3> a{};
  for (std::size_t alpha = 0; alpha < 3; ++alpha) {
    const std::size_t b = (alpha + 1) % 3;
    const std::size_t c = (alpha + 2) % 3;
    a[alpha] = std::norm(up_overlap(r[b], r[c])) + std::norm(up_overlap(r[c], r[b]));
  }
  return a;
}

std::array<double, 3> figure_of_merit_literal(const std::array<Eigen::Matrix2cd, 3>& r) {
  std::array<double, 3> a{};
  for (std::size_t alpha = 0; alpha < 3; ++alpha) {
    const std::size_t b = (alpha + 1) % 3;
    const std::size_t c = (alpha + 2) % 3;
    a[alpha] = std::norm(up_overlap(r[b], r[c]) - up_overlap(r[c], r[b]));
  }
  return a;
}

std::array<Eigen::Matrix2cd, 3> ideal_rotations() {
  return {clifford_matrix(CliffordLabel::RotX), clifford_matrix(CliffordLabel::RotY),
          clifford_matrix(CliffordLabel::Identity)};
}

FigureOfMeritStats figure_of_merit_statistics(const PulseSchedule& schedule, double eps_percent, std::size_t draws,
                                              std::uint64_t seed, int threads) {
  PropagatorOptions probe;
  probe.tol = 1e-8;
  const int steps = converged_steps(schedule, probe);
  const PropagatorOptions fixed{.fixed_steps = steps};
  std::vector<std::array<double, 3>> values(draws);
  parallel_for(draws, threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    const PulseSchedule s = perturb(schedule, {eps_percent, FluctuationScope::PerUnitary}, rng);
    std::array<Eigen::Matrix2cd, 3> r;
    for (int a = 1; a <= 3; ++a) r[static_cast<std::size_t>(a - 1)] = single_qubit_propagator(s, clifford_from_int(a), fixed);
    values[i] = figure_of_merit(r);
  });
  FigureOfMeritStats out;
  out.draws = draws;
  if (draws == 0) return out;
  for (std::size_t a = 0; a < 3; ++a) {
    CompensatedSum sum;
    for (const auto& v : values) sum.add(0.5 * v[a]);
    const double mean = sum.value() / static_cast<double>(draws);
    CompensatedSum sq;
    for (const auto& v : values) sq.add((0.5 * v[a] - mean) * (0.5 * v[a] - mean));
    out.mean[a] = mean;
    out.std[a] = draws > 1 ? std::sqrt(sq.value() / static_cast<double>(draws - 1)) : 0.0;
  }
  return out;
}

}  // namespace rmkit
