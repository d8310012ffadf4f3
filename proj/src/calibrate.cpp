#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "rmkit/pulses.hpp"

namespace rmkit {

namespace {

constexpr int kDims = 9;
using Point = Eigen::Matrix<double, kDims, 1>;

Point pack(const RealisticParams& p) {
  Point x;
  x << p.omega1, p.omega2, p.delta1, p.delta2, p.f2, p.amps[0], p.amps[1], p.amps[2], p.switch_time;
  return x;
}

RealisticParams unpack(const Point& x, RealisticParams p) {
  p.omega1 = x(0);
  p.omega2 = x(1);
  p.delta1 = x(2);
  p.delta2 = x(3);
  p.f2 = x(4);
  p.amps = {x(5), x(6), x(7)};
  p.switch_time = x(8);
  return p;
}

/// Total amount by which the analytic trapezoid levels exceed the limits (0 when feasible).
double violation(const RealisticParams& p, const PulseLimits& lim) {
  double v = 0.0;
  auto over = [&](double value, double bound) { v += std::max(0.0, value - bound) / std::max(bound, 1e-12); };
  const double fmax = std::max(1.0, std::abs(p.f2));
  const double fjump = std::max({1.0, std::abs(p.f2 - 1.0), std::abs(p.f2)});
  for (double level : {p.omega1, p.omega2, p.delta1, p.delta2}) over(std::abs(level), lim.max_amplitude);
  for (double a : p.amps) over(std::abs(a) * fmax, lim.max_amplitude);
  auto slew = [&](double l1, double l2) {
    return std::max({std::abs(l1), std::abs(l2 - l1), std::abs(l2)}) / p.ramp;
  };
  over(slew(p.omega1, p.omega2), lim.max_slew);
  over(slew(p.delta1, p.delta2), lim.max_slew);
  for (double a : p.amps) over(std::abs(a) * fjump / p.ramp, lim.max_slew);
  const double lo = 1.5 * p.ramp;
  const double hi = p.duration - 1.5 * p.ramp;
  v += std::max(0.0, lo - p.switch_time) / p.duration + std::max(0.0, p.switch_time - hi) / p.duration;
  return v;
}

std::array<double, 3> fidelities(const PulseSchedule& s, const PropagatorOptions& opt) {
  std::array<double, 3> f{};
  for (int a = 1; a <= 3; ++a) {
    const CliffordLabel label = clifford_from_int(a);
    f[static_cast<std::size_t>(a - 1)] = rotation_fidelity(single_qubit_propagator(s, label, opt), label);
  }
  return f;
}

struct Objective {
  RealisticParams base;
  PulseLimits limits;
  int evaluations = 0;

  double operator()(const Point& x) {
    ++evaluations;
    const RealisticParams p = unpack(x, base);
    if (!(p.ramp > 0.0)) return 10.0;
    const double v = violation(p, limits);
    if (v > 0.0) return 1.0 + v;
    try {
      const auto f = fidelities(realistic_schedule(p, limits), PropagatorOptions{.fixed_steps = 1});
      return 1.0 - *std::min_element(f.begin(), f.end());
    } catch (const ConstraintError&) {
      return 1.5;
    }
  }
};

/// Standard Nelder-Mead on a fixed initial simplex.
std::pair<Point, double> nelder_mead(Objective& fn, const Point& start, const Point& step, int max_evaluations) {
  std::array<Point, kDims + 1> simplex;
  std::array<double, kDims + 1> value{};
  simplex[0] = start;
  for (int i = 0; i < kDims; ++i) {
    simplex[i + 1] = start;
    simplex[i + 1](i) += step(i);
  }
  for (int i = 0; i <= kDims; ++i) value[i] = fn(simplex[i]);

  const int budget_end = fn.evaluations + max_evaluations;
  std::array<int, kDims + 1> order{};
  while (fn.evaluations < budget_end) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return value[a] < value[b]; });
    const int best = order[0];
    const int worst = order[kDims];
    const int second = order[kDims - 1];
    if (value[worst] - value[best] < 1e-12) break;

    Point centroid = Point::Zero();
    for (int i = 0; i <= kDims; ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= kDims;

    const Point reflected = centroid + (centroid - simplex[worst]);
    const double fr = fn(reflected);
    if (fr < value[best]) {
      const Point expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = fn(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        value[worst] = fe;
      } else {
        simplex[worst] = reflected;
        value[worst] = fr;
      }
      continue;
    }
    if (fr < value[second]) {
      simplex[worst] = reflected;
      value[worst] = fr;
      continue;
    }
    const bool outside = fr < value[worst];
    const Point contracted =
        outside ? Point(centroid + 0.5 * (reflected - centroid)) : Point(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = fn(contracted);
    if (fc < std::min(fr, value[worst])) {
      simplex[worst] = contracted;
      value[worst] = fc;
      continue;
    }
    for (int i = 0; i <= kDims; ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      value[i] = fn(simplex[i]);
    }
  }
  const auto it = std::min_element(value.begin(), value.end());
  return {simplex[static_cast<std::size_t>(it - value.begin())], *it};
}

}  // namespace

CalibrationResult calibrate(const RealisticParams& start, const CalibrationOptions& options) {
  if (!(options.limits.max_amplitude > 0.0) || !(options.limits.max_slew > 0.0))
    throw CalibrationError("calibration: constraint box is empty (non-positive amplitude or slew limit)");
  if (!(start.ramp > 0.0)) throw CalibrationError("calibration: ramp time must be positive");

  Objective fn{start, options.limits};
  const double a = options.limits.max_amplitude;
  Point step;
  step << 0.1 * a, 0.1 * a, 0.1 * a, 0.1 * a, 0.2, 0.1 * a, 0.1 * a, 0.1 * a, 0.05 * start.duration;

  Point best = pack(start);
  double best_value = fn(best);
  Rng rng(derive_seed(options.seed, 0xca11b));
  std::normal_distribution<double> normal;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    Point origin = best;
    if (r > 0)
      for (int i = 0; i < kDims; ++i) origin(i) += 0.5 * step(i) * normal(rng);
    auto [x, v] = nelder_mead(fn, origin, step * (r % 2 == 0 ? 1.0 : 0.3), options.max_evaluations);
    if (v < best_value) {
      best = x;
      best_value = v;
    }
  }

  CalibrationResult out;
  out.params = unpack(best, start);
  out.evaluations = fn.evaluations;
  PulseSchedule schedule;
  try {
    schedule = realistic_schedule(out.params, options.limits);
  } catch (const ConstraintError& e) {
    throw CalibrationError(std::string("calibration: no feasible schedule found (") + e.what() + ")");
  }
  out.fidelities = fidelities(schedule, PropagatorOptions{});
  const double worst = *std::min_element(out.fidelities.begin(), out.fidelities.end());
  if (worst < options.fidelity_floor) {
    std::ostringstream msg;
    msg << "calibration: best fidelities (" << out.fidelities[0] << ", " << out.fidelities[1] << ", "
        << out.fidelities[2] << ") below floor " << options.fidelity_floor << "; best params "
        << out.params.to_json().dump();
    throw CalibrationError(msg.str());
  }
  return out;
}

}  // namespace rmkit
