#include "lego/scurve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lego {

int DiscreteProfile::jerk_sign(int k) const {
  const int bounds[7] = {n1, n1 + n2, 2 * n1 + n2, 2 * n1 + n2 + n4, 3 * n1 + n2 + n4,
                         3 * n1 + 2 * n2 + n4, 4 * n1 + 2 * n2 + n4};
  const int signs[7] = {1, 0, -1, 0, -1, 0, 1};
  for (int i = 0; i < 7; ++i) {
    if (k < bounds[i]) return signs[i];
  }
  return 0;
}

// With u = n1*dt, w = (n1+n2)*dt and total time T the profile reaches
// J = 1/P, A = u/P, V = 1/(T-u-w) where P = u*w*(T-u-w). For fixed n1, P grows
// with n2 while n4 >= 0, so the largest n2 allowed by the velocity bound wins.
std::optional<DiscreteProfile> fit_profile(int steps, double dt, const UnitLimits& limits) {
  if (steps < 4 || !(dt > 0)) return std::nullopt;
  const double total = steps * dt;
  // velocity: T - u - w >= 1/V  ->  (2*n1 + n2) <= steps - 1/(V*dt)
  const double v_room = steps - 1.0 / (limits.velocity * dt);
  std::optional<DiscreteProfile> best;
  double best_p = 0.0;
  for (int n1 = 1; 4 * n1 <= steps; ++n1) {
    int n2 = (steps - 4 * n1) / 2;
    if (std::isfinite(v_room)) {
      double cap = std::floor(v_room + 1e-9) - 2 * n1;
      if (cap < 0) continue;
      n2 = std::min(n2, static_cast<int>(cap));
    }
    const double u = n1 * dt;
    const double w = (n1 + n2) * dt;
    const double p = u * w * (total - u - w);
    if (!(p > 0)) continue;
    const double jerk = 1.0 / p;
    if (jerk > limits.jerk || u * jerk > limits.acceleration) continue;
    if (1.0 / (total - u - w) > limits.velocity * (1 + 1e-12)) continue;
    if (!best || p > best_p) {
      best_p = p;
      best = DiscreteProfile{n1, n2, steps - 4 * n1 - 2 * n2, jerk};
    }
  }
  return best;
}

double scurve_min_time(double distance, double v_max, double a_max, double j_max) {
  if (!(distance > 0)) return 0.0;
  if (!(v_max > 0 && a_max > 0 && j_max > 0)) throw std::invalid_argument("limits must be positive");
  double tj = 0.0;
  double ta = 0.0;
  if (v_max * j_max < a_max * a_max) {
    tj = std::sqrt(v_max / j_max);
    ta = 2.0 * tj;
  } else {
    tj = a_max / j_max;
    ta = tj + v_max / a_max;
  }
  const double tv = distance / v_max - ta;
  if (tv >= 0.0) return 2.0 * ta + tv;
  if (distance >= 2.0 * a_max * a_max * a_max / (j_max * j_max)) {
    tj = a_max / j_max;
    ta = 0.5 * tj + std::sqrt(0.25 * tj * tj + distance / a_max);
  } else {
    tj = std::cbrt(0.5 * distance / j_max);
    ta = 2.0 * tj;
  }
  return 2.0 * ta;
}

int minimum_profile_steps(double dt, const UnitLimits& limits) {
  double t = scurve_min_time(1.0, limits.velocity, limits.acceleration, limits.jerk);
  int n = std::max(4, static_cast<int>(std::floor(t / dt)) - 1);
  while (!fit_profile(n, dt, limits)) ++n;
  return n;
}

std::vector<int> allocate_steps(int total, const std::vector<int>& floor,
                                const std::vector<double>& weights) {
  const std::size_t n = floor.size();
  std::vector<int> out(floor);
  int rest = total - std::accumulate(floor.begin(), floor.end(), 0);
  if (rest < 0) throw std::invalid_argument("allocation floor exceeds total");
  double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (rest == 0 || !(wsum > 0)) return out;
  std::vector<double> frac(n, 0.0);
  int given = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double share = rest * weights[i] / wsum;
    int whole = static_cast<int>(std::floor(share));
    out[i] += whole;
    given += whole;
    frac[i] = share - whole;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; given < rest; ++k, ++given) {
    std::size_t i = order[k % n];
    if (weights[i] > 0) {
      ++out[i];
    } else {
      --given;
    }
  }
  return out;
}

}  // namespace lego
