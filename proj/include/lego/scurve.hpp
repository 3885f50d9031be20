#pragma once

#include <optional>
#include <vector>

namespace lego {

/// Rest-to-rest jerk-limited profile on a fixed time grid. Phase lengths in
/// steps are (n1, n2, n1, n4, n1, n2, n1) with jerk (+J, 0, -J, 0, -J, 0, +J).
struct DiscreteProfile {
  int n1 = 0;
  int n2 = 0;
  int n4 = 0;
  double jerk = 0.0;  // for unit displacement

  int steps() const { return 4 * n1 + 2 * n2 + n4; }
  /// Jerk sign (+1, 0, -1) of step k in [0, steps()).
  int jerk_sign(int k) const;
};

/// Limits for a unit displacement; all strictly positive (may be +inf).
struct UnitLimits {
  double velocity;
  double acceleration;
  double jerk;
};

/// Minimum-jerk profile covering a unit displacement in exactly `steps`
/// steps of `dt`, or nothing when no profile satisfies the limits.
std::optional<DiscreteProfile> fit_profile(int steps, double dt, const UnitLimits& limits);

/// Smallest step count for which fit_profile succeeds.
int minimum_profile_steps(double dt, const UnitLimits& limits);

/// Continuous-time minimum duration of a rest-to-rest move of length
/// `distance` under velocity, acceleration and jerk bounds.
double scurve_min_time(double distance, double v_max, double a_max, double j_max);

/// Splits `total` into parts proportional to `weights` (largest remainder),
/// after first giving each index its `floor` entry. Requires sum(floor) <= total.
std::vector<int> allocate_steps(int total, const std::vector<int>& floor,
                                const std::vector<double>& weights);

}  // namespace lego
