#include "lego/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "lego/errors.hpp"

namespace lego {

namespace {

constexpr double kTiny = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

int horizon_steps(double horizon, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  if (!(horizon >= 0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be >= 0");
  return std::max(1, static_cast<int>(std::lround(horizon / dt)));
}

std::optional<UnitLimits> joint_unit_limits(const JointVector& d, const ControlLimits& lim) {
  UnitLimits u{kInf, kInf, kInf};
  const JointVector jb = lim.jerk_bound();
  bool moving = false;
  for (int i = 0; i < 6; ++i) {
    double m = std::abs(d[i]);
    if (m <= kTiny) continue;
    moving = true;
    u.velocity = std::min(u.velocity, lim.velocity[i] / m);
    u.acceleration = std::min(u.acceleration, lim.acceleration[i] / m);
    u.jerk = std::min(u.jerk, jb[i] / m);
  }
  if (!moving) return std::nullopt;
  return u;
}

std::optional<UnitLimits> cartesian_unit_limits(const Pose& a, const Pose& b,
                                                const CartesianLimits& lim) {
  UnitLimits u{kInf, kInf, kInf};
  double len = (b.translation - a.translation).norm();
  double ang = rotation_angle_between(a.rotation, b.rotation);
  bool moving = false;
  if (len > kTiny) {
    moving = true;
    u.velocity = std::min(u.velocity, lim.linear_velocity / len);
    u.acceleration = std::min(u.acceleration, lim.linear_acceleration / len);
    u.jerk = std::min(u.jerk, lim.linear_jerk / len);
  }
  if (ang > kTiny) {
    moving = true;
    u.velocity = std::min(u.velocity, lim.angular_velocity / ang);
    u.acceleration = std::min(u.acceleration, lim.angular_acceleration / ang);
    u.jerk = std::min(u.jerk, lim.angular_jerk / ang);
  }
  if (!moving) return std::nullopt;
  return u;
}

struct SegmentLayout {
  std::vector<int> steps;
  std::vector<DiscreteProfile> profiles;
};

SegmentLayout layout_segments(const std::vector<std::optional<UnitLimits>>& units, int total,
                              double dt) {
  const std::size_t n = units.size();
  std::vector<int> floor(n, 0);
  std::vector<double> weight(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    if (!units[s]) continue;
    const UnitLimits& u = *units[s];
    weight[s] = scurve_min_time(1.0, u.velocity, u.acceleration, u.jerk);
    floor[s] = minimum_profile_steps(dt, u);
  }
  int need = std::accumulate(floor.begin(), floor.end(), 0);
  if (need > total) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "horizon of %d steps is below the minimum of %d steps", total,
                  need);
    throw InfeasibleHorizonError(buf);
  }
  SegmentLayout out;
  out.steps = allocate_steps(total, floor, weight);
  out.profiles.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (!units[s]) {
      out.steps[s] = 0;
      continue;
    }
    auto p = fit_profile(out.steps[s], dt, *units[s]);
    if (!p) throw InfeasibleHorizonError("segment " + std::to_string(s) + " has no feasible profile");
    out.profiles[s] = *p;
  }
  return out;
}

// Zero-motion plans still produce one dwell segment so that T_steps >= 1.
int dwell_steps(const std::vector<int>& steps, int total) {
  return total - std::accumulate(steps.begin(), steps.end(), 0);
}

void step_state(double& q, double& v, double& a, double j, double dt) {
  q += v * dt + a * dt * dt / 2.0 + j * dt * dt * dt / 6.0;
  v += a * dt + j * dt * dt / 2.0;
  a += j * dt;
}

void fill_jerk_stats(ControlSequence& seq, const ControlLimits& limits) {
  const JointVector jb = limits.jerk_bound();
  double worst = 0.0;
  for (int k = 0; k < seq.controls.rows(); ++k) {
    for (int i = 0; i < seq.controls.cols(); ++i) {
      worst = std::max(worst, std::abs(seq.controls(k, i)) / jb[i]);
    }
  }
  seq.max_jerk_ratio = worst;
  seq.jerk_violation = worst > 1.0 + 1e-9;
}

}  // namespace

void ControlLimits::validate() const {
  for (int i = 0; i < 6; ++i) {
    if (!(u_min[i] < 0.0 && u_max[i] > 0.0)) {
      throw std::invalid_argument("control bounds must satisfy u_min < 0 < u_max");
    }
    if (!(velocity[i] > 0.0 && acceleration[i] > 0.0)) {
      throw std::invalid_argument("velocity and acceleration caps must be positive");
    }
  }
}

JointVector ControlLimits::jerk_bound() const { return u_min.cwiseAbs().cwiseMin(u_max); }

ControlLimits default_control_limits() {
  ControlLimits l;
  l.velocity << 3.0, 3.0, 3.5, 6.0, 6.0, 8.0;
  l.acceleration << 30.0, 30.0, 35.0, 60.0, 60.0, 80.0;
  l.u_max << 3000.0, 3000.0, 3500.0, 6000.0, 6000.0, 8000.0;
  l.u_min = -l.u_max;
  return l;
}

void CartesianLimits::validate() const {
  const double v[] = {linear_velocity,  linear_acceleration,  linear_jerk,
                      angular_velocity, angular_acceleration, angular_jerk};
  for (double x : v) {
    if (!(x > 0)) throw std::invalid_argument("Cartesian limits must be positive");
  }
}

std::string controller_name(ControllerKind c) {
  return c == ControllerKind::joint_jpc ? "joint_jpc" : "cartesian_jpc";
}

ControllerKind parse_controller(const std::string& text) {
  if (text == "joint_jpc" || text == "joint") return ControllerKind::joint_jpc;
  if (text == "cartesian_jpc" || text == "cartesian") return ControllerKind::cartesian_jpc;
  throw std::invalid_argument("controller must be joint_jpc or cartesian_jpc, got '" + text + "'");
}

std::vector<JointVector> solve_waypoints(const ArmModel& arm, const ManipulationPlan& plan,
                                         const IkOptions& ik) {
  std::vector<JointVector> out;
  out.reserve(plan.waypoints.size());
  if (plan.waypoints.empty()) return out;
  JointVector seed = arm.home;
  Vec3 local = inverse(arm.base_pose).apply(plan.waypoints.front().pose.translation);
  seed[0] = std::atan2(local.y(), local.x());
  seed = arm.clamp(seed);
  for (const auto& wp : plan.waypoints) {
    seed = inverse_kinematics(arm, wp.pose, seed, ik);
    out.push_back(seed);
  }
  return out;
}

JointSchedule schedule_joint_jpc(const std::vector<JointVector>& waypoints, double horizon,
                                 const ControlLimits& limits, double dt) {
  limits.validate();
  if (waypoints.empty()) throw std::invalid_argument("trajectory needs at least one waypoint");
  JointSchedule out;
  out.dt = dt;
  out.total_steps = horizon_steps(horizon, dt);
  out.waypoints = waypoints;
  std::vector<std::optional<UnitLimits>> units;
  for (std::size_t s = 0; s + 1 < waypoints.size(); ++s) {
    units.push_back(joint_unit_limits(waypoints[s + 1] - waypoints[s], limits));
  }
  SegmentLayout layout = layout_segments(units, out.total_steps, dt);
  out.segment_steps = std::move(layout.steps);
  out.profiles = std::move(layout.profiles);
  return out;
}

ControlSequence render_schedule(const JointSchedule& schedule, const ControlLimits& limits) {
  ControlSequence seq;
  seq.controller = ControllerKind::joint_jpc;
  seq.integration = Integration::exact_jerk;
  seq.dt = schedule.dt;
  const int n = schedule.total_steps;
  seq.start = schedule.waypoints.front();
  seq.controls = Eigen::MatrixXd::Zero(n, 6);
  seq.positions.resize(n, 6);
  seq.velocities.resize(n, 6);
  seq.accelerations.resize(n, 6);

  JointVector q = seq.start;
  JointVector v = JointVector::Zero();
  JointVector a = JointVector::Zero();
  int k = 0;
  auto emit = [&](const JointVector& jerk) {
    for (int i = 0; i < 6; ++i) step_state(q[i], v[i], a[i], jerk[i], seq.dt);
    seq.controls.row(k) = jerk.transpose();
    seq.positions.row(k) = q.transpose();
    seq.velocities.row(k) = v.transpose();
    seq.accelerations.row(k) = a.transpose();
    ++k;
  };
  for (std::size_t s = 0; s < schedule.segment_steps.size(); ++s) {
    const JointVector d = schedule.waypoints[s + 1] - schedule.waypoints[s];
    const DiscreteProfile& p = schedule.profiles[s];
    for (int j = 0; j < schedule.segment_steps[s]; ++j) emit(d * (p.jerk * p.jerk_sign(j)));
    seq.waypoint_steps.push_back(k);
  }
  for (int rest = dwell_steps(schedule.segment_steps, n); rest > 0; --rest) {
    emit(JointVector::Zero());
  }
  seq.waypoint_steps.insert(seq.waypoint_steps.begin(), 0);
  fill_jerk_stats(seq, limits);
  return seq;
}

double schedule_effort(const JointSchedule& schedule) {
  double total = 0.0;
  for (std::size_t s = 0; s < schedule.segment_steps.size(); ++s) {
    if (schedule.segment_steps[s] == 0) continue;
    const DiscreteProfile& p = schedule.profiles[s];
    double l1 = (schedule.waypoints[s + 1] - schedule.waypoints[s]).cwiseAbs().sum();
    total += 4.0 * p.n1 * p.jerk * l1;
  }
  return total / schedule.total_steps;
}

ControlSequence generate_joint_jpc(const std::vector<JointVector>& waypoints, double horizon,
                                   const ControlLimits& limits, double dt) {
  return render_schedule(schedule_joint_jpc(waypoints, horizon, limits, dt), limits);
}

ControlSequence generate_joint_jpc(const ArmModel& arm, const ManipulationPlan& plan,
                                   double horizon, const ControlLimits& limits, double dt) {
  return generate_joint_jpc(solve_waypoints(arm, plan), horizon, limits, dt);
}

Pose interpolate_pose(const Pose& a, const Pose& b, double s) {
  Pose p;
  p.translation = a.translation + s * (b.translation - a.translation);
  Vec3 w = rotation_log(a.rotation.transpose() * b.rotation);
  p.rotation = a.rotation * rotation_exp(s * w);
  return p;
}

ControlSequence generate_cartesian_jpc(const ArmModel& arm, const std::vector<Pose>& poses,
                                       const JointVector& start, double horizon,
                                       const ControlLimits& joint_limits,
                                       const CartesianLimits& limits, double dt,
                                       const IkOptions& ik) {
  limits.validate();
  joint_limits.validate();
  if (poses.empty()) throw std::invalid_argument("trajectory needs at least one pose");
  const int n = horizon_steps(horizon, dt);
  std::vector<std::optional<UnitLimits>> units;
  for (std::size_t s = 0; s + 1 < poses.size(); ++s) {
    units.push_back(cartesian_unit_limits(poses[s], poses[s + 1], limits));
  }
  SegmentLayout layout = layout_segments(units, n, dt);
  // differences of IK residuals are divided by dt^3
  IkOptions tight = ik;
  tight.tol_translation = std::min(ik.tol_translation, 1e-9);
  tight.tol_rotation = std::min(ik.tol_rotation, 1e-11);

  ControlSequence seq;
  seq.controller = ControllerKind::cartesian_jpc;
  seq.integration = Integration::backward_difference;
  seq.dt = dt;
  seq.start = start;
  seq.positions.resize(n, 6);
  int k = 0;
  JointVector q = start;
  for (std::size_t s = 0; s < units.size(); ++s) {
    const DiscreteProfile& p = layout.profiles[s];
    double sp = 0.0, sv = 0.0, sa = 0.0;
    for (int j = 0; j < layout.steps[s]; ++j) {
      step_state(sp, sv, sa, p.jerk * p.jerk_sign(j), dt);
      q = inverse_kinematics(arm, interpolate_pose(poses[s], poses[s + 1], sp), q, tight);
      seq.positions.row(k++) = q.transpose();
    }
    seq.waypoint_steps.push_back(k);
  }
  while (k < n) seq.positions.row(k++) = q.transpose();
  seq.waypoint_steps.insert(seq.waypoint_steps.begin(), 0);

  seq.controls.resize(n, 6);
  seq.velocities.resize(n, 6);
  seq.accelerations.resize(n, 6);
  auto at = [&](int i) -> JointVector {
    return i < 0 ? start : JointVector(seq.positions.row(i).transpose());
  };
  for (int i = 0; i < n; ++i) {
    JointVector q0 = at(i), q1 = at(i - 1), q2 = at(i - 2), q3 = at(i - 3);
    seq.velocities.row(i) = ((q0 - q1) / dt).transpose();
    seq.accelerations.row(i) = ((q0 - 2 * q1 + q2) / (dt * dt)).transpose();
    seq.controls.row(i) = ((q0 - 3 * q1 + 3 * q2 - q3) / (dt * dt * dt)).transpose();
  }
  fill_jerk_stats(seq, joint_limits);
  return seq;
}

ControlSequence generate_cartesian_jpc(const ArmModel& arm, const ManipulationPlan& plan,
                                       double horizon, const ControlLimits& joint_limits,
                                       const CartesianLimits& limits, double dt,
                                       const IkOptions& ik) {
  if (plan.waypoints.empty()) throw std::invalid_argument("plan has no waypoints");
  ManipulationPlan first = plan;
  first.waypoints.resize(1);
  JointVector start = solve_waypoints(arm, first, ik).front();
  std::vector<Pose> poses;
  for (const auto& wp : plan.waypoints) poses.push_back(wp.pose);
  return generate_cartesian_jpc(arm, poses, start, horizon, joint_limits, limits, dt, ik);
}

double control_effort(const ControlSequence& seq) {
  if (seq.steps() == 0) throw std::invalid_argument("empty control sequence");
  double total = 0.0;
  for (int k = 0; k < seq.steps(); ++k) total += seq.controls.row(k).cwiseAbs().sum();
  return total / seq.steps();
}

namespace {

template <class Feasible>
double bisect_time(double guess, Feasible feasible) {
  double lo = 0.0;
  double hi = std::max(guess, 1e-3);
  while (!feasible(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw InfeasibleHorizonError("no feasible horizon found");
  }
  while (hi - lo > 1e-3) {
    double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

template <class Units>
double min_time_from_units(const Units& units, double dt) {
  double guess = 0.0;
  bool moving = false;
  for (const auto& u : units) {
    if (!u) continue;
    moving = true;
    guess += scurve_min_time(1.0, u->velocity, u->acceleration, u->jerk);
  }
  if (!moving) return 0.0;
  return bisect_time(guess, [&](double t) {
    try {
      layout_segments(units, horizon_steps(t, dt), dt);
      return true;
    } catch (const InfeasibleHorizonError&) {
      return false;
    }
  });
}

}  // namespace

double minimum_feasible_time(const std::vector<JointVector>& waypoints,
                             const ControlLimits& limits, double dt) {
  limits.validate();
  std::vector<std::optional<UnitLimits>> units;
  for (std::size_t s = 0; s + 1 < waypoints.size(); ++s) {
    units.push_back(joint_unit_limits(waypoints[s + 1] - waypoints[s], limits));
  }
  return min_time_from_units(units, dt);
}

double minimum_feasible_time(const ArmModel& arm, const ManipulationPlan& plan,
                             const ControlLimits& limits, double dt) {
  return minimum_feasible_time(solve_waypoints(arm, plan), limits, dt);
}

double minimum_cartesian_time(const std::vector<Pose>& poses, const CartesianLimits& limits,
                              double dt) {
  limits.validate();
  std::vector<std::optional<UnitLimits>> units;
  for (std::size_t s = 0; s + 1 < poses.size(); ++s) {
    units.push_back(cartesian_unit_limits(poses[s], poses[s + 1], limits));
  }
  return min_time_from_units(units, dt);
}

std::string trajectory_table(const ControlSequence& seq) {
  std::ostringstream os;
  os << "t";
  for (const char* name : {"q", "v", "a", "j"}) {
    for (int i = 1; i <= 6; ++i) os << ' ' << name << i;
  }
  os << "\n";
  char buf[32];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, " %.9g", x);
    os << buf;
  };
  std::snprintf(buf, sizeof buf, "%.9g", 0.0);
  os << buf;
  for (int i = 0; i < 6; ++i) put(seq.start[i]);
  for (int i = 0; i < 18; ++i) put(0.0);
  os << "\n";
  for (int k = 0; k < seq.steps(); ++k) {
    std::snprintf(buf, sizeof buf, "%.9g", (k + 1) * seq.dt);
    os << buf;
    for (const Eigen::MatrixXd* m :
         {&seq.positions, &seq.velocities, &seq.accelerations, &seq.controls}) {
      for (int i = 0; i < 6; ++i) put((*m)(k, i));
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace lego
