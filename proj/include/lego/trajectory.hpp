#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "lego/eoat.hpp"
#include "lego/kinematics.hpp"
#include "lego/scurve.hpp"

namespace lego {

/// Joint-space bounds. Controls are jerk commands, bounded by [u_min, u_max].
struct ControlLimits {
  JointVector u_min;
  JointVector u_max;
  JointVector velocity;
  JointVector acceleration;

  void validate() const;
  /// Symmetric jerk bound min(|u_min|, u_max) per joint.
  JointVector jerk_bound() const;
};

ControlLimits default_control_limits();

/// Tool-frame bounds for the Cartesian controller.
struct CartesianLimits {
  double linear_velocity = 500.0;         // mm/s
  double linear_acceleration = 20000.0;  // mm/s^2
  double linear_jerk = 1.0e6;            // mm/s^3
  double angular_velocity = 5.0;         // rad/s
  double angular_acceleration = 300.0;
  double angular_jerk = 15000.0;

  void validate() const;
};

enum class ControllerKind { joint_jpc, cartesian_jpc };

std::string controller_name(ControllerKind c);
ControllerKind parse_controller(const std::string& text);

/// How `positions` follow from `controls`.
/// exact_jerk: piecewise-constant jerk over each step, integrated in closed form.
/// backward_difference: controls are third backward differences of positions
/// (positions before the start are taken equal to `start`).
enum class Integration { exact_jerk, backward_difference };

struct ControlSequence {
  ControllerKind controller = ControllerKind::joint_jpc;
  Integration integration = Integration::exact_jerk;
  double dt = 0.004;
  JointVector start = JointVector::Zero();
  // One row per step; positions/velocities/accelerations are the state after the step.
  Eigen::MatrixXd controls;
  Eigen::MatrixXd positions;
  Eigen::MatrixXd velocities;
  Eigen::MatrixXd accelerations;
  std::vector<int> waypoint_steps;  // steps completed when each waypoint is reached
  bool jerk_violation = false;
  double max_jerk_ratio = 0.0;  // max |u_i| / bound_i

  int steps() const { return static_cast<int>(controls.rows()); }
  int dof() const { return static_cast<int>(controls.cols()); }
  double duration() const { return steps() * dt; }
};

/// Joint solutions of every plan waypoint, each seeded from the previous one.
/// The first is seeded from the arm's home with the base joint turned toward
/// the target.
std::vector<JointVector> solve_waypoints(const ArmModel& arm, const ManipulationPlan& plan,
                                         const IkOptions& ik = {});

/// Step layout of a joint-space trajectory through fixed waypoints.
struct JointSchedule {
  double dt = 0.004;
  int total_steps = 0;
  std::vector<JointVector> waypoints;
  std::vector<int> segment_steps;
  std::vector<DiscreteProfile> profiles;  // unit-displacement profile per segment
};

/// Throws InfeasibleHorizonError when some segment cannot be fit.
JointSchedule schedule_joint_jpc(const std::vector<JointVector>& waypoints, double horizon,
                                 const ControlLimits& limits, double dt = 0.004);
ControlSequence render_schedule(const JointSchedule& schedule, const ControlLimits& limits);
/// control_effort of render_schedule(schedule) without rendering it.
double schedule_effort(const JointSchedule& schedule);

ControlSequence generate_joint_jpc(const ArmModel& arm, const ManipulationPlan& plan,
                                   double horizon, const ControlLimits& limits,
                                   double dt = 0.004);
ControlSequence generate_joint_jpc(const std::vector<JointVector>& waypoints, double horizon,
                                   const ControlLimits& limits, double dt = 0.004);

/// Tool poses follow a jerk-limited profile per waypoint pair (straight line,
/// constant-axis rotation) and are mapped through IK at every step. Joint jerk
/// is reported, not clamped.
ControlSequence generate_cartesian_jpc(const ArmModel& arm, const ManipulationPlan& plan,
                                       double horizon, const ControlLimits& joint_limits,
                                       const CartesianLimits& limits, double dt = 0.004,
                                       const IkOptions& ik = {});
ControlSequence generate_cartesian_jpc(const ArmModel& arm, const std::vector<Pose>& poses,
                                       const JointVector& start, double horizon,
                                       const ControlLimits& joint_limits,
                                       const CartesianLimits& limits, double dt = 0.004,
                                       const IkOptions& ik = {});

/// Mean per-step L1 norm of the controls.
double control_effort(const ControlSequence& seq);

/// Smallest horizon (1 ms resolution) accepted by generate_joint_jpc.
double minimum_feasible_time(const ArmModel& arm, const ManipulationPlan& plan,
                             const ControlLimits& limits, double dt = 0.004);
double minimum_feasible_time(const std::vector<JointVector>& waypoints,
                             const ControlLimits& limits, double dt = 0.004);
double minimum_cartesian_time(const std::vector<Pose>& poses, const CartesianLimits& limits,
                              double dt = 0.004);

/// Interpolated pose at s in [0, 1]: linear translation, rotation about the
/// fixed axis of a^T b.
Pose interpolate_pose(const Pose& a, const Pose& b, double s);

/// time, then q, v, a, jerk per joint; one row per step plus the start row.
std::string trajectory_table(const ControlSequence& seq);

}  // namespace lego
