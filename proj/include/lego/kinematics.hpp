#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lego {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using JointVector = Eigen::Matrix<double, 6, 1>;
using Jacobian = Eigen::Matrix<double, 6, 6>;

/// Rigid transform. Translation in mm, rotation as an orthonormal matrix.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static Pose from_rotation(const Mat3& r) { return {r, Vec3::Zero()}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Mat4 matrix() const;
  static Pose from_matrix(const Mat4& m);
};

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

bool is_valid_rotation(const Mat3& r, double tol = 1e-9);

// Rotation vector (axis * angle) of r, angle in [0, pi].
Vec3 rotation_log(const Mat3& r);
Mat3 rotation_exp(const Vec3& w);
double rotation_angle_between(const Mat3& a, const Mat3& b);

// Fixed-angle XYZ convention used by every file format:
// R = Rz(c) * Ry(b) * Rx(a), angles in degrees.
Vec3 to_xyz_deg(const Mat3& r);
Mat3 from_xyz_deg(const Vec3& deg);

/// Rigidly rotates `target` about the Y axis of `axis_frame` by `angle` rad.
/// Points on that axis stay fixed. Requires |angle| <= pi/2.
Pose rotate_about_axis_frame(const Pose& target, const Pose& axis_frame, double angle);

struct DhRow {
  double a = 0.0;             // mm
  double alpha = 0.0;         // rad
  double d = 0.0;             // mm
  double theta_offset = 0.0;  // rad
};

struct JointLimit {
  double lower = 0.0;  // rad
  double upper = 0.0;  // rad
};

/// Standard-DH 6-joint serial arm. `tool` maps the flange to the tool tip.
struct ArmModel {
  std::array<DhRow, 6> dh{};
  std::array<JointLimit, 6> limits{};
  Pose base_pose;
  Pose tool;
  JointVector home = JointVector::Zero();

  void validate() const;
  bool within_limits(const JointVector& q, double slack = 0.0) const;
  JointVector clamp(const JointVector& q) const;
};

// Roughly the proportions of a 7 kg-class industrial arm (reach ~0.9 m).
ArmModel default_arm();

Pose forward_kinematics(const ArmModel& arm, const JointVector& q);
// Same chain without the limit check; used inside solvers.
Pose forward_kinematics_unchecked(const ArmModel& arm, const JointVector& q);
// Geometric Jacobian in the base frame; rows are (linear mm/rad, angular).
Jacobian geometric_jacobian(const ArmModel& arm, const JointVector& q);

struct IkOptions {
  double damping = 1e-3;
  int max_iterations = 200;
  double step_clamp = 0.1;
  double workspace_radius = 1500.0;  // mm, from the seed's pose
  double tol_translation = 1e-5;     // mm
  double tol_rotation = 1e-7;        // rad
};

/// Damped least-squares IK. Throws IkError on non-convergence or limit
/// infeasibility.
JointVector inverse_kinematics(const ArmModel& arm, const Pose& target, const JointVector& seed,
                               const IkOptions& options = {});

}  // namespace lego
