#include "lego/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "lego/errors.hpp"

namespace lego {

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose Pose::from_matrix(const Mat4& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Pose inverse(const Pose& p) {
  Mat3 rt = p.rotation.transpose();
  return {rt, -(rt * p.translation)};
}

Mat3 rot_x(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix();
}
Mat3 rot_y(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix();
}
Mat3 rot_z(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
}

bool is_valid_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  if (((r * r.transpose()) - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

Vec3 rotation_log(const Mat3& r) {
  Eigen::AngleAxisd aa(r);
  return aa.axis() * aa.angle();
}

Mat3 rotation_exp(const Vec3& w) {
  double angle = w.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  return Eigen::AngleAxisd(a.transpose() * b).angle();
}

Vec3 to_xyz_deg(const Mat3& r) {
  constexpr double kDeg = 180.0 / std::numbers::pi;
  double b = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  double a = 0.0;
  double c = 0.0;
  if (std::abs(r(2, 0)) < 1.0 - 1e-12) {
    a = std::atan2(r(2, 1), r(2, 2));
    c = std::atan2(r(1, 0), r(0, 0));
  } else {
    // gimbal lock: fold everything into c
    c = std::atan2(-r(0, 1), r(1, 1));
  }
  return {a * kDeg, b * kDeg, c * kDeg};
}

Mat3 from_xyz_deg(const Vec3& deg) {
  constexpr double kRad = std::numbers::pi / 180.0;
  return rot_z(deg.z() * kRad) * rot_y(deg.y() * kRad) * rot_x(deg.x() * kRad);
}

Pose rotate_about_axis_frame(const Pose& target, const Pose& axis_frame, double angle) {
  Pose twist = Pose::from_rotation(rot_y(angle));
  return compose(compose(compose(axis_frame, twist), inverse(axis_frame)), target);
}

void ArmModel::validate() const {
  for (std::size_t i = 0; i < limits.size(); ++i) {
    if (!(limits[i].lower < limits[i].upper)) {
      std::ostringstream os;
      os << "joint " << i + 1 << ": lower limit must be below upper limit";
      throw std::invalid_argument(os.str());
    }
  }
  if (!is_valid_rotation(base_pose.rotation, 1e-9) || !is_valid_rotation(tool.rotation, 1e-9)) {
    throw std::invalid_argument("arm base or tool rotation is not orthonormal");
  }
}

bool ArmModel::within_limits(const JointVector& q, double slack) const {
  for (int i = 0; i < 6; ++i) {
    if (q[i] < limits[i].lower - slack || q[i] > limits[i].upper + slack) return false;
  }
  return true;
}

JointVector ArmModel::clamp(const JointVector& q) const {
  JointVector out = q;
  for (int i = 0; i < 6; ++i) out[i] = std::clamp(q[i], limits[i].lower, limits[i].upper);
  return out;
}

ArmModel default_arm() {
  constexpr double kPi = std::numbers::pi;
  constexpr double kRad = kPi / 180.0;
  ArmModel arm;
  arm.dh = {{
      {50.0, -kPi / 2, 330.0, 0.0},
      {440.0, 0.0, 0.0, -kPi / 2},
      {35.0, -kPi / 2, 0.0, 0.0},
      {0.0, kPi / 2, 420.0, 0.0},
      {0.0, -kPi / 2, 0.0, 0.0},
      {0.0, 0.0, 80.0, 0.0},
  }};
  arm.limits = {{
      {-170 * kRad, 170 * kRad},
      {-100 * kRad, 145 * kRad},
      {-70 * kRad, 205 * kRad},
      {-190 * kRad, 190 * kRad},
      {-125 * kRad, 125 * kRad},
      {-360 * kRad, 360 * kRad},
  }};
  arm.home << 0.0, 0.0, 0.0, 0.0, kPi / 2, 0.0;
  return arm;
}

namespace {

Pose dh_transform(const DhRow& row, double q) {
  double theta = q + row.theta_offset;
  double ct = std::cos(theta), st = std::sin(theta);
  double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Pose p;
  p.rotation << ct, -st * ca, st * sa,
                st, ct * ca, -ct * sa,
                0.0, sa, ca;
  p.translation << row.a * ct, row.a * st, row.d;
  return p;
}

void check_limits(const ArmModel& arm, const JointVector& q) {
  for (int i = 0; i < 6; ++i) {
    if (q[i] < arm.limits[i].lower || q[i] > arm.limits[i].upper) {
      std::ostringstream os;
      os << "joint " << i + 1 << " value " << q[i] << " rad outside ["
         << arm.limits[i].lower << ", " << arm.limits[i].upper << "]";
      throw JointLimitError(os.str());
    }
  }
}

}  // namespace

Pose forward_kinematics_unchecked(const ArmModel& arm, const JointVector& q) {
  Pose p = arm.base_pose;
  for (int i = 0; i < 6; ++i) p = compose(p, dh_transform(arm.dh[i], q[i]));
  return compose(p, arm.tool);
}

Pose forward_kinematics(const ArmModel& arm, const JointVector& q) {
  check_limits(arm, q);
  return forward_kinematics_unchecked(arm, q);
}

Jacobian geometric_jacobian(const ArmModel& arm, const JointVector& q) {
  std::array<Pose, 7> frames;
  frames[0] = arm.base_pose;
  for (int i = 0; i < 6; ++i) frames[i + 1] = compose(frames[i], dh_transform(arm.dh[i], q[i]));
  Vec3 tip = compose(frames[6], arm.tool).translation;
  Jacobian jac;
  for (int i = 0; i < 6; ++i) {
    Vec3 z = frames[i].rotation.col(2);
    jac.block<3, 1>(0, i) = z.cross(tip - frames[i].translation);
    jac.block<3, 1>(3, i) = z;
  }
  return jac;
}

JointVector inverse_kinematics(const ArmModel& arm, const Pose& target, const JointVector& seed,
                               const IkOptions& options) {
  JointVector q = arm.clamp(seed);
  Pose start = forward_kinematics_unchecked(arm, q);
  if ((target.translation - start.translation).norm() > options.workspace_radius) {
    throw IkError("target outside the workspace radius of the seed pose");
  }
  const double lambda_sq = options.damping * options.damping;
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    Pose current = forward_kinematics_unchecked(arm, q);
    Eigen::Matrix<double, 6, 1> err;
    err.head<3>() = target.translation - current.translation;
    err.tail<3>() = rotation_log(target.rotation * current.rotation.transpose());
    if (err.head<3>().norm() < options.tol_translation &&
        err.tail<3>().norm() < options.tol_rotation) {
      if (!arm.within_limits(q)) throw IkError("IK solution violates joint limits");
      return q;
    }
    if (iter == options.max_iterations) break;
    Jacobian jac = geometric_jacobian(arm, q);
    Jacobian jjt = jac * jac.transpose();
    jjt.diagonal().array() += lambda_sq;
    JointVector step = jac.transpose() * jjt.ldlt().solve(err);
    double largest = step.cwiseAbs().maxCoeff();
    if (largest > options.step_clamp) step *= options.step_clamp / largest;
    JointVector next = q + step;
    JointVector clamped = arm.clamp(next);
    if ((clamped - next).cwiseAbs().maxCoeff() > 0.0 && (clamped - q).norm() < 1e-12) {
      throw IkError("IK pinned against a joint limit");
    }
    q = clamped;
  }
  throw IkError("IK did not converge");
}

}  // namespace lego
