#include <doctest.h>

#include "lego/eoat.hpp"
#include "lego/errors.hpp"
#include "lego/kinematics.hpp"
#include "lego/rng.hpp"
#include "oracles.hpp"

using namespace lego;

namespace {

Pose random_pose(Rng& rng) {
  Vec3 w(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
  w *= uniform(rng, 0, oracle::kPi) / w.norm();
  return {rotation_exp(w), Vec3(uniform(rng, -500, 500), uniform(rng, -500, 500),
                                uniform(rng, -500, 500))};
}

JointVector random_q(const ArmModel& arm, Rng& rng, double shrink = 1.0) {
  JointVector q;
  for (int i = 0; i < 6; ++i) {
    const auto& l = arm.limits[static_cast<std::size_t>(i)];
    const double mid = 0.5 * (l.lower + l.upper), half = 0.5 * (l.upper - l.lower) * shrink;
    q[i] = uniform(rng, mid - half, mid + half);
  }
  return q;
}

}  // namespace

TEST_CASE("compose with identity returns the pose") {
  Rng rng(1);
  Pose p = random_pose(rng);
  Pose r = compose(p, Pose::identity());
  CHECK((r.rotation - p.rotation).norm() == doctest::Approx(0.0));
  CHECK((r.translation - p.translation).norm() == doctest::Approx(0.0));
}

TEST_CASE("two half rotations about Y make the whole rotation") {
  const double theta = 0.7;
  Pose half = Pose::from_rotation(rot_y(theta / 2));
  Pose r = compose(half, half);
  CHECK((r.rotation - rot_y(theta)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("compose matches the homogeneous matrix product") {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    Pose a = random_pose(rng), b = random_pose(rng);
    Eigen::Matrix4d expect = oracle::homogeneous(a) * oracle::homogeneous(b);
    CHECK(oracle::max_abs_diff(oracle::homogeneous(compose(a, b)), expect) < 1e-9);
  }
}

TEST_CASE("inverse undoes a pose") {
  Rng rng(3);
  Pose a = random_pose(rng);
  Eigen::Matrix4d m = oracle::homogeneous(compose(a, inverse(a)));
  CHECK(oracle::max_abs_diff(m, Eigen::Matrix4d::Identity()) < 1e-12);
}

TEST_CASE("long composition chains stay orthonormal") {
  Rng rng(4);
  Pose p;
  for (int i = 0; i < 100; ++i) {
    p = compose(p, random_pose(rng));
    CHECK(std::abs(p.rotation.determinant() - 1.0) < 1e-9);
    CHECK((p.rotation * p.rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("rotation log and exp round trip") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    Pose p = random_pose(rng);
    CHECK((rotation_exp(rotation_log(p.rotation)) - p.rotation).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK(rotation_log(Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("xyz angles round trip") {
  Vec3 deg(10, -20, 30);
  CHECK((to_xyz_deg(from_xyz_deg(deg)) - deg).norm() < 1e-9);
}

TEST_CASE("rotate_about_axis_frame") {
  Rng rng(6);
  Pose target = random_pose(rng);
  Pose axis = random_pose(rng);

  SUBCASE("zero angle leaves the target") {
    Pose r = rotate_about_axis_frame(target, axis, 0.0);
    CHECK(oracle::max_abs_diff(oracle::homogeneous(r), oracle::homogeneous(target)) < 1e-12);
  }
  SUBCASE("points on the axis stay fixed") {
    for (double angle : {0.1, -0.5, 1.2}) {
      Pose on_axis = compose(axis, Pose::from_translation({0, 37.0, 0}));
      on_axis.rotation = target.rotation;
      Pose r = rotate_about_axis_frame(on_axis, axis, angle);
      CHECK((r.translation - on_axis.translation).norm() < 1e-9);
    }
  }
  SUBCASE("conjugation oracle at the top lever offset") {
    Pose o0 = random_pose(rng);
    Pose frame = compose(o0, Pose::from_translation({7.8, 0, 0}));
    Pose brick = compose(o0, Pose::from_translation({3, -4, 5}));
    const double angle = 15 * oracle::kDeg;
    Eigen::Matrix4d f = oracle::homogeneous(frame);
    Eigen::Matrix4d expect =
        f * oracle::rot_y(angle) * oracle::rigid_inverse(f) * oracle::homogeneous(brick);
    Pose r = rotate_about_axis_frame(brick, frame, angle);
    CHECK(oracle::max_abs_diff(oracle::homogeneous(r), expect) < 1e-9);
  }
  SUBCASE("angle then minus angle restores") {
    for (int i = 0; i < 50; ++i) {
      Pose t = random_pose(rng), f = random_pose(rng);
      double a = uniform(rng, -1.5, 1.5);
      Pose r = rotate_about_axis_frame(rotate_about_axis_frame(t, f, a), f, -a);
      CHECK(oracle::max_abs_diff(oracle::homogeneous(r), oracle::homogeneous(t)) < 1e-9);
    }
  }
}

TEST_CASE("forward kinematics of a degenerate chain is the base pose") {
  ArmModel arm = default_arm();
  for (auto& r : arm.dh) r = {};
  Rng rng(7);
  arm.base_pose = random_pose(rng);
  Pose p = forward_kinematics(arm, JointVector::Zero());
  CHECK(oracle::max_abs_diff(oracle::homogeneous(p), oracle::homogeneous(arm.base_pose)) < 1e-12);
}

TEST_CASE("forward kinematics matches the explicit DH product") {
  ArmModel arm = mount_tool(default_arm(), EoatConfig{});
  Rng rng(8);
  arm.base_pose = random_pose(rng);
  for (int j = 0; j < 6; ++j) {
    JointVector q = arm.home;
    q[j] += 0.3;
    CHECK(oracle::max_abs_diff(oracle::homogeneous(forward_kinematics(arm, q)),
                               oracle::chain(arm, q)) < 1e-9);
  }
  for (int i = 0; i < 100; ++i) {
    JointVector q = random_q(arm, rng);
    CHECK(oracle::max_abs_diff(oracle::homogeneous(forward_kinematics(arm, q)),
                               oracle::chain(arm, q)) < 1e-9);
  }
}

TEST_CASE("joint limits are inclusive") {
  ArmModel arm = default_arm();
  JointVector q = arm.home;
  q[1] = arm.limits[1].upper;
  CHECK_NOTHROW(forward_kinematics(arm, q));
  q[1] = std::nextafter(arm.limits[1].upper, 10.0) + 1e-12;
  CHECK_THROWS_AS(forward_kinematics(arm, q), JointLimitError);
  q[1] = arm.limits[1].lower - 1e-12;
  CHECK_THROWS_AS(forward_kinematics(arm, q), JointLimitError);
}

TEST_CASE("Jacobian matches finite differences") {
  ArmModel arm = mount_tool(default_arm(), EoatConfig{});
  Rng rng(9);
  JointVector q = random_q(arm, rng, 0.8);
  Jacobian jac = geometric_jacobian(arm, q);
  const double h = 1e-6;
  Pose p0 = forward_kinematics_unchecked(arm, q);
  for (int i = 0; i < 6; ++i) {
    JointVector dq = q;
    dq[i] += h;
    Pose p1 = forward_kinematics_unchecked(arm, dq);
    Vec3 lin = (p1.translation - p0.translation) / h;
    Vec3 ang = rotation_log(p1.rotation * p0.rotation.transpose()) / h;
    CHECK((lin - jac.block<3, 1>(0, i)).norm() < 1e-3);
    CHECK((ang - jac.block<3, 1>(3, i)).norm() < 1e-6);
  }
}

TEST_CASE("inverse kinematics") {
  ArmModel arm = mount_tool(default_arm(), EoatConfig{});

  SUBCASE("target at the seed pose returns the seed") {
    JointVector seed = arm.home;
    seed[1] = 0.2;
    seed[2] = -0.1;
    JointVector q = inverse_kinematics(arm, forward_kinematics(arm, seed), seed);
    CHECK((q - seed).norm() == 0.0);
  }
  SUBCASE("1 mm along tool Z") {
    JointVector seed = arm.home;
    seed[1] = 0.3;
    Pose start = forward_kinematics(arm, seed);
    Pose target = start;
    target.translation += start.rotation.col(2) * 1.0;
    JointVector q = inverse_kinematics(arm, target, seed);
    Pose reached = forward_kinematics(arm, q);
    CHECK((reached.translation - target.translation).norm() < 1e-4);
    CHECK(oracle::rotation_distance(reached.rotation, target.rotation) < 1e-6);
  }
  SUBCASE("unreachable targets") {
    Pose far = forward_kinematics(arm, arm.home);
    far.translation = Vec3(3000, 0, 0);
    CHECK_THROWS_AS(inverse_kinematics(arm, far, arm.home), IkError);
    far.translation = Vec3(1300, 0, 400);
    CHECK_THROWS_AS(inverse_kinematics(arm, far, arm.home), IkError);
  }
  SUBCASE("round trip over random reachable targets") {
    Rng rng(10);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
      JointVector q_true = random_q(arm, rng, 0.7);
      Pose target = forward_kinematics(arm, q_true);
      JointVector seed = q_true;
      for (int k = 0; k < 6; ++k) seed[k] += uniform(rng, -0.05, 0.05);
      JointVector q;
      try {
        q = inverse_kinematics(arm, target, seed);
      } catch (const IkError&) {
        continue;
      }
      ++checked;
      Pose reached = forward_kinematics(arm, q);
      CHECK((reached.translation - target.translation).norm() < 1e-4);
      CHECK(oracle::rotation_distance(reached.rotation, target.rotation) < 1e-6);
    }
    CHECK(checked >= 990);
  }
}
