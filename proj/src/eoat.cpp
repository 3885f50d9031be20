#include "lego/eoat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "lego/errors.hpp"

namespace lego {

namespace {
constexpr double kRad = std::numbers::pi / 180.0;
}

void EoatConfig::validate() const {
  if (top_lever <= 0 || side_lever <= 0) throw std::invalid_argument("EOAT levers must be positive");
  if (tool_length <= 0) throw std::invalid_argument("EOAT tool length must be positive");
}

ArmModel mount_tool(ArmModel arm, const EoatConfig& eoat) {
  eoat.validate();
  arm.tool = Pose::from_translation({0.0, 0.0, eoat.tool_length});
  return arm;
}

void TwistSpec::validate() const {
  if (!(d_x >= 0.0 && d_x <= 10.0) || !(d_z >= 0.0 && d_z <= 10.0)) {
    throw std::invalid_argument("twist offsets must lie in [0, 10] mm");
  }
  if (!(theta >= 0.0 && theta <= 90.0)) throw std::invalid_argument("twist angle must lie in [0, 90] deg");
}

Pose tool_frame_for_brick(const LegoWorld& world, const BrickInstance& brick) {
  const BrickDims& d = world.dims();
  Pose local;
  local.rotation = rot_x(std::numbers::pi);
  local.translation = {0.0, 0.5 * brick.kind.width * d.knob_pitch, d.brick_height};
  return compose(brick_frame(world, brick), local);
}

Pose twist_axis_frame(const Pose& tool_frame, const TwistSpec& spec) {
  return compose(tool_frame, Pose::from_translation({spec.d_x, 0.0, spec.d_z}));
}

namespace {

// Straight moves are split so that no step exceeds max_step_mm.
void append_line(std::vector<Waypoint>& out, const Pose& from, const Pose& to, Phase phase,
                 double max_step) {
  double length = (to.translation - from.translation).norm();
  int steps = std::max(1, static_cast<int>(std::ceil(length / max_step - 1e-12)));
  for (int i = 1; i <= steps; ++i) {
    double s = static_cast<double>(i) / steps;
    Pose p = from;
    p.translation = from.translation + s * (to.translation - from.translation);
    out.push_back({p, phase});
  }
}

ManipulationPlan make_plan(const LegoWorld& world, const BrickInstance& target, TwistMode mode,
                           const TwistSpec& spec, const PlanOptions& options) {
  if (options.arc_steps < 1 || !(options.max_step_mm > 0) || !(options.max_step_deg > 0)) {
    throw std::invalid_argument("arc_steps and step bounds must be positive");
  }
  ManipulationPlan plan;
  plan.mode = mode;
  plan.target = target;
  plan.engaged_pose = tool_frame_for_brick(world, target);
  plan.twist_frame = twist_axis_frame(plan.engaged_pose, spec);
  const double radius = std::hypot(spec.d_x, spec.d_z);
  plan.arc_steps = std::max({options.arc_steps,
                             static_cast<int>(std::ceil(spec.theta / options.max_step_deg - 1e-9)),
                             static_cast<int>(std::ceil(spec.theta * kRad * radius /
                                                        options.max_step_mm - 1e-9))});

  // world z-up is -Z of the tool frame
  const Vec3 up = -plan.engaged_pose.rotation.col(2);
  Pose approach = plan.engaged_pose;
  approach.translation += options.approach_height * up;
  plan.waypoints.push_back({approach, Phase::approach});
  append_line(plan.waypoints, approach, plan.engaged_pose, Phase::insert, options.max_step_mm);

  double signed_angle = (mode == TwistMode::disassemble ? 1.0 : -1.0) * spec.theta * kRad;
  for (int i = 1; i <= plan.arc_steps; ++i) {
    double angle = signed_angle * static_cast<double>(i) / plan.arc_steps;
    plan.waypoints.push_back(
        {rotate_about_axis_frame(plan.engaged_pose, plan.twist_frame, angle), Phase::twist_arc});
  }
  Pose arc_end = plan.waypoints.back().pose;
  Pose lifted = arc_end;
  lifted.translation += options.retreat_height * up;
  append_line(plan.waypoints, arc_end, lifted, Phase::retreat, options.max_step_mm);
  return plan;
}

}  // namespace

ManipulationPlan plan_assembly(const LegoWorld& world, const BrickInstance& placement,
                               const TwistSpec& spec, const PlanOptions& options) {
  spec.validate();
  if (std::string why = world.placement_problem(placement); !why.empty()) {
    throw PlanningError("cannot assemble here: " + why);
  }
  return make_plan(world, placement, TwistMode::assemble, spec, options);
}

ManipulationPlan plan_disassembly(const LegoWorld& world, int brick_id, const TwistSpec& spec,
                                  const PlanOptions& options) {
  spec.validate();
  const BrickInstance& brick = world.at(brick_id);
  if (world.has_brick_above(brick_id)) {
    throw PlanningError("brick " + std::to_string(brick_id) + " is occluded by a brick above");
  }
  return make_plan(world, brick, TwistMode::disassemble, spec, options);
}

void check_reachable(const ArmModel& arm, const ManipulationPlan& plan, const IkOptions& ik) {
  JointVector q = arm.home;
  for (const auto& wp : plan.waypoints) q = inverse_kinematics(arm, wp.pose, q, ik);
}

std::string phase_name(Phase p) {
  switch (p) {
    case Phase::approach: return "approach";
    case Phase::insert: return "insert";
    case Phase::twist_arc: return "twist_arc";
    case Phase::retreat: return "retreat";
  }
  return "?";
}

std::string mode_name(TwistMode m) { return m == TwistMode::assemble ? "assemble" : "disassemble"; }

TwistMode parse_mode(const std::string& text) {
  if (text == "assemble") return TwistMode::assemble;
  if (text == "disassemble") return TwistMode::disassemble;
  throw std::invalid_argument("mode must be assemble or disassemble, got '" + text + "'");
}

std::string dump_plan(const ManipulationPlan& plan) {
  std::ostringstream os;
  os << "# x_mm y_mm z_mm rx_deg ry_deg rz_deg phase\n";
  char buf[160];
  for (const auto& wp : plan.waypoints) {
    Vec3 a = to_xyz_deg(wp.pose.rotation);
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %.9g %.9g %.9g ", wp.pose.translation.x(),
                  wp.pose.translation.y(), wp.pose.translation.z(), a.x(), a.y(), a.z());
    os << buf << phase_name(wp.phase) << "\n";
  }
  return os.str();
}

}  // namespace lego
