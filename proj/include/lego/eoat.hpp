#pragma once

#include <string>
#include <vector>

#include "lego/kinematics.hpp"
#include "lego/lego_world.hpp"

namespace lego {

struct EoatConfig {
  double top_lever = 7.8;     // mm
  double side_lever = 3.2;    // mm
  double tool_length = 120.0; // flange to tool frame O_0, mm

  void validate() const;
};

/// Returns a copy of `arm` whose tool transform ends at the EOAT frame O_0.
ArmModel mount_tool(ArmModel arm, const EoatConfig& eoat);

enum class TwistMode { assemble, disassemble };

struct TwistSpec {
  TwistMode mode = TwistMode::disassemble;
  double d_x = 0.0;    // mm, along tool X
  double d_z = 0.0;    // mm, along tool Z (into the brick)
  double theta = 0.0;  // degrees

  void validate() const;
};

enum class Phase { approach, insert, twist_arc, retreat };

struct Waypoint {
  Pose pose;  // EOAT frame O_0 in the world
  Phase phase = Phase::approach;
};

struct PlanOptions {
  int arc_steps = 16;  // raised when a step would exceed the bounds below
  double approach_height = 2.0;  // mm above the engaged pose
  double retreat_height = 2.0;
  double max_step_mm = 2.0;
  double max_step_deg = 3.0;
};

struct ManipulationPlan {
  TwistMode mode = TwistMode::disassemble;
  BrickInstance target;
  Pose engaged_pose;  // O_0 while attached to the seated brick
  Pose twist_frame;   // O_a or O_d
  int arc_steps = 0;
  std::vector<Waypoint> waypoints;
};

/// O_0 for a seated brick: on its top face at the near end face, X along the
/// brick's length, Z pointing down into the brick.
Pose tool_frame_for_brick(const LegoWorld& world, const BrickInstance& brick);

/// Twist frame: O_0 shifted by d_x along its X axis and d_z along its Z axis.
/// Both offsets zero gives O_0 itself.
Pose twist_axis_frame(const Pose& tool_frame, const TwistSpec& spec);

/// Approach above the seated pose, insert down to it, twist about the twist
/// frame's Y axis in `arc_steps` equal increments, then lift straight up.
/// Assembly twists by -theta (releasing the brick), disassembly by +theta
/// (peeling the far end up).
ManipulationPlan plan_assembly(const LegoWorld& world, const BrickInstance& placement,
                               const TwistSpec& spec, const PlanOptions& options = {});
ManipulationPlan plan_disassembly(const LegoWorld& world, int brick_id, const TwistSpec& spec,
                                  const PlanOptions& options = {});

/// Throws IkError when some waypoint cannot be reached from the arm's home.
void check_reachable(const ArmModel& arm, const ManipulationPlan& plan, const IkOptions& ik = {});

std::string phase_name(Phase p);
std::string mode_name(TwistMode m);
TwistMode parse_mode(const std::string& text);

/// One line per waypoint: translation mm, XYZ angles deg, phase.
std::string dump_plan(const ManipulationPlan& plan);

}  // namespace lego
