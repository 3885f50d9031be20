#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lego/eoat.hpp"
#include "lego/lego_world.hpp"
#include "lego/trajectory.hpp"

namespace lego {

enum class FailureMode {
  none,
  assemble_misalign,
  assemble_unseated,
  disassemble_drag,
  disassemble_stuck,
  force_abort,
  infeasible_trajectory,
};

std::string failure_name(FailureMode m);

struct ForceModel {
  double seat_stiffness = 4.0;          // N/mm
  double peel_arm_scale = 1.0;
  double force_abort_threshold = 30.0;  // N

  void validate() const;
};

/// Spring/lever stand-in for brick contact.
///
/// Disassembly twists the brick about an axis z_A = brick_height - d_z above
/// the interface it sits on. The per-knob peel moment at that interface is
///   m0 = k * s * theta * r0^2,  r0 = hypot(x_f - d_x, z_A),
/// with x_f the distance from the near end to the far knob row. Interfaces j
/// levels further down see
///   m_j = m0 * g * min(1, |z_A| / h) * beta^(j-1).
/// An interface releases once its per-knob moment reaches its mean tightness.
/// The brick is dragged when a lower interface releases no later than the
/// target's, stuck when it never releases or the far knobs do not clear:
///   (x_f - knob_radius - d_x) sin(theta) + z_A (1 - cos(theta)) >= knob_height.
///
/// Assembly presses the knobs home with k * d_x * sin(theta) per knob and
/// succeeds when that reaches seat_threshold and the placement error is within
/// align_tol.
struct SurrogateParams {
  ForceModel force;
  double align_tol = 1.0;           // mm
  double seat_threshold = 2.0;      // N per knob
  double transmission_gain = 1.0;   // g
  double level_attenuation = 0.85;  // beta
  double alignment_noise_sd = 0.1;  // mm
  bool noise = true;                // off: no alignment noise

  void validate() const;
};

struct InterfaceMoment {
  int upper = -1;
  int lower = kPlateId;
  int level = 0;
  double moment = 0.0;         // per-knob peel moment at the requested angle, N*mm
  double threshold = 0.0;      // mean tightness
  double release_angle = 0.0;  // rad; +inf when no moment reaches this interface
};

struct AttemptOutcome {
  bool success = false;
  FailureMode failure_mode = FailureMode::none;
  double peak_force = 0.0;  // N
  double duration = 0.0;    // s
  double alignment_error = 0.0;
  std::vector<int> bricks_moved;
  std::vector<InterfaceMoment> moments;
};

AttemptOutcome failed_attempt(FailureMode mode, double duration = 0.0);

/// Every interface at or below the target, nearest first.
std::vector<InterfaceMoment> peel_moment_profile(const LegoWorld& world, int target_id,
                                                 const TwistSpec& spec,
                                                 const SurrogateParams& params = {});

/// Smallest twist (rad) at which the far knob row clears the knobs below.
double clearance_angle(const LegoWorld& world, const BrickInstance& target, const TwistSpec& spec);

struct PredicateResult {
  bool success = false;
  FailureMode failure_mode = FailureMode::none;
};

PredicateResult assembly_success_predicate(const LegoWorld& world, const BrickInstance& placement,
                                           const TwistSpec& spec, double alignment_error,
                                           const SurrogateParams& params = {});

/// Force sample during the attempt: k * interference + reaction.
struct ContactEvent {
  Phase phase = Phase::insert;
  double interference = 0.0;  // mm
  double reaction = 0.0;      // N
};

double force_feedback(std::span<const ContactEvent> trace, const ForceModel& model);

/// Runs one attempt. The world changes only on success: the placed brick is
/// added, or the removed brick is taken out. `alignment_bias` adds a lateral
/// offset (mm) to assembly placement.
AttemptOutcome execute_attempt(LegoWorld& world, const ManipulationPlan& plan,
                               const ControlSequence& seq, const TwistSpec& spec,
                               const SurrogateParams& params, std::uint64_t noise_seed,
                               double alignment_bias = 0.0);

/// Twist-only variant used where the trajectory does not matter.
AttemptOutcome execute_attempt(LegoWorld& world, const ManipulationPlan& plan, double duration,
                               const TwistSpec& spec, const SurrogateParams& params,
                               std::uint64_t noise_seed, double alignment_bias = 0.0);

/// One line of key=value pairs, then one line per interface moment.
std::string attempt_log(const ManipulationPlan& plan, const TwistSpec& spec,
                        const AttemptOutcome& outcome);

}  // namespace lego
