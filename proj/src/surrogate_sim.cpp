#include "lego/surrogate_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lego/errors.hpp"
#include "lego/rng.hpp"

namespace lego {

namespace {

constexpr double kRad = std::numbers::pi / 180.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Lever {
  double far_row;  // x_f
  double pivot_height;  // z_A
  double r0;
};

Lever lever_for(const LegoWorld& world, const BrickInstance& target, const TwistSpec& spec) {
  const BrickDims& d = world.dims();
  Lever l;
  l.far_row = (target.kind.length - 0.5) * d.knob_pitch;
  l.pivot_height = d.brick_height - spec.d_z;
  l.r0 = std::hypot(l.far_row - spec.d_x, l.pivot_height);
  return l;
}

double clearance_lift(const LegoWorld& world, const Lever& l, const TwistSpec& spec, double theta) {
  const double arm = l.far_row - 0.5 * world.dims().knob_diameter - spec.d_x;
  return arm * std::sin(theta) + l.pivot_height * (1.0 - std::cos(theta));
}

}  // namespace

std::string failure_name(FailureMode m) {
  switch (m) {
    case FailureMode::none: return "none";
    case FailureMode::assemble_misalign: return "assemble_misalign";
    case FailureMode::assemble_unseated: return "assemble_unseated";
    case FailureMode::disassemble_drag: return "disassemble_drag";
    case FailureMode::disassemble_stuck: return "disassemble_stuck";
    case FailureMode::force_abort: return "force_abort";
    case FailureMode::infeasible_trajectory: return "infeasible_trajectory";
  }
  return "?";
}

void ForceModel::validate() const {
  if (!(seat_stiffness > 0 && peel_arm_scale > 0 && force_abort_threshold >= 0)) {
    throw std::invalid_argument("force model constants must be positive");
  }
}

void SurrogateParams::validate() const {
  force.validate();
  if (!(align_tol > 0 && seat_threshold > 0 && transmission_gain >= 0 && level_attenuation > 0 &&
        alignment_noise_sd >= 0)) {
    throw std::invalid_argument("surrogate constants out of range");
  }
}

AttemptOutcome failed_attempt(FailureMode mode, double duration) {
  AttemptOutcome out;
  out.failure_mode = mode;
  out.duration = duration;
  return out;
}

std::vector<InterfaceMoment> peel_moment_profile(const LegoWorld& world, int target_id,
                                                 const TwistSpec& spec,
                                                 const SurrogateParams& params) {
  const BrickInstance& target = world.at(target_id);
  const Lever l = lever_for(world, target, spec);
  const double theta = spec.theta * kRad;
  const double k = params.force.seat_stiffness;
  const double slope0 = k * params.force.peel_arm_scale * l.r0 * l.r0;
  const double transfer =
      params.transmission_gain * std::min(1.0, std::abs(l.pivot_height) / world.dims().brick_height);

  std::vector<InterfaceMoment> out;
  std::vector<int> frontier{target_id};
  std::set<int> seen{target_id};
  for (int level = 0; !frontier.empty(); ++level) {
    const double slope =
        level == 0 ? slope0 : slope0 * transfer * std::pow(params.level_attenuation, level - 1);
    std::vector<int> next;
    for (int upper : frontier) {
      for (const ConnectionState& c : world.interfaces()) {
        if (c.upper != upper) continue;
        InterfaceMoment m;
        m.upper = c.upper;
        m.lower = c.lower;
        m.level = level;
        m.moment = slope * theta;
        m.threshold = c.mean_tightness();
        m.release_angle = slope > 0 ? m.threshold / slope : kInf;
        out.push_back(m);
        if (c.lower != kPlateId && seen.insert(c.lower).second) next.push_back(c.lower);
      }
    }
    frontier = std::move(next);
  }
  return out;
}

double clearance_angle(const LegoWorld& world, const BrickInstance& target, const TwistSpec& spec) {
  const Lever l = lever_for(world, target, spec);
  const double need = world.dims().knob_height;
  double lo = 0.0;
  double hi = std::numbers::pi / 2.0;
  if (clearance_lift(world, l, spec, hi) < need) return kInf;
  for (int i = 0; i < 100; ++i) {
    double mid = 0.5 * (lo + hi);
    (clearance_lift(world, l, spec, mid) >= need ? hi : lo) = mid;
  }
  return hi;
}

PredicateResult assembly_success_predicate(const LegoWorld& world, const BrickInstance& placement,
                                           const TwistSpec& spec, double alignment_error,
                                           const SurrogateParams& params) {
  (void)world;
  (void)placement;
  if (!(std::abs(alignment_error) <= params.align_tol)) {
    return {false, FailureMode::assemble_misalign};
  }
  double press = params.force.seat_stiffness * spec.d_x * std::sin(spec.theta * kRad);
  if (press < params.seat_threshold) return {false, FailureMode::assemble_unseated};
  return {true, FailureMode::none};
}

double force_feedback(std::span<const ContactEvent> trace, const ForceModel& model) {
  double peak = 0.0;
  for (const ContactEvent& e : trace) {
    peak = std::max(peak, model.seat_stiffness * e.interference + e.reaction);
  }
  return peak;
}

namespace {

bool arc_of(const ManipulationPlan& plan) {
  return std::any_of(plan.waypoints.begin(), plan.waypoints.end(),
                     [](const Waypoint& w) { return w.phase == Phase::twist_arc; });
}

bool touches(const ManipulationPlan& plan) {
  return std::any_of(plan.waypoints.begin(), plan.waypoints.end(), [](const Waypoint& w) {
    return w.phase == Phase::insert || w.phase == Phase::twist_arc;
  });
}

std::vector<ContactEvent> contact_trace(const ManipulationPlan& plan, int arc_steps,
                                        double theta, double offset,
                                        const std::function<double(double)>& reaction) {
  std::vector<ContactEvent> trace;
  if (!touches(plan)) return trace;
  trace.push_back({Phase::insert, 0.0, 0.0});
  if (!arc_of(plan)) return trace;
  for (int i = 1; i <= arc_steps; ++i) {
    double t = theta * i / arc_steps;
    trace.push_back({Phase::twist_arc, t * offset, reaction(t)});
  }
  return trace;
}

}  // namespace

AttemptOutcome execute_attempt(LegoWorld& world, const ManipulationPlan& plan, double duration,
                               const TwistSpec& spec, const SurrogateParams& params,
                               std::uint64_t noise_seed, double alignment_bias) {
  params.validate();
  spec.validate();
  AttemptOutcome out;
  out.duration = duration;
  const double theta = spec.theta * kRad;
  const ForceModel& fm = params.force;
  const int arc_steps = std::max(1, plan.arc_steps);

  if (plan.mode == TwistMode::assemble) {
    BrickInstance placement = plan.target;
    if (std::string why = world.placement_problem(placement); !why.empty()) {
      throw std::invalid_argument("assembly target no longer valid: " + why);
    }
    double error = alignment_bias;
    if (params.noise && params.alignment_noise_sd > 0) {
      Rng rng(mix(noise_seed, 0x616c69676eULL));
      error += params.alignment_noise_sd * normal01(rng);
    }
    out.alignment_error = std::abs(error);
    const double offset = std::hypot(spec.d_x - world.dims().top_lever, spec.d_z);
    auto trace = contact_trace(plan, arc_steps, theta, offset, [&](double t) {
      return fm.seat_stiffness * spec.d_x * std::sin(t);
    });
    out.peak_force = force_feedback(trace, fm);
    if (!trace.empty() && out.peak_force >= fm.force_abort_threshold) {
      out.failure_mode = FailureMode::force_abort;
      return out;
    }
    PredicateResult r = assembly_success_predicate(world, placement, spec, out.alignment_error, params);
    out.failure_mode = r.failure_mode;
    if (r.success) {
      out.success = true;
      out.bricks_moved.push_back(world.add_brick(placement));
    }
    return out;
  }

  const BrickInstance* found = world.find(plan.target.id);
  if (found == nullptr || found->cell != plan.target.cell || found->layer != plan.target.layer) {
    throw std::invalid_argument("disassembly target does not match the world");
  }
  const BrickInstance target = *found;
  out.moments = peel_moment_profile(world, target.id, spec, params);
  const Lever l = lever_for(world, target, spec);

  double release = 0.0;  // target comes free once every level-0 interface has let go
  double knob_sum = 0.0;
  double lowest = kInf;
  for (const InterfaceMoment& m : out.moments) {
    if (m.level == 0) {
      release = std::max(release, m.release_angle);
    } else {
      lowest = std::min(lowest, m.release_angle);
    }
  }
  for (const ConnectionState& c : world.interfaces()) {
    if (c.upper != target.id) continue;
    for (double t : c.per_knob_tightness) knob_sum += t;
  }
  const double peel = knob_sum / (fm.peel_arm_scale * l.r0);
  const double offset = std::hypot(spec.d_x, l.pivot_height);
  auto trace = contact_trace(plan, arc_steps, theta, offset, [&](double t) {
    return std::isfinite(release) && release > 0 ? peel * std::min(1.0, t / release) : 0.0;
  });
  out.peak_force = force_feedback(trace, fm);
  if (!trace.empty() && out.peak_force >= fm.force_abort_threshold) {
    out.failure_mode = FailureMode::force_abort;
    return out;
  }

  if (lowest <= theta && lowest <= release) {
    out.failure_mode = FailureMode::disassemble_drag;
    int deepest = 0;
    for (const InterfaceMoment& m : out.moments) {
      if (m.level > 0 && m.release_angle == lowest) deepest = m.level;
    }
    out.bricks_moved.push_back(target.id);
    for (const InterfaceMoment& m : out.moments) {
      if (m.level >= 1 && m.level <= deepest &&
          std::find(out.bricks_moved.begin(), out.bricks_moved.end(), m.upper) ==
              out.bricks_moved.end()) {
        out.bricks_moved.push_back(m.upper);
      }
    }
    return out;
  }
  if (theta < release || clearance_lift(world, l, spec, theta) < world.dims().knob_height) {
    out.failure_mode = FailureMode::disassemble_stuck;
    return out;
  }
  world.remove_brick(target.id);
  out.success = true;
  out.bricks_moved.push_back(target.id);
  return out;
}

AttemptOutcome execute_attempt(LegoWorld& world, const ManipulationPlan& plan,
                               const ControlSequence& seq, const TwistSpec& spec,
                               const SurrogateParams& params, std::uint64_t noise_seed,
                               double alignment_bias) {
  if (seq.steps() < 1) throw std::invalid_argument("empty control sequence");
  return execute_attempt(world, plan, seq.duration(), spec, params, noise_seed, alignment_bias);
}

std::string attempt_log(const ManipulationPlan& plan, const TwistSpec& spec,
                        const AttemptOutcome& outcome) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "mode=%s target=%d theta=%.9g d_x=%.9g d_z=%.9g success=%d failure=%s "
                "peak_force=%.9g duration=%.9g alignment_error=%.9g moved=",
                mode_name(plan.mode).c_str(), plan.target.id, spec.theta, spec.d_x, spec.d_z,
                outcome.success ? 1 : 0, failure_name(outcome.failure_mode).c_str(),
                outcome.peak_force, outcome.duration, outcome.alignment_error);
  os << buf;
  for (std::size_t i = 0; i < outcome.bricks_moved.size(); ++i) {
    os << (i ? "," : "") << outcome.bricks_moved[i];
  }
  os << "\n";
  for (const InterfaceMoment& m : outcome.moments) {
    std::snprintf(buf, sizeof buf,
                  "  interface upper=%d lower=%d level=%d moment=%.9g threshold=%.9g "
                  "release_deg=%.9g\n",
                  m.upper, m.lower, m.level, m.moment, m.threshold, m.release_angle / kRad);
    os << buf;
  }
  return os.str();
}

}  // namespace lego
