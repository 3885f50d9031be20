#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lego/kinematics.hpp"

namespace lego {

/// Rectangular brick measured in knobs: 1x2, 1x4, 2x2 or 2x4.
struct BrickKind {
  int width = 1;
  int length = 2;

  void validate() const;
  std::string name() const;
  static BrickKind parse(const std::string& text);
  int knobs() const { return width * length; }
  auto operator<=>(const BrickKind&) const = default;
};

/// Brick geometry in mm. Only the two lever lengths come from the tool; the
/// rest are standard brick proportions and can be overridden from config.
struct BrickDims {
  double knob_pitch = 8.0;
  double brick_height = 9.6;
  double knob_height = 1.7;
  double knob_diameter = 4.8;
  double top_lever = 7.8;
  double side_lever = 3.2;

  void validate() const;
};

struct PlateGrid {
  int rows = 48;
  int cols = 48;
  Pose origin;
};

enum class Orientation { deg0, deg90 };

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

enum class Support { solid, hollow };

struct StructureStyle {
  Support support = Support::solid;
  int height_layers = 1;

  void validate() const;
};

inline constexpr int kPlateId = -1;

struct BrickInstance {
  int id = -1;
  BrickKind kind;
  Cell cell;  // lowest (row, col) corner of the footprint
  int layer = 1;
  Orientation orientation = Orientation::deg0;

  int row_span() const { return orientation == Orientation::deg0 ? kind.width : kind.length; }
  int col_span() const { return orientation == Orientation::deg0 ? kind.length : kind.width; }
  std::vector<Cell> footprint() const;
  bool overlaps(const BrickInstance& other) const;  // same layer, shared cell
};

/// Press-fit between `upper` and the brick (or plate) below it. One release
/// threshold (N*mm of peel moment) per engaged knob.
struct ConnectionState {
  int upper = -1;
  int lower = kPlateId;
  std::vector<Cell> knobs;
  std::vector<double> per_knob_tightness;

  double mean_tightness() const;
};

/// Per-knob release thresholds are drawn from U[tau_min, tau_max] and scaled
/// by a factor that depends only on the plate position and layer, so a
/// position sweep sees systematic variation. With `stochastic` off every knob
/// gets the midpoint and no position factor.
struct TightnessModel {
  double tau_min = 8.0;
  double tau_max = 20.0;
  double position_spread = 0.25;
  std::uint64_t position_salt = 0;
  bool stochastic = true;
};

class LegoWorld {
 public:
  LegoWorld() = default;
  LegoWorld(PlateGrid plate, BrickDims dims, TightnessModel tightness, std::uint64_t seed);

  const PlateGrid& plate() const { return plate_; }
  const BrickDims& dims() const { return dims_; }
  const TightnessModel& tightness_model() const { return tightness_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<BrickInstance>& bricks() const { return bricks_; }
  const std::vector<ConnectionState>& interfaces() const { return interfaces_; }

  const BrickInstance* find(int id) const;
  const BrickInstance& at(int id) const;  // throws WorldError

  // Empty string when the placement is legal, otherwise the reason.
  std::string placement_problem(const BrickInstance& placement) const;
  bool has_brick_above(int id) const;
  std::vector<int> bricks_above(int id) const;

  /// Adds a brick (assigning a fresh id when placement.id < 0) and samples the
  /// tightness of every new interface. Returns the id.
  int add_brick(BrickInstance placement);
  /// Removes a brick that has nothing on top of it.
  BrickInstance remove_brick(int id);

  int next_id() const { return next_id_; }

 private:
  PlateGrid plate_;
  BrickDims dims_;
  TightnessModel tightness_;
  std::uint64_t seed_ = 0;
  std::uint64_t assembly_count_ = 0;
  int next_id_ = 0;
  std::vector<BrickInstance> bricks_;
  std::vector<ConnectionState> interfaces_;
};

/// Builds a single structure with `kind` on top at `cell`.
/// Solid: a straight tower of identical bricks. Hollow: the supporting layers
/// are two pillars of (width x 2) bricks centred under the end knob columns of
/// the top brick, leaving its interior unsupported.
LegoWorld build_structure(const PlateGrid& plate, const BrickDims& dims,
                          const TightnessModel& tightness, BrickKind kind, StructureStyle style,
                          Cell cell, std::uint64_t seed,
                          Orientation orientation = Orientation::deg0);

/// Id of the topmost brick of a structure built by build_structure.
int top_brick(const LegoWorld& world);

/// Frame at the bottom corner of the brick; x along its length, z up.
Pose brick_frame(const LegoWorld& world, const BrickInstance& brick);
Pose knob_world_pose(const LegoWorld& world, int brick_id, int knob_index);

/// Connections between this brick and whatever it rests on.
std::vector<ConnectionState> interface_below(const LegoWorld& world, int brick_id);

/// 5x5 uniform grid over the plate interior. `margin` keeps footprints
/// (plus hollow pillars) on the plate.
std::vector<Cell> evaluation_positions(const PlateGrid& plate, int margin = 4);

/// Human-readable listing of bricks and interfaces.
std::string snapshot(const LegoWorld& world, bool include_tightness = true);

std::string orientation_name(Orientation o);
Orientation parse_orientation(const std::string& text);
std::string support_name(Support s);
Support parse_support(const std::string& text);

}  // namespace lego
