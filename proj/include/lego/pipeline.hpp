#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lego/learn.hpp"

namespace lego {

/// Learned or initial parameters per (mode, controller).
class ParamTable {
 public:
  void set(TwistMode mode, ControllerKind controller, const ParamVector& p);
  bool has(TwistMode mode, ControllerKind controller) const;
  const ParamVector& get(TwistMode mode, ControllerKind controller) const;  // throws ConfigError

  /// Initial parameters for every mode and controller.
  static ParamTable initial(const BrickDims& dims = {});

 private:
  std::map<std::pair<int, int>, ParamVector> entries_;
};

struct Scenario {
  BrickKind kind;
  StructureStyle style;
};

struct EvaluationConfig {
  std::vector<BrickKind> kinds{{1, 2}, {1, 4}, {2, 2}, {2, 4}};
  std::vector<int> heights{1, 10};
  std::vector<Support> supports{Support::solid, Support::hollow};
  std::vector<ControllerKind> controllers{ControllerKind::joint_jpc, ControllerKind::cartesian_jpc};
  std::vector<TwistMode> modes{TwistMode::assemble, TwistMode::disassemble};
  std::vector<Cell> positions;  // empty: evaluation_positions(plate)
  int trials_per_position = 10;
  ParamTable params;
  std::uint64_t rng_seed = 0;

  void validate(const PlateGrid& plate) const;
  /// (kind, height, support) combinations; hollow needs at least two layers.
  std::vector<Scenario> scenarios() const;
};

struct SuccessRow {
  BrickKind kind;
  int height = 1;
  Support support = Support::solid;
  ControllerKind controller = ControllerKind::joint_jpc;
  TwistMode mode = TwistMode::assemble;
  int successes = 0;
  int attempts = 0;
  std::map<FailureMode, int> failures;

  double rate() const { return attempts ? static_cast<double>(successes) / attempts : 0.0; }
};

struct SuccessTable {
  std::vector<SuccessRow> rows;
};

/// Every scenario x controller x mode, trials_per_position attempts at each
/// position on freshly seeded worlds. Trajectories are shared by the trials of
/// a position since brick geometry does not change between them.
SuccessTable run_success_sweep(const SimContext& ctx, const EvaluationConfig& config);
SuccessTable run_success_sweep_serial(const SimContext& ctx, const EvaluationConfig& config);

std::string success_csv(const SuccessTable& table);

struct LayoutPlacement {
  int layer = 1;
  Cell cell;
  BrickKind kind;
  Orientation orientation = Orientation::deg0;
  Cell storage;
};

struct LayoutDesign {
  std::string name;
  int working_rows = 48, working_cols = 48;
  int storage_rows = 48, storage_cols = 48;
  std::vector<LayoutPlacement> placements;
};

/// Throws ConfigError on malformed text, LayoutError when the design cannot
/// be built (overlap, off-plate, floating brick).
LayoutDesign parse_layout(const std::string& text);
LayoutDesign load_layout(const std::string& path);
void validate_layout(const LayoutDesign& design);

enum class PlateSide { storage, working };

struct Action {
  TwistMode mode = TwistMode::disassemble;
  PlateSide plate = PlateSide::storage;
  BrickInstance brick;  // cell and layer on `plate`
  TwistSpec spec;
  double T = 2.0;
};

/// Brick ids are placement indices. Build: for each brick bottom-up, take it
/// from storage then place it on the working plate.
std::vector<Action> plan_build(const LayoutDesign& design, const ParamTable& params,
                               ControllerKind controller);
/// Reverse of the build: top-down, lift off the working plate, return to storage.
std::vector<Action> plan_teardown(const LayoutDesign& design, const ParamTable& params,
                                  ControllerKind controller);

struct PrototypeConfig {
  PlateGrid working;
  PlateGrid storage;
  ControllerKind controller = ControllerKind::joint_jpc;
  ParamTable params;
  std::uint64_t rng_seed = 0;
};

/// Default plates: working at the context plate, storage beside it.
PrototypeConfig default_prototype(const SimContext& ctx, const LayoutDesign& design);

struct ActionResult {
  Action action;
  AttemptOutcome outcome;
};

struct PrototypeReport {
  std::vector<ActionResult> actions;
  std::string storage_before, working_before;
  std::string storage_built, working_built;
  std::string storage_after, working_after;
  bool completed = false;   // every action succeeded
  bool round_trip = false;  // completed and both plates match their initial snapshots
};

/// Storage plate starts with every brick at its storage cell; working plate empty.
LegoWorld initial_storage(const LayoutDesign& design, const PlateGrid& plate, const SimContext& ctx,
                          std::uint64_t seed);

PrototypeReport simulate_prototype(const SimContext& ctx, const LayoutDesign& design,
                                   const PrototypeConfig& config);

std::string action_log(const PrototypeReport& report);

}  // namespace lego
