#include "lego/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "lego/errors.hpp"
#include "lego/rng.hpp"

namespace lego {

namespace {

std::pair<int, int> key(TwistMode m, ControllerKind c) {
  return {static_cast<int>(m), static_cast<int>(c)};
}

}  // namespace

void ParamTable::set(TwistMode mode, ControllerKind controller, const ParamVector& p) {
  entries_[key(mode, controller)] = p;
}

bool ParamTable::has(TwistMode mode, ControllerKind controller) const {
  return entries_.count(key(mode, controller)) != 0;
}

const ParamVector& ParamTable::get(TwistMode mode, ControllerKind controller) const {
  auto it = entries_.find(key(mode, controller));
  if (it == entries_.end()) {
    throw ConfigError("no parameters for " + mode_name(mode) + " with " + controller_name(controller));
  }
  return it->second;
}

ParamTable ParamTable::initial(const BrickDims& dims) {
  ParamTable t;
  for (TwistMode m : {TwistMode::assemble, TwistMode::disassemble}) {
    for (ControllerKind c : {ControllerKind::joint_jpc, ControllerKind::cartesian_jpc}) {
      t.set(m, c, initial_params(m, dims));
    }
  }
  return t;
}

void EvaluationConfig::validate(const PlateGrid& plate) const {
  if (trials_per_position < 1) throw ConfigError("trials_per_position must be >= 1");
  for (const Cell& c : positions) {
    if (c.row < 0 || c.col < 0 || c.row >= plate.rows || c.col >= plate.cols) {
      throw ConfigError("evaluation position outside the plate");
    }
  }
  for (const BrickKind& k : kinds) k.validate();
  for (int h : heights) {
    if (h < 1 || h > 10) throw ConfigError("heights must lie in 1..10");
  }
  for (TwistMode m : modes) {
    for (ControllerKind c : controllers) params.get(m, c);
  }
  for (const Scenario& s : scenarios()) {
    for (const Cell& c : positions) {
      try {
        build_structure(plate, {}, {}, s.kind, s.style, c, 0);
      } catch (const WorldError& e) {
        throw ConfigError("evaluation position does not fit the structure: " + std::string(e.what()));
      }
    }
  }
}

std::vector<Scenario> EvaluationConfig::scenarios() const {
  std::vector<Scenario> out;
  for (const BrickKind& k : kinds) {
    for (int h : heights) {
      for (Support s : supports) {
        if (s == Support::hollow && h < 2) continue;
        out.push_back({k, {s, h}});
      }
    }
  }
  return out;
}

namespace {

struct RowKey {
  Scenario scenario;
  ControllerKind controller;
  TwistMode mode;
};

struct PositionTally {
  int successes = 0;
  int attempts = 0;
  std::map<FailureMode, int> failures;
};

PositionTally sweep_position(const SimContext& ctx, const EvaluationConfig& config,
                             const RowKey& row, const Cell& cell, int position_index) {
  PositionTally tally;
  const ParamVector& p = config.params.get(row.mode, row.controller);
  const TwistSpec spec = p.twist(row.mode);
  const std::uint64_t base =
      mix(derive_seed(config.rng_seed, "sweep"), row.scenario.kind.width, row.scenario.kind.length,
          row.scenario.style.height_layers, static_cast<int>(row.scenario.style.support),
          static_cast<int>(row.mode), position_index);

  std::optional<ControlSequence> seq;
  bool infeasible = false;
  for (int t = 0; t < config.trials_per_position; ++t) {
    const std::uint64_t world_seed = mix(base, t);
    TrainingCase tc;
    tc.cell = cell;
    tc.world = build_structure(ctx.plate, ctx.dims, ctx.tightness, row.scenario.kind,
                               row.scenario.style, cell, world_seed);
    tc.target = tc.world.at(top_brick(tc.world));
    if (row.mode == TwistMode::assemble) tc.world.remove_brick(tc.target.id);
    tc.noise_seed = mix(world_seed, 0x6e6f697365ULL);

    ManipulationPlan plan;
    if (!seq && !infeasible) {
      GeometryEval g = evaluate_geometry(ctx, tc, row.mode, p);
      try {
        if (!g.ok) throw InfeasibleHorizonError("plan or IK failed");
        seq = row.controller == ControllerKind::joint_jpc
                  ? generate_joint_jpc(g.joints, p.T, ctx.joint_limits, ctx.dt)
                  : generate_cartesian_jpc(ctx.arm, g.poses, g.start, p.T, ctx.joint_limits,
                                           ctx.cartesian_limits, ctx.dt, ctx.ik);
      } catch (const InfeasibleHorizonError&) {
        infeasible = true;
      } catch (const IkError&) {
        infeasible = true;
      }
    }
    ++tally.attempts;
    if (infeasible) {
      ++tally.failures[FailureMode::infeasible_trajectory];
      continue;
    }
    plan = row.mode == TwistMode::assemble ? plan_assembly(tc.world, tc.target, spec, ctx.plan)
                                           : plan_disassembly(tc.world, tc.target.id, spec, ctx.plan);
    AttemptOutcome out = execute_attempt(tc.world, plan, *seq, spec, ctx.surrogate, tc.noise_seed);
    if (out.success) {
      ++tally.successes;
    } else {
      ++tally.failures[out.failure_mode];
    }
  }
  return tally;
}

SuccessTable sweep(const SimContext& ctx, const EvaluationConfig& config, bool parallel) {
  config.validate(ctx.plate);
  const std::vector<Cell> cells =
      config.positions.empty() ? evaluation_positions(ctx.plate) : config.positions;
  std::vector<RowKey> rows;
  for (const Scenario& s : config.scenarios()) {
    for (ControllerKind c : config.controllers) {
      for (TwistMode m : config.modes) rows.push_back({s, c, m});
    }
  }
  const int nr = static_cast<int>(rows.size());
  const int np = static_cast<int>(cells.size());
  std::vector<PositionTally> tallies(static_cast<std::size_t>(nr * np));
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < nr * np; ++k) {
      tallies[k] = sweep_position(ctx, config, rows[k / np], cells[k % np], k % np);
    }
  } else {
    for (int k = 0; k < nr * np; ++k) {
      tallies[k] = sweep_position(ctx, config, rows[k / np], cells[k % np], k % np);
    }
  }
  SuccessTable table;
  for (int r = 0; r < nr; ++r) {
    SuccessRow row;
    row.kind = rows[r].scenario.kind;
    row.height = rows[r].scenario.style.height_layers;
    row.support = rows[r].scenario.style.support;
    row.controller = rows[r].controller;
    row.mode = rows[r].mode;
    for (int p = 0; p < np; ++p) {
      const PositionTally& t = tallies[static_cast<std::size_t>(r * np + p)];
      row.successes += t.successes;
      row.attempts += t.attempts;
      for (const auto& [mode, n] : t.failures) row.failures[mode] += n;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

SuccessTable run_success_sweep(const SimContext& ctx, const EvaluationConfig& config) {
  return sweep(ctx, config, true);
}

SuccessTable run_success_sweep_serial(const SimContext& ctx, const EvaluationConfig& config) {
  return sweep(ctx, config, false);
}

std::string success_csv(const SuccessTable& table) {
  std::ostringstream os;
  os << "brick,height,support,controller,mode,successes,attempts,rate,drag,stuck,misalign,"
        "unseated,force_abort,infeasible\n";
  char buf[64];
  for (const SuccessRow& r : table.rows) {
    auto count = [&](FailureMode m) {
      auto it = r.failures.find(m);
      return it == r.failures.end() ? 0 : it->second;
    };
    std::snprintf(buf, sizeof buf, "%.9g", r.rate());
    os << r.kind.name() << ',' << r.height << ',' << support_name(r.support) << ','
       << controller_name(r.controller) << ',' << mode_name(r.mode) << ',' << r.successes << ','
       << r.attempts << ',' << buf << ',' << count(FailureMode::disassemble_drag) << ','
       << count(FailureMode::disassemble_stuck) << ',' << count(FailureMode::assemble_misalign)
       << ',' << count(FailureMode::assemble_unseated) << ',' << count(FailureMode::force_abort)
       << ',' << count(FailureMode::infeasible_trajectory) << "\n";
  }
  return os.str();
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::pair<int, int> parse_size(const std::string& text, int line) {
  int r = 0, c = 0;
  char x = 0;
  std::istringstream is(text);
  if (!(is >> r >> x >> c) || (x != 'x' && x != 'X') || r < 1 || c < 1) {
    throw ConfigError("layout line " + std::to_string(line) + ": bad plate size '" + text + "'");
  }
  return {r, c};
}

BrickInstance as_brick(const LayoutPlacement& p, int id) {
  BrickInstance b;
  b.id = id;
  b.kind = p.kind;
  b.cell = p.cell;
  b.layer = p.layer;
  b.orientation = p.orientation;
  return b;
}

BrickInstance as_stored(const LayoutPlacement& p, int id) {
  BrickInstance b = as_brick(p, id);
  b.cell = p.storage;
  b.layer = 1;
  return b;
}

}  // namespace

LayoutDesign parse_layout(const std::string& text) {
  LayoutDesign d;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    if (auto eq = s.find('='); eq != std::string::npos) {
      std::string k = trim(s.substr(0, eq));
      std::string v = trim(s.substr(eq + 1));
      if (k == "name") {
        d.name = v;
      } else if (k == "working_plate") {
        std::tie(d.working_rows, d.working_cols) = parse_size(v, line);
      } else if (k == "storage_plate") {
        std::tie(d.storage_rows, d.storage_cols) = parse_size(v, line);
      } else {
        throw ConfigError("layout line " + std::to_string(line) + ": unknown key '" + k + "'");
      }
      continue;
    }
    std::istringstream is(s);
    LayoutPlacement p;
    std::string kind, orient;
    if (!(is >> p.layer >> p.cell.row >> p.cell.col >> kind >> orient >> p.storage.row >>
          p.storage.col)) {
      throw ConfigError("layout line " + std::to_string(line) +
                        ": expected 'layer row col kind orientation storage_row storage_col'");
    }
    std::string extra;
    if (is >> extra) throw ConfigError("layout line " + std::to_string(line) + ": trailing text");
    try {
      p.kind = BrickKind::parse(kind);
      p.orientation = parse_orientation(orient);
    } catch (const WorldError& e) {
      throw ConfigError("layout line " + std::to_string(line) + ": " + e.what());
    }
    d.placements.push_back(p);
  }
  if (d.name.empty()) throw ConfigError("layout has no name");
  if (d.placements.empty()) throw ConfigError("layout has no placements");
  return d;
}

LayoutDesign load_layout(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open layout file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_layout(ss.str());
}

void validate_layout(const LayoutDesign& design) {
  PlateGrid working{design.working_rows, design.working_cols, {}};
  PlateGrid storage{design.storage_rows, design.storage_cols, {}};
  LegoWorld w(working, {}, {}, 0);
  LegoWorld s(storage, {}, {}, 0);
  std::vector<int> order(design.placements.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return design.placements[a].layer < design.placements[b].layer;
  });
  for (int i : order) {
    const LayoutPlacement& p = design.placements[static_cast<std::size_t>(i)];
    if (std::string why = w.placement_problem(as_brick(p, i)); !why.empty()) {
      throw LayoutError("placement " + std::to_string(i) + ": " + why);
    }
    w.add_brick(as_brick(p, i));
    if (std::string why = s.placement_problem(as_stored(p, i)); !why.empty()) {
      throw LayoutError("storage of placement " + std::to_string(i) + ": " + why);
    }
    s.add_brick(as_stored(p, i));
  }
}

namespace {

std::vector<int> build_order(const LayoutDesign& design) {
  std::vector<int> order(design.placements.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return design.placements[a].layer < design.placements[b].layer;
  });
  return order;
}

Action make_action(TwistMode mode, PlateSide side, const BrickInstance& b, const ParamTable& params,
                   ControllerKind controller) {
  const ParamVector& p = params.get(mode, controller);
  return {mode, side, b, p.twist(mode), p.T};
}

}  // namespace

std::vector<Action> plan_build(const LayoutDesign& design, const ParamTable& params,
                               ControllerKind controller) {
  validate_layout(design);
  std::vector<Action> out;
  for (int i : build_order(design)) {
    const LayoutPlacement& p = design.placements[static_cast<std::size_t>(i)];
    out.push_back(make_action(TwistMode::disassemble, PlateSide::storage, as_stored(p, i), params,
                              controller));
    out.push_back(make_action(TwistMode::assemble, PlateSide::working, as_brick(p, i), params,
                              controller));
  }
  return out;
}

std::vector<Action> plan_teardown(const LayoutDesign& design, const ParamTable& params,
                                  ControllerKind controller) {
  validate_layout(design);
  std::vector<int> order = build_order(design);
  std::reverse(order.begin(), order.end());
  std::vector<Action> out;
  for (int i : order) {
    const LayoutPlacement& p = design.placements[static_cast<std::size_t>(i)];
    out.push_back(make_action(TwistMode::disassemble, PlateSide::working, as_brick(p, i), params,
                              controller));
    out.push_back(make_action(TwistMode::assemble, PlateSide::storage, as_stored(p, i), params,
                              controller));
  }
  return out;
}

PrototypeConfig default_prototype(const SimContext& ctx, const LayoutDesign& design) {
  PrototypeConfig c;
  c.working = ctx.plate;
  c.working.rows = design.working_rows;
  c.working.cols = design.working_cols;
  c.storage = c.working;
  c.storage.rows = design.storage_rows;
  c.storage.cols = design.storage_cols;
  c.storage.origin.translation.y() += design.working_rows * ctx.dims.knob_pitch + 32.0;
  c.params = ParamTable::initial(ctx.dims);
  return c;
}

LegoWorld initial_storage(const LayoutDesign& design, const PlateGrid& plate, const SimContext& ctx,
                          std::uint64_t seed) {
  LegoWorld s(plate, ctx.dims, ctx.tightness, seed);
  for (std::size_t i = 0; i < design.placements.size(); ++i) {
    s.add_brick(as_stored(design.placements[i], static_cast<int>(i)));
  }
  return s;
}

PrototypeReport simulate_prototype(const SimContext& ctx, const LayoutDesign& design,
                                   const PrototypeConfig& config) {
  std::vector<Action> build = plan_build(design, config.params, config.controller);
  std::vector<Action> teardown = plan_teardown(design, config.params, config.controller);

  LegoWorld storage =
      initial_storage(design, config.storage, ctx, derive_seed(config.rng_seed, "storage"));
  LegoWorld working(config.working, ctx.dims, ctx.tightness, derive_seed(config.rng_seed, "working"));
  PrototypeReport report;
  report.storage_before = snapshot(storage, false);
  report.working_before = snapshot(working, false);

  auto run = [&](const std::vector<Action>& actions) {
    for (const Action& a : actions) {
      LegoWorld& world = a.plate == PlateSide::storage ? storage : working;
      ActionResult r{a, {}};
      const std::uint64_t noise = mix(derive_seed(config.rng_seed, "actions"), report.actions.size());
      try {
        ManipulationPlan plan = a.mode == TwistMode::assemble
                                    ? plan_assembly(world, a.brick, a.spec, ctx.plan)
                                    : plan_disassembly(world, a.brick.id, a.spec, ctx.plan);
        ControlSequence seq =
            config.controller == ControllerKind::joint_jpc
                ? generate_joint_jpc(ctx.arm, plan, a.T, ctx.joint_limits, ctx.dt)
                : generate_cartesian_jpc(ctx.arm, plan, a.T, ctx.joint_limits,
                                         ctx.cartesian_limits, ctx.dt, ctx.ik);
        r.outcome = execute_attempt(world, plan, seq, a.spec, ctx.surrogate, noise);
      } catch (const InfeasibleHorizonError&) {
        r.outcome = failed_attempt(FailureMode::infeasible_trajectory);
      } catch (const IkError&) {
        r.outcome = failed_attempt(FailureMode::infeasible_trajectory);
      }
      report.actions.push_back(r);
      if (!r.outcome.success) return false;
    }
    return true;
  };

  bool built = run(build);
  report.storage_built = snapshot(storage, false);
  report.working_built = snapshot(working, false);
  report.completed = built && run(teardown);
  report.storage_after = snapshot(storage, false);
  report.working_after = snapshot(working, false);
  report.round_trip = report.completed && report.storage_after == report.storage_before &&
                      report.working_after == report.working_before;
  return report;
}

std::string action_log(const PrototypeReport& report) {
  std::ostringstream os;
  char buf[256];
  for (std::size_t i = 0; i < report.actions.size(); ++i) {
    const ActionResult& r = report.actions[i];
    const BrickInstance& b = r.action.brick;
    std::snprintf(buf, sizeof buf,
                  "%zu %s %s brick=%d kind=%s cell=(%d,%d) layer=%d T=%.9g theta=%.9g d_x=%.9g "
                  "d_z=%.9g result=%s peak_force=%.9g\n",
                  i, mode_name(r.action.mode).c_str(),
                  r.action.plate == PlateSide::storage ? "storage" : "working", b.id,
                  b.kind.name().c_str(), b.cell.row, b.cell.col, b.layer, r.action.T,
                  r.action.spec.theta, r.action.spec.d_x, r.action.spec.d_z,
                  r.outcome.success ? "ok" : failure_name(r.outcome.failure_mode).c_str(),
                  r.outcome.peak_force);
    os << buf;
  }
  os << "verdict: " << (report.round_trip ? "round-trip OK" : "round-trip FAILED") << "\n";
  return os.str();
}

}  // namespace lego
