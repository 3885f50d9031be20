#include "lego/learn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "lego/errors.hpp"
#include "lego/rng.hpp"

namespace lego {

void Bounds::validate() const {
  Eigen::Vector4d l = lo.to_vector(), h = hi.to_vector();
  for (int i = 0; i < 4; ++i) {
    if (!(l[i] < h[i])) throw std::invalid_argument("bounds need min < max for every parameter");
  }
}

bool Bounds::contains(const ParamVector& p) const {
  Eigen::Vector4d v = p.to_vector(), l = lo.to_vector(), h = hi.to_vector();
  return (v.array() >= l.array()).all() && (v.array() <= h.array()).all();
}

ParamVector Bounds::clip(const ParamVector& p) const {
  return ParamVector::from_vector(p.to_vector().cwiseMax(lo.to_vector()).cwiseMin(hi.to_vector()));
}

Eigen::Vector4d Bounds::normalize(const ParamVector& p) const {
  Eigen::Vector4d l = lo.to_vector(), h = hi.to_vector();
  return ((p.to_vector() - l).array() / (h - l).array()).matrix();
}

ParamVector Bounds::denormalize(const Eigen::Vector4d& u) const {
  Eigen::Vector4d l = lo.to_vector(), h = hi.to_vector();
  return clip(ParamVector::from_vector(l + (u.array() * (h - l).array()).matrix()));
}

void CostWeights::validate() const {
  if (!(alpha >= 0 && beta >= 0 && gamma >= 0 && eta >= 0)) {
    throw std::invalid_argument("cost weights must be non-negative");
  }
  if (!(infinity_value > 0) || !std::isfinite(infinity_value)) {
    throw std::invalid_argument("infinity_value must be positive and finite");
  }
}

CostWeights default_weights(ControllerKind controller) {
  CostWeights w;
  w.eta = controller == ControllerKind::joint_jpc ? 1.0 : 100.0;
  return w;
}

ParamVector initial_params(TwistMode mode, const BrickDims& dims) {
  if (mode == TwistMode::assemble) return {2.0, 15.0, dims.top_lever, 0.0};
  return {2.0, 15.0, 0.0, dims.side_lever};
}

double cost(const AttemptOutcome& outcome, const ParamVector& params, double effort,
            const CostWeights& weights) {
  if (!outcome.success) return weights.infinity_value;
  return weights.alpha * params.T + weights.beta * params.theta +
         weights.gamma * outcome.peak_force + weights.eta * effort;
}

OptimizerState cmaes_init(const ParamVector& mean0, double sigma0, const Bounds& bounds,
                          int lambda, std::uint64_t seed) {
  bounds.validate();
  if (!bounds.contains(mean0)) throw OptimizerError("initial mean outside bounds");
  OptimizerState s;
  s.bounds = bounds;
  s.cma = cmaes_create(bounds.normalize(mean0), sigma0, lambda, true, seed);
  return s;
}

std::vector<ParamVector> ask(OptimizerState& state) {
  std::vector<ParamVector> out;
  for (const Eigen::VectorXd& x : cmaes_ask(state.cma)) {
    out.push_back(state.bounds.denormalize(x.head<4>()));
  }
  return out;
}

void tell(OptimizerState& state, const std::vector<ParamVector>& seeds,
          const std::vector<double>& costs, double infinity_value) {
  for (double c : costs) {
    if (std::isnan(c) || (!std::isfinite(c) && c != infinity_value)) {
      throw OptimizerError("cost is not finite");
    }
  }
  std::vector<Eigen::VectorXd> xs;
  for (const ParamVector& p : seeds) xs.emplace_back(state.bounds.normalize(p));
  cmaes_tell(state.cma, xs, costs);
}

SimContext default_context() {
  SimContext ctx;
  ctx.arm = mount_tool(default_arm(), ctx.eoat);
  ctx.joint_limits = default_control_limits();
  ctx.plate.origin = Pose::from_translation({250.0, -400.0, 300.0});
  ctx.dims.top_lever = ctx.eoat.top_lever;
  ctx.dims.side_lever = ctx.eoat.side_lever;
  return ctx;
}

std::vector<TrainingCase> make_cases(const SimContext& ctx, TwistMode mode, BrickKind kind,
                                     StructureStyle style, const std::vector<Cell>& cells,
                                     std::uint64_t seed) {
  std::vector<TrainingCase> out;
  for (const Cell& cell : cells) {
    TrainingCase tc;
    tc.cell = cell;
    tc.world = build_structure(ctx.plate, ctx.dims, ctx.tightness, kind, style, cell,
                               mix(seed, 0x776f726c64ULL, cell.row, cell.col));
    tc.noise_seed = mix(seed, 0x6e6f697365ULL, cell.row, cell.col);
    tc.target = tc.world.at(top_brick(tc.world));
    if (mode == TwistMode::assemble) tc.world.remove_brick(tc.target.id);
    out.push_back(std::move(tc));
  }
  return out;
}

GeometryEval evaluate_geometry(const SimContext& ctx, const TrainingCase& tc, TwistMode mode,
                               const ParamVector& params) {
  GeometryEval g;
  const TwistSpec spec = params.twist(mode);
  try {
    g.plan = mode == TwistMode::assemble ? plan_assembly(tc.world, tc.target, spec, ctx.plan)
                                         : plan_disassembly(tc.world, tc.target.id, spec, ctx.plan);
    g.joints = solve_waypoints(ctx.arm, g.plan, ctx.ik);
  } catch (const PlanningError&) {
    g.outcome = failed_attempt(FailureMode::infeasible_trajectory);
    return g;
  } catch (const IkError&) {
    g.outcome = failed_attempt(FailureMode::infeasible_trajectory);
    return g;
  } catch (const JointLimitError&) {
    g.outcome = failed_attempt(FailureMode::infeasible_trajectory);
    return g;
  }
  g.ok = true;
  g.start = g.joints.front();
  for (const auto& wp : g.plan.waypoints) g.poses.push_back(wp.pose);
  LegoWorld copy = tc.world;
  g.outcome = execute_attempt(copy, g.plan, 0.0, spec, ctx.surrogate, tc.noise_seed);
  return g;
}

AttemptResult evaluate_attempt(const SimContext& ctx, const TrainingCase& tc, TwistMode mode,
                               ControllerKind controller, const ParamVector& params,
                               const CostWeights& weights) {
  AttemptResult r;
  GeometryEval g = evaluate_geometry(ctx, tc, mode, params);
  if (!g.ok) {
    r.outcome = g.outcome;
    r.cost = weights.infinity_value;
    return r;
  }
  ControlSequence seq;
  try {
    seq = controller == ControllerKind::joint_jpc
              ? generate_joint_jpc(g.joints, params.T, ctx.joint_limits, ctx.dt)
              : generate_cartesian_jpc(ctx.arm, g.poses, g.start, params.T, ctx.joint_limits,
                                       ctx.cartesian_limits, ctx.dt, ctx.ik);
  } catch (const InfeasibleHorizonError&) {
    r.outcome = failed_attempt(FailureMode::infeasible_trajectory);
    r.cost = weights.infinity_value;
    return r;
  } catch (const IkError&) {
    r.outcome = failed_attempt(FailureMode::infeasible_trajectory);
    r.cost = weights.infinity_value;
    return r;
  }
  LegoWorld copy = tc.world;
  r.outcome = execute_attempt(copy, g.plan, seq, params.twist(mode), ctx.surrogate, tc.noise_seed);
  r.effort = control_effort(seq);
  r.cost = cost(r.outcome, params, r.effort, weights);
  return r;
}

double objective(const SimContext& ctx, const std::vector<TrainingCase>& cases, TwistMode mode,
                 ControllerKind controller, const ParamVector& params, const CostWeights& weights) {
  double total = 0.0;
  for (const TrainingCase& tc : cases) {
    total += evaluate_attempt(ctx, tc, mode, controller, params, weights).cost;
  }
  return total / static_cast<double>(cases.size());
}

std::vector<double> evaluate_population(const SimContext& ctx,
                                        const std::vector<TrainingCase>& cases, TwistMode mode,
                                        ControllerKind controller,
                                        const std::vector<ParamVector>& seeds,
                                        const CostWeights& weights) {
  const int ns = static_cast<int>(seeds.size());
  const int nc = static_cast<int>(cases.size());
  std::vector<double> per(static_cast<std::size_t>(ns * nc), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < ns * nc; ++k) {
    per[k] = evaluate_attempt(ctx, cases[k % nc], mode, controller, seeds[k / nc], weights).cost;
  }
  std::vector<double> out(static_cast<std::size_t>(ns), 0.0);
  for (int s = 0; s < ns; ++s) {
    double total = 0.0;
    for (int c = 0; c < nc; ++c) total += per[s * nc + c];
    out[s] = total / nc;
  }
  return out;
}

std::vector<double> evaluate_population_serial(const SimContext& ctx,
                                               const std::vector<TrainingCase>& cases,
                                               TwistMode mode, ControllerKind controller,
                                               const std::vector<ParamVector>& seeds,
                                               const CostWeights& weights) {
  std::vector<double> out;
  for (const ParamVector& p : seeds) out.push_back(objective(ctx, cases, mode, controller, p, weights));
  return out;
}

LearningTask default_task(TwistMode mode, ControllerKind controller, const BrickDims& dims) {
  LearningTask t;
  t.mode = mode;
  t.controller = controller;
  t.init = initial_params(mode, dims);
  t.weights = default_weights(controller);
  return t;
}

std::vector<Cell> training_positions(const PlateGrid& plate) {
  std::vector<Cell> grid = evaluation_positions(plate);
  std::vector<Cell> out;
  for (int i : {0, 2, 4, 10, 14, 20, 22, 24}) out.push_back(grid[static_cast<std::size_t>(i)]);
  return out;
}

LearningResult run_learning(const SimContext& ctx, const LearningTask& task, std::uint64_t seed,
                            bool parallel) {
  if (task.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  task.weights.validate();
  std::vector<Cell> cells = task.positions.empty() ? training_positions(ctx.plate) : task.positions;
  std::vector<TrainingCase> cases =
      make_cases(ctx, task.mode, task.kind, task.style, cells, derive_seed(seed, "cases"));
  OptimizerState state =
      cmaes_init(task.init, task.sigma0, task.bounds, task.lambda, derive_seed(seed, "cmaes"));

  LearningResult result;
  result.best_cost = std::numeric_limits<double>::infinity();
  for (int g = 0; g < task.epochs; ++g) {
    EpochRecord rec;
    rec.generation = g;
    rec.mean = state.mean();
    rec.sigma = state.sigma();
    rec.seeds = ask(state);
    rec.costs = parallel ? evaluate_population(ctx, cases, task.mode, task.controller, rec.seeds,
                                               task.weights)
                         : evaluate_population_serial(ctx, cases, task.mode, task.controller,
                                                      rec.seeds, task.weights);
    result.attempts += static_cast<long>(rec.seeds.size() * cases.size());
    rec.mean_cost = objective(ctx, cases, task.mode, task.controller, rec.mean, task.weights);
    tell(state, rec.seeds, rec.costs, task.weights.infinity_value);

    auto best = std::min_element(rec.costs.begin(), rec.costs.end());
    rec.population_best = *best;
    double sum = 0.0;
    for (double c : rec.costs) sum += c;
    rec.population_mean = sum / static_cast<double>(rec.costs.size());
    if (*best < result.best_cost) {
      result.best_cost = *best;
      result.best_params = rec.seeds[static_cast<std::size_t>(best - rec.costs.begin())];
    }
    rec.best_so_far = result.best_cost;
    rec.best_params = result.best_params;
    rec.min_eigenvalue = min_eigenvalue(state.cma.C);
    result.history.push_back(std::move(rec));
  }
  result.params = state.mean();
  result.cost = objective(ctx, cases, task.mode, task.controller, result.params, task.weights);
  return result;
}

namespace {

std::vector<double> axis(double lo, double hi, double step) {
  std::vector<double> v;
  for (int i = 0;; ++i) {
    double x = lo + i * step;
    if (x > hi + 1e-9) break;
    v.push_back(std::min(x, hi));
  }
  return v;
}

struct GridCell {
  double cost = std::numeric_limits<double>::infinity();
  double T = 0.0;
};

GridCell scan_geometry(const SimContext& ctx, const std::vector<TrainingCase>& cases,
                       TwistMode mode, const ParamVector& shape, const std::vector<double>& Ts,
                       const CostWeights& weights) {
  GridCell best;
  std::vector<GeometryEval> evals;
  for (const TrainingCase& tc : cases) {
    evals.push_back(evaluate_geometry(ctx, tc, mode, shape));
    // a failing case puts every T of this shape at or above infinity_value / cases
    if (!evals.back().ok || !evals.back().outcome.success) return best;
  }
  for (double T : Ts) {
    ParamVector p = shape;
    p.T = T;
    double total = 0.0;
    for (const GeometryEval& g : evals) {
      try {
        JointSchedule s = schedule_joint_jpc(g.joints, T, ctx.joint_limits, ctx.dt);
        total += cost(g.outcome, p, schedule_effort(s), weights);
      } catch (const InfeasibleHorizonError&) {
        total += weights.infinity_value;
      }
    }
    double c = total / static_cast<double>(cases.size());
    if (c < best.cost) best = {c, T};
  }
  return best;
}

}  // namespace

GridResult grid_search(const SimContext& ctx, const std::vector<TrainingCase>& cases,
                       TwistMode mode, const Bounds& bounds, const CostWeights& weights,
                       const GridSpec& grid, bool parallel) {
  bounds.validate();
  const std::vector<double> Ts = axis(bounds.lo.T, bounds.hi.T, grid.T_step);
  const std::vector<double> thetas = axis(bounds.lo.theta, bounds.hi.theta, grid.theta_step);
  const std::vector<double> dxs = axis(bounds.lo.d_x, bounds.hi.d_x, grid.dx_step);
  const std::vector<double> dzs = axis(bounds.lo.d_z, bounds.hi.d_z, grid.dz_step);
  const long shapes = static_cast<long>(thetas.size() * dxs.size() * dzs.size());
  std::vector<GridCell> cells(static_cast<std::size_t>(shapes));
  auto shape_at = [&](long i) {
    ParamVector p;
    p.theta = thetas[static_cast<std::size_t>(i / static_cast<long>(dxs.size() * dzs.size()))];
    p.d_x = dxs[static_cast<std::size_t>((i / static_cast<long>(dzs.size())) % static_cast<long>(dxs.size()))];
    p.d_z = dzs[static_cast<std::size_t>(i % static_cast<long>(dzs.size()))];
    return p;
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (long i = 0; i < shapes; ++i) cells[i] = scan_geometry(ctx, cases, mode, shape_at(i), Ts, weights);
  } else {
    for (long i = 0; i < shapes; ++i) cells[i] = scan_geometry(ctx, cases, mode, shape_at(i), Ts, weights);
  }
  GridResult out;
  out.points = shapes * static_cast<long>(Ts.size());
  out.best_cost = weights.infinity_value;
  for (long i = 0; i < shapes; ++i) {
    if (cells[i].cost < out.best_cost) {
      out.best_cost = cells[i].cost;
      out.best = shape_at(i);
      out.best.T = cells[i].T;
    }
  }
  return out;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "generation,seed_index,T,theta,d_x,d_z,cost,population_best,population_mean,mean_cost,"
        "best_so_far,mean_T,mean_theta,mean_d_x,mean_d_z,sigma\n";
  char buf[512];
  for (const EpochRecord& r : history) {
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
      const ParamVector& s = r.seeds[i];
      std::snprintf(buf, sizeof buf,
                    "%d,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                    r.generation, i, s.T, s.theta, s.d_x, s.d_z, r.costs[i], r.population_best,
                    r.population_mean, r.mean_cost, r.best_so_far, r.mean.T, r.mean.theta,
                    r.mean.d_x, r.mean.d_z, r.sigma);
      os << buf;
    }
  }
  return os.str();
}

}  // namespace lego
