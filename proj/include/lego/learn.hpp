#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lego/cmaes.hpp"
#include "lego/eoat.hpp"
#include "lego/lego_world.hpp"
#include "lego/surrogate_sim.hpp"
#include "lego/trajectory.hpp"

namespace lego {

struct ParamVector {
  double T = 2.0;       // s
  double theta = 15.0;  // deg
  double d_x = 0.0;     // mm
  double d_z = 0.0;     // mm

  Eigen::Vector4d to_vector() const { return {T, theta, d_x, d_z}; }
  static ParamVector from_vector(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
  TwistSpec twist(TwistMode mode) const { return {mode, d_x, d_z, theta}; }
  bool operator==(const ParamVector&) const = default;
};

struct Bounds {
  ParamVector lo{0.2, 1.0, 0.0, 0.0};
  ParamVector hi{8.0, 25.0, 10.0, 10.0};

  void validate() const;
  bool contains(const ParamVector& p) const;
  ParamVector clip(const ParamVector& p) const;
  Eigen::Vector4d normalize(const ParamVector& p) const;
  ParamVector denormalize(const Eigen::Vector4d& u) const;
};

struct CostWeights {
  double alpha = 100.0;
  double beta = 10.0;
  double gamma = 100.0;
  double eta = 1.0;
  double infinity_value = 1e8;

  void validate() const;
};

/// eta is 1 for the joint controller and 100 for the Cartesian one.
CostWeights default_weights(ControllerKind controller);

/// Initial guess per mode: T = 2 s, theta = 15 deg, and the tool's top lever
/// (assembly) or side lever (disassembly) as the offset.
ParamVector initial_params(TwistMode mode, const BrickDims& dims = {});

/// alpha*T + beta*theta + gamma*F + eta*effort on success, infinity_value otherwise.
double cost(const AttemptOutcome& outcome, const ParamVector& params, double effort,
            const CostWeights& weights);

struct OptimizerState {
  CmaesState cma;
  Bounds bounds;

  ParamVector mean() const { return bounds.denormalize(cma.mean.head<4>()); }
  double sigma() const { return cma.sigma; }
  int generation() const { return cma.generation; }
  int lambda() const { return cma.lambda; }
};

/// sigma0 is in normalized units (each parameter scaled to [0, 1] by its bounds).
OptimizerState cmaes_init(const ParamVector& mean0, double sigma0, const Bounds& bounds,
                          int lambda = 0, std::uint64_t seed = 0);
std::vector<ParamVector> ask(OptimizerState& state);
/// Costs must be finite or exactly weights.infinity_value.
void tell(OptimizerState& state, const std::vector<ParamVector>& seeds,
          const std::vector<double>& costs, double infinity_value = 1e8);

/// Arm, tool, limits, plate and surrogate constants shared by every attempt.
struct SimContext {
  ArmModel arm;  // tool mounted
  EoatConfig eoat;
  PlanOptions plan;
  ControlLimits joint_limits;
  CartesianLimits cartesian_limits;
  IkOptions ik;
  double dt = 0.004;
  PlateGrid plate;
  BrickDims dims;
  TightnessModel tightness;
  SurrogateParams surrogate;
};

SimContext default_context();

/// One fixed world per position, target on top.
struct TrainingCase {
  Cell cell;
  LegoWorld world;        // assembly: without the target
  BrickInstance target;   // assembly: the placement
  std::uint64_t noise_seed = 0;
};

std::vector<TrainingCase> make_cases(const SimContext& ctx, TwistMode mode, BrickKind kind,
                                     StructureStyle style, const std::vector<Cell>& cells,
                                     std::uint64_t seed);

/// Everything about an attempt that does not depend on T.
struct GeometryEval {
  bool ok = false;  // plan and IK succeeded
  ManipulationPlan plan;
  std::vector<JointVector> joints;
  std::vector<Pose> poses;
  JointVector start = JointVector::Zero();
  AttemptOutcome outcome;  // duration left 0
};

GeometryEval evaluate_geometry(const SimContext& ctx, const TrainingCase& tc, TwistMode mode,
                               const ParamVector& params);

struct AttemptResult {
  AttemptOutcome outcome;
  double effort = 0.0;
  double cost = 0.0;
};

/// Plans, generates the trajectory and executes on a copy of the case world.
/// Planning, IK and horizon errors become infeasible_trajectory failures.
AttemptResult evaluate_attempt(const SimContext& ctx, const TrainingCase& tc, TwistMode mode,
                               ControllerKind controller, const ParamVector& params,
                               const CostWeights& weights);

/// Mean cost over the cases.
double objective(const SimContext& ctx, const std::vector<TrainingCase>& cases, TwistMode mode,
                 ControllerKind controller, const ParamVector& params, const CostWeights& weights);

std::vector<double> evaluate_population(const SimContext& ctx,
                                        const std::vector<TrainingCase>& cases, TwistMode mode,
                                        ControllerKind controller,
                                        const std::vector<ParamVector>& seeds,
                                        const CostWeights& weights);
std::vector<double> evaluate_population_serial(const SimContext& ctx,
                                               const std::vector<TrainingCase>& cases,
                                               TwistMode mode, ControllerKind controller,
                                               const std::vector<ParamVector>& seeds,
                                               const CostWeights& weights);

struct LearningTask {
  TwistMode mode = TwistMode::disassemble;
  BrickKind kind{1, 2};
  StructureStyle style{Support::solid, 1};
  ControllerKind controller = ControllerKind::joint_jpc;
  std::vector<Cell> positions;  // empty: training_positions(plate)
  int epochs = 50;
  int lambda = 0;
  double sigma0 = 0.005;
  ParamVector init;
  Bounds bounds;
  CostWeights weights;
};

/// Task with the mode's initial params and the controller's weights.
LearningTask default_task(TwistMode mode, ControllerKind controller, const BrickDims& dims = {});

/// 8 cells spread over the plate interior.
std::vector<Cell> training_positions(const PlateGrid& plate);

struct EpochRecord {
  int generation = 0;
  ParamVector mean;  // distribution mean the seeds were drawn from
  std::vector<ParamVector> seeds;
  std::vector<double> costs;
  double population_best = 0.0;
  double population_mean = 0.0;
  double mean_cost = 0.0;  // cost of `mean`
  double best_so_far = 0.0;
  ParamVector best_params;
  double sigma = 0.0;           // step size the seeds were drawn with
  double min_eigenvalue = 0.0;  // of the covariance after the update
};

struct LearningResult {
  ParamVector params;  // final mean
  double cost = 0.0;   // objective at `params`
  ParamVector best_params;
  double best_cost = 0.0;
  std::vector<EpochRecord> history;
  long attempts = 0;  // seed attempts (excludes mean-vector checks)
};

LearningResult run_learning(const SimContext& ctx, const LearningTask& task, std::uint64_t seed,
                            bool parallel = true);

struct GridSpec {
  double T_step = 0.1;
  double theta_step = 1.0;
  double dx_step = 0.5;
  double dz_step = 0.5;
};

struct GridResult {
  ParamVector best;
  double best_cost = 0.0;
  long points = 0;
};

/// Exhaustive search of the joint-controller objective over the bounds.
GridResult grid_search(const SimContext& ctx, const std::vector<TrainingCase>& cases,
                       TwistMode mode, const Bounds& bounds, const CostWeights& weights,
                       const GridSpec& grid = {}, bool parallel = true);

/// history CSV: one row per seed; columns documented in docs/formats.md.
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace lego
