#include "lego/cli_io.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <numbers>
#include <sstream>

#include "lego/errors.hpp"
#include "lego/rng.hpp"

namespace lego {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string read_text(const std::string& path, const std::string& what) {
  std::ifstream f(path);
  if (!f) throw ConfigError(what + " not found: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

json read_json(const std::string& path, const std::string& what) {
  std::string text = read_text(path, what);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(what + " " + path + ": " + e.what());
  }
}

void allow_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <class T>
void take(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void take_vec6(const json& j, const char* key, JointVector& out, const std::string& where,
               double scale = 1.0) {
  if (!j.contains(key)) return;
  std::vector<double> v;
  take(j, key, v, where);
  if (v.size() != 6) throw ConfigError(where + "." + key + ": expected 6 values");
  for (int i = 0; i < 6; ++i) out[i] = v[static_cast<std::size_t>(i)] * scale;
}

Vec3 take_vec3(const json& j, const char* key, const Vec3& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  std::vector<double> v;
  take(j, key, v, where);
  if (v.size() != 3) throw ConfigError(where + "." + key + ": expected 3 values");
  return {v[0], v[1], v[2]};
}

template <class F>
void validated(const std::string& where, F&& check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const WorldError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

void load_arm(const json& j, SimContext& ctx, const EoatConfig& eoat, const std::string& where) {
  allow_keys(j, {"dh", "joint_limits_deg", "home_deg", "base", "control", "cartesian", "ik"}, where);
  ArmModel arm = default_arm();
  if (j.contains("dh")) {
    const json& rows = j.at("dh");
    if (!rows.is_array() || rows.size() != 6) throw ConfigError(where + ".dh: expected 6 rows");
    for (std::size_t i = 0; i < 6; ++i) {
      const std::string w = where + ".dh[" + std::to_string(i) + "]";
      allow_keys(rows[i], {"a", "alpha_deg", "d", "theta_offset_deg"}, w);
      double alpha = arm.dh[i].alpha / kDeg, offset = arm.dh[i].theta_offset / kDeg;
      take(rows[i], "a", arm.dh[i].a, w);
      take(rows[i], "d", arm.dh[i].d, w);
      take(rows[i], "alpha_deg", alpha, w);
      take(rows[i], "theta_offset_deg", offset, w);
      arm.dh[i].alpha = alpha * kDeg;
      arm.dh[i].theta_offset = offset * kDeg;
    }
  }
  if (j.contains("joint_limits_deg")) {
    std::vector<std::array<double, 2>> lim;
    take(j, "joint_limits_deg", lim, where);
    if (lim.size() != 6) throw ConfigError(where + ".joint_limits_deg: expected 6 pairs");
    for (std::size_t i = 0; i < 6; ++i) arm.limits[i] = {lim[i][0] * kDeg, lim[i][1] * kDeg};
  }
  take_vec6(j, "home_deg", arm.home, where, kDeg);
  if (j.contains("base")) {
    const json& b = j.at("base");
    allow_keys(b, {"xyz", "rpy_deg"}, where + ".base");
    arm.base_pose.translation = take_vec3(b, "xyz", Vec3::Zero(), where + ".base");
    arm.base_pose.rotation = from_xyz_deg(take_vec3(b, "rpy_deg", Vec3::Zero(), where + ".base"));
  }
  validated(where, [&] { arm.validate(); });
  ctx.arm = mount_tool(arm, eoat);

  if (j.contains("control")) {
    const json& c = j.at("control");
    const std::string w = where + ".control";
    allow_keys(c, {"dt", "velocity", "acceleration", "jerk_max", "jerk_min"}, w);
    take(c, "dt", ctx.dt, w);
    take_vec6(c, "velocity", ctx.joint_limits.velocity, w);
    take_vec6(c, "acceleration", ctx.joint_limits.acceleration, w);
    take_vec6(c, "jerk_max", ctx.joint_limits.u_max, w);
    ctx.joint_limits.u_min = -ctx.joint_limits.u_max;
    take_vec6(c, "jerk_min", ctx.joint_limits.u_min, w);
    if (!(ctx.dt > 0)) throw ConfigError(w + ".dt must be positive");
  }
  validated(where + ".control", [&] { ctx.joint_limits.validate(); });
  if (j.contains("cartesian")) {
    const json& c = j.at("cartesian");
    const std::string w = where + ".cartesian";
    allow_keys(c, {"linear_velocity", "linear_acceleration", "linear_jerk", "angular_velocity",
                   "angular_acceleration", "angular_jerk"}, w);
    CartesianLimits& l = ctx.cartesian_limits;
    take(c, "linear_velocity", l.linear_velocity, w);
    take(c, "linear_acceleration", l.linear_acceleration, w);
    take(c, "linear_jerk", l.linear_jerk, w);
    take(c, "angular_velocity", l.angular_velocity, w);
    take(c, "angular_acceleration", l.angular_acceleration, w);
    take(c, "angular_jerk", l.angular_jerk, w);
  }
  validated(where + ".cartesian", [&] { ctx.cartesian_limits.validate(); });
  if (j.contains("ik")) {
    const json& c = j.at("ik");
    const std::string w = where + ".ik";
    allow_keys(c, {"damping", "max_iterations", "step_clamp", "workspace_radius",
                   "tol_translation", "tol_rotation"}, w);
    take(c, "damping", ctx.ik.damping, w);
    take(c, "max_iterations", ctx.ik.max_iterations, w);
    take(c, "step_clamp", ctx.ik.step_clamp, w);
    take(c, "workspace_radius", ctx.ik.workspace_radius, w);
    take(c, "tol_translation", ctx.ik.tol_translation, w);
    take(c, "tol_rotation", ctx.ik.tol_rotation, w);
  }
}

void load_eoat(const json& j, EoatConfig& eoat, PlanOptions& plan, const std::string& where) {
  allow_keys(j, {"top_lever", "side_lever", "tool_length", "plan"}, where);
  take(j, "top_lever", eoat.top_lever, where);
  take(j, "side_lever", eoat.side_lever, where);
  take(j, "tool_length", eoat.tool_length, where);
  validated(where, [&] { eoat.validate(); });
  if (j.contains("plan")) {
    const json& p = j.at("plan");
    const std::string w = where + ".plan";
    allow_keys(p, {"arc_steps", "approach_height", "retreat_height", "max_step_mm", "max_step_deg"},
               w);
    take(p, "arc_steps", plan.arc_steps, w);
    take(p, "approach_height", plan.approach_height, w);
    take(p, "retreat_height", plan.retreat_height, w);
    take(p, "max_step_mm", plan.max_step_mm, w);
    take(p, "max_step_deg", plan.max_step_deg, w);
    if (plan.arc_steps < 1 || plan.approach_height < 0 || plan.retreat_height < 0 ||
        !(plan.max_step_mm > 0) || !(plan.max_step_deg > 0)) {
      throw ConfigError(w + ": steps must be positive and heights non-negative");
    }
  }
}

void load_surrogate(const json& j, SimContext& ctx, const std::string& where) {
  allow_keys(j, {"force", "align_tol", "seat_threshold", "transmission_gain", "level_attenuation",
                 "alignment_noise_sd", "noise", "tightness", "brick"}, where);
  SurrogateParams& s = ctx.surrogate;
  if (j.contains("force")) {
    const json& f = j.at("force");
    const std::string w = where + ".force";
    allow_keys(f, {"seat_stiffness", "peel_arm_scale", "force_abort_threshold"}, w);
    take(f, "seat_stiffness", s.force.seat_stiffness, w);
    take(f, "peel_arm_scale", s.force.peel_arm_scale, w);
    take(f, "force_abort_threshold", s.force.force_abort_threshold, w);
  }
  take(j, "align_tol", s.align_tol, where);
  take(j, "seat_threshold", s.seat_threshold, where);
  take(j, "transmission_gain", s.transmission_gain, where);
  take(j, "level_attenuation", s.level_attenuation, where);
  take(j, "alignment_noise_sd", s.alignment_noise_sd, where);
  take(j, "noise", s.noise, where);
  validated(where, [&] { s.validate(); });
  if (j.contains("tightness")) {
    const json& t = j.at("tightness");
    const std::string w = where + ".tightness";
    allow_keys(t, {"tau_min", "tau_max", "position_spread", "position_salt", "stochastic"}, w);
    take(t, "tau_min", ctx.tightness.tau_min, w);
    take(t, "tau_max", ctx.tightness.tau_max, w);
    take(t, "position_spread", ctx.tightness.position_spread, w);
    take(t, "position_salt", ctx.tightness.position_salt, w);
    take(t, "stochastic", ctx.tightness.stochastic, w);
    const TightnessModel& m = ctx.tightness;
    if (!(m.tau_min > 0) || m.tau_max < m.tau_min || m.position_spread < 0 ||
        m.position_spread >= 1) {
      throw ConfigError(w + ": need 0 < tau_min <= tau_max and 0 <= position_spread < 1");
    }
  }
  if (j.contains("brick")) {
    const json& b = j.at("brick");
    const std::string w = where + ".brick";
    allow_keys(b, {"knob_pitch", "brick_height", "knob_height", "knob_diameter"}, w);
    take(b, "knob_pitch", ctx.dims.knob_pitch, w);
    take(b, "brick_height", ctx.dims.brick_height, w);
    take(b, "knob_height", ctx.dims.knob_height, w);
    take(b, "knob_diameter", ctx.dims.knob_diameter, w);
  }
  validated(where + ".brick", [&] { ctx.dims.validate(); });
}

ParamVector take_params(const json& j, ParamVector p, const std::string& where) {
  allow_keys(j, {"T", "theta", "d_x", "d_z"}, where);
  take(j, "T", p.T, where);
  take(j, "theta", p.theta, where);
  take(j, "d_x", p.d_x, where);
  take(j, "d_z", p.d_z, where);
  return p;
}

void load_bounds(const json& j, Bounds& b, const std::string& where) {
  allow_keys(j, {"lower", "upper"}, where);
  if (j.contains("lower")) b.lo = take_params(j.at("lower"), b.lo, where + ".lower");
  if (j.contains("upper")) b.hi = take_params(j.at("upper"), b.hi, where + ".upper");
  validated(where, [&] { b.validate(); });
}

void load_weights(const json& j, RunConfig& c, const std::string& where) {
  allow_keys(j, {"alpha", "beta", "gamma", "eta_joint", "eta_cartesian", "infinity"}, where);
  take(j, "alpha", c.weights.alpha, where);
  take(j, "beta", c.weights.beta, where);
  take(j, "gamma", c.weights.gamma, where);
  take(j, "eta_joint", c.eta_joint, where);
  take(j, "eta_cartesian", c.eta_cartesian, where);
  take(j, "infinity", c.weights.infinity_value, where);
  validated(where, [&] {
    c.weights_for(ControllerKind::joint_jpc).validate();
    c.weights_for(ControllerKind::cartesian_jpc).validate();
  });
}

std::string resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

BrickKind parse_kind(const std::string& text, const std::string& where) {
  try {
    return BrickKind::parse(text);
  } catch (const WorldError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

std::uint64_t RunConfig::seed() const {
  if (!rng_seed) throw ConfigError("no rng_seed in the config and no --seed given");
  return *rng_seed;
}

CostWeights RunConfig::weights_for(ControllerKind controller) const {
  CostWeights w = weights;
  w.eta = controller == ControllerKind::joint_jpc ? eta_joint : eta_cartesian;
  return w;
}

LearningTask RunConfig::learning_task(TwistMode mode, ControllerKind controller) const {
  LearningTask t = default_task(mode, controller, context.dims);
  t.kind = learning.kind;
  t.epochs = controller == ControllerKind::joint_jpc ? learning.epochs : learning.cartesian_epochs;
  t.lambda = learning.population;
  t.sigma0 = learning.sigma0;
  t.bounds = bounds;
  t.weights = weights_for(controller);
  t.init = bounds.clip(t.init);
  return t;
}

RunConfig load_run_config(const std::string& path) {
  const json j = read_json(path, "run config");
  const std::string where = fs::path(path).filename().string();
  allow_keys(j, {"arm", "eoat", "surrogate", "bounds", "weights", "rng_seed", "output_dir",
                 "working_plate", "learning", "evaluation"}, where);
  const fs::path base = fs::path(path).parent_path();
  RunConfig c;
  for (auto [key, field] : {std::pair{"arm", &c.arm_path}, {"eoat", &c.eoat_path},
                            {"surrogate", &c.surrogate_path}, {"bounds", &c.bounds_path},
                            {"weights", &c.weights_path}}) {
    if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "' path");
    std::string p;
    take(j, key, p, where);
    *field = resolve(base, p);
  }
  if (j.contains("rng_seed")) {
    std::uint64_t s = 0;
    take(j, "rng_seed", s, where);
    c.rng_seed = s;
  }
  take(j, "output_dir", c.output_dir, where);

  c.context = default_context();
  load_eoat(read_json(c.eoat_path, "eoat config"), c.context.eoat, c.context.plan, c.eoat_path);
  c.context.dims.top_lever = c.context.eoat.top_lever;
  c.context.dims.side_lever = c.context.eoat.side_lever;
  load_arm(read_json(c.arm_path, "arm config"), c.context, c.context.eoat, c.arm_path);
  load_surrogate(read_json(c.surrogate_path, "surrogate config"), c.context, c.surrogate_path);
  load_bounds(read_json(c.bounds_path, "bounds config"), c.bounds, c.bounds_path);
  load_weights(read_json(c.weights_path, "weights config"), c, c.weights_path);

  if (j.contains("working_plate")) {
    const json& p = j.at("working_plate");
    const std::string w = where + ".working_plate";
    allow_keys(p, {"origin_xyz", "rpy_deg", "rows", "cols"}, w);
    PlateGrid& plate = c.context.plate;
    plate.origin.translation = take_vec3(p, "origin_xyz", plate.origin.translation, w);
    plate.origin.rotation = from_xyz_deg(take_vec3(p, "rpy_deg", Vec3::Zero(), w));
    take(p, "rows", plate.rows, w);
    take(p, "cols", plate.cols, w);
    if (plate.rows < 1 || plate.cols < 1) throw ConfigError(w + ": rows and cols must be >= 1");
  }
  if (j.contains("learning")) {
    const json& l = j.at("learning");
    const std::string w = where + ".learning";
    allow_keys(l, {"epochs", "cartesian_epochs", "population", "sigma0", "brick"}, w);
    take(l, "epochs", c.learning.epochs, w);
    take(l, "cartesian_epochs", c.learning.cartesian_epochs, w);
    take(l, "population", c.learning.population, w);
    take(l, "sigma0", c.learning.sigma0, w);
    std::string kind = c.learning.kind.name();
    take(l, "brick", kind, w);
    c.learning.kind = parse_kind(kind, w + ".brick");
    if (c.learning.epochs < 1 || c.learning.cartesian_epochs < 1 || c.learning.population < 0 ||
        !(c.learning.sigma0 > 0)) {
      throw ConfigError(w + ": epochs >= 1, population >= 0 and sigma0 > 0 required");
    }
  }
  if (j.contains("evaluation")) {
    const json& e = j.at("evaluation");
    const std::string w = where + ".evaluation";
    allow_keys(e, {"trials_per_position", "bricks", "heights"}, w);
    take(e, "trials_per_position", c.evaluation.trials_per_position, w);
    if (e.contains("bricks")) {
      std::vector<std::string> names;
      take(e, "bricks", names, w);
      c.evaluation.kinds.clear();
      for (const auto& n : names) c.evaluation.kinds.push_back(parse_kind(n, w + ".bricks"));
    }
    take(e, "heights", c.evaluation.heights, w);
  }
  return c;
}

std::string format_params(const ParamsFile& p) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "mode = %s\ncontroller = %s\nT = %.9g\ntheta = %.9g\nd_x = %.9g\nd_z = %.9g\n",
                mode_name(p.mode).c_str(), controller_name(p.controller).c_str(), p.params.T,
                p.params.theta, p.params.d_x, p.params.d_z);
  return buf;
}

ParamsFile parse_params(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = line.substr(0, line.find('#'));
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("params line " + std::to_string(n) + ": expected key = value");
    std::istringstream k(line.substr(0, eq)), v(line.substr(eq + 1));
    std::string key, value, extra;
    k >> key;
    v >> value;
    if (key.empty() || value.empty() || (v >> extra)) {
      throw ConfigError("params line " + std::to_string(n) + ": expected key = value");
    }
    if (!kv.emplace(key, value).second) throw ConfigError("params: duplicate key " + key);
  }
  ParamsFile p;
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(std::string("params: missing ") + key);
    return it->second;
  };
  auto number = [&](const char* key) {
    const std::string& s = need(key);
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || !std::isfinite(x)) throw ConfigError(std::string("params: bad ") + key);
    return x;
  };
  try {
    p.mode = parse_mode(need("mode"));
    p.controller = parse_controller(need("controller"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("params: ") + e.what());
  }
  p.params = {number("T"), number("theta"), number("d_x"), number("d_z")};
  if (kv.size() != 6) throw ConfigError("params: unknown keys present");
  return p;
}

ParamsFile load_params(const std::string& path) {
  try {
    return parse_params(read_text(path, "params file"));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string plot_data(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header)) throw ConfigError("history is empty");
  std::vector<std::string> cols;
  {
    std::istringstream h(header);
    std::string c;
    while (std::getline(h, c, ',')) cols.push_back(c);
  }
  auto index = [&](const std::string& name) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] == name) return i;
    }
    throw ConfigError("history lacks column " + name);
  };
  const std::size_t g = index("generation");
  const std::vector<std::pair<std::string, std::size_t>> series{
      {"cost_best", index("population_best")}, {"cost_mean", index("population_mean")},
      {"T", index("mean_T")}, {"theta", index("mean_theta")},
      {"d_x", index("mean_d_x")}, {"d_z", index("mean_d_z")}};

  std::map<long, std::vector<double>> rows;
  std::string line;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) f.push_back(c);
    if (f.size() != cols.size()) throw ConfigError("history line " + std::to_string(n) + ": wrong field count");
    std::vector<double> vals;
    long gen = 0;
    try {
      std::size_t used = 0;
      gen = std::stol(f[g], &used);
      if (used != f[g].size()) throw std::invalid_argument("generation");
      for (const auto& [name, i] : series) {
        vals.push_back(std::stod(f[i], &used));
        if (used != f[i].size()) throw std::invalid_argument(name);
      }
    } catch (const std::exception&) {
      throw ConfigError("history line " + std::to_string(n) + ": malformed number");
    }
    auto [it, fresh] = rows.emplace(gen, vals);
    if (!fresh && it->second != vals) {
      throw ConfigError("history line " + std::to_string(n) + ": inconsistent epoch summary");
    }
  }
  if (rows.empty()) throw ConfigError("history has no epochs");
  std::ostringstream os;
  os << "series,generation,value\n";
  char buf[64];
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (const auto& [gen, vals] : rows) {
      std::snprintf(buf, sizeof buf, "%.9g", vals[s]);
      os << series[s].first << ',' << gen << ',' << buf << "\n";
    }
  }
  return os.str();
}

namespace {

std::string tag(TwistMode mode, ControllerKind controller) {
  return mode_name(mode) + "_" + controller_name(controller);
}

std::string epoch_log(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  char buf[256];
  for (const EpochRecord& r : history) {
    std::snprintf(buf, sizeof buf,
                  "epoch %d mean=(T=%.9g theta=%.9g d_x=%.9g d_z=%.9g) cost=%.9g "
                  "population_best=%.9g best_so_far=%.9g sigma=%.9g\n",
                  r.generation, r.mean.T, r.mean.theta, r.mean.d_x, r.mean.d_z, r.mean_cost,
                  r.population_best, r.best_so_far, r.sigma);
    os << buf;
  }
  return os.str();
}

ParamTable params_table(const RunConfig& config, const std::vector<std::string>& files) {
  ParamTable table = ParamTable::initial(config.context.dims);
  for (const std::string& f : files) {
    ParamsFile p = load_params(f);
    if (!config.bounds.contains(p.params)) throw ConfigError(f + ": parameters outside bounds");
    table.set(p.mode, p.controller, p.params);
  }
  return table;
}

}  // namespace

int cmd_learn(const RunConfig& config, TwistMode mode, ControllerKind controller,
              std::ostream& log) {
  LearningTask task = config.learning_task(mode, controller);
  LearningResult r = run_learning(config.context, task, config.seed());
  const fs::path out(config.output_dir);
  const std::string t = tag(mode, controller);
  write_text(out / ("params_" + t + ".txt"), format_params({mode, controller, r.params}));
  write_text(out / ("history_" + t + ".csv"), history_csv(r.history));
  write_text(out / ("learn_" + t + ".log"), epoch_log(r.history));
  char buf[256];
  std::snprintf(buf, sizeof buf, "learned %s: T=%.9g theta=%.9g d_x=%.9g d_z=%.9g cost=%.9g\n",
                t.c_str(), r.params.T, r.params.theta, r.params.d_x, r.params.d_z, r.cost);
  log << buf;
  return kExitOk;
}

int cmd_evaluate(const RunConfig& config, const std::vector<std::string>& params_files,
                 std::ostream& log) {
  EvaluationConfig e;
  e.kinds = config.evaluation.kinds;
  e.heights = config.evaluation.heights;
  e.trials_per_position = config.evaluation.trials_per_position;
  e.params = params_table(config, params_files);
  e.rng_seed = derive_seed(config.seed(), "evaluate");
  SuccessTable table = run_success_sweep(config.context, e);
  const fs::path out = fs::path(config.output_dir) / "success_table.csv";
  write_text(out, success_csv(table));
  int full = 0;
  for (const SuccessRow& r : table.rows) full += r.successes == r.attempts;
  log << "wrote " << out.string() << " (" << full << "/" << table.rows.size()
      << " rows at 100%)\n";
  return kExitOk;
}

int cmd_prototype(const RunConfig& config, const std::string& layout_path,
                  ControllerKind controller, const std::vector<std::string>& params_files,
                  std::ostream& log) {
  LayoutDesign design = load_layout(layout_path);
  PrototypeConfig p = default_prototype(config.context, design);
  p.controller = controller;
  p.params = params_table(config, params_files);
  p.rng_seed = derive_seed(config.seed(), "prototype");
  PrototypeReport report = simulate_prototype(config.context, design, p);
  const fs::path out = fs::path(config.output_dir) / ("actions_" + design.name + ".log");
  write_text(out, action_log(report));
  log << design.name << ": " << report.actions.size() << " actions, "
      << (report.round_trip ? "round-trip OK" : "round-trip FAILED") << "\n";
  return report.round_trip ? kExitOk : 1;
}

int cmd_plot_data(const std::string& history_path, const std::string& out_path, std::ostream& log) {
  std::string data = plot_data(read_text(history_path, "history"));
  write_text(out_path, data);
  log << "wrote " << out_path << "\n";
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Twist-based brick assembly and disassembly: learning, evaluation, prototyping"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int workers = 0;
  app.add_option("--config", config_path, "run config (JSON)");
  app.add_option("--seed", seed, "master seed; overrides rng_seed");
  app.add_option("--out", out_dir, "output directory; overrides output_dir");
  app.add_option("--workers", workers, "worker threads (0: all)")->check(CLI::NonNegativeNumber);

  std::string mode_text = "disassemble", controller_text = "joint_jpc";
  auto* learn = app.add_subcommand("learn", "learn twist parameters for one mode and controller");
  learn->add_option("--mode", mode_text, "assemble | disassemble");
  learn->add_option("--controller", controller_text, "joint_jpc | cartesian_jpc");

  std::vector<std::string> params;
  auto* evaluate = app.add_subcommand("evaluate", "success-rate sweep");
  evaluate->add_option("--params", params, "params file; repeat per mode/controller");

  std::string layout;
  auto* prototype = app.add_subcommand("prototype", "build and tear down a layout");
  prototype->add_option("--layout", layout, "layout file")->required();
  prototype->add_option("--controller", controller_text, "joint_jpc | cartesian_jpc");
  prototype->add_option("--params", params, "params file; repeat per mode/controller");

  std::string history, plot_out;
  auto* plot = app.add_subcommand("plot-data", "per-epoch series from a history CSV");
  plot->add_option("history", history, "history CSV")->required();
  plot->add_option("--output", plot_out, "output CSV (default: <out>/plot_data.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (workers > 0) omp_set_num_threads(workers);

  try {
    if (plot->parsed()) {
      if (plot_out.empty()) plot_out = (fs::path(out_dir.empty() ? "out" : out_dir) / "plot_data.csv").string();
      return cmd_plot_data(history, plot_out, out);
    }
    if (config_path.empty()) throw ConfigError("--config is required");
    RunConfig config = load_run_config(config_path);
    if (seed) config.rng_seed = seed;
    if (!out_dir.empty()) config.output_dir = out_dir;
    config.seed();
    ControllerKind controller;
    try {
      controller = parse_controller(controller_text);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    if (learn->parsed()) {
      TwistMode mode;
      try {
        mode = parse_mode(mode_text);
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
      return cmd_learn(config, mode, controller, out);
    }
    if (evaluate->parsed()) return cmd_evaluate(config, params, out);
    return cmd_prototype(config, layout, controller, params, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const LayoutError& e) {
    err << "unsatisfiable layout: " << e.what() << "\n";
    return kExitLayout;
  } catch (const fs::filesystem_error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "invariant breach: " << e.what() << "\n";
    return kExitInvariant;
  }
}

}  // namespace lego
