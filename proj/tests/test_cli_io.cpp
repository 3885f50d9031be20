#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lego/cli_io.hpp"
#include "lego/errors.hpp"

using namespace lego;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) {
    dir = fs::temp_directory_path() / ("lego_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

// Small run config next to copies of the shipped component configs.
fs::path small_config(const fs::path& dir, int epochs = 3) {
  for (const char* f : {"arm.json", "eoat.json", "surrogate.json", "bounds.json", "weights.json"}) {
    fs::copy_file(fs::path("config") / f, dir / f, fs::copy_options::overwrite_existing);
  }
  nlohmann::json j = nlohmann::json::parse(slurp("config/default.json"));
  j["learning"]["epochs"] = epochs;
  j["learning"]["cartesian_epochs"] = 2;
  j["evaluation"]["trials_per_position"] = 1;
  j["evaluation"]["bricks"] = {"1x2"};
  j["output_dir"] = "out";
  spit(dir / "run.json", j.dump(2));
  return dir / "run.json";
}

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lego_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const char* kFloating = "name = floating\n2 20 20 1x2 0 4 4\n";
const char* kOne = "name = one\n1 20 20 1x2 0 4 4\n";

}  // namespace

TEST_CASE("shipped config matches the built-in defaults") {
  RunConfig c = load_run_config("config/default.json");
  SimContext d = default_context();
  CHECK(c.seed() == 42);
  for (int i = 0; i < 6; ++i) {
    CHECK(c.context.arm.dh[i].a == doctest::Approx(d.arm.dh[i].a));
    CHECK(c.context.arm.dh[i].d == doctest::Approx(d.arm.dh[i].d));
    CHECK(c.context.arm.dh[i].alpha == doctest::Approx(d.arm.dh[i].alpha));
    CHECK(c.context.arm.dh[i].theta_offset == doctest::Approx(d.arm.dh[i].theta_offset));
    CHECK(c.context.arm.limits[i].lower == doctest::Approx(d.arm.limits[i].lower));
    CHECK(c.context.arm.limits[i].upper == doctest::Approx(d.arm.limits[i].upper));
    CHECK(c.context.arm.home[i] == doctest::Approx(d.arm.home[i]));
    CHECK(c.context.joint_limits.velocity[i] == doctest::Approx(d.joint_limits.velocity[i]));
    CHECK(c.context.joint_limits.u_max[i] == doctest::Approx(d.joint_limits.u_max[i]));
  }
  CHECK(c.context.surrogate.force.seat_stiffness == d.surrogate.force.seat_stiffness);
  CHECK(c.context.surrogate.align_tol == d.surrogate.align_tol);
  CHECK(c.context.surrogate.seat_threshold == d.surrogate.seat_threshold);
  CHECK(c.context.surrogate.force.force_abort_threshold == d.surrogate.force.force_abort_threshold);
  CHECK(c.context.plate.origin.translation.isApprox(d.plate.origin.translation));
  CHECK(c.bounds.lo == Bounds{}.lo);
  CHECK(c.bounds.hi == Bounds{}.hi);
  CHECK(c.weights_for(ControllerKind::cartesian_jpc).eta == 100.0);
  CHECK(c.learning_task(TwistMode::disassemble, ControllerKind::joint_jpc).init ==
        ParamVector{2, 15, 0, 3.2});
  CHECK(c.learning_task(TwistMode::assemble, ControllerKind::cartesian_jpc).epochs == 100);
}

TEST_CASE("config errors") {
  Scratch s("config");
  fs::path run = small_config(s.dir);
  nlohmann::json j = nlohmann::json::parse(slurp(run));

  j["arm"] = "missing_arm.json";
  spit(run, j.dump());
  Result r = cli({"--config", run.string(), "--out", (s.dir / "o").string(), "learn", "--mode",
                  "disassemble"});
  CHECK(r.code == 2);
  CHECK(r.err.find("missing_arm.json") != std::string::npos);

  j["arm"] = "arm.json";
  j["colour"] = "red";
  spit(run, j.dump());
  CHECK_THROWS_AS(load_run_config(run.string()), ConfigError);

  j.erase("colour");
  j.erase("rng_seed");
  spit(run, j.dump());
  RunConfig c = load_run_config(run.string());
  CHECK_THROWS_AS(c.seed(), ConfigError);
  CHECK(cli({"--config", run.string(), "learn", "--mode", "assemble"}).code == 2);

  spit(s.dir / "bounds.json", R"({"lower": {"theta": 30}, "upper": {"theta": 25}})");
  j["rng_seed"] = 1;
  spit(run, j.dump());
  CHECK_THROWS_AS(load_run_config(run.string()), ConfigError);
  spit(s.dir / "bounds.json", "{ not json");
  CHECK_THROWS_AS(load_run_config(run.string()), ConfigError);
  CHECK(cli({"--config", (s.dir / "absent.json").string(), "learn"}).code == 2);
}

TEST_CASE("learn writes params, history and log, reproducibly") {
  Scratch s("learn");
  fs::path run = small_config(s.dir);
  const fs::path a = s.dir / "a", b = s.dir / "b";
  Result ra = cli({"--config", run.string(), "--seed", "7", "--out", a.string(), "learn", "--mode",
                   "disassemble", "--controller", "joint"});
  REQUIRE(ra.code == 0);
  CHECK(cli({"--config", run.string(), "--seed", "7", "--out", b.string(), "learn", "--mode",
             "disassemble", "--controller", "joint"})
            .code == 0);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  REQUIRE(names.size() == 3);
  for (const auto& n : names) CHECK(slurp(a / n) == slurp(b / n));

  const std::string params_name = names[2];
  CHECK(params_name.rfind("params_", 0) == 0);
  ParamsFile p = load_params((a / params_name).string());
  CHECK(p.mode == TwistMode::disassemble);
  CHECK(p.controller == ControllerKind::joint_jpc);
  CHECK(Bounds{}.contains(p.params));
  const std::string text = slurp(a / params_name);
  for (const char* key : {"T = ", "theta = ", "d_x = ", "d_z = "}) CHECK(text.find(key) != std::string::npos);

  // epoch-0 mean in the history is the initial guess
  const std::string history = slurp(a / names[0]);
  CHECK(names[0].rfind("history_", 0) == 0);
  CHECK(std::count(history.begin(), history.end(), '\n') == 1 + 3 * 8);

  Result rc = cli({"--config", run.string(), "--seed", "8", "--out", (s.dir / "c").string(), "learn",
                   "--mode", "disassemble"});
  CHECK(rc.code == 0);
  CHECK(slurp(s.dir / "c" / names[0]) != history);
}

TEST_CASE("plot data") {
  Scratch s("plot");
  fs::path run = small_config(s.dir);
  REQUIRE(cli({"--config", run.string(), "--out", s.dir.string(), "learn", "--mode", "assemble"}).code == 0);
  fs::path history;
  for (const auto& e : fs::directory_iterator(s.dir)) {
    if (e.path().filename().string().rfind("history_", 0) == 0) history = e.path();
  }
  REQUIRE(!history.empty());
  Result r = cli({"--config", run.string(), "--out", s.dir.string(), "plot-data", history.string()});
  REQUIRE(r.code == 0);
  std::istringstream in(slurp(s.dir / "plot_data.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "series,generation,value");
  std::map<std::string, int> rows;
  while (std::getline(in, line)) ++rows[line.substr(0, line.find(','))];
  CHECK(rows == std::map<std::string, int>{{"T", 3}, {"cost_best", 3}, {"cost_mean", 3},
                                           {"d_x", 3}, {"d_z", 3}, {"theta", 3}});
  CHECK_THROWS(plot_data(""));
  CHECK_THROWS(plot_data("generation,seed\n"));
  spit(s.dir / "empty.csv", "");
  CHECK(cli({"plot-data", (s.dir / "empty.csv").string(), "--output", (s.dir / "x.csv").string()})
            .code != 0);
}

TEST_CASE("evaluate") {
  Scratch s("evaluate");
  fs::path run = small_config(s.dir);
  spit(s.dir / "dis.txt", format_params({TwistMode::disassemble, ControllerKind::joint_jpc,
                                          {4.0, 11.0, 0.0, 9.6}}));
  std::vector<std::string> args{"--config", run.string(), "--out", (s.dir / "a").string(),
                                "evaluate", "--params", (s.dir / "dis.txt").string()};
  REQUIRE(cli(args).code == 0);
  const std::string table = slurp(s.dir / "a" / "success_table.csv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 1 + 3 * 2 * 2);
  args[3] = (s.dir / "b").string();
  REQUIRE(cli(args).code == 0);
  CHECK(slurp(s.dir / "b" / "success_table.csv") == table);

  args.back() = (s.dir / "missing.txt").string();
  CHECK(cli(args).code == 2);
  spit(s.dir / "far.txt", format_params({TwistMode::assemble, ControllerKind::joint_jpc, {4, 40, 0, 0}}));
  args.back() = (s.dir / "far.txt").string();
  CHECK(cli(args).code == 2);
}

TEST_CASE("prototype") {
  Scratch s("prototype");
  fs::path run = small_config(s.dir);
  spit(s.dir / "one.layout", kOne);
  spit(s.dir / "floating.layout", kFloating);
  Result r = cli({"--config", run.string(), "--out", s.dir.string(), "prototype", "--layout",
                  (s.dir / "one.layout").string()});
  CHECK(r.code == 0);
  const std::string log = slurp(s.dir / "actions_one.log");
  int actions = 0;
  std::istringstream in(log);
  std::string line;
  while (std::getline(in, line)) actions += line.rfind("verdict", 0) != 0;
  CHECK(actions == 4);
  CHECK(log.find("verdict: round-trip OK") != std::string::npos);

  CHECK(cli({"--config", run.string(), "--out", s.dir.string(), "prototype", "--layout",
             (s.dir / "floating.layout").string()})
            .code == 4);
  CHECK(cli({"--config", run.string(), "--out", s.dir.string(), "prototype", "--layout",
             (s.dir / "nope.layout").string()})
            .code == 2);
  spit(s.dir / "weak.txt", format_params({TwistMode::disassemble, ControllerKind::joint_jpc,
                                           {3.9, 1.0, 0.0, 9.6}}));
  Result weak = cli({"--config", run.string(), "--out", s.dir.string(), "prototype", "--layout",
                     (s.dir / "one.layout").string(), "--params", (s.dir / "weak.txt").string()});
  CHECK(weak.code == 1);
  CHECK(slurp(s.dir / "actions_one.log").find("round-trip FAILED") != std::string::npos);

  Result chair = cli({"--config", run.string(), "--out", s.dir.string(), "prototype", "--layout",
                      "layouts/chair.layout", "--params", "params/params_disassemble_joint_jpc.txt",
                      "--params", "params/params_assemble_joint_jpc.txt"});
  CHECK(chair.code == 0);
  CHECK(slurp(s.dir / "actions_chair.log").find("verdict: round-trip OK") != std::string::npos);
}

TEST_CASE("params files") {
  ParamsFile p{TwistMode::assemble, ControllerKind::cartesian_jpc, {7.96, 2.9, 9.94, 3.77}};
  ParamsFile q = parse_params(format_params(p));
  CHECK(q.mode == p.mode);
  CHECK(q.controller == p.controller);
  CHECK(q.params == p.params);
  CHECK_THROWS_AS(parse_params("mode = assemble\n"), ConfigError);
  CHECK_THROWS_AS(parse_params(format_params(p) + "T = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_params("mode = assemble\ncontroller = joint\nT = x\ntheta = 1\nd_x = 1\nd_z = 1\n"),
                  ConfigError);
}

TEST_CASE("unknown subcommands and flags") {
  CHECK(cli({"fly"}).code == 2);
  CHECK(cli({"learn", "--mode", "sideways"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}
