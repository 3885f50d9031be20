#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lego/learn.hpp"
#include "lego/pipeline.hpp"

namespace lego {

// Exit codes of every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitInvariant = 3,
  kExitLayout = 4,
};

struct LearningOptions {
  int epochs = 50;
  int cartesian_epochs = 100;
  int population = 0;  // 0: 4 + floor(3 ln 4)
  double sigma0 = 0.005;
  BrickKind kind{1, 2};
};

struct EvaluationOptions {
  std::vector<BrickKind> kinds{{1, 2}, {1, 4}, {2, 2}, {2, 4}};
  std::vector<int> heights{1, 10};
  int trials_per_position = 10;
};

struct RunConfig {
  std::string arm_path;
  std::string eoat_path;
  std::string surrogate_path;
  std::string bounds_path;
  std::string weights_path;
  std::optional<std::uint64_t> rng_seed;
  std::string output_dir = "out";

  SimContext context;
  Bounds bounds;
  CostWeights weights;  // eta is replaced per controller
  double eta_joint = 1.0;
  double eta_cartesian = 100.0;
  LearningOptions learning;
  EvaluationOptions evaluation;

  /// Throws ConfigError when no seed was given.
  std::uint64_t seed() const;
  CostWeights weights_for(ControllerKind controller) const;
  LearningTask learning_task(TwistMode mode, ControllerKind controller) const;
};

/// Relative paths inside the file resolve against its directory.
RunConfig load_run_config(const std::string& path);

struct ParamsFile {
  TwistMode mode = TwistMode::disassemble;
  ControllerKind controller = ControllerKind::joint_jpc;
  ParamVector params;
};

std::string format_params(const ParamsFile& p);
ParamsFile parse_params(const std::string& text);
ParamsFile load_params(const std::string& path);

/// Tidy long-format series (series,generation,value) from a history CSV.
std::string plot_data(const std::string& history_csv_text);

int cmd_learn(const RunConfig& config, TwistMode mode, ControllerKind controller,
              std::ostream& log);
int cmd_evaluate(const RunConfig& config, const std::vector<std::string>& params_files,
                 std::ostream& log);
int cmd_prototype(const RunConfig& config, const std::string& layout_path,
                  ControllerKind controller, const std::vector<std::string>& params_files,
                  std::ostream& log);
int cmd_plot_data(const std::string& history_path, const std::string& out_path, std::ostream& log);

/// Full command line; maps exceptions to exit codes and reports on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lego
