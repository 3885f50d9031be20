#pragma once

#include <stdexcept>

namespace lego {

struct JointLimitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised by inverse kinematics on non-convergence or when the only solution
// found violates joint limits. Controllers treat it as a rejected waypoint.
struct IkError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleHorizonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WorldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PlanningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OptimizerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LayoutError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lego
