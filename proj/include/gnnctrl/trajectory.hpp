#ifndef GNNCTRL_TRAJECTORY_HPP
#define GNNCTRL_TRAJECTORY_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "gnnctrl/autodiff.hpp"
#include "gnnctrl/errors.hpp"
#include "gnnctrl/graph.hpp"

namespace gnnctrl {

/// Everything recorded at one sampling instant of a rollout: the
/// communication graph, the local features fed to controllers, the executed
/// (already clipped) control, the physical state it was computed from, and
/// the velocity-variation cost at that state.
struct TrajectoryStep {
  ShiftOperator support;
  GraphSignal features;   // N x 6
  GraphSignal control;    // N x 2
  Eigen::MatrixXd positions;
  Eigen::MatrixXd velocities;
  double cost = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  Eigen::MatrixXd final_positions;   // state after the last dynamics step
  Eigen::MatrixXd final_velocities;
  double terminal_cost = 0.0;        // velocity variation at the final state
  double t_s = 0.0;
  bool failed = false;               // collision singularity hit mid-rollout
  int failure_step = -1;

  int length() const { return static_cast<int>(steps.size()); }
  int agents() const { return steps.empty() ? 0 : static_cast<int>(steps[0].positions.rows()); }

  /// Sum of per-step costs over the recorded steps (the terminal state's
  /// cost is kept separate).
  double cumulative_cost() const {
    double c = 0.0;
    for (const auto& s : steps) c += s.cost;
    return c;
  }

  /// View as training tensors (targets = recorded controls).
  TrajectoryTensors tensors() const {
    TrajectoryTensors t;
    t.supports.reserve(steps.size());
    t.features.reserve(steps.size());
    t.targets.reserve(steps.size());
    for (const auto& s : steps) {
      t.supports.push_back(s.support);
      t.features.push_back(s.features);
      t.targets.push_back(s.control);
    }
    return t;
  }
};

/// Expert demonstrations split the way the trainer consumes them.
struct Dataset {
  std::vector<Trajectory> train;
  std::vector<Trajectory> validation;
  std::vector<Trajectory> test;

  void validate() const {
    const auto check = [](const std::vector<Trajectory>& split) {
      for (const auto& tr : split)
        if (tr.failed) throw invalid_input("Dataset: contains a failed trajectory");
    };
    check(train);
    check(validation);
    check(test);
    int len = -1;
    for (const auto* split : {&train, &validation, &test})
      for (const auto& tr : *split) {
        if (len < 0) len = tr.length();
        if (tr.length() != len) throw invalid_input("Dataset: trajectory lengths differ");
      }
  }
};

}  // namespace gnnctrl

#endif  // GNNCTRL_TRAJECTORY_HPP
