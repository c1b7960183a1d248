#ifndef GNNCTRL_ERRORS_HPP
#define GNNCTRL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gnnctrl {

/// Thrown when an argument violates a documented precondition
/// (dimension mismatch, non-finite input, non-bijective permutation, ...).
struct invalid_input : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation produces a non-finite value. Carries the
/// trajectory step at which the value first appeared (-1 if not applicable).
struct numeric_error : std::runtime_error {
  int step = -1;
  explicit numeric_error(const std::string& what, int step_index = -1)
      : std::runtime_error(what), step(step_index) {}
};

/// Thrown when two agents come close enough that the collision-avoidance
/// potential is numerically singular.
struct singularity_error : std::runtime_error {
  int agent_i = -1;
  int agent_j = -1;
  singularity_error(const std::string& what, int i = -1, int j = -1)
      : std::runtime_error(what), agent_i(i), agent_j(j) {}
};

/// Thrown when a configuration is infeasible (e.g. the initial-condition
/// sampler keeps rejecting because the requested density is too high).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gnnctrl

#endif  // GNNCTRL_ERRORS_HPP
