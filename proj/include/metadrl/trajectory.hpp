#pragma once

#include <vector>

#include "metadrl/channel_env.hpp"

namespace metadrl {

struct Step {
  Observation state;
  int action = 0;
  int reward = 0;
};

/// One episode of (state, action, reward) triples in slot order.
struct Trajectory {
  std::vector<Step> steps;

  int length() const { return static_cast<int>(steps.size()); }
  int successes() const;
};

/// Discounting convention for the return weights of the policy loss.
enum class ReturnConvention {
  /// w_t = sum_{i>=t} gamma^(i-t) r_i
  reward_to_go,
  /// w_t = sum_{i>=t} gamma^i r_i with 1-based i, exactly as the loss is
  /// usually printed.
  paper_literal,
};

/// Per-slot weights of the log-probabilities in the policy loss.
std::vector<double> returns_weights(const std::vector<int>& rewards, double gamma,
                                    ReturnConvention convention);

}  // namespace metadrl
