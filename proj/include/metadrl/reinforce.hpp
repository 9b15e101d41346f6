#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "metadrl/channel_env.hpp"
#include "metadrl/policy_net.hpp"
#include "metadrl/rng.hpp"
#include "metadrl/trajectory.hpp"

namespace metadrl {

enum class ActionMode {
  sampled,  // draw from the softmax (training data collection)
  greedy,   // argmax (success-rate evaluation)
};

/// Memoizes forward() for one fixed parameter vector. Observations produced
/// by the environment are one-hot with value +-1, so at most 2N distinct
/// inputs ever reach the network; anything else is computed uncached.
class PolicyCache {
 public:
  explicit PolicyCache(const ParamVector& params);

  const ActionDistribution& distribution(const Observation& obs);

 private:
  const ParamVector& params_;
  std::vector<std::optional<ActionDistribution>> slots_;
  ActionDistribution scratch_;
};

/// Runs one episode of `horizon` slots. Each slot evolves the channel,
/// picks an action for the current state, transmits, and feeds the new
/// observation back as the next state.
template <typename ChooseAction>
Trajectory run_episode(const TaskSpec& task, int horizon, Rng& rng, ChooseAction&& choose) {
  EpisodeStart start = init_episode(task, rng);
  ChannelState channels = start.state;
  Observation state = std::move(start.observation);
  Trajectory traj;
  traj.steps.reserve(horizon);
  for (int t = 0; t < horizon; ++t) {
    channels = evolve(task, channels, rng);
    const int action = choose(state, rng);
    SlotOutcome outcome = transmit(task, channels, action);
    traj.steps.push_back(Step{std::move(state), action, outcome.reward});
    state = std::move(outcome.observation);
  }
  return traj;
}

Trajectory collect_episode(const TaskSpec& task, const ParamVector& params, int horizon, ActionMode mode,
                           Rng& rng);
Trajectory collect_episode(const TaskSpec& task, PolicyCache& policy, int horizon, ActionMode mode, Rng& rng);

/// Episode-batch settings shared by every gradient estimate.
struct EstimateSettings {
  int episodes = 20;
  int horizon = 30;
  double gamma = 0.9;
  ReturnConvention convention = ReturnConvention::reward_to_go;
  ActionMode mode = ActionMode::sampled;
};

struct GradEstimate {
  double mean_loss = 0.0;
  std::vector<double> mean_grad;
  double success_rate = 0.0;
  int episodes_used = 0;
};

/// Episode k of an estimate runs on its own stream, seeded from one 64-bit
/// draw of `rng` mixed with k.
std::uint64_t episode_seed(std::uint64_t base, int episode_index);

/// Averages per-episode losses and gradients over `settings.episodes`
/// independent episodes, summed in episode order.
GradEstimate estimate_gradient(const TaskSpec& task, const ParamVector& params, const EstimateSettings& settings,
                               Rng& rng);

}  // namespace metadrl
