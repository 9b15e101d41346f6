#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "metadrl/rng.hpp"

namespace metadrl {

/// One channel-selection task: N channels, a contiguous block of
/// `good_count` good channels that advances by one position with
/// probability `p` every slot.
struct TaskSpec {
  int n_channels = 10;
  double p = 0.1;
  int good_count = 2;
};

/// Validating constructor. Throws std::invalid_argument when p is outside
/// [0, 1], n_channels < 2, or good_count is not in [1, n_channels).
TaskSpec make_task(int n_channels, double p, int good_count = 2);

/// Position of the good block: channels trailing .. trailing+good_count-1
/// (mod N) are good.
struct ChannelState {
  int trailing = 0;

  friend bool operator==(const ChannelState&, const ChannelState&) = default;
};

bool is_good(const TaskSpec& task, const ChannelState& state, int channel);

/// Binary condition vector C for the given state.
std::vector<int> condition_vector(const TaskSpec& task, const ChannelState& state);

/// Outcome record of the previous slot: zero everywhere except the
/// transmitted channel, which holds the reward (+1 or -1).
struct Observation {
  std::vector<int> entries;

  int size() const { return static_cast<int>(entries.size()); }
  /// Index of the nonzero entry, if any.
  std::optional<int> active_channel() const;

  friend bool operator==(const Observation&, const Observation&) = default;
};

Observation make_observation(int action, int reward, int n_channels);

struct SlotOutcome {
  int reward = 0;
  Observation observation;
  ChannelState next_state;
};

/// Advances the block with probability p. Draws exactly one uniform variate.
ChannelState evolve(const TaskSpec& task, const ChannelState& state, Rng& rng);

/// Same transition driven by an explicit uniform draw `u` in [0, 1):
/// the block advances iff u < p.
ChannelState evolve_with_draw(const TaskSpec& task, const ChannelState& state, double u);

struct EpisodeStart {
  ChannelState state;
  Observation observation;
  int occupied = 0;  // channel the agent is assumed to hold at t = 0
};

/// Random block position, occupied channel uniform over the good set, and
/// the matching +1 observation. Draws two uniform variates.
EpisodeStart init_episode(const TaskSpec& task, Rng& rng);

/// Deterministic part of init_episode, for a chosen trailing index and
/// offset into the good set.
EpisodeStart init_episode_at(const TaskSpec& task, int trailing, int good_offset);

/// Transmission on `action` in a slot whose channel state has already
/// evolved. Throws std::out_of_range for actions outside [0, N).
SlotOutcome transmit(const TaskSpec& task, const ChannelState& state_after_evolve, int action);

/// Optimal strategy for a known pattern: after success hop forward when
/// p > 0.5 and stay otherwise; after failure do the opposite. p == 0.5 takes
/// the p < 0.5 branch.
int oracle_action(const TaskSpec& task, int prev_action, int prev_reward);

/// Long-run per-slot success probability of oracle_action: max(p, 1 - p).
double oracle_success_rate(double p);

/// Measured success rate of oracle_action over one continuous rollout of
/// `slots` slots.
double simulate_oracle_sr(const TaskSpec& task, std::int64_t slots, Rng& rng);

/// Grid of condition vectors, one row per evolve step, starting from a
/// uniformly random block position.
std::vector<std::vector<int>> render_pattern(const TaskSpec& task, int horizon, Rng& rng);

/// CSV with header `t,c0,...,c{N-1}`.
void write_pattern_csv(std::ostream& out, const std::vector<std::vector<int>>& grid);

}  // namespace metadrl
