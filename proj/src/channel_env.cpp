#include "metadrl/channel_env.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <string>

namespace metadrl {

TaskSpec make_task(int n_channels, double p, int good_count) {
  if (n_channels < 2) {
    throw std::invalid_argument("n_channels must be at least 2, got " + std::to_string(n_channels));
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("transition probability must lie in [0,1], got " + std::to_string(p));
  }
  if (good_count < 1 || good_count >= n_channels) {
    throw std::invalid_argument("good_count must be in [1, n_channels), got " + std::to_string(good_count));
  }
  return TaskSpec{n_channels, p, good_count};
}

bool is_good(const TaskSpec& task, const ChannelState& state, int channel) {
  int offset = (channel - state.trailing) % task.n_channels;
  if (offset < 0) offset += task.n_channels;
  return offset < task.good_count;
}

std::vector<int> condition_vector(const TaskSpec& task, const ChannelState& state) {
  std::vector<int> c(task.n_channels, 0);
  for (int k = 0; k < task.good_count; ++k) c[(state.trailing + k) % task.n_channels] = 1;
  return c;
}

std::optional<int> Observation::active_channel() const {
  for (int i = 0; i < size(); ++i) {
    if (entries[i] != 0) return i;
  }
  return std::nullopt;
}

Observation make_observation(int action, int reward, int n_channels) {
  Observation obs{std::vector<int>(n_channels, 0)};
  obs.entries[action] = reward;
  return obs;
}

ChannelState evolve_with_draw(const TaskSpec& task, const ChannelState& state, double u) {
  if (u < task.p) return ChannelState{(state.trailing + 1) % task.n_channels};
  return state;
}

ChannelState evolve(const TaskSpec& task, const ChannelState& state, Rng& rng) {
  return evolve_with_draw(task, state, rng.uniform());
}

EpisodeStart init_episode_at(const TaskSpec& task, int trailing, int good_offset) {
  EpisodeStart start;
  start.state = ChannelState{trailing};
  start.occupied = (trailing + good_offset) % task.n_channels;
  start.observation = make_observation(start.occupied, +1, task.n_channels);
  return start;
}

EpisodeStart init_episode(const TaskSpec& task, Rng& rng) {
  int trailing = rng.below(task.n_channels);
  int offset = rng.below(task.good_count);
  return init_episode_at(task, trailing, offset);
}

SlotOutcome transmit(const TaskSpec& task, const ChannelState& state_after_evolve, int action) {
  if (action < 0 || action >= task.n_channels) {
    throw std::out_of_range("action " + std::to_string(action) + " outside [0, " +
                            std::to_string(task.n_channels) + ")");
  }
  int reward = is_good(task, state_after_evolve, action) ? +1 : -1;
  return SlotOutcome{reward, make_observation(action, reward, task.n_channels), state_after_evolve};
}

int oracle_action(const TaskSpec& task, int prev_action, int prev_reward) {
  bool hop = task.p > 0.5 ? prev_reward > 0 : prev_reward < 0;
  return hop ? (prev_action + 1) % task.n_channels : prev_action;
}

double oracle_success_rate(double p) { return std::max(p, 1.0 - p); }

double simulate_oracle_sr(const TaskSpec& task, std::int64_t slots, Rng& rng) {
  EpisodeStart start = init_episode(task, rng);
  ChannelState state = start.state;
  int action = start.occupied;
  int reward = +1;
  std::int64_t successes = 0;
  for (std::int64_t t = 0; t < slots; ++t) {
    state = evolve(task, state, rng);
    action = oracle_action(task, action, reward);
    reward = is_good(task, state, action) ? +1 : -1;
    if (reward > 0) ++successes;
  }
  return slots > 0 ? static_cast<double>(successes) / static_cast<double>(slots) : 0.0;
}

std::vector<std::vector<int>> render_pattern(const TaskSpec& task, int horizon, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  ChannelState state{rng.below(task.n_channels)};
  std::vector<std::vector<int>> grid;
  grid.reserve(horizon);
  for (int t = 0; t < horizon; ++t) {
    state = evolve(task, state, rng);
    grid.push_back(condition_vector(task, state));
  }
  return grid;
}

void write_pattern_csv(std::ostream& out, const std::vector<std::vector<int>>& grid) {
  int n = grid.empty() ? 0 : static_cast<int>(grid.front().size());
  out << "t";
  for (int c = 0; c < n; ++c) out << ",c" << c;
  out << '\n';
  for (std::size_t t = 0; t < grid.size(); ++t) {
    out << t;
    for (int v : grid[t]) out << ',' << v;
    out << '\n';
  }
}

}  // namespace metadrl
