#include "metadrl/reinforce.hpp"

#include <cmath>
#include <stdexcept>

namespace metadrl {

int Trajectory::successes() const {
  int n = 0;
  for (const Step& s : steps) n += s.reward > 0 ? 1 : 0;
  return n;
}

std::vector<double> returns_weights(const std::vector<int>& rewards, double gamma, ReturnConvention convention) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0,1]");
  const int h = static_cast<int>(rewards.size());
  std::vector<double> w(h, 0.0);
  double running = 0.0;
  if (convention == ReturnConvention::reward_to_go) {
    for (int t = h - 1; t >= 0; --t) {
      running = rewards[t] + gamma * running;
      w[t] = running;
    }
  } else {
    // 1-based slot i carries gamma^i regardless of the starting slot.
    for (int t = h - 1; t >= 0; --t) {
      running += std::pow(gamma, t + 1) * rewards[t];
      w[t] = running;
    }
  }
  return w;
}

PolicyCache::PolicyCache(const ParamVector& params)
    : params_(params), slots_(2 * static_cast<std::size_t>(params.layout.input_size) + 1) {}

const ActionDistribution& PolicyCache::distribution(const Observation& obs) {
  const int n = params_.layout.input_size;
  std::optional<std::size_t> key;
  if (obs.size() == n) {
    int nonzero = 0;
    int index = -1;
    for (int i = 0; i < n; ++i) {
      if (obs.entries[i] != 0) {
        ++nonzero;
        index = i;
      }
    }
    if (nonzero == 0) {
      key = 2 * static_cast<std::size_t>(n);
    } else if (nonzero == 1 && (obs.entries[index] == 1 || obs.entries[index] == -1)) {
      key = 2 * static_cast<std::size_t>(index) + (obs.entries[index] > 0 ? 1 : 0);
    }
  }
  if (!key) {
    scratch_ = forward(params_, obs);
    return scratch_;
  }
  auto& slot = slots_[*key];
  if (!slot) slot = forward(params_, obs);
  return *slot;
}

Trajectory collect_episode(const TaskSpec& task, PolicyCache& policy, int horizon, ActionMode mode, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("episode length must be at least 1");
  return run_episode(task, horizon, rng, [&](const Observation& s, Rng& r) {
    const ActionDistribution& dist = policy.distribution(s);
    return mode == ActionMode::greedy ? greedy_action(dist) : sample_action(dist, r);
  });
}

Trajectory collect_episode(const TaskSpec& task, const ParamVector& params, int horizon, ActionMode mode,
                           Rng& rng) {
  PolicyCache policy(params);
  return collect_episode(task, policy, horizon, mode, rng);
}

std::uint64_t episode_seed(std::uint64_t base, int episode_index) {
  return mix_seed(base, static_cast<std::uint64_t>(episode_index));
}

GradEstimate estimate_gradient(const TaskSpec& task, const ParamVector& params, const EstimateSettings& settings,
                               Rng& rng) {
  if (settings.episodes < 1) throw std::invalid_argument("at least one episode per estimate is required");
  const std::uint64_t base = rng.next_u64();
  PolicyCache policy(params);

  GradEstimate est;
  est.mean_grad.assign(params.size(), 0.0);
  long successes = 0;
  for (int k = 0; k < settings.episodes; ++k) {
    Rng episode_rng(episode_seed(base, k));
    const Trajectory traj = collect_episode(task, policy, settings.horizon, settings.mode, episode_rng);
    const LossAndGrad lg = episode_loss_and_gradient(params, traj, settings.gamma, settings.convention);
    est.mean_loss += lg.loss;
    for (std::size_t i = 0; i < lg.grad.size(); ++i) est.mean_grad[i] += lg.grad[i];
    successes += traj.successes();
  }
  const double k = settings.episodes;
  est.mean_loss /= k;
  for (double& g : est.mean_grad) g /= k;
  est.episodes_used = settings.episodes;
  est.success_rate = static_cast<double>(successes) / (k * settings.horizon);
  return est;
}

}  // namespace metadrl
