#include "metadrl/meta_loop.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <stdexcept>
#include <string>

namespace metadrl {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid configuration: " + what);
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

ParamVector update_with(InnerOptimizer opt, const ParamVector& params, AdamState& adam,
                        const std::vector<double>& grad, double lr) {
  if (opt == InnerOptimizer::sgd) return sgd_step(params, grad, lr);
  auto [next, next_state] = adam_step(params, adam, grad, lr);
  adam = std::move(next_state);
  return next;
}

}  // namespace

void MetaConfig::validate() const {
  require(meta_batch_size >= 1, "meta_batch_size must be >= 1");
  require(inner_updates >= 2, "inner_updates must be >= 2");
  require(episodes_per_update >= 1, "episodes_per_update must be >= 1");
  require(episode_len >= 1, "episode_len must be >= 1");
  require(adapt_lr > 0.0, "adapt_lr must be > 0");
  require(meta_lr > 0.0, "meta_lr must be > 0");
  require(joint_lr > 0.0, "joint_lr must be > 0");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0,1]");
  require(n_channels >= 2, "n_channels must be >= 2");
  require(good_count >= 1 && good_count < n_channels, "good_count must lie in [1, n_channels)");
  require(!p_distribution.empty(), "p_distribution must not be empty");
  double total = 0.0;
  for (const PInterval& iv : p_distribution) {
    require(iv.lo >= 0.0 && iv.hi <= 1.0 && iv.lo <= iv.hi, "p_distribution intervals must lie in [0,1]");
    total += iv.hi - iv.lo;
  }
  require(total > 0.0, "p_distribution must have positive total length");
  require(train_pool_size >= 1, "train_pool_size must be >= 1");
  require(meta_batch_size <= train_pool_size, "meta_batch_size must not exceed train_pool_size");
  require(validation_tasks >= 1, "validation_tasks must be >= 1");
  require(adapt_updates_eval >= 0, "adapt_updates_eval must be >= 0");
  require(hidden1 >= 1 && hidden2 >= 1, "hidden sizes must be >= 1");
  require(pretrain_hidden1 >= 1 && pretrain_hidden2 >= 1, "pretrain hidden sizes must be >= 1");
  require(pretrain_lr > 0.0, "pretrain_lr must be > 0");
  require(pretrain_max_updates >= 1, "pretrain_max_updates must be >= 1");
  require(pretrain_window >= 1, "pretrain_window must be >= 1");
}

EstimateSettings MetaConfig::estimate_settings(ActionMode mode) const {
  return EstimateSettings{episodes_per_update, episode_len, gamma, convention, mode};
}

double sample_p(const std::vector<PInterval>& dist, Rng& rng) {
  double total = 0.0;
  for (const PInterval& iv : dist) total += iv.hi - iv.lo;
  double x = rng.uniform() * total;
  for (const PInterval& iv : dist) {
    const double len = iv.hi - iv.lo;
    if (x < len) return iv.lo + x;
    x -= len;
  }
  return dist.back().hi;
}

std::vector<TaskSpec> sample_task_pool(const MetaConfig& cfg, int count, Rng& rng) {
  if (count < 1) throw std::invalid_argument("task pool size must be >= 1");
  std::vector<TaskSpec> pool;
  pool.reserve(count);
  for (int i = 0; i < count; ++i) pool.push_back(make_task(cfg.n_channels, sample_p(cfg.p_distribution, rng), cfg.good_count));
  return pool;
}

std::vector<int> sample_batch_indices(int pool_size, int batch_size, Rng& rng) {
  if (batch_size > pool_size) throw std::invalid_argument("batch larger than pool");
  std::vector<int> idx(pool_size);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < batch_size; ++i) {
    const int j = i + rng.below(pool_size - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(batch_size);
  return idx;
}

double evaluate_sr(const ParamVector& params, const TaskSpec& task, int n_episodes, const MetaConfig& cfg, Rng& rng) {
  if (n_episodes < 1) throw std::invalid_argument("evaluate_sr needs at least one episode");
  const std::uint64_t base = rng.next_u64();
  PolicyCache policy(params);
  long successes = 0;
  for (int k = 0; k < n_episodes; ++k) {
    Rng episode_rng(episode_seed(base, k));
    successes += collect_episode(task, policy, cfg.episode_len, ActionMode::greedy, episode_rng).successes();
  }
  return static_cast<double>(successes) / (static_cast<double>(n_episodes) * cfg.episode_len);
}

ParamVector inner_adapt(const TaskSpec& task, const ParamVector& phi, int n_steps, const MetaConfig& cfg, Rng& rng) {
  if (n_steps < 1) throw std::invalid_argument("inner_adapt needs at least one step");
  const EstimateSettings settings = cfg.estimate_settings();
  AdamState adam = AdamState::zeros(phi.size());
  ParamVector theta = phi;
  for (int s = 0; s < n_steps; ++s) {
    const GradEstimate est = estimate_gradient(task, theta, settings, rng);
    theta = update_with(cfg.inner_optimizer, theta, adam, est.mean_grad, cfg.adapt_lr);
  }
  return theta;
}

ParamVector apply_meta_update(const ParamVector& phi, const std::vector<std::vector<double>>& grads, double meta_lr) {
  if (grads.empty()) throw std::invalid_argument("meta update needs at least one task gradient");
  std::vector<double> mean(phi.size(), 0.0);
  for (const auto& g : grads) {
    if (g.size() != phi.size()) throw std::invalid_argument("task gradient length mismatch");
    for (std::size_t j = 0; j < g.size(); ++j) mean[j] += g[j];
  }
  const double k = static_cast<double>(grads.size());
  for (double& m : mean) m /= k;
  return sgd_step(phi, mean, meta_lr);
}

FomamlStep fomaml_iteration(const ParamVector& phi, const std::vector<TaskSpec>& batch, const MetaConfig& cfg,
                            Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("empty meta-batch");
  const std::uint64_t base = rng.next_u64();
  const EstimateSettings settings = cfg.estimate_settings();
  FomamlStep step;
  double sr = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng task_rng(mix_seed(base, i));
    ParamVector theta = inner_adapt(batch[i], phi, cfg.inner_updates - 1, cfg, task_rng);
    GradEstimate est = estimate_gradient(batch[i], theta, settings, task_rng);
    sr += est.success_rate;
    step.adapted.push_back(std::move(theta));
    step.eval_grads.push_back(std::move(est.mean_grad));
  }
  step.phi = apply_meta_update(phi, step.eval_grads, cfg.meta_lr);
  step.mean_train_sr = sr / static_cast<double>(batch.size());
  return step;
}

ParamVector joint_iteration(const ParamVector& phi, AdamState& adam, const std::vector<TaskSpec>& batch,
                            const MetaConfig& cfg, Rng& rng) {
  const std::uint64_t base = rng.next_u64();
  const EstimateSettings settings = cfg.estimate_settings();
  ParamVector current = phi;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng task_rng(mix_seed(base, i));
    const GradEstimate est = estimate_gradient(batch[i], current, settings, task_rng);
    auto [next, next_state] = adam_step(current, adam, est.mean_grad, cfg.joint_lr);
    current = std::move(next);
    adam = std::move(next_state);
  }
  return current;
}

std::vector<double> adapt_and_evaluate(const ParamVector& phi, const TaskSpec& task, int n_updates,
                                       const MetaConfig& cfg, Rng& rng) {
  if (n_updates < 0) throw std::invalid_argument("n_updates must be >= 0");
  const EstimateSettings settings = cfg.estimate_settings();
  std::vector<double> curve;
  curve.reserve(n_updates + 1);
  curve.push_back(evaluate_sr(phi, task, cfg.episodes_per_update, cfg, rng));
  AdamState adam = AdamState::zeros(phi.size());
  ParamVector theta = phi;
  for (int u = 0; u < n_updates; ++u) {
    const GradEstimate est = estimate_gradient(task, theta, settings, rng);
    theta = update_with(cfg.inner_optimizer, theta, adam, est.mean_grad, cfg.adapt_lr);
    curve.push_back(evaluate_sr(theta, task, cfg.episodes_per_update, cfg, rng));
  }
  return curve;
}

PretrainResult pretrain_task_specific(const TaskSpec& task, const MetaConfig& cfg, Rng& rng) {
  const NetLayout layout = layout_for(task.n_channels, cfg.pretrain_hidden1, cfg.pretrain_hidden2);
  Rng init_rng(rng.next_u64());
  PretrainResult result;
  result.params = init_params(layout, init_rng);
  AdamState adam = AdamState::zeros(result.params.size());
  const EstimateSettings settings = cfg.estimate_settings();
  const int w = cfg.pretrain_window;

  auto window_mean = [&](int end) {
    double s = 0.0;
    for (int k = end - w; k < end; ++k) s += result.train_sr[k];
    return s / w;
  };

  while (result.updates < cfg.pretrain_max_updates) {
    const GradEstimate est = estimate_gradient(task, result.params, settings, rng);
    auto [next, next_state] = adam_step(result.params, adam, est.mean_grad, cfg.pretrain_lr);
    result.params = std::move(next);
    adam = std::move(next_state);
    result.train_sr.push_back(est.success_rate);
    ++result.updates;
    const int n = result.updates;
    if (n >= 2 * w && n % w == 0 && window_mean(n) - window_mean(n - w) < cfg.pretrain_tolerance) {
      result.converged = true;
      break;
    }
  }
  result.final_sr = evaluate_sr(result.params, task, cfg.episodes_per_update, cfg, rng);
  return result;
}

double TrainRecord::min_sr() const {
  return per_task_sr.empty() ? 0.0 : *std::min_element(per_task_sr.begin(), per_task_sr.end());
}

double TrainRecord::max_sr() const {
  return per_task_sr.empty() ? 0.0 : *std::max_element(per_task_sr.begin(), per_task_sr.end());
}

ValidationSet make_validation_set(const MetaConfig& cfg, std::uint64_t run_seed) {
  Rng rng(mix_seed(run_seed, "validation"));
  return ValidationSet{sample_task_pool(cfg, cfg.validation_tasks, rng), mix_seed(run_seed, "validation-episodes")};
}

TrainRecord validate(const ParamVector& phi, const ValidationSet& validation, const MetaConfig& cfg, int iteration) {
  const auto start = std::chrono::steady_clock::now();
  TrainRecord rec;
  rec.iteration = iteration;
  for (std::size_t j = 0; j < validation.tasks.size(); ++j) {
    Rng rng(mix_seed(validation.eval_seed, j));
    rec.per_task_sr.push_back(adapt_and_evaluate(phi, validation.tasks[j], cfg.adapt_updates_eval, cfg, rng).back());
  }
  rec.mean_validation_sr = mean_of(rec.per_task_sr);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

namespace {

template <typename Iterate>
TrainResult train_loop(const MetaConfig& cfg, std::uint64_t run_seed, const TrainSchedule& schedule,
                       Iterate&& iterate) {
  cfg.validate();
  if (schedule.total_iterations < 1 || schedule.eval_every < 1) {
    throw std::invalid_argument("total_iterations and eval_every must be >= 1");
  }
  Rng init_rng(mix_seed(run_seed, "init"));
  Rng pool_rng(mix_seed(run_seed, "pool"));
  const std::uint64_t train_seed = mix_seed(run_seed, "train");
  const std::vector<TaskSpec> pool = sample_task_pool(cfg, pool_rng);
  const ValidationSet validation = make_validation_set(cfg, run_seed);

  TrainResult result{init_params(cfg.layout(), init_rng), {}};
  auto record = [&](int iteration) {
    result.records.push_back(validate(result.phi, validation, cfg, iteration));
    if (schedule.on_record) schedule.on_record(result.records.back(), result.phi);
  };

  record(0);
  for (int it = 1; it <= schedule.total_iterations; ++it) {
    Rng rng(mix_seed(train_seed, static_cast<std::uint64_t>(it)));
    std::vector<TaskSpec> batch;
    for (int idx : sample_batch_indices(cfg.train_pool_size, cfg.meta_batch_size, rng)) batch.push_back(pool[idx]);
    result.phi = iterate(result.phi, batch, rng);
    if (it % schedule.eval_every == 0) record(it);
  }
  return result;
}

}  // namespace

TrainResult meta_train(const MetaConfig& cfg, std::uint64_t run_seed, const TrainSchedule& schedule) {
  return train_loop(cfg, run_seed, schedule, [&](const ParamVector& phi, const std::vector<TaskSpec>& batch, Rng& rng) {
    return fomaml_iteration(phi, batch, cfg, rng).phi;
  });
}

TrainResult joint_train(const MetaConfig& cfg, std::uint64_t run_seed, const TrainSchedule& schedule) {
  AdamState adam = AdamState::zeros(cfg.layout().param_count());
  return train_loop(cfg, run_seed, schedule, [&](const ParamVector& phi, const std::vector<TaskSpec>& batch, Rng& rng) {
    return joint_iteration(phi, adam, batch, cfg, rng);
  });
}

}  // namespace metadrl
