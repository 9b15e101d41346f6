#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "metadrl/channel_env.hpp"
#include "metadrl/policy_net.hpp"
#include "metadrl/reinforce.hpp"
#include "metadrl/rng.hpp"

namespace metadrl {

struct PInterval {
  double lo = 0.0;
  double hi = 1.0;
};

enum class InnerOptimizer { adam, sgd };

/// Hyperparameters of meta-training, joint-learning, adaptation and
/// task-specific pretraining. Defaults are the reference experiment.
struct MetaConfig {
  int meta_batch_size = 15;     // K
  int inner_updates = 15;       // I: I-1 adaptation steps + 1 evaluation gradient
  double adapt_lr = 0.1;        // alpha
  double meta_lr = 0.05;        // beta
  double joint_lr = 0.001;      // alpha_2
  double gamma = 0.9;
  int episode_len = 30;         // H
  int episodes_per_update = 20; // M
  int n_channels = 10;
  int good_count = 2;
  std::vector<PInterval> p_distribution{{0.0, 0.2}, {0.8, 1.0}};
  int train_pool_size = 100;
  int validation_tasks = 50;
  int adapt_updates_eval = 20;
  ReturnConvention convention = ReturnConvention::reward_to_go;
  InnerOptimizer inner_optimizer = InnerOptimizer::adam;
  int hidden1 = 50;
  int hidden2 = 20;

  int pretrain_hidden1 = 50;
  int pretrain_hidden2 = 50;
  double pretrain_lr = 0.001;
  int pretrain_max_updates = 3000;
  int pretrain_window = 50;
  double pretrain_tolerance = 0.005;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  NetLayout layout() const { return layout_for(n_channels, hidden1, hidden2); }
  EstimateSettings estimate_settings(ActionMode mode = ActionMode::sampled) const;
};

/// Draws p uniformly from the union of intervals (weighted by length).
/// Consumes one uniform variate.
double sample_p(const std::vector<PInterval>& dist, Rng& rng);

std::vector<TaskSpec> sample_task_pool(const MetaConfig& cfg, int count, Rng& rng);
inline std::vector<TaskSpec> sample_task_pool(const MetaConfig& cfg, Rng& rng) {
  return sample_task_pool(cfg, cfg.train_pool_size, rng);
}

/// K distinct pool indices, drawn uniformly without replacement.
std::vector<int> sample_batch_indices(int pool_size, int batch_size, Rng& rng);

/// Greedy success rate over `n_episodes` episodes of cfg.episode_len slots.
double evaluate_sr(const ParamVector& params, const TaskSpec& task, int n_episodes, const MetaConfig& cfg, Rng& rng);

/// `n_steps` updates from `phi`, each on an M-episode averaged gradient with
/// step size alpha. The Adam state starts fresh for every call.
ParamVector inner_adapt(const TaskSpec& task, const ParamVector& phi, int n_steps, const MetaConfig& cfg, Rng& rng);

/// phi - beta * mean(grads).
ParamVector apply_meta_update(const ParamVector& phi, const std::vector<std::vector<double>>& grads, double meta_lr);

struct FomamlStep {
  ParamVector phi;                               // updated initialization
  std::vector<ParamVector> adapted;              // theta_i per task
  std::vector<std::vector<double>> eval_grads;   // gradient at theta_i per task
  double mean_train_sr = 0.0;                    // sampled SR of the evaluation episodes
};

/// Per-task stream for one meta-iteration: task i uses mix_seed(base, i),
/// where base is one draw from the iteration stream.
FomamlStep fomaml_iteration(const ParamVector& phi, const std::vector<TaskSpec>& batch, const MetaConfig& cfg,
                            Rng& rng);

/// Sequential single updates over the batch with a persistent Adam state.
ParamVector joint_iteration(const ParamVector& phi, AdamState& adam, const std::vector<TaskSpec>& batch,
                            const MetaConfig& cfg, Rng& rng);

/// Greedy SR before adaptation and after each of `n_updates` fresh-Adam
/// updates with step size alpha. Length n_updates + 1.
std::vector<double> adapt_and_evaluate(const ParamVector& phi, const TaskSpec& task, int n_updates,
                                       const MetaConfig& cfg, Rng& rng);

struct PretrainResult {
  ParamVector params;
  bool converged = false;
  int updates = 0;
  std::vector<double> train_sr;  // sampled SR of each update's episodes
  double final_sr = 0.0;         // greedy SR after training
};

/// Task-specific training with a persistent Adam state until the windowed
/// training SR stops improving or the update cap is hit.
PretrainResult pretrain_task_specific(const TaskSpec& task, const MetaConfig& cfg, Rng& rng);

struct TrainRecord {
  int iteration = 0;
  double mean_validation_sr = 0.0;
  std::vector<double> per_task_sr;
  double wall_seconds = 0.0;

  double min_sr() const;
  double max_sr() const;
};

struct ValidationSet {
  std::vector<TaskSpec> tasks;
  std::uint64_t eval_seed = 0;
};

ValidationSet make_validation_set(const MetaConfig& cfg, std::uint64_t run_seed);

/// Adapts `phi` on every validation task for cfg.adapt_updates_eval updates
/// and records the final greedy SR. Task j always uses stream
/// mix_seed(eval_seed, j), so every evaluation point sees the same episodes.
TrainRecord validate(const ParamVector& phi, const ValidationSet& validation, const MetaConfig& cfg, int iteration);

struct TrainSchedule {
  int total_iterations = 2000;
  int eval_every = 100;
  /// Invoked after each validation with the parameters that were evaluated.
  std::function<void(const TrainRecord&, const ParamVector&)> on_record;
};

struct TrainResult {
  ParamVector phi;
  std::vector<TrainRecord> records;
};

TrainResult meta_train(const MetaConfig& cfg, std::uint64_t run_seed, const TrainSchedule& schedule);
TrainResult joint_train(const MetaConfig& cfg, std::uint64_t run_seed, const TrainSchedule& schedule);

}  // namespace metadrl
