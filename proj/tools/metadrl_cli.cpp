// Command-line front end for the meta-RL channel access experiments.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "metadrl/harness.hpp"

using namespace metadrl;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "key = value configuration file");
  cmd->add_option("--seed", opts.seed, "run seed (overrides run_seed)");
  cmd->add_option("--out", opts.out, "output directory (overrides output_dir)");
}

RunConfig resolve(const CommonOptions& opts) {
  RunConfig cfg = opts.config.empty() ? RunConfig{} : load_config(opts.config);
  if (opts.seed) cfg.run_seed = *opts.seed;
  if (!opts.out.empty()) cfg.output_dir = opts.out;
  cfg.validate();
  return cfg;
}

void report(const CommandOutput& out) {
  for (const auto& f : out.files) std::printf("wrote %s\n", f.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-reinforcement learning for dynamic channel access"};
  app.require_subcommand(1);

  CommonOptions opts;

  auto* meta = app.add_subcommand("meta-train", "FOMAML meta-training with periodic validation");
  add_common(meta, opts);

  auto* joint = app.add_subcommand("joint-train", "joint-learning baseline");
  add_common(joint, opts);

  double p = 0.1;
  int updates = 20;
  std::string checkpoint;
  auto* adapt = app.add_subcommand("adapt", "adapt a checkpoint to one task and record SR per update");
  add_common(adapt, opts);
  adapt->add_option("--checkpoint", checkpoint, "parameter checkpoint")->required();
  adapt->add_option("--p", p, "transition probability")->required();
  adapt->add_option("--updates", updates, "number of adaptation updates");

  auto* pretrain = app.add_subcommand("pretrain", "task-specific training baseline");
  add_common(pretrain, opts);
  pretrain->add_option("--p", p, "transition probability")->required();

  std::vector<double> ps{0.05, 0.1, 0.2, 0.8, 0.9, 0.95};
  std::int64_t slots = 1000000;
  auto* oracle = app.add_subcommand("eval-oracle", "simulate the optimal strategy");
  add_common(oracle, opts);
  oracle->add_option("--p", ps, "transition probabilities")->delimiter(',');
  oracle->add_option("--slots", slots, "rollout length per p");

  int horizon = 50;
  auto* pattern = app.add_subcommand("render-pattern", "dump a channel condition grid");
  add_common(pattern, opts);
  pattern->add_option("--p", p, "transition probability")->required();
  pattern->add_option("--horizon", horizon, "number of slots");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = resolve(opts);
    if (*meta) {
      report(cmd_meta_train(cfg));
    } else if (*joint) {
      report(cmd_joint_train(cfg));
    } else if (*adapt) {
      report(cmd_adapt(cfg, checkpoint, p, updates));
    } else if (*pretrain) {
      PretrainOutput res = cmd_pretrain(cfg, p);
      if (!res.result.converged) {
        std::fprintf(stderr, "warning: pretraining hit the cap of %d updates without converging\n",
                     cfg.meta.pretrain_max_updates);
      }
      std::printf("final greedy SR %.6f after %d updates\n", res.result.final_sr, res.result.updates);
      report(res.output);
    } else if (*oracle) {
      report(cmd_eval_oracle(cfg, ps, slots));
    } else if (*pattern) {
      report(cmd_render_pattern(cfg, p, horizon));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
