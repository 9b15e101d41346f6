#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "metadrl/config.hpp"
#include "metadrl/meta_loop.hpp"

namespace metadrl {

/// Raised when an output cannot be written or an input cannot be used.
class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that round-trips `v` (used in file names).
std::string format_p(double p);

/// Fixed six-decimal text used for every SR column.
std::string format_sr(double sr);

void write_records_csv(std::ostream& out, const std::vector<TrainRecord>& records);

void save_checkpoint_file(const std::filesystem::path& path, const ParamVector& params);
ParamVector load_checkpoint_file(const std::filesystem::path& path);

/// Loads a checkpoint and checks its layout against the meta-training
/// layout or the pretraining layout of `cfg`.
ParamVector load_checkpoint_for(const std::filesystem::path& path, const MetaConfig& cfg);

struct CommandOutput {
  std::vector<std::filesystem::path> files;
};

/// meta_train.csv, phi_iter{k}.txt per evaluation point, phi_final.txt.
CommandOutput cmd_meta_train(const RunConfig& cfg);

/// joint_train.csv, phi_joint_iter{k}.txt, phi_joint_final.txt.
CommandOutput cmd_joint_train(const RunConfig& cfg);

/// adapt_p{p}.csv with header `update,sr`.
CommandOutput cmd_adapt(const RunConfig& cfg, const std::filesystem::path& checkpoint, double p, int n_updates);

struct PretrainOutput {
  CommandOutput output;
  PretrainResult result;
};

/// pretrain_p{p}.csv (`update,train_sr`) and pretrain_p{p}.txt.
PretrainOutput cmd_pretrain(const RunConfig& cfg, double p);

/// oracle.csv with header `p,measured_sr,analytic_sr`.
CommandOutput cmd_eval_oracle(const RunConfig& cfg, const std::vector<double>& ps, std::int64_t slots);

/// pattern_p{p}.csv with header `t,c0,...`.
CommandOutput cmd_render_pattern(const RunConfig& cfg, double p, int horizon);

}  // namespace metadrl
