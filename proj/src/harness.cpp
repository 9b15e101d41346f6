#include "metadrl/harness.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

namespace metadrl {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw HarnessError("cannot create output directory " + dir.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw HarnessError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw HarnessError("write failed for " + path.string());
}

std::string layout_text(const NetLayout& l) {
  return std::to_string(l.input_size) + " " + std::to_string(l.hidden1) + " " + std::to_string(l.hidden2) + " " +
         std::to_string(l.output_size);
}

CommandOutput train_command(const RunConfig& cfg, bool joint) {
  cfg.validate();
  ensure_dir(cfg.output_dir);
  const std::string prefix = joint ? "phi_joint_" : "phi_";
  const fs::path csv_path = cfg.output_dir / (joint ? "joint_train.csv" : "meta_train.csv");
  CommandOutput out;
  {
    const fs::path cfg_path = cfg.output_dir / (joint ? "joint_train_config.txt" : "meta_train_config.txt");
    std::ofstream c = open_out(cfg_path);
    write_config(c, cfg);
    finish(c, cfg_path);
    out.files.push_back(cfg_path);
  }

  std::ofstream csv = open_out(csv_path);
  csv << "iteration,mean_sr,min_sr,max_sr\n";
  TrainSchedule schedule{cfg.total_iterations, cfg.eval_every, [&](const TrainRecord& rec, const ParamVector& phi) {
                           csv << rec.iteration << ',' << format_sr(rec.mean_validation_sr) << ','
                               << format_sr(rec.min_sr()) << ',' << format_sr(rec.max_sr()) << '\n';
                           csv.flush();
                           const fs::path ckpt = cfg.output_dir / (prefix + "iter" + std::to_string(rec.iteration) + ".txt");
                           save_checkpoint_file(ckpt, phi);
                           out.files.push_back(ckpt);
                         }};
  const TrainResult result = joint ? joint_train(cfg.meta, cfg.run_seed, schedule)
                                   : meta_train(cfg.meta, cfg.run_seed, schedule);
  finish(csv, csv_path);
  out.files.push_back(csv_path);
  const fs::path final_path = cfg.output_dir / (prefix + "final.txt");
  save_checkpoint_file(final_path, result.phi);
  out.files.push_back(final_path);
  return out;
}

}  // namespace

std::string format_p(double p) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), p);
  return std::string(buf, res.ptr);
}

std::string format_sr(double sr) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", sr);
  return buf;
}

void write_records_csv(std::ostream& out, const std::vector<TrainRecord>& records) {
  out << "iteration,mean_sr,min_sr,max_sr\n";
  for (const TrainRecord& r : records) {
    out << r.iteration << ',' << format_sr(r.mean_validation_sr) << ',' << format_sr(r.min_sr()) << ','
        << format_sr(r.max_sr()) << '\n';
  }
}

void save_checkpoint_file(const fs::path& path, const ParamVector& params) {
  std::ofstream out = open_out(path);
  save_checkpoint(out, params);
  finish(out, path);
}

ParamVector load_checkpoint_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw HarnessError("cannot open checkpoint " + path.string());
  try {
    return load_checkpoint(in);
  } catch (const std::exception& e) {
    throw HarnessError(path.string() + ": " + e.what());
  }
}

ParamVector load_checkpoint_for(const fs::path& path, const MetaConfig& cfg) {
  ParamVector params = load_checkpoint_file(path);
  const NetLayout meta_layout = cfg.layout();
  const NetLayout pre_layout = layout_for(cfg.n_channels, cfg.pretrain_hidden1, cfg.pretrain_hidden2);
  if (params.layout != meta_layout && params.layout != pre_layout) {
    throw HarnessError("checkpoint " + path.string() + " has layout " + layout_text(params.layout) +
                       " (D=" + std::to_string(params.size()) + "), expected " + layout_text(meta_layout) +
                       " (D=" + std::to_string(meta_layout.param_count()) + ") or " + layout_text(pre_layout) +
                       " (D=" + std::to_string(pre_layout.param_count()) + ")");
  }
  return params;
}

CommandOutput cmd_meta_train(const RunConfig& cfg) { return train_command(cfg, false); }

CommandOutput cmd_joint_train(const RunConfig& cfg) { return train_command(cfg, true); }

CommandOutput cmd_adapt(const RunConfig& cfg, const fs::path& checkpoint, double p, int n_updates) {
  cfg.validate();
  const ParamVector phi = load_checkpoint_for(checkpoint, cfg.meta);
  const TaskSpec task = make_task(cfg.meta.n_channels, p, cfg.meta.good_count);
  Rng rng(mix_seed(mix_seed(cfg.run_seed, "adapt"), format_p(p)));
  const std::vector<double> curve = adapt_and_evaluate(phi, task, n_updates, cfg.meta, rng);

  ensure_dir(cfg.output_dir);
  const fs::path path = cfg.output_dir / ("adapt_p" + format_p(p) + ".csv");
  std::ofstream out = open_out(path);
  out << "update,sr\n";
  for (std::size_t u = 0; u < curve.size(); ++u) out << u << ',' << format_sr(curve[u]) << '\n';
  finish(out, path);
  return CommandOutput{{path}};
}

PretrainOutput cmd_pretrain(const RunConfig& cfg, double p) {
  cfg.validate();
  const TaskSpec task = make_task(cfg.meta.n_channels, p, cfg.meta.good_count);
  Rng rng(mix_seed(mix_seed(cfg.run_seed, "pretrain"), format_p(p)));
  PretrainOutput result{{}, pretrain_task_specific(task, cfg.meta, rng)};

  ensure_dir(cfg.output_dir);
  const fs::path csv_path = cfg.output_dir / ("pretrain_p" + format_p(p) + ".csv");
  std::ofstream csv = open_out(csv_path);
  csv << "update,train_sr\n";
  for (std::size_t u = 0; u < result.result.train_sr.size(); ++u) {
    csv << u + 1 << ',' << format_sr(result.result.train_sr[u]) << '\n';
  }
  finish(csv, csv_path);
  const fs::path ckpt = cfg.output_dir / ("pretrain_p" + format_p(p) + ".txt");
  save_checkpoint_file(ckpt, result.result.params);
  result.output.files = {csv_path, ckpt};
  return result;
}

CommandOutput cmd_eval_oracle(const RunConfig& cfg, const std::vector<double>& ps, std::int64_t slots) {
  if (slots < 1) throw HarnessError("slots must be >= 1");
  ensure_dir(cfg.output_dir);
  const fs::path path = cfg.output_dir / "oracle.csv";
  std::ofstream out = open_out(path);
  out << "p,measured_sr,analytic_sr\n";
  for (double p : ps) {
    const TaskSpec task = make_task(cfg.meta.n_channels, p, cfg.meta.good_count);
    Rng rng(mix_seed(mix_seed(cfg.run_seed, "oracle"), format_p(p)));
    out << format_p(p) << ',' << format_sr(simulate_oracle_sr(task, slots, rng)) << ','
        << format_sr(oracle_success_rate(p)) << '\n';
  }
  finish(out, path);
  return CommandOutput{{path}};
}

CommandOutput cmd_render_pattern(const RunConfig& cfg, double p, int horizon) {
  const TaskSpec task = make_task(cfg.meta.n_channels, p, cfg.meta.good_count);
  Rng rng(mix_seed(mix_seed(cfg.run_seed, "pattern"), format_p(p)));
  const auto grid = render_pattern(task, horizon, rng);
  ensure_dir(cfg.output_dir);
  const fs::path path = cfg.output_dir / ("pattern_p" + format_p(p) + ".csv");
  std::ofstream out = open_out(path);
  write_pattern_csv(out, grid);
  finish(out, path);
  return CommandOutput{{path}};
}

}  // namespace metadrl
