// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "metadrl/harness.hpp"
#include "metadrl/reinforce.hpp"

using namespace metadrl;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kOracleTol = 0.005;
constexpr std::int64_t kOracleSlots = 1000000;
constexpr double kOracleMean = 0.90;
constexpr double kOracleMeanTol = 0.01;
constexpr double kMetaTarget = 0.81;
constexpr double kMetaTol = 0.05;
constexpr int kMetaBudget = 2500;
constexpr double kIter0Lo = 0.45;
constexpr double kIter0Hi = 0.60;
constexpr double kJointTarget = 0.66;
constexpr double kJointTol = 0.08;
constexpr double kGap = 0.10;
constexpr double kAdaptFloor = 0.85;
constexpr double kFdTol = 1e-4;
constexpr int kFdInstances = 20;
constexpr double kFomamlTol = 1e-9;
constexpr double kEnvTol = 0.01;
constexpr int kEnvSteps = 100000;
// Converged values are averaged over the last few evaluation points.
constexpr int kTailRecords = 5;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void print(int id, const std::string& name, const Verdict& v) {
  std::printf("criterion %d %-24s %s  %s\n", id, name.c_str(), v.pass ? "PASS" : "FAIL", v.detail.c_str());
  std::fflush(stdout);
}

double l2(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double tail_mean(const std::vector<TrainRecord>& records) {
  const std::size_t n = std::min<std::size_t>(kTailRecords, records.size());
  double s = 0.0;
  for (std::size_t i = records.size() - n; i < records.size(); ++i) s += records[i].mean_validation_sr;
  return s / static_cast<double>(n);
}

std::vector<TrainRecord> read_records(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<TrainRecord> out;
  while (std::getline(in, line)) {
    TrainRecord r;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    r.iteration = std::stoi(cell);
    std::getline(ss, cell, ',');
    r.mean_validation_sr = std::stod(cell);
    out.push_back(r);
  }
  return out;
}

std::vector<double> read_curve(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<double> out;
  while (std::getline(in, line)) out.push_back(std::stod(line.substr(line.find(',') + 1)));
  return out;
}

Verdict oracle_fidelity(const fs::path& out) {
  RunConfig cfg;
  cfg.output_dir = out / "oracle";
  const std::vector<double> ps{0.05, 0.1, 0.2, 0.8, 0.9, 0.95};
  Rng rng(mix_seed(cfg.run_seed, "acceptance-oracle"));
  Verdict v{true, ""};
  double worst = 0.0;
  for (double p : ps) {
    const double sr = simulate_oracle_sr(make_task(10, p), kOracleSlots, rng);
    worst = std::max(worst, std::abs(sr - oracle_success_rate(p)));
  }
  v.pass = worst <= kOracleTol;
  // Mean ideal SR over the validation distribution.
  const ValidationSet validation = make_validation_set(cfg.meta, cfg.run_seed);
  double mean = 0.0;
  for (const TaskSpec& t : validation.tasks) mean += oracle_success_rate(t.p);
  mean /= static_cast<double>(validation.tasks.size());
  v.pass = v.pass && std::abs(mean - kOracleMean) <= kOracleMeanTol;
  cmd_eval_oracle(cfg, ps, kOracleSlots);
  v.detail = "max|measured-analytic|=" + fmt("%.5f", worst) + " validation mean ideal SR=" + fmt("%.4f", mean);
  return v;
}

struct TrainingRuns {
  std::vector<TrainRecord> meta;
  std::vector<TrainRecord> joint;
  fs::path meta_dir;
};

TrainingRuns train(const fs::path& out, bool reuse) {
  RunConfig cfg;
  cfg.total_iterations = kMetaBudget;
  cfg.eval_every = 100;
  TrainingRuns runs;
  runs.meta_dir = out / "meta";
  cfg.output_dir = runs.meta_dir;
  if (!(reuse && fs::exists(runs.meta_dir / "phi_final.txt"))) {
    const auto t0 = std::chrono::steady_clock::now();
    cmd_meta_train(cfg);
    std::printf("  meta-training took %.0f s\n",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  runs.meta = read_records(runs.meta_dir / "meta_train.csv");
  cfg.output_dir = out / "joint";
  if (!(reuse && fs::exists(out / "joint" / "phi_joint_final.txt"))) cmd_joint_train(cfg);
  runs.joint = read_records(out / "joint" / "joint_train.csv");
  return runs;
}

Verdict meta_reproduction(const TrainingRuns& runs) {
  const TrainRecord& first = runs.meta.front();
  int reached = -1;
  for (const TrainRecord& r : runs.meta) {
    if (r.iteration <= kMetaBudget && std::abs(r.mean_validation_sr - kMetaTarget) <= kMetaTol) {
      reached = r.iteration;
      break;
    }
  }
  double best = 0.0;
  for (const TrainRecord& r : runs.meta) best = std::max(best, r.mean_validation_sr);
  Verdict v;
  v.pass = reached >= 0 && first.mean_validation_sr >= kIter0Lo && first.mean_validation_sr <= kIter0Hi;
  v.detail = "iteration 0 SR=" + fmt("%.4f", first.mean_validation_sr) + " best=" + fmt("%.4f", best) +
             " final=" + fmt("%.4f", runs.meta.back().mean_validation_sr) +
             (reached >= 0 ? " reached target at iteration " + std::to_string(reached) : " target band not reached");
  return v;
}

Verdict joint_gap(const TrainingRuns& runs) {
  const double joint = tail_mean(runs.joint);
  const double meta = tail_mean(runs.meta);
  Verdict v;
  v.pass = std::abs(joint - kJointTarget) <= kJointTol && meta - joint >= kGap;
  v.detail = "joint SR=" + fmt("%.4f", joint) + " meta SR=" + fmt("%.4f", meta) + " gap=" + fmt("%.4f", meta - joint);
  return v;
}

Verdict adaptation_asymmetry(const fs::path& out, const TrainingRuns& runs) {
  RunConfig cfg;
  const int n = cfg.meta.adapt_updates_eval;
  Verdict v{true, ""};
  for (double p : {0.1, 0.9}) {
    const double other = p < 0.5 ? 0.9 : 0.1;
    cfg.output_dir = out / "adapt_meta";
    cmd_adapt(cfg, runs.meta_dir / "phi_final.txt", p, n);
    const std::vector<double> meta_curve = read_curve(cfg.output_dir / ("adapt_p" + format_p(p) + ".csv"));

    cfg.output_dir = out / "pretrain";
    const fs::path pre_ckpt = cfg.output_dir / ("pretrain_p" + format_p(other) + ".txt");
    if (!fs::exists(pre_ckpt)) cmd_pretrain(cfg, other);
    cfg.output_dir = out / ("adapt_from_p" + format_p(other));
    cmd_adapt(cfg, pre_ckpt, p, n);
    const std::vector<double> pre_curve = read_curve(cfg.output_dir / ("adapt_p" + format_p(p) + ".csv"));

    const double meta_best = *std::max_element(meta_curve.begin(), meta_curve.end());
    const double meta_final = meta_curve.back();
    const double pre_final = pre_curve.back();
    v.pass = v.pass && meta_best >= kAdaptFloor && meta_final - pre_final >= kGap;
    v.detail += "p=" + format_p(p) + ": meta best=" + fmt("%.4f", meta_best) + " meta final=" + fmt("%.4f", meta_final) +
                " pretrained(p=" + format_p(other) + ") final=" + fmt("%.4f", pre_final) + "; ";
  }
  return v;
}

Verdict gradient_check() {
  Rng rng(mix_seed(1, "acceptance-fd"));
  const NetLayout layout = layout_for(4);
  const double h = 1e-5;
  double worst = 0.0;
  for (int inst = 0; inst < kFdInstances; ++inst) {
    ParamVector p = init_params(layout, rng);
    for (double& x : p.values) x += 0.2 * (rng.uniform() - 0.5);
    Trajectory t;
    for (int s = 0; s < 3; ++s) {
      t.steps.push_back(Step{make_observation(rng.below(4), rng.uniform() < 0.5 ? -1 : 1, 4), rng.below(4),
                             rng.uniform() < 0.5 ? -1 : 1});
    }
    const ReturnConvention conv = inst % 2 ? ReturnConvention::paper_literal : ReturnConvention::reward_to_go;
    const LossAndGrad lg = episode_loss_and_gradient(p, t, 0.9, conv);
    std::vector<double> diff(p.size()), fd(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      ParamVector hi = p, lo = p;
      hi.values[i] += h;
      lo.values[i] -= h;
      fd[i] = (episode_loss_and_gradient(hi, t, 0.9, conv).loss - episode_loss_and_gradient(lo, t, 0.9, conv).loss) /
              (2 * h);
      diff[i] = fd[i] - lg.grad[i];
    }
    worst = std::max(worst, l2(diff) / std::max(l2(fd), l2(lg.grad)));
  }
  return {worst <= kFdTol, std::to_string(kFdInstances) + " instances, worst relative error=" + fmt("%.3e", worst)};
}

Verdict fomaml_identity() {
  MetaConfig cfg;
  cfg.inner_optimizer = InnerOptimizer::sgd;
  cfg.inner_updates = 2;
  cfg.meta_batch_size = 4;
  cfg.episodes_per_update = 5;
  Rng init(mix_seed(1, "acceptance-fomaml"));
  const ParamVector phi = init_params(cfg.layout(), init);
  std::vector<TaskSpec> batch;
  for (double p : {0.05, 0.15, 0.85, 0.95}) batch.push_back(make_task(cfg.n_channels, p, cfg.good_count));

  Rng rng(7), replay(7);
  const FomamlStep step = fomaml_iteration(phi, batch, cfg, rng);
  const std::uint64_t base = replay.next_u64();
  double worst = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng task_rng(mix_seed(base, i));
    const ParamVector theta = inner_adapt(batch[i], phi, 1, cfg, task_rng);
    const ParamVector theta_next = inner_adapt(batch[i], theta, 1, cfg, task_rng);
    for (std::size_t j = 0; j < phi.size(); ++j) {
      const double delta = (theta.values[j] - theta_next.values[j]) / cfg.adapt_lr;
      worst = std::max(worst, std::abs(delta - step.eval_grads[i][j]));
    }
  }
  return {worst <= kFomamlTol, "max |g_i - (theta_i - theta_i')/alpha|=" + fmt("%.3e", worst)};
}

Verdict environment_statistics() {
  Rng rng(mix_seed(1, "acceptance-env"));
  Verdict v{true, ""};
  for (double p : {0.1, 0.5, 0.9}) {
    const TaskSpec task = make_task(10, p);
    ChannelState s{0};
    int advances = 0;
    bool blocks_ok = true;
    for (int i = 0; i < kEnvSteps; ++i) {
      const ChannelState next = evolve(task, s, rng);
      advances += next.trailing != s.trailing;
      s = next;
      const std::vector<int> cond = condition_vector(task, s);
      // Exactly good_count ones, forming one cyclic run.
      int ones = 0, starts = 0;
      for (int c = 0; c < 10; ++c) {
        ones += cond[c];
        starts += cond[c] == 1 && cond[(c + 9) % 10] == 0;
      }
      blocks_ok = blocks_ok && ones == task.good_count && starts == 1;
    }
    const double rate = static_cast<double>(advances) / kEnvSteps;
    v.pass = v.pass && std::abs(rate - p) <= kEnvTol && blocks_ok;
    v.detail += "advance(p=" + format_p(p) + ")=" + fmt("%.4f", rate) + (blocks_ok ? "" : " bad block") + " ";
  }
  const TaskSpec task = make_task(10, 0.2);
  const Trajectory t = run_episode(task, kEnvSteps, rng, [](const Observation&, Rng& r) { return r.below(10); });
  const double sr = static_cast<double>(t.successes()) / kEnvSteps;
  v.pass = v.pass && std::abs(sr - 0.2) <= kEnvTol;
  v.detail += "random SR=" + fmt("%.4f", sr);
  return v;
}

Verdict determinism(const fs::path& out) {
  RunConfig cfg;
  cfg.meta.meta_batch_size = 3;
  cfg.meta.inner_updates = 3;
  cfg.meta.episodes_per_update = 4;
  cfg.meta.train_pool_size = 10;
  cfg.meta.validation_tasks = 5;
  cfg.meta.adapt_updates_eval = 3;
  cfg.meta.pretrain_max_updates = 200;
  cfg.total_iterations = 6;
  cfg.eval_every = 3;
  cfg.run_seed = 99;

  std::vector<fs::path> dirs;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = out / "determinism" / ("run" + std::to_string(run));
    fs::remove_all(dir);
    cfg.output_dir = dir;
    cmd_meta_train(cfg);
    cmd_joint_train(cfg);
    cmd_adapt(cfg, dir / "phi_final.txt", 0.9, 4);
    cmd_pretrain(cfg, 0.1);
    cmd_eval_oracle(cfg, {0.1, 0.9}, 10000);
    cmd_render_pattern(cfg, 0.9, 50);
    dirs.push_back(dir);
  }
  int compared = 0, differing = 0;
  // Config echoes record their own output directory, so only data files are compared.
  const auto is_data = [](const fs::path& f) { return f.filename().string().find("_config") == std::string::npos; };
  int second = 0;
  for (const auto& entry : fs::directory_iterator(dirs[1])) second += is_data(entry.path());
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    if (!is_data(entry.path())) continue;
    ++compared;
    if (slurp(entry.path()) != slurp(dirs[1] / entry.path().filename())) ++differing;
  }
  return {differing == 0 && second == compared && compared > 0,
          std::to_string(compared) + " files compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string out = "acceptance_runs";
  std::vector<int> only;
  bool reuse = false;
  app.add_option("--out", out, "directory for run artifacts");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  app.add_flag("--reuse", reuse, "reuse finished training runs found in --out");
  CLI11_PARSE(app, argc, argv);

  const fs::path root(out);
  fs::create_directories(root);
  const auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

  int failures = 0;
  const auto run = [&](int id, const std::string& name, const std::function<Verdict()>& check) {
    if (!wanted(id)) return;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += !v.pass;
    print(id, name, v);
  };

  run(1, "oracle-fidelity", [&] { return oracle_fidelity(root); });
  TrainingRuns runs;
  if (wanted(2) || wanted(3) || wanted(4)) runs = train(root, reuse);
  run(2, "meta-reproduction", [&] { return meta_reproduction(runs); });
  run(3, "joint-learning-gap", [&] { return joint_gap(runs); });
  run(4, "adaptation-asymmetry", [&] { return adaptation_asymmetry(root, runs); });
  run(5, "gradient-check", gradient_check);
  run(6, "fomaml-identity", fomaml_identity);
  run(7, "environment-statistics", environment_statistics);
  run(8, "determinism", [&] { return determinism(root); });

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
