#include "metadrl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace metadrl {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

// "lo:hi, lo:hi, ..."
bool parse_intervals(const std::string& text, std::vector<PInterval>& out) {
  std::vector<PInterval> parsed;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos) return false;
    PInterval iv;
    if (!parse_number(trim(item.substr(0, colon)), iv.lo) || !parse_number(trim(item.substr(colon + 1)), iv.hi)) {
      return false;
    }
    parsed.push_back(iv);
  }
  if (parsed.empty()) return false;
  out = std::move(parsed);
  return true;
}

using Setter = std::function<bool(RunConfig&, const std::string&)>;

template <typename T>
Setter number(T MetaConfig::*field) {
  return [field](RunConfig& c, const std::string& v) { return parse_number(v, c.meta.*field); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"meta_batch_size", number(&MetaConfig::meta_batch_size)},
      {"inner_updates", number(&MetaConfig::inner_updates)},
      {"adapt_lr", number(&MetaConfig::adapt_lr)},
      {"meta_lr", number(&MetaConfig::meta_lr)},
      {"joint_lr", number(&MetaConfig::joint_lr)},
      {"gamma", number(&MetaConfig::gamma)},
      {"episode_len", number(&MetaConfig::episode_len)},
      {"episodes_per_update", number(&MetaConfig::episodes_per_update)},
      {"n_channels", number(&MetaConfig::n_channels)},
      {"good_count", number(&MetaConfig::good_count)},
      {"train_pool_size", number(&MetaConfig::train_pool_size)},
      {"validation_tasks", number(&MetaConfig::validation_tasks)},
      {"adapt_updates_eval", number(&MetaConfig::adapt_updates_eval)},
      {"hidden1", number(&MetaConfig::hidden1)},
      {"hidden2", number(&MetaConfig::hidden2)},
      {"pretrain_hidden1", number(&MetaConfig::pretrain_hidden1)},
      {"pretrain_hidden2", number(&MetaConfig::pretrain_hidden2)},
      {"pretrain_lr", number(&MetaConfig::pretrain_lr)},
      {"pretrain_max_updates", number(&MetaConfig::pretrain_max_updates)},
      {"pretrain_window", number(&MetaConfig::pretrain_window)},
      {"pretrain_tolerance", number(&MetaConfig::pretrain_tolerance)},
      {"p_distribution", [](RunConfig& c, const std::string& v) { return parse_intervals(v, c.meta.p_distribution); }},
      {"convention",
       [](RunConfig& c, const std::string& v) {
         if (v == "reward_to_go") c.meta.convention = ReturnConvention::reward_to_go;
         else if (v == "paper_literal") c.meta.convention = ReturnConvention::paper_literal;
         else return false;
         return true;
       }},
      {"inner_optimizer",
       [](RunConfig& c, const std::string& v) {
         if (v == "adam") c.meta.inner_optimizer = InnerOptimizer::adam;
         else if (v == "sgd") c.meta.inner_optimizer = InnerOptimizer::sgd;
         else return false;
         return true;
       }},
      {"output_dir",
       [](RunConfig& c, const std::string& v) {
         c.output_dir = v;
         return !v.empty();
       }},
      {"run_seed", [](RunConfig& c, const std::string& v) { return parse_number(v, c.run_seed); }},
      {"eval_every", [](RunConfig& c, const std::string& v) { return parse_number(v, c.eval_every); }},
      {"total_iterations", [](RunConfig& c, const std::string& v) { return parse_number(v, c.total_iterations); }},
  };
  return table;
}

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void RunConfig::validate() const {
  meta.validate();
  if (eval_every < 1) throw std::invalid_argument("invalid configuration: eval_every must be >= 1");
  if (total_iterations < 1) throw std::invalid_argument("invalid configuration: total_iterations must be >= 1");
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected `key = value`");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + ": unknown key '" + key + "'");
    if (!it->second(cfg, value)) throw ConfigError(where + ": malformed value '" + value + "' for key '" + key + "'");
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string());
  return parse_config(in, path.string());
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  const MetaConfig& m = cfg.meta;
  out << "meta_batch_size = " << m.meta_batch_size << '\n'
      << "inner_updates = " << m.inner_updates << '\n'
      << "adapt_lr = " << shortest(m.adapt_lr) << '\n'
      << "meta_lr = " << shortest(m.meta_lr) << '\n'
      << "joint_lr = " << shortest(m.joint_lr) << '\n'
      << "gamma = " << shortest(m.gamma) << '\n'
      << "episode_len = " << m.episode_len << '\n'
      << "episodes_per_update = " << m.episodes_per_update << '\n'
      << "n_channels = " << m.n_channels << '\n'
      << "good_count = " << m.good_count << '\n'
      << "p_distribution = ";
  for (std::size_t i = 0; i < m.p_distribution.size(); ++i) {
    out << (i ? ", " : "") << shortest(m.p_distribution[i].lo) << ':' << shortest(m.p_distribution[i].hi);
  }
  out << '\n'
      << "train_pool_size = " << m.train_pool_size << '\n'
      << "validation_tasks = " << m.validation_tasks << '\n'
      << "adapt_updates_eval = " << m.adapt_updates_eval << '\n'
      << "convention = " << (m.convention == ReturnConvention::reward_to_go ? "reward_to_go" : "paper_literal") << '\n'
      << "inner_optimizer = " << (m.inner_optimizer == InnerOptimizer::adam ? "adam" : "sgd") << '\n'
      << "hidden1 = " << m.hidden1 << '\n'
      << "hidden2 = " << m.hidden2 << '\n'
      << "pretrain_hidden1 = " << m.pretrain_hidden1 << '\n'
      << "pretrain_hidden2 = " << m.pretrain_hidden2 << '\n'
      << "pretrain_lr = " << shortest(m.pretrain_lr) << '\n'
      << "pretrain_max_updates = " << m.pretrain_max_updates << '\n'
      << "pretrain_window = " << m.pretrain_window << '\n'
      << "pretrain_tolerance = " << shortest(m.pretrain_tolerance) << '\n'
      << "output_dir = " << cfg.output_dir.string() << '\n'
      << "run_seed = " << cfg.run_seed << '\n'
      << "eval_every = " << cfg.eval_every << '\n'
      << "total_iterations = " << cfg.total_iterations << '\n';
}

}  // namespace metadrl
