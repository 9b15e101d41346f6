#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "metadrl/meta_loop.hpp"

namespace metadrl {

/// Everything a harness run needs: the training hyperparameters plus
/// output location, root seed and evaluation schedule.
struct RunConfig {
  MetaConfig meta;
  std::filesystem::path output_dir = "out";
  std::uint64_t run_seed = 1;
  int eval_every = 100;
  int total_iterations = 2000;

  void validate() const;
};

/// Error raised for unreadable or invalid configuration files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses `key = value` lines; `#` starts a comment. Keys that are absent
/// keep their defaults. `source` names the input in error messages.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Writes every key in a form parse_config accepts.
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace metadrl
