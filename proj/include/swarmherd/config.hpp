#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "swarmherd/harness.hpp"

namespace swarmherd {

/// Raw settings keyed "section.key". Later sources overwrite earlier ones:
/// file, then SWHERD_* environment variables, then command-line flags.
using Settings = std::map<std::string, std::string>;

/// Everything a CLI invocation needs.
struct CliConfig {
  TrainConfig train;
  SweepGrid grid;
  std::string sweep_name = "sweep";
  std::size_t eval_runs = 1000;
  std::size_t eval_max_iters = 1000;
  double epsilon_eval = 0.0;
  std::filesystem::path out_dir = "out";
};

/// INI-style file: [graph], [env], [learner], [train], [sweep] sections of
/// `key = value` lines. Lists are comma separated.
Settings parse_settings(std::istream& in);
Settings read_settings_file(const std::filesystem::path& path);

/// Applies SWHERD_<SECTION>_<KEY>=value entries, e.g. SWHERD_ENV_BETA=0.05.
/// Entries without the prefix are ignored.
void apply_environment(Settings& settings, const std::vector<std::string>& environment);

/// Parses "section.key=value".
void apply_assignment(Settings& settings, std::string_view assignment);

/// Converts and validates. Unknown keys and bad values raise ConfigError
/// naming the key.
CliConfig build_config(const Settings& settings);

std::vector<std::string_view> known_keys();

}  // namespace swarmherd
