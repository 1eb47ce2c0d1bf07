#include "swarmherd/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace swarmherd {

namespace {

constexpr std::array<std::string_view, 30> kKnownKeys{
    "graph.rows",          "graph.cols",
    "env.agents",          "env.beta",
    "env.intervals",       "env.mu",
    "env.initial",         "env.target",
    "env.max_iterations",  "env.backend",
    "learner.algorithm",   "learner.alpha",
    "learner.gamma",       "learner.epsilon",
    "learner.epsilon_decay", "learner.epsilon_final",
    "train.episodes",      "train.max_iters",
    "train.seed",          "train.out_dir",
    "sweep.name",          "sweep.algorithm",
    "sweep.agents",        "sweep.test_agents",
    "sweep.beta",          "sweep.mu",
    "sweep.intervals",     "sweep.runs",
    "sweep.eval_max_iters", "sweep.epsilon_eval",
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& key, const std::string& raw) {
  std::vector<std::string> items;
  std::string_view rest = raw;
  while (true) {
    const auto comma = rest.find(',');
    std::string item = trim(rest.substr(0, comma));
    if (item.empty()) {
      if (comma == std::string_view::npos && items.empty()) break;
      throw ConfigError(key + ": empty list element");
    }
    items.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return items;
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(key + ": cannot parse '" + raw + "' as a number");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  std::string t = trim(raw);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": cannot parse '" + raw + "' as a boolean");
}

template <typename T>
std::vector<T> parse_number_list(const std::string& key, const std::string& raw) {
  std::vector<T> out;
  for (const std::string& item : split_list(key, raw)) out.push_back(parse_number<T>(key, item));
  return out;
}

Algorithm parse_algorithm_or_throw(const std::string& key, const std::string& raw) {
  const auto a = parse_algorithm(trim(raw));
  if (!a) throw ConfigError(key + ": unknown algorithm '" + raw + "'");
  return *a;
}

template <typename T>
std::vector<T> require_nonempty(const std::string& key, std::vector<T> v) {
  if (v.empty()) throw ConfigError(key + ": sweep list is empty");
  return v;
}

}  // namespace

std::vector<std::string_view> known_keys() {
  return {kKnownKeys.begin(), kKnownKeys.end()};
}

Settings parse_settings(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  Settings out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(section + ": key outside of a section");
    }
    for (const auto& [key, value] : body) {
      out[section + "." + key] = value.get_value<std::string>();
    }
  }
  return out;
}

Settings read_settings_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  return parse_settings(in);
}

void apply_environment(Settings& settings, const std::vector<std::string>& environment) {
  constexpr std::string_view kPrefix = "SWHERD_";
  for (const std::string& entry : environment) {
    if (entry.rfind(kPrefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string name = entry.substr(kPrefix.size(), eq - kPrefix.size());
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    const auto underscore = name.find('_');
    if (underscore == std::string::npos) {
      throw ConfigError(entry.substr(0, eq) + ": expected SWHERD_<SECTION>_<KEY>");
    }
    name[underscore] = '.';
    settings[name] = entry.substr(eq + 1);
  }
}

void apply_assignment(Settings& settings, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || assignment.substr(0, eq).find('.') == std::string_view::npos) {
    throw ConfigError(std::string(assignment) + ": expected section.key=value");
  }
  settings[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

CliConfig build_config(const Settings& settings) {
  for (const auto& [key, value] : settings) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
      throw ConfigError(key + ": unknown configuration key");
    }
  }
  CliConfig cfg;
  TrainConfig& t = cfg.train;
  EnvConfig& env = t.env;
  LearnerConfig& lr = t.learner;

  auto get = [&](const char* key) -> const std::string* {
    const auto it = settings.find(key);
    return it == settings.end() ? nullptr : &it->second;
  };
  auto with = [&](const char* key, auto&& assign) {
    if (const std::string* raw = get(key)) assign(std::string(key), *raw);
  };

  with("graph.rows", [&](auto k, auto& v) { env.rows = parse_number<std::size_t>(k, v); });
  with("graph.cols", [&](auto k, auto& v) { env.cols = parse_number<std::size_t>(k, v); });
  with("env.agents", [&](auto k, auto& v) { env.agents = parse_number<std::int64_t>(k, v); });
  with("env.beta", [&](auto k, auto& v) { env.beta = parse_number<double>(k, v); });
  with("env.intervals", [&](auto k, auto& v) { env.intervals = parse_number<int>(k, v); });
  with("env.mu", [&](auto k, auto& v) { env.mu = parse_number<double>(k, v); });
  with("env.initial", [&](auto k, auto& v) { env.initial_dist = parse_number_list<double>(k, v); });
  with("env.target", [&](auto k, auto& v) { env.target_dist = parse_number_list<double>(k, v); });
  with("env.max_iterations",
       [&](auto k, auto& v) { env.max_iterations = parse_number<std::size_t>(k, v); });
  with("env.backend", [&](auto k, auto& v) {
    const auto b = parse_backend(trim(v));
    if (!b) throw ConfigError(k + ": unknown backend '" + v + "'");
    env.backend = *b;
  });

  with("learner.algorithm",
       [&](auto k, auto& v) { lr.algorithm = parse_algorithm_or_throw(k, v); });
  with("learner.alpha", [&](auto k, auto& v) { lr.alpha = parse_number<double>(k, v); });
  with("learner.gamma", [&](auto k, auto& v) { lr.gamma = parse_number<double>(k, v); });
  with("learner.epsilon", [&](auto k, auto& v) { lr.epsilon = parse_number<double>(k, v); });
  with("learner.epsilon_decay", [&](auto k, auto& v) { lr.epsilon_decay = parse_bool(k, v); });
  with("learner.epsilon_final",
       [&](auto k, auto& v) { lr.epsilon_final = parse_number<double>(k, v); });

  with("train.episodes", [&](auto k, auto& v) { t.episodes = parse_number<std::size_t>(k, v); });
  with("train.max_iters",
       [&](auto k, auto& v) { t.max_iters_per_episode = parse_number<std::size_t>(k, v); });
  with("train.seed", [&](auto k, auto& v) { t.seed = parse_number<std::uint64_t>(k, v); });
  with("train.out_dir", [&](auto, auto& v) { cfg.out_dir = trim(v); });

  with("sweep.name", [&](auto k, auto& v) {
    cfg.sweep_name = trim(v);
    if (cfg.sweep_name.empty() ||
        cfg.sweep_name.find_first_of("/\\") != std::string::npos) {
      throw ConfigError(k + ": must be a plain file-name stem");
    }
  });
  SweepGrid& g = cfg.grid;
  with("sweep.algorithm", [&](auto k, auto& v) {
    for (const auto& item : require_nonempty(k, split_list(k, v))) {
      g.algorithms.push_back(parse_algorithm_or_throw(k, item));
    }
  });
  with("sweep.agents", [&](auto k, auto& v) {
    g.train_agents = require_nonempty(k, parse_number_list<std::int64_t>(k, v));
  });
  with("sweep.test_agents", [&](auto k, auto& v) {
    g.test_agents = require_nonempty(k, parse_number_list<std::int64_t>(k, v));
  });
  with("sweep.beta",
       [&](auto k, auto& v) { g.betas = require_nonempty(k, parse_number_list<double>(k, v)); });
  with("sweep.mu",
       [&](auto k, auto& v) { g.mus = require_nonempty(k, parse_number_list<double>(k, v)); });
  with("sweep.intervals", [&](auto k, auto& v) {
    g.intervals = require_nonempty(k, parse_number_list<int>(k, v));
  });
  with("sweep.runs", [&](auto k, auto& v) { cfg.eval_runs = parse_number<std::size_t>(k, v); });
  with("sweep.eval_max_iters",
       [&](auto k, auto& v) { cfg.eval_max_iters = parse_number<std::size_t>(k, v); });
  with("sweep.epsilon_eval",
       [&](auto k, auto& v) { cfg.epsilon_eval = parse_number<double>(k, v); });

  if (cfg.eval_runs < 1) throw ConfigError("sweep.runs: must be >= 1");
  if (cfg.eval_max_iters < 1) throw ConfigError("sweep.eval_max_iters: must be >= 1");
  if (!(cfg.epsilon_eval >= 0.0 && cfg.epsilon_eval <= 1.0)) {
    throw ConfigError("sweep.epsilon_eval: must lie in [0, 1]");
  }
  for (std::int64_t n : g.test_agents) {
    if (n < 1) throw ConfigError("sweep.test_agents: need at least one follower");
  }
  t.validate();
  g.base = t;
  return cfg;
}

}  // namespace swarmherd
