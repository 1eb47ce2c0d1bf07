// swarmherd: train, evaluate, simulate and sweep leader herding policies.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 configuration error, 3 I/O
// error, 4 incompatible or corrupt Q-table.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "swarmherd/config.hpp"
#include "swarmherd/environment.hpp"
#include "swarmherd/format.hpp"
#include "swarmherd/harness.hpp"
#include "swarmherd/learner.hpp"

extern char** environ;

namespace fs = std::filesystem;
using namespace swarmherd;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kCompat = 4 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Options shared by all subcommands that read a config file.
struct CommonOptions {
  std::string config_path;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> backend;
  unsigned jobs = 1;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool config_required = true) {
  auto* c = cmd->add_option("--config", o.config_path, "Configuration file");
  if (config_required) c->required();
  cmd->add_option("--set", o.assignments, "Override a setting: section.key=value");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--out-dir", o.out_dir, "Output directory");
  cmd->add_option("--backend", o.backend, "Follower model: dtmc or mean-field");
  cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

std::vector<std::string> environment_entries() {
  std::vector<std::string> out;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) out.emplace_back(*e);
  return out;
}

// file < SWHERD_* environment < command-line flags.
CliConfig load_config(const CommonOptions& o) {
  Settings s = o.config_path.empty() ? Settings{} : read_settings_file(o.config_path);
  apply_environment(s, environment_entries());
  for (const auto& a : o.assignments) apply_assignment(s, a);
  if (o.seed) s["train.seed"] = std::to_string(*o.seed);
  if (o.out_dir) s["train.out_dir"] = *o.out_dir;
  if (o.backend) s["env.backend"] = *o.backend;
  return build_config(s);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() +
                  (ec ? ": " + ec.message() : std::string()));
  }
}

// Writes through a temporary file and renames it into place.
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body,
                  bool binary = false) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    body(out);
    out.flush();
    if (!out) throw IoError("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

nlohmann::json metadata_json(const QTable& q, const TrainConfig& t) {
  nlohmann::json j;
  j["format"] = {{"magic", "SWHQ"},
                 {"version", kQTableVersion},
                 {"M", q.vertices()},
                 {"D", q.intervals()},
                 {"action_count", q.action_count()},
                 {"rows", q.grid().rows},
                 {"cols", q.grid().cols}};
  j["training"] = {{"algorithm", std::string(to_string(t.learner.algorithm))},
                   {"alpha", t.learner.alpha},
                   {"gamma", t.learner.gamma},
                   {"epsilon", t.learner.epsilon},
                   {"epsilon_decay", t.learner.epsilon_decay},
                   {"epsilon_final", t.learner.epsilon_final},
                   {"beta", t.env.beta},
                   {"mu", t.env.mu},
                   {"N", t.env.agents},
                   {"backend", std::string(to_string(t.env.backend))},
                   {"initial", t.env.initial_dist},
                   {"target", t.env.target_dist},
                   {"episodes", t.episodes},
                   {"max_iters", t.max_iters_per_episode},
                   {"seed", t.seed}};
  j["created"] = utc_timestamp();
  return j;
}

QTable load_table(const std::string& path) {
  if (!fs::exists(path)) throw IoError("Q-table file " + path + " does not exist");
  try {
    return load_qtable(path);
  } catch (const std::ios_base::failure& e) {
    throw IoError(e.what());
  }
}

// ---------------------------------------------------------------- train

int run_train(const CommonOptions& o) {
  const CliConfig cfg = load_config(o);
  ensure_dir(cfg.out_dir);
  const TrainResult result = train(cfg.train);
  write_atomic(cfg.out_dir / "qtable.bin", [&](std::ostream& out) { write_qtable(out, result.table); },
               true);
  write_atomic(cfg.out_dir / "qtable.meta.json", [&](std::ostream& out) {
    out << metadata_json(result.table, cfg.train).dump(2) << '\n';
  });
  write_atomic(cfg.out_dir / "train_log.csv",
               [&](std::ostream& out) { write_train_log(out, result.log); });
  std::size_t steps = 0;
  for (const auto& e : result.log) steps += e.length;
  std::cout << "trained " << to_string(cfg.train.learner.algorithm) << " for "
            << result.log.size() << " episodes (" << steps << " steps); wrote "
            << (cfg.out_dir / "qtable.bin").string() << '\n';
  return kOk;
}

// ------------------------------------------------------------- evaluate

struct EvalFlags {
  std::string table;
  std::size_t runs = 1000;
  std::size_t max_iters = 1000;
  std::optional<std::int64_t> n_test;
  double epsilon_eval = 0.0;
};

int run_evaluate(const CommonOptions& o, const EvalFlags& f) {
  const CliConfig cfg = load_config(o);
  const QTable q = load_table(f.table);
  EnvConfig env = cfg.train.env;
  if (f.n_test) env.agents = *f.n_test;
  env.validate();
  if (!q.compatible_with(env)) {
    throw CompatibilityError("Q-table " + f.table + " does not match the configured environment");
  }
  EvalOptions eo;
  eo.runs = f.runs;
  eo.max_iters = f.max_iters;
  eo.epsilon = f.epsilon_eval;
  eo.seed = cfg.train.seed;
  eo.jobs = o.jobs;
  const EvalResult ev = evaluate(q, env, eo);

  SweepRow row;
  row.algorithm = cfg.train.learner.algorithm;
  row.n_train = cfg.train.env.agents;
  row.n_test = env.agents;
  row.beta = env.beta;
  row.mu = env.mu;
  row.intervals = env.intervals;
  row.summary = ev.summary;

  ensure_dir(cfg.out_dir);
  write_atomic(cfg.out_dir / "eval_records.csv", [&](std::ostream& out) {
    write_records_header(out);
    for (const auto& r : ev.records) write_record(out, 0, r);
  });
  write_atomic(cfg.out_dir / "eval_summary.csv", [&](std::ostream& out) {
    write_aggregate_header(out);
    write_aggregate(out, row);
  });
  std::cout << "runs=" << ev.summary.runs << " mean_iters=" << format_double(ev.summary.mean_iterations)
            << " std_iters=" << format_double(ev.summary.std_iterations)
            << " conv_rate=" << format_double(ev.summary.convergence_rate) << '\n';
  return kOk;
}

// ------------------------------------------------------------- simulate

struct SimFlags {
  std::string table;
  std::string policy = "greedy";
  double epsilon_eval = 0.0;
  bool frames = false;
  std::optional<std::size_t> max_iters;
};

void write_frame(std::ostream& out, std::size_t k, const Environment& env,
                 std::optional<LeaderAction> action) {
  const EnvConfig& c = env.config();
  const bool counts = c.backend == Backend::Dtmc;
  out << "k=" << k << " leader=" << env.leader().vertex
      << " repelling=" << (env.leader().repelling ? 1 : 0)
      << " action=" << (action ? to_string(*action) : std::string_view("none"))
      << " mse=" << format_double(env.current_mse()) << '\n';
  std::string rule = "+";
  for (std::size_t col = 0; col < c.cols; ++col) rule += "----------+";
  out << rule << '\n';
  for (std::size_t r = 0; r < c.rows; ++r) {
    out << '|';
    for (std::size_t col = 0; col < c.cols; ++col) {
      const VertexId v = r * c.cols + col;
      char marker = ' ';
      if (env.leader().vertex == v) marker = env.leader().repelling ? 'S' : 'L';
      std::ostringstream cell;
      if (counts) {
        cell << env.counts().counts[v];
      } else {
        cell << std::fixed << std::setprecision(4) << env.distribution()[v];
      }
      out << ' ' << marker << std::setw(7) << cell.str() << " |";
    }
    out << '\n' << rule << '\n';
  }
  out << "vertex current target\n";
  for (std::size_t v = 0; v < env.graph().vertex_count(); ++v) {
    out << v << ' ' << format_double(env.distribution()[v]) << ' '
        << format_double(c.target_dist[v]) << '\n';
  }
  out << '\n';
}

int run_simulate(const CommonOptions& o, const SimFlags& f) {
  const CliConfig cfg = load_config(o);
  Environment env(cfg.train.env);
  std::optional<QTable> q;
  if (f.policy == "greedy") {
    if (f.table.empty()) throw ConfigError("--table: required unless --policy random");
    q = load_table(f.table);
    if (!q->compatible_with(cfg.train.env)) {
      throw CompatibilityError("Q-table " + f.table + " does not match the configured environment");
    }
  } else if (f.policy != "random") {
    throw ConfigError("--policy: expected 'greedy' or 'random'");
  }
  const std::size_t cap = f.max_iters.value_or(cfg.train.env.max_iterations);

  Rng rng(cfg.train.seed);
  env.reset(rng);
  std::ostringstream trace;
  std::ostringstream frames;
  TraceWriter writer(trace, env);
  bool terminal = env.at_terminal();
  writer.row(0, env, std::nullopt, env.current_reward(), env.current_mse(), terminal);
  if (f.frames) write_frame(frames, 0, env, std::nullopt);
  std::size_t k = 0;
  while (!terminal && k < cap) {
    const auto& valid = env.actions_here();
    LeaderAction a{};
    if (q) {
      a = select_action(*q, env.observe_index(), valid, f.epsilon_eval, rng);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
      a = valid[pick(rng)];
    }
    const StepResult step = env.step(a, rng);
    ++k;
    terminal = step.terminal;
    writer.row(k, env, a, step.reward, step.mse, terminal);
    if (f.frames) write_frame(frames, k, env, a);
  }
  ensure_dir(cfg.out_dir);
  write_atomic(cfg.out_dir / "trace.csv", [&](std::ostream& out) { out << trace.str(); });
  if (f.frames) {
    write_atomic(cfg.out_dir / "frames.txt", [&](std::ostream& out) { out << frames.str(); });
  }
  std::cout << "iterations=" << k << " terminal=" << (terminal ? 1 : 0)
            << " final_mse=" << format_double(env.current_mse()) << '\n';
  return kOk;
}

// ---------------------------------------------------------------- sweep

std::string row_key(const SweepRow& r) {
  std::ostringstream os;
  write_aggregate(os, r);
  // algorithm through D; the statistics that follow are not part of the key.
  std::string line = os.str();
  std::size_t pos = 0;
  for (int commas = 0; commas < 6 && pos != std::string::npos; ++commas) {
    pos = line.find(',', pos + 1);
  }
  return line.substr(0, pos);
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  if (!in) return lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

int run_sweep(const CommonOptions& o, bool resume) {
  const CliConfig cfg = load_config(o);
  const std::vector<SweepCell> cells = expand_grid(cfg.grid, cfg.train.seed);
  if (cells.empty()) throw ConfigError("sweep: grid is empty");
  for (const SweepCell& c : cells) {
    c.train.validate();
    for (std::int64_t n : c.test_agents) {
      EnvConfig e = c.train.env;
      e.agents = n;
      e.validate();
    }
  }

  // Row layout: cell-major, then test population. Row index is the cell id
  // used in the per-run records.
  std::vector<std::size_t> first_row(cells.size());
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    first_row[i] = keys.size();
    for (std::int64_t n : cells[i].test_agents) {
      SweepRow r;
      r.algorithm = cells[i].train.learner.algorithm;
      r.n_train = cells[i].train.env.agents;
      r.n_test = n;
      r.beta = cells[i].train.env.beta;
      r.mu = cells[i].train.env.mu;
      r.intervals = cells[i].train.env.intervals;
      keys.push_back(row_key(r));
    }
  }

  ensure_dir(cfg.out_dir);
  const fs::path agg_path = cfg.out_dir / ("sweep_" + cfg.sweep_name + ".csv");
  const fs::path runs_path = cfg.out_dir / ("sweep_" + cfg.sweep_name + "_runs.csv");

  std::vector<std::optional<std::string>> rows(keys.size());
  std::map<std::size_t, std::vector<std::string>> run_lines;
  if (resume) {
    const auto old_rows = read_lines(agg_path);
    for (std::size_t i = 1; i < old_rows.size(); ++i) {
      for (std::size_t r = 0; r < keys.size(); ++r) {
        if (!rows[r] && old_rows[i].rfind(keys[r] + ",", 0) == 0) {
          rows[r] = old_rows[i];
          break;
        }
      }
    }
    const auto old_runs = read_lines(runs_path);
    for (std::size_t i = 1; i < old_runs.size(); ++i) {
      const auto comma = old_runs[i].find(',');
      std::size_t id = 0;
      try {
        id = std::stoul(old_runs[i].substr(0, comma));
      } catch (const std::exception&) {
        continue;
      }
      run_lines[id].push_back(old_runs[i]);
    }
  }
  auto cell_done = [&](std::size_t c) {
    for (std::size_t t = 0; t < cells[c].test_agents.size(); ++t) {
      const std::size_t r = first_row[c] + t;
      if (!rows[r] || run_lines[r].size() != cfg.eval_runs) return false;
    }
    return true;
  };

  SweepOptions so;
  so.runs = cfg.eval_runs;
  so.eval_max_iters = cfg.eval_max_iters;
  so.epsilon_eval = cfg.epsilon_eval;
  so.master_seed = cfg.train.seed;
  so.jobs = o.jobs;
  so.skip = cell_done;
  std::size_t skipped = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) skipped += cell_done(c) ? 1 : 0;

  std::vector<CellResult> fresh;
  if (skipped < cells.size()) fresh = sweep(cells, so);
  for (const CellResult& res : fresh) {
    for (std::size_t t = 0; t < res.rows.size(); ++t) {
      const std::size_t r = first_row[res.cell] + t;
      std::ostringstream line;
      write_aggregate(line, res.rows[t]);
      std::string text = line.str();
      text.pop_back();
      rows[r] = text;
      auto& lines = run_lines[r];
      lines.clear();
      for (const RunRecord& rec : res.records[t]) {
        std::ostringstream rl;
        write_record(rl, r, rec);
        std::string s = rl.str();
        s.pop_back();
        lines.push_back(s);
      }
    }
  }

  write_atomic(agg_path, [&](std::ostream& out) {
    write_aggregate_header(out);
    for (const auto& r : rows) out << *r << '\n';
  });
  write_atomic(runs_path, [&](std::ostream& out) {
    write_records_header(out);
    for (std::size_t r = 0; r < keys.size(); ++r) {
      for (const auto& l : run_lines[r]) out << l << '\n';
    }
  });
  std::cout << "sweep '" << cfg.sweep_name << "': " << cells.size() << " cells ("
            << skipped << " resumed), " << keys.size() << " rows -> " << agg_path.string() << '\n';
  return kOk;
}

// -------------------------------------------------------------- inspect

int run_inspect(const std::string& path) {
  const QTable q = load_table(path);
  std::size_t touched_states = 0;
  std::size_t nonzero = 0;
  double lo = 0.0;
  double hi = 0.0;
  double sum = 0.0;
  bool first = true;
  for (std::size_t s = 0; s < q.state_count(); ++s) {
    bool touched = false;
    for (std::size_t a = 0; a < q.action_count(); ++a) {
      const double v = q.value(s, a);
      if (first) {
        lo = hi = v;
        first = false;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
      if (v != 0.0) {
        ++nonzero;
        touched = true;
      }
    }
    touched_states += touched ? 1 : 0;
  }
  const auto entries = q.values().size();
  std::cout << "magic SWHQ\n"
            << "version " << kQTableVersion << '\n'
            << "M " << q.vertices() << '\n'
            << "D " << q.intervals() << '\n'
            << "actions " << q.action_count() << '\n'
            << "grid " << q.grid().rows << 'x' << q.grid().cols << '\n'
            << "states " << q.state_count() << '\n'
            << "entries " << entries << '\n'
            << "nonzero_entries " << nonzero << '\n'
            << "visited_states " << touched_states << '\n'
            << "min " << format_double(lo) << '\n'
            << "max " << format_double(hi) << '\n'
            << "mean " << format_double(entries ? sum / static_cast<double>(entries) : 0.0) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leader-based swarm herding with tabular SARSA / Q-Learning"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train a leader policy");
  add_common(train_cmd, train_opts);

  CommonOptions eval_opts;
  EvalFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a trained Q-table");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--table", eval_flags.table, "Q-table file")->required();
  eval_cmd->add_option("--runs", eval_flags.runs, "Evaluation runs")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--max-iters", eval_flags.max_iters, "Iteration cap per run")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--n-test", eval_flags.n_test, "Follower count to test at");
  eval_cmd->add_option("--epsilon-eval", eval_flags.epsilon_eval, "Exploration during evaluation")
      ->check(CLI::Range(0.0, 1.0));

  CommonOptions sim_opts;
  SimFlags sim_flags;
  auto* sim_cmd = app.add_subcommand("simulate", "Run one episode and write its trace");
  add_common(sim_cmd, sim_opts);
  sim_cmd->add_option("--table", sim_flags.table, "Q-table file (greedy policy)");
  sim_cmd->add_option("--policy", sim_flags.policy, "greedy or random");
  sim_cmd->add_option("--epsilon-eval", sim_flags.epsilon_eval, "Exploration for the greedy policy")
      ->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--max-iters", sim_flags.max_iters, "Iteration cap");
  sim_cmd->add_flag("--frames", sim_flags.frames, "Also write a plain-text frame dump");

  CommonOptions sweep_opts;
  bool resume = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train and evaluate a parameter grid");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_flag("--resume", resume, "Keep finished cells from an earlier run");

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print a Q-table header and statistics");
  inspect_cmd->add_option("table", inspect_path, "Q-table file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*train_cmd) return run_train(train_opts);
    if (*eval_cmd) return run_evaluate(eval_opts, eval_flags);
    if (*sim_cmd) return run_simulate(sim_opts, sim_flags);
    if (*sweep_cmd) return run_sweep(sweep_opts, resume);
    if (*inspect_cmd) return run_inspect(inspect_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const QTableLoadError& e) {
    std::cerr << "bad Q-table: " << e.what() << '\n';
    return kCompat;
  } catch (const CompatibilityError& e) {
    std::cerr << "incompatible Q-table: " << e.what() << '\n';
    return kCompat;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
