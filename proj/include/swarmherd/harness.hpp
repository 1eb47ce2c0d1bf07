#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmherd/environment.hpp"
#include "swarmherd/learner.hpp"

namespace swarmherd {

class CompatibilityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
  EnvConfig env;
  LearnerConfig learner;
  std::size_t episodes = 5000;
  std::size_t max_iters_per_episode = 5000;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpisodeLog {
  std::size_t length = 0;
  double cumulative_reward = 0.0;
};

struct TrainResult {
  QTable table;
  std::vector<EpisodeLog> log;
};

/// Runs the episodic TD training loop. Deterministic for a fixed seed.
TrainResult train(const TrainConfig& cfg);

struct RunRecord {
  std::size_t run = 0;
  bool converged = false;
  /// Iterations until the terminal test passed, or the cap if it never did.
  std::size_t iterations = 0;
  double final_mse = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> final_distribution;
};

struct Aggregate {
  double mean_iterations = 0.0;
  /// Population standard deviation.
  double std_iterations = 0.0;
  double convergence_rate = 0.0;
  std::size_t runs = 0;
};

Aggregate aggregate(std::span<const RunRecord> records);

struct EvalResult {
  std::vector<RunRecord> records;
  Aggregate summary;
};

struct EvalOptions {
  std::size_t runs = 1000;
  std::size_t max_iters = 1000;
  double epsilon = 0.0;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

/// Runs independent episodes with a frozen table. Run i uses the stream
/// derive_seed(opts.seed, {i}), so results do not depend on `jobs`.
EvalResult evaluate(const QTable& q, const EnvConfig& env, const EvalOptions& opts);

/// One training configuration plus the population sizes to test it at.
struct SweepCell {
  TrainConfig train;
  std::vector<std::int64_t> test_agents;
};

struct SweepRow {
  Algorithm algorithm = Algorithm::QLearning;
  std::int64_t n_train = 0;
  std::int64_t n_test = 0;
  double beta = 0.0;
  double mu = 0.0;
  int intervals = 0;
  Aggregate summary;
};

struct CellResult {
  std::size_t cell = 0;
  std::vector<SweepRow> rows;
  /// Per-run records, one vector per entry of test_agents.
  std::vector<std::vector<RunRecord>> records;
};

struct SweepOptions {
  std::size_t runs = 1000;
  std::size_t eval_max_iters = 1000;
  double epsilon_eval = 0.0;
  std::uint64_t master_seed = 1;
  unsigned jobs = 1;
  /// Cells for which this returns true are not run.
  std::function<bool(std::size_t)> skip;
};

/// Evaluation stream for test `test` of cell `cell`.
std::uint64_t sweep_eval_seed(std::uint64_t master, std::size_t cell, std::size_t test);

/// Trains and evaluates every cell. Results come back ordered by cell index
/// whatever order they finished in. Cell training seeds are taken from
/// cell.train.seed.
std::vector<CellResult> sweep(std::span<const SweepCell> cells, const SweepOptions& opts);

/// Cartesian product used by the sweep command. Lists that are empty fall
/// back to the corresponding value in `base`.
struct SweepGrid {
  TrainConfig base;
  std::vector<Algorithm> algorithms;
  std::vector<std::int64_t> train_agents;
  std::vector<std::int64_t> test_agents;
  std::vector<double> betas;
  std::vector<double> mus;
  std::vector<int> intervals;
};

/// Expands the grid in the order algorithm, N, beta, mu, D (D fastest) and
/// assigns cell i the training seed derive_seed(master, {i}).
std::vector<SweepCell> expand_grid(const SweepGrid& grid, std::uint64_t master_seed);

// CSV emitters. Numbers are written in shortest round-trip form.
void write_records_header(std::ostream& out);
void write_record(std::ostream& out, std::size_t cell, const RunRecord& r);
void write_aggregate_header(std::ostream& out);
void write_aggregate(std::ostream& out, const SweepRow& row);
void write_train_log(std::ostream& out, std::span<const EpisodeLog> log);

}  // namespace swarmherd
