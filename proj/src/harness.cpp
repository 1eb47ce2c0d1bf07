#include "swarmherd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "swarmherd/format.hpp"

namespace swarmherd {

void TrainConfig::validate() const {
  env.validate();
  learner.validate();
  if (episodes < 1) throw ConfigError("train.episodes: must be >= 1");
  if (max_iters_per_episode < 1) throw ConfigError("train.max_iters: must be >= 1");
}

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception is
// rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1u), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

double scheduled_epsilon(const LearnerConfig& cfg, std::size_t episode, std::size_t episodes) {
  if (!cfg.epsilon_decay || episodes <= 1) return cfg.epsilon;
  const double t = static_cast<double>(episode) / static_cast<double>(episodes - 1);
  return cfg.epsilon + t * (cfg.epsilon_final - cfg.epsilon);
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
  cfg.validate();
  Environment env(cfg.env);
  TrainResult out{QTable(cfg.env.vertices(), cfg.env.intervals,
                         GridShape{cfg.env.rows, cfg.env.cols}),
                  {}};
  QTable& q = out.table;
  const LearnerConfig& lc = cfg.learner;
  out.log.reserve(cfg.episodes);
  Rng rng(cfg.seed);

  for (std::size_t episode = 0; episode < cfg.episodes; ++episode) {
    const double epsilon = scheduled_epsilon(lc, episode, cfg.episodes);
    env.reset(rng);
    EpisodeLog log;
    if (env.at_terminal()) {
      out.log.push_back(log);
      continue;
    }
    std::size_t state = env.observe_index();
    LeaderAction action = select_action(q, state, env.actions_here(), epsilon, rng);
    for (std::size_t k = 0; k < cfg.max_iters_per_episode; ++k) {
      const StepResult step = env.step(action, rng);
      ++log.length;
      log.cumulative_reward += step.reward;
      if (step.terminal) {
        update_terminal(q, state, action, step.reward, lc);
        break;
      }
      const std::size_t next_state = env.observe_index();
      const auto& next_valid = env.actions_here();
      LeaderAction next_action{};
      if (lc.algorithm == Algorithm::Sarsa) {
        next_action = select_action(q, next_state, next_valid, epsilon, rng);
        update_sarsa(q, state, action, step.reward, next_state, next_action, lc);
      } else {
        update_qlearning(q, state, action, step.reward, next_state, next_valid, lc);
        next_action = select_action(q, next_state, next_valid, epsilon, rng);
      }
      state = next_state;
      action = next_action;
    }
    out.log.push_back(log);
  }
  return out;
}

Aggregate aggregate(std::span<const RunRecord> records) {
  Aggregate a;
  a.runs = records.size();
  if (records.empty()) return a;
  double sum = 0.0;
  std::size_t converged = 0;
  for (const RunRecord& r : records) {
    sum += static_cast<double>(r.iterations);
    if (r.converged) ++converged;
  }
  const auto n = static_cast<double>(records.size());
  a.mean_iterations = sum / n;
  double sq = 0.0;
  for (const RunRecord& r : records) {
    const double d = static_cast<double>(r.iterations) - a.mean_iterations;
    sq += d * d;
  }
  a.std_iterations = std::sqrt(sq / n);
  a.convergence_rate = static_cast<double>(converged) / n;
  return a;
}

EvalResult evaluate(const QTable& q, const EnvConfig& env_cfg, const EvalOptions& opts) {
  env_cfg.validate();
  if (!q.compatible_with(env_cfg)) {
    throw CompatibilityError("Q-table (" + std::to_string(q.grid().rows) + "x" +
                             std::to_string(q.grid().cols) + ", D=" +
                             std::to_string(q.intervals()) + ") does not match environment (" +
                             std::to_string(env_cfg.rows) + "x" + std::to_string(env_cfg.cols) +
                             ", D=" + std::to_string(env_cfg.intervals) + ")");
  }
  EvalResult out;
  out.records.resize(opts.runs);
  parallel_for(opts.runs, opts.jobs, [&](std::size_t run) {
    Environment env(env_cfg);
    RunRecord rec;
    rec.run = run;
    rec.seed = derive_seed(opts.seed, {run});
    Rng rng(rec.seed);
    env.reset(rng);
    rec.converged = env.at_terminal();
    while (!rec.converged && rec.iterations < opts.max_iters) {
      const LeaderAction a =
          select_action(q, env.observe_index(), env.actions_here(), opts.epsilon, rng);
      const StepResult step = env.step(a, rng);
      ++rec.iterations;
      rec.converged = step.terminal;
    }
    rec.final_mse = env.current_mse();
    rec.final_distribution.assign(env.distribution().begin(), env.distribution().end());
    out.records[run] = std::move(rec);
  });
  out.summary = aggregate(out.records);
  return out;
}

std::uint64_t sweep_eval_seed(std::uint64_t master, std::size_t cell, std::size_t test) {
  return derive_seed(master, {cell, test, 1});
}

std::vector<CellResult> sweep(std::span<const SweepCell> cells, const SweepOptions& opts) {
  if (cells.empty()) throw ConfigError("sweep: grid is empty");
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!opts.skip || !opts.skip(i)) todo.push_back(i);
  }
  std::vector<CellResult> results(todo.size());
  const unsigned eval_jobs = todo.size() == 1 ? opts.jobs : 1;
  parallel_for(todo.size(), opts.jobs, [&](std::size_t slot) {
    const std::size_t index = todo[slot];
    const SweepCell& cell = cells[index];
    const TrainResult trained = train(cell.train);
    CellResult res;
    res.cell = index;
    for (std::size_t t = 0; t < cell.test_agents.size(); ++t) {
      EnvConfig test_env = cell.train.env;
      test_env.agents = cell.test_agents[t];
      EvalOptions eo;
      eo.runs = opts.runs;
      eo.max_iters = opts.eval_max_iters;
      eo.epsilon = opts.epsilon_eval;
      eo.seed = sweep_eval_seed(opts.master_seed, index, t);
      eo.jobs = eval_jobs;
      EvalResult ev = evaluate(trained.table, test_env, eo);
      SweepRow row;
      row.algorithm = cell.train.learner.algorithm;
      row.n_train = cell.train.env.agents;
      row.n_test = test_env.agents;
      row.beta = cell.train.env.beta;
      row.mu = cell.train.env.mu;
      row.intervals = cell.train.env.intervals;
      row.summary = ev.summary;
      res.rows.push_back(row);
      res.records.push_back(std::move(ev.records));
    }
    results[slot] = std::move(res);
  });
  return results;
}

std::vector<SweepCell> expand_grid(const SweepGrid& grid, std::uint64_t master_seed) {
  auto or_base = [](const auto& list, auto base) {
    using T = std::decay_t<decltype(base)>;
    return list.empty() ? std::vector<T>{base} : std::vector<T>(list.begin(), list.end());
  };
  const auto algorithms = or_base(grid.algorithms, grid.base.learner.algorithm);
  const auto agents = or_base(grid.train_agents, grid.base.env.agents);
  const auto betas = or_base(grid.betas, grid.base.env.beta);
  const auto mus = or_base(grid.mus, grid.base.env.mu);
  const auto ds = or_base(grid.intervals, grid.base.env.intervals);

  std::vector<SweepCell> cells;
  for (Algorithm alg : algorithms) {
    for (std::int64_t n : agents) {
      for (double beta : betas) {
        for (double mu : mus) {
          for (int d : ds) {
            SweepCell cell;
            cell.train = grid.base;
            cell.train.learner.algorithm = alg;
            cell.train.env.agents = n;
            cell.train.env.beta = beta;
            cell.train.env.mu = mu;
            cell.train.env.intervals = d;
            cell.train.seed = derive_seed(master_seed, {cells.size()});
            cell.test_agents = grid.test_agents.empty() ? std::vector<std::int64_t>{n}
                                                        : grid.test_agents;
            cells.push_back(std::move(cell));
          }
        }
      }
    }
  }
  return cells;
}

void write_records_header(std::ostream& out) {
  out << "cell,run,converged,iterations,final_mse,seed\n";
}

void write_record(std::ostream& out, std::size_t cell, const RunRecord& r) {
  out << cell << ',' << r.run << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << ','
      << format_double(r.final_mse) << ',' << r.seed << '\n';
}

void write_aggregate_header(std::ostream& out) {
  out << "algorithm,N_train,N_test,beta,mu,D,mean_iters,std_iters,conv_rate,runs\n";
}

void write_aggregate(std::ostream& out, const SweepRow& row) {
  out << to_string(row.algorithm) << ',' << row.n_train << ',' << row.n_test << ','
      << format_double(row.beta) << ',' << format_double(row.mu) << ',' << row.intervals << ','
      << format_double(row.summary.mean_iterations) << ','
      << format_double(row.summary.std_iterations) << ','
      << format_double(row.summary.convergence_rate) << ',' << row.summary.runs << '\n';
}

void write_train_log(std::ostream& out, std::span<const EpisodeLog> log) {
  out << "episode,length,cumulative_reward\n";
  for (std::size_t i = 0; i < log.size(); ++i) {
    out << i << ',' << log[i].length << ',' << format_double(log[i].cumulative_reward) << '\n';
  }
}

}  // namespace swarmherd
