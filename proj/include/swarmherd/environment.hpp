#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "swarmherd/dynamics.hpp"
#include "swarmherd/graph.hpp"
#include "swarmherd/random.hpp"

namespace swarmherd {

class InvalidAction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EncodingError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Leader actions on a grid. The enumerator value is the action's column in
/// the Q-table; greedy ties resolve toward the lower value.
enum class LeaderAction : std::uint8_t { Left = 0, Right = 1, Up = 2, Down = 3, Stay = 4 };

inline constexpr std::size_t kActionCount = 5;
inline constexpr std::array<LeaderAction, kActionCount> kAllActions{
    LeaderAction::Left, LeaderAction::Right, LeaderAction::Up, LeaderAction::Down,
    LeaderAction::Stay};

constexpr std::size_t action_index(LeaderAction a) { return static_cast<std::size_t>(a); }
std::string_view to_string(LeaderAction a);
std::optional<LeaderAction> parse_action(std::string_view name);

/// Actions available at `v`, in canonical order with Stay last. Requires a
/// grid graph.
std::vector<LeaderAction> valid_actions(const Graph& g, VertexId v);

/// Stay sets the repelling flag in place; a move clears it.
LeaderState apply_leader_action(const Graph& g, const LeaderState& leader, LeaderAction a);

/// Negated squared Euclidean distance.
double reward(std::span<const double> current, std::span<const double> target);

/// Mean over vertices of the squared difference; equals -reward / M.
double mse(std::span<const double> current, std::span<const double> target);

/// F_v = round(D * s_v), rounding half away from zero.
std::vector<int> discretize(std::span<const double> s, int intervals);

struct DiscretizedState {
  std::vector<int> bins;
  VertexId leader = 0;

  friend bool operator==(const DiscretizedState&, const DiscretizedState&) = default;
};

/// Mixed-radix bijection between discretized states and [0, state_count()):
///   index = leader + M * sum_v bins[v] * (D+1)^v
class StateCodec {
 public:
  StateCodec(std::size_t vertices, int intervals);

  std::size_t vertices() const { return vertices_; }
  int intervals() const { return intervals_; }
  std::size_t state_count() const { return state_count_; }

  std::size_t encode(const DiscretizedState& ds) const;
  std::size_t encode(std::span<const int> bins, VertexId leader) const;
  DiscretizedState decode(std::size_t index) const;

 private:
  std::size_t vertices_;
  int intervals_;
  std::size_t state_count_;
};

enum class Backend { Dtmc, MeanField };

std::string_view to_string(Backend b);
std::optional<Backend> parse_backend(std::string_view name);

struct EnvConfig {
  std::size_t rows = 2;
  std::size_t cols = 2;
  std::int64_t agents = 100;
  double beta = 0.1;
  int intervals = 10;
  double mu = 0.0025;
  std::vector<double> initial_dist{0.4, 0.1, 0.1, 0.4};
  std::vector<double> target_dist{0.1, 0.4, 0.4, 0.1};
  std::size_t max_iterations = 5000;
  Backend backend = Backend::Dtmc;

  std::size_t vertices() const { return rows * cols; }

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// Largest-remainder apportionment of `total` agents over `dist`; ties in
/// the remainder go to the lower vertex index.
SwarmCounts apportion(std::int64_t total, std::span<const double> dist);

struct StepResult {
  double reward = 0.0;
  double mse = 0.0;
  bool terminal = false;
};

/// Episodic herding environment. One instance is a single-threaded state
/// machine; the random stream is supplied per call.
///
/// Within an iteration the leader acts first, and the followers respond to
/// the leader's new state in the same iteration. Reward and the terminal
/// test use the post-step distribution.
class Environment {
 public:
  explicit Environment(EnvConfig cfg);

  const EnvConfig& config() const { return cfg_; }
  const Graph& graph() const { return graph_; }
  const TransitionRates& rates() const { return rates_; }
  const StateCodec& codec() const { return codec_; }

  /// Followers at the initial distribution, leader uniformly placed and not
  /// repelling.
  void reset(Rng& rng);

  /// Places the environment in an explicit state (DTMC backend).
  void set_state(const SwarmCounts& followers, const LeaderState& leader);
  /// Places the environment in an explicit state (mean-field backend).
  void set_state(const MeanFieldState& followers, const LeaderState& leader);

  StepResult step(LeaderAction a, Rng& rng);

  const LeaderState& leader() const { return leader_; }
  /// Empirical distribution (DTMC) or density (mean-field).
  std::span<const double> distribution() const { return density_; }
  /// Agent counts; only meaningful for the DTMC backend.
  const SwarmCounts& counts() const { return counts_; }

  double current_mse() const { return mse(density_, cfg_.target_dist); }
  double current_reward() const { return reward(density_, cfg_.target_dist); }
  bool at_terminal() const { return current_mse() < cfg_.mu; }

  DiscretizedState observe() const;
  std::size_t observe_index() const;

  const std::vector<LeaderAction>& actions_here() const { return actions_[leader_.vertex]; }
  const std::vector<LeaderAction>& actions_at(VertexId v) const { return actions_.at(v); }

 private:
  EnvConfig cfg_;
  Graph graph_;
  TransitionRates rates_;
  StateCodec codec_;
  std::vector<std::vector<LeaderAction>> actions_;
  SwarmCounts counts_;
  std::vector<double> density_;
  LeaderState leader_;
};

/// Line-oriented trace of an episode:
/// iteration,leader_vertex,leader_flag,action,x0..x{M-1},reward,mse,terminal
class TraceWriter {
 public:
  TraceWriter(std::ostream& out, const Environment& env);

  /// `action` is empty for the initial row.
  void row(std::size_t iteration, const Environment& env, std::optional<LeaderAction> action,
           double reward, double mse, bool terminal);

 private:
  std::ostream& out_;
};

}  // namespace swarmherd
