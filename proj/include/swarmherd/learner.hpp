#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "swarmherd/environment.hpp"
#include "swarmherd/random.hpp"

namespace swarmherd {

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class NoActionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for Q-table load failures; the subclasses tell them apart.
class QTableLoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class QTableFormatError : public QTableLoadError {
 public:
  using QTableLoadError::QTableLoadError;
};
class QTableDimensionError : public QTableLoadError {
 public:
  using QTableLoadError::QTableLoadError;
};
class QTableTruncatedError : public QTableLoadError {
 public:
  using QTableLoadError::QTableLoadError;
};

enum class Algorithm { Sarsa, QLearning };

std::string_view to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);

struct LearnerConfig {
  double alpha = 0.3;
  double gamma = 0.9;
  double epsilon = 0.1;
  Algorithm algorithm = Algorithm::QLearning;
  /// Linear decay from `epsilon` to `epsilon_final` over the training episodes.
  bool epsilon_decay = false;
  double epsilon_final = 0.01;

  void validate() const;
};

/// Tabular state-action values, laid out state-major and action-minor.
/// Zero-initialized.
class QTable {
 public:
  QTable(std::size_t vertices, int intervals, GridShape grid,
         std::size_t action_count = kActionCount);

  std::size_t vertices() const { return codec_.vertices(); }
  int intervals() const { return codec_.intervals(); }
  std::size_t action_count() const { return action_count_; }
  const GridShape& grid() const { return grid_; }
  const StateCodec& codec() const { return codec_; }
  std::size_t state_count() const { return codec_.state_count(); }

  double value(std::size_t state, std::size_t action) const {
    return values_[offset(state, action)];
  }
  double& value(std::size_t state, std::size_t action) { return values_[offset(state, action)]; }

  double value(std::size_t state, LeaderAction a) const { return value(state, action_index(a)); }
  double& value(std::size_t state, LeaderAction a) { return value(state, action_index(a)); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// True when the table can drive an environment with this configuration.
  bool compatible_with(const EnvConfig& env) const;

  friend bool operator==(const QTable& a, const QTable& b) {
    return a.vertices() == b.vertices() && a.intervals() == b.intervals() && a.grid_ == b.grid_ &&
           a.action_count_ == b.action_count_ && a.values_ == b.values_;
  }

 private:
  std::size_t offset(std::size_t state, std::size_t action) const {
    if (state >= codec_.state_count() || action >= action_count_) {
      throw IndexError("Q-table index (" + std::to_string(state) + ", " +
                       std::to_string(action) + ") out of range");
    }
    return state * action_count_ + action;
  }

  StateCodec codec_;
  GridShape grid_;
  std::size_t action_count_;
  std::vector<double> values_;
};

double q_lookup(const QTable& q, const DiscretizedState& s, LeaderAction a);

/// Highest-valued action among `valid`; ties go to the earliest entry.
LeaderAction greedy_action(const QTable& q, std::size_t state, std::span<const LeaderAction> valid);

/// Epsilon-greedy: draws X ~ U[0,1); greedy when X > epsilon, otherwise a
/// uniformly random valid action.
LeaderAction select_action(const QTable& q, std::size_t state,
                           std::span<const LeaderAction> valid, double epsilon, Rng& rng);

/// Q(s,a) += alpha * (r + gamma * Q(s',a') - Q(s,a))
void update_sarsa(QTable& q, std::size_t state, LeaderAction action, double reward,
                  std::size_t next_state, LeaderAction next_action, const LearnerConfig& cfg);

/// Q(s,a) += alpha * (r + gamma * max_{a' in valid'} Q(s',a') - Q(s,a))
void update_qlearning(QTable& q, std::size_t state, LeaderAction action, double reward,
                      std::size_t next_state, std::span<const LeaderAction> next_valid,
                      const LearnerConfig& cfg);

/// Update for a transition into a terminal state, which has no successor value.
void update_terminal(QTable& q, std::size_t state, LeaderAction action, double reward,
                     const LearnerConfig& cfg);

/// Binary format, little-endian: "SWHQ", version, M, D, action count, grid
/// rows, grid cols (u32 each), then state_count * action_count f64 values.
void write_qtable(std::ostream& out, const QTable& q);
QTable read_qtable(std::istream& in);

void save_qtable(const QTable& q, const std::filesystem::path& path);
QTable load_qtable(const std::filesystem::path& path);

inline constexpr std::uint32_t kQTableVersion = 1;

}  // namespace swarmherd
