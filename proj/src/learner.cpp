#include "swarmherd/learner.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace swarmherd {

std::string_view to_string(Algorithm a) {
  return a == Algorithm::Sarsa ? "sarsa" : "qlearning";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  if (name == "sarsa") return Algorithm::Sarsa;
  if (name == "qlearning" || name == "q-learning") return Algorithm::QLearning;
  return std::nullopt;
}

void LearnerConfig::validate() const {
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(alpha)) throw ConfigError("learner.alpha: must lie in [0, 1]");
  if (!unit(gamma)) throw ConfigError("learner.gamma: must lie in [0, 1]");
  if (!unit(epsilon)) throw ConfigError("learner.epsilon: must lie in [0, 1]");
  if (!unit(epsilon_final)) throw ConfigError("learner.epsilon_final: must lie in [0, 1]");
}

QTable::QTable(std::size_t vertices, int intervals, GridShape grid, std::size_t action_count)
    : codec_(vertices, intervals), grid_(grid), action_count_(action_count) {
  if (grid.rows * grid.cols != vertices) {
    throw QTableDimensionError("grid shape does not match vertex count");
  }
  if (action_count == 0) throw QTableDimensionError("Q-table needs at least one action");
  if (codec_.state_count() > std::numeric_limits<std::size_t>::max() / 8 / action_count) {
    throw QTableDimensionError("Q-table too large");
  }
  values_.assign(codec_.state_count() * action_count, 0.0);
}

bool QTable::compatible_with(const EnvConfig& env) const {
  return env.rows == grid_.rows && env.cols == grid_.cols && env.intervals == intervals() &&
         action_count_ == kActionCount;
}

double q_lookup(const QTable& q, const DiscretizedState& s, LeaderAction a) {
  std::size_t state = 0;
  try {
    state = q.codec().encode(s);
  } catch (const EncodingError& e) {
    throw IndexError(e.what());
  }
  return q.value(state, action_index(a));
}

LeaderAction greedy_action(const QTable& q, std::size_t state,
                           std::span<const LeaderAction> valid) {
  if (valid.empty()) throw NoActionError("no valid action to choose from");
  LeaderAction best = valid.front();
  double best_value = q.value(state, best);
  for (std::size_t i = 1; i < valid.size(); ++i) {
    const double v = q.value(state, valid[i]);
    if (v > best_value) {
      best_value = v;
      best = valid[i];
    }
  }
  return best;
}

LeaderAction select_action(const QTable& q, std::size_t state,
                           std::span<const LeaderAction> valid, double epsilon, Rng& rng) {
  if (valid.empty()) throw NoActionError("no valid action to choose from");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) > epsilon) return greedy_action(q, state, valid);
  std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
  return valid[pick(rng)];
}

namespace {

void apply_td(QTable& q, std::size_t state, LeaderAction action, double target, double alpha) {
  double& entry = q.value(state, action);
  entry += alpha * (target - entry);
}

}  // namespace

void update_sarsa(QTable& q, std::size_t state, LeaderAction action, double reward,
                  std::size_t next_state, LeaderAction next_action, const LearnerConfig& cfg) {
  const double target = reward + cfg.gamma * q.value(next_state, next_action);
  apply_td(q, state, action, target, cfg.alpha);
}

void update_qlearning(QTable& q, std::size_t state, LeaderAction action, double reward,
                      std::size_t next_state, std::span<const LeaderAction> next_valid,
                      const LearnerConfig& cfg) {
  const LeaderAction best = greedy_action(q, next_state, next_valid);
  const double target = reward + cfg.gamma * q.value(next_state, best);
  apply_td(q, state, action, target, cfg.alpha);
}

void update_terminal(QTable& q, std::size_t state, LeaderAction action, double reward,
                     const LearnerConfig& cfg) {
  apply_td(q, state, action, reward, cfg.alpha);
}

namespace {

constexpr std::array<char, 4> kMagic{'S', 'W', 'H', 'Q'};
constexpr std::size_t kHeaderWords = 6;

void put_u32(std::ostream& out, std::uint32_t x) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xffu);
  out.write(b.data(), b.size());
}

void put_f64(std::ostream& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(b.data(), b.size());
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t x = 0;
  for (int i = 3; i >= 0; --i) x = (x << 8) | p[i];
  return x;
}

double get_f64(const unsigned char* p) {
  std::uint64_t x = 0;
  for (int i = 7; i >= 0; --i) x = (x << 8) | p[i];
  return std::bit_cast<double>(x);
}

std::uint32_t checked_u32(std::size_t x, const char* what) {
  if (x > std::numeric_limits<std::uint32_t>::max()) {
    throw QTableDimensionError(std::string(what) + " does not fit the file header");
  }
  return static_cast<std::uint32_t>(x);
}

}  // namespace

void write_qtable(std::ostream& out, const QTable& q) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kQTableVersion);
  put_u32(out, checked_u32(q.vertices(), "M"));
  put_u32(out, checked_u32(static_cast<std::size_t>(q.intervals()), "D"));
  put_u32(out, checked_u32(q.action_count(), "action count"));
  put_u32(out, checked_u32(q.grid().rows, "rows"));
  put_u32(out, checked_u32(q.grid().cols, "cols"));
  for (double v : q.values()) put_f64(out, v);
}

QTable read_qtable(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size())) {
    throw QTableTruncatedError("file ends inside the magic string");
  }
  if (magic != kMagic) throw QTableFormatError("not a Q-table file (bad magic)");

  std::array<unsigned char, 4 * kHeaderWords> header{};
  if (!in.read(reinterpret_cast<char*>(header.data()), header.size())) {
    throw QTableTruncatedError("file ends inside the header");
  }
  std::array<std::uint32_t, kHeaderWords> w{};
  for (std::size_t i = 0; i < kHeaderWords; ++i) w[i] = get_u32(header.data() + 4 * i);
  const auto [version, m, d, actions, rows, cols] = w;
  if (version != kQTableVersion) {
    throw QTableFormatError("unsupported Q-table version " + std::to_string(version));
  }
  if (m == 0 || d == 0 || actions == 0 || d > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw QTableFormatError("malformed Q-table header");
  }
  if (static_cast<std::uint64_t>(rows) * cols != m) {
    throw QTableDimensionError("header grid " + std::to_string(rows) + "x" +
                               std::to_string(cols) + " does not have " + std::to_string(m) +
                               " vertices");
  }
  std::optional<QTable> q;
  try {
    q.emplace(m, static_cast<int>(d), GridShape{rows, cols}, actions);
  } catch (const EncodingError& e) {
    throw QTableDimensionError(std::string("header dimensions unusable: ") + e.what());
  }

  auto values = q->values();
  constexpr std::size_t kChunk = 4096;
  std::vector<unsigned char> buf(kChunk * 8);
  std::size_t done = 0;
  while (done < values.size()) {
    const std::size_t n = std::min(kChunk, values.size() - done);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 8))) {
      throw QTableTruncatedError("payload holds fewer values than the header promises (" +
                                 std::to_string(values.size()) + ")");
    }
    for (std::size_t i = 0; i < n; ++i) values[done + i] = get_f64(buf.data() + 8 * i);
    done += n;
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw QTableFormatError("trailing bytes after Q-table payload");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw QTableFormatError("Q-table holds a non-finite value");
  }
  return std::move(*q);
}

void save_qtable(const QTable& q, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  write_qtable(out, q);
  out.flush();
  if (!out) throw std::ios_base::failure("write to " + path.string() + " failed");
}

QTable load_qtable(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  return read_qtable(in);
}

}  // namespace swarmherd
