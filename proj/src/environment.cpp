#include "swarmherd/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "swarmherd/format.hpp"

namespace swarmherd {

std::string_view to_string(LeaderAction a) {
  switch (a) {
    case LeaderAction::Left: return "Left";
    case LeaderAction::Right: return "Right";
    case LeaderAction::Up: return "Up";
    case LeaderAction::Down: return "Down";
    case LeaderAction::Stay: return "Stay";
  }
  return "?";
}

std::optional<LeaderAction> parse_action(std::string_view name) {
  for (LeaderAction a : kAllActions) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

namespace {

const GridShape& require_grid(const Graph& g) {
  if (!g.grid()) throw InvalidGraph("leader actions are defined on grid graphs only");
  return *g.grid();
}

// Neighbor in direction `a`, or nullopt at the boundary. Stay maps to v.
std::optional<VertexId> move_target(const GridShape& grid, VertexId v, LeaderAction a) {
  const std::size_t r = v / grid.cols;
  const std::size_t c = v % grid.cols;
  switch (a) {
    case LeaderAction::Left:
      if (c == 0) return std::nullopt;
      return v - 1;
    case LeaderAction::Right:
      if (c + 1 >= grid.cols) return std::nullopt;
      return v + 1;
    case LeaderAction::Up:
      if (r == 0) return std::nullopt;
      return v - grid.cols;
    case LeaderAction::Down:
      if (r + 1 >= grid.rows) return std::nullopt;
      return v + grid.cols;
    case LeaderAction::Stay:
      return v;
  }
  return std::nullopt;
}

}  // namespace

std::vector<LeaderAction> valid_actions(const Graph& g, VertexId v) {
  const GridShape& grid = require_grid(g);
  if (v >= g.vertex_count()) {
    throw VertexOutOfRange("vertex " + std::to_string(v) + " out of range");
  }
  std::vector<LeaderAction> out;
  for (LeaderAction a : kAllActions) {
    if (move_target(grid, v, a)) out.push_back(a);
  }
  return out;
}

LeaderState apply_leader_action(const Graph& g, const LeaderState& leader, LeaderAction a) {
  const GridShape& grid = require_grid(g);
  if (leader.vertex >= g.vertex_count()) {
    throw VertexOutOfRange("leader vertex out of range");
  }
  const auto target = move_target(grid, leader.vertex, a);
  if (!target) {
    throw InvalidAction(std::string(to_string(a)) + " is not available at vertex " +
                        std::to_string(leader.vertex));
  }
  return LeaderState{*target, a == LeaderAction::Stay};
}

double reward(std::span<const double> current, std::span<const double> target) {
  if (current.size() != target.size()) throw InvalidState("distribution size mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < current.size(); ++i) {
    const double d = current[i] - target[i];
    sq += d * d;
  }
  return -sq;
}

double mse(std::span<const double> current, std::span<const double> target) {
  if (current.empty()) throw InvalidState("empty distribution");
  return -reward(current, target) / static_cast<double>(current.size());
}

namespace {

int bin_of(double fraction, int intervals) {
  const double scaled = std::round(static_cast<double>(intervals) * fraction);
  return std::clamp(static_cast<int>(scaled), 0, intervals);
}

}  // namespace

std::vector<int> discretize(std::span<const double> s, int intervals) {
  if (intervals < 1) throw InvalidState("discretization needs at least one interval");
  std::vector<int> out;
  out.reserve(s.size());
  for (double x : s) out.push_back(bin_of(x, intervals));
  return out;
}

StateCodec::StateCodec(std::size_t vertices, int intervals)
    : vertices_(vertices), intervals_(intervals) {
  if (vertices == 0 || intervals < 1) {
    throw EncodingError("state codec needs M >= 1 and D >= 1");
  }
  constexpr std::size_t kLimit = std::numeric_limits<std::size_t>::max() / 64;
  std::size_t count = vertices;
  for (std::size_t v = 0; v < vertices; ++v) {
    if (count > kLimit / static_cast<std::size_t>(intervals + 1)) {
      throw EncodingError("discretized state space too large to index");
    }
    count *= static_cast<std::size_t>(intervals + 1);
  }
  state_count_ = count;
}

std::size_t StateCodec::encode(std::span<const int> bins, VertexId leader) const {
  if (bins.size() != vertices_) throw EncodingError("state has wrong number of bins");
  if (leader >= vertices_) throw EncodingError("leader vertex out of range");
  std::size_t mixed = 0;
  for (std::size_t v = vertices_; v-- > 0;) {
    const int f = bins[v];
    if (f < 0 || f > intervals_) {
      throw EncodingError("bin " + std::to_string(f) + " outside [0, " +
                          std::to_string(intervals_) + "]");
    }
    mixed = mixed * static_cast<std::size_t>(intervals_ + 1) + static_cast<std::size_t>(f);
  }
  return leader + vertices_ * mixed;
}

std::size_t StateCodec::encode(const DiscretizedState& ds) const {
  return encode(ds.bins, ds.leader);
}

DiscretizedState StateCodec::decode(std::size_t index) const {
  if (index >= state_count_) throw EncodingError("state index out of range");
  DiscretizedState ds;
  ds.leader = index % vertices_;
  std::size_t mixed = index / vertices_;
  ds.bins.resize(vertices_);
  const auto radix = static_cast<std::size_t>(intervals_ + 1);
  for (std::size_t v = 0; v < vertices_; ++v) {
    ds.bins[v] = static_cast<int>(mixed % radix);
    mixed /= radix;
  }
  return ds;
}

std::string_view to_string(Backend b) {
  return b == Backend::Dtmc ? "dtmc" : "mean-field";
}

std::optional<Backend> parse_backend(std::string_view name) {
  if (name == "dtmc") return Backend::Dtmc;
  if (name == "mean-field" || name == "meanfield") return Backend::MeanField;
  return std::nullopt;
}

void EnvConfig::validate() const {
  if (rows < 1 || cols < 1 || rows * cols < 2) {
    throw ConfigError("graph.rows/graph.cols: grid must be at least 1x2");
  }
  if (agents < 1) throw ConfigError("env.agents: need at least one follower");
  if (intervals < 1) throw ConfigError("env.intervals: D must be >= 1");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("env.mu: must be positive");
  if (max_iterations < 1) throw ConfigError("env.max_iterations: must be >= 1");
  const Graph g = make_grid(rows, cols);
  const double worst = beta * static_cast<double>(g.max_out_degree());
  if (!(beta > 0.0) || !(worst < 1.0)) {
    throw ConfigError("env.beta: need 0 < beta * max_out_degree < 1");
  }
  try {
    check_simplex(initial_dist, vertices());
  } catch (const InvalidState& e) {
    throw ConfigError(std::string("env.initial: ") + e.what());
  }
  try {
    check_simplex(target_dist, vertices());
  } catch (const InvalidState& e) {
    throw ConfigError(std::string("env.target: ") + e.what());
  }
  try {
    StateCodec codec(vertices(), intervals);
    (void)codec;
  } catch (const EncodingError& e) {
    throw ConfigError(std::string("env.intervals: ") + e.what());
  }
}

SwarmCounts apportion(std::int64_t total, std::span<const double> dist) {
  if (total < 0) throw InvalidState("negative agent total");
  SwarmCounts out;
  out.counts.resize(dist.size(), 0);
  std::vector<double> remainder(dist.size(), 0.0);
  std::int64_t assigned = 0;
  for (std::size_t v = 0; v < dist.size(); ++v) {
    const double exact = static_cast<double>(total) * dist[v];
    const double whole = std::floor(exact);
    out.counts[v] = static_cast<std::int64_t>(whole);
    remainder[v] = exact - whole;
    assigned += out.counts[v];
  }
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  std::int64_t left = total - assigned;
  for (std::size_t i = 0; left > 0; i = (i + 1) % order.size(), --left) {
    ++out.counts[order[i]];
  }
  // Floating error can only overshoot by a unit or so; take it back from the
  // smallest remainders.
  for (std::size_t i = order.size(); left < 0 && i-- > 0;) {
    if (out.counts[order[i]] > 0) {
      --out.counts[order[i]];
      ++left;
    }
  }
  return out;
}

Environment::Environment(EnvConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      graph_(make_grid(cfg_.rows, cfg_.cols)),
      rates_(TransitionRates::uniform(graph_, cfg_.beta)),
      codec_(cfg_.vertices(), cfg_.intervals) {
  actions_.reserve(graph_.vertex_count());
  for (VertexId v = 0; v < graph_.vertex_count(); ++v) {
    actions_.push_back(swarmherd::valid_actions(graph_, v));
  }
  counts_ = apportion(cfg_.agents, cfg_.initial_dist);
  density_ = cfg_.initial_dist;
}

void Environment::reset(Rng& rng) {
  if (cfg_.backend == Backend::Dtmc) {
    counts_ = apportion(cfg_.agents, cfg_.initial_dist);
    density_ = empirical_distribution(counts_).density;
  } else {
    counts_ = SwarmCounts{};
    density_ = cfg_.initial_dist;
  }
  std::uniform_int_distribution<VertexId> pick(0, graph_.vertex_count() - 1);
  leader_ = LeaderState{pick(rng), false};
}

void Environment::set_state(const SwarmCounts& followers, const LeaderState& leader) {
  if (cfg_.backend != Backend::Dtmc) throw InvalidState("counts given to a mean-field environment");
  if (followers.counts.size() != graph_.vertex_count()) throw InvalidState("wrong count vector size");
  if (leader.vertex >= graph_.vertex_count()) throw VertexOutOfRange("leader vertex out of range");
  counts_ = followers;
  density_ = empirical_distribution(counts_).density;
  leader_ = leader;
}

void Environment::set_state(const MeanFieldState& followers, const LeaderState& leader) {
  if (cfg_.backend != Backend::MeanField) throw InvalidState("density given to a DTMC environment");
  check_simplex(followers.density, graph_.vertex_count());
  if (leader.vertex >= graph_.vertex_count()) throw VertexOutOfRange("leader vertex out of range");
  counts_ = SwarmCounts{};
  density_ = followers.density;
  leader_ = leader;
}

StepResult Environment::step(LeaderAction a, Rng& rng) {
  leader_ = apply_leader_action(graph_, leader_, a);
  if (cfg_.backend == Backend::Dtmc) {
    step_dtmc_in_place(graph_, rates_, leader_, counts_, rng);
    const auto n = static_cast<double>(counts_.total());
    for (std::size_t v = 0; v < density_.size(); ++v) {
      density_[v] = static_cast<double>(counts_.counts[v]) / n;
    }
  } else {
    MeanFieldState s{std::move(density_)};
    mean_field_step_in_place(graph_, rates_, leader_, s);
    density_ = std::move(s.density);
  }
  StepResult out;
  out.reward = current_reward();
  out.mse = -out.reward / static_cast<double>(density_.size());
  out.terminal = out.mse < cfg_.mu;
  return out;
}

DiscretizedState Environment::observe() const {
  return DiscretizedState{discretize(density_, cfg_.intervals), leader_.vertex};
}

std::size_t Environment::observe_index() const {
  const auto radix = static_cast<std::size_t>(cfg_.intervals + 1);
  std::size_t mixed = 0;
  for (std::size_t v = density_.size(); v-- > 0;) {
    mixed = mixed * radix + static_cast<std::size_t>(bin_of(density_[v], cfg_.intervals));
  }
  return leader_.vertex + density_.size() * mixed;
}

TraceWriter::TraceWriter(std::ostream& out, const Environment& env) : out_(out) {
  const bool counts = env.config().backend == Backend::Dtmc;
  out_ << "iteration,leader_vertex,leader_flag,action";
  for (std::size_t v = 0; v < env.graph().vertex_count(); ++v) {
    out_ << ',' << (counts ? "count_" : "density_") << v;
  }
  out_ << ",reward,mse,terminal\n";
}

void TraceWriter::row(std::size_t iteration, const Environment& env,
                      std::optional<LeaderAction> action, double reward, double mse,
                      bool terminal) {
  out_ << iteration << ',' << env.leader().vertex << ',' << (env.leader().repelling ? 1 : 0)
       << ',' << (action ? to_string(*action) : std::string_view("none"));
  if (env.config().backend == Backend::Dtmc) {
    for (std::int64_t c : env.counts().counts) out_ << ',' << c;
  } else {
    for (double d : env.distribution()) out_ << ',' << format_double(d);
  }
  out_ << ',' << format_double(reward) << ',' << format_double(mse) << ','
       << (terminal ? 1 : 0) << '\n';
}

}  // namespace swarmherd
