#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "swarmherd/graph.hpp"
#include "swarmherd/random.hpp"

namespace swarmherd {

class InvalidRates : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidState : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptySwarm : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Leader location and behavioral flag. Followers at `vertex` are repelled
/// only while `repelling` is set.
struct LeaderState {
  VertexId vertex = 0;
  bool repelling = false;

  friend bool operator==(const LeaderState&, const LeaderState&) = default;
};

/// Follower agents per vertex. Agents are anonymous; only counts are kept.
struct SwarmCounts {
  std::vector<std::int64_t> counts;

  std::int64_t total() const;
  friend bool operator==(const SwarmCounts&, const SwarmCounts&) = default;
};

/// Probability mass per vertex (an element of the simplex).
struct MeanFieldState {
  std::vector<double> density;

  friend bool operator==(const MeanFieldState&, const MeanFieldState&) = default;
};

inline constexpr double kSimplexTolerance = 1e-9;

/// Throws InvalidState unless `s` has `m` non-negative entries summing to 1
/// within kSimplexTolerance.
void check_simplex(std::span<const double> s, std::size_t m);

/// Per-edge follower transition rates, stored per source vertex in the
/// order of Graph::out_neighbors. Rates leaving any vertex sum to < 1.
class TransitionRates {
 public:
  TransitionRates(const Graph& g, std::vector<std::vector<double>> per_vertex);

  static TransitionRates uniform(const Graph& g, double beta);

  std::span<const double> at(VertexId v) const { return rates_.at(v); }
  std::size_t vertex_count() const { return rates_.size(); }

 private:
  std::vector<std::vector<double>> rates_;
};

/// One row of the follower transition kernel at vertex `v`.
/// `targets` is out_neighbors(v) followed by v itself.
struct TransitionRow {
  std::vector<VertexId> targets;
  std::vector<double> probs;
};

TransitionRow follower_transition_probs(const Graph& g, const TransitionRates& rates,
                                        const LeaderState& leader, VertexId v);

/// One DTMC step of the whole swarm. The agents at a repelling leader's vertex
/// are split by a multinomial draw, realized as sequential binomials over the
/// canonical target order; every other vertex is untouched.
SwarmCounts step_dtmc(const Graph& g, const TransitionRates& rates, const LeaderState& leader,
                      const SwarmCounts& s, Rng& rng);
void step_dtmc_in_place(const Graph& g, const TransitionRates& rates, const LeaderState& leader,
                        SwarmCounts& s, Rng& rng);

/// Deterministic mean-field (Kolmogorov forward) step.
MeanFieldState mean_field_step(const Graph& g, const TransitionRates& rates,
                               const LeaderState& leader, const MeanFieldState& s);
void mean_field_step_in_place(const Graph& g, const TransitionRates& rates,
                              const LeaderState& leader, MeanFieldState& s);

MeanFieldState empirical_distribution(const SwarmCounts& s);

}  // namespace swarmherd
