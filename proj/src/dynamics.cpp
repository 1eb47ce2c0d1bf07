#include "swarmherd/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace swarmherd {

std::int64_t SwarmCounts::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

void check_simplex(std::span<const double> s, std::size_t m) {
  if (s.size() != m) {
    throw InvalidState("distribution has " + std::to_string(s.size()) + " entries, expected " +
                       std::to_string(m));
  }
  double sum = 0.0;
  for (double x : s) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InvalidState("distribution has a negative or non-finite entry");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw InvalidState("distribution sums to " + std::to_string(sum) + ", not 1");
  }
}

TransitionRates::TransitionRates(const Graph& g, std::vector<std::vector<double>> per_vertex)
    : rates_(std::move(per_vertex)) {
  if (rates_.size() != g.vertex_count()) {
    throw InvalidRates("rates given for " + std::to_string(rates_.size()) +
                       " vertices, graph has " + std::to_string(g.vertex_count()));
  }
  for (VertexId v = 0; v < rates_.size(); ++v) {
    const auto& row = rates_[v];
    if (row.size() != g.out_neighbors(v).size()) {
      throw InvalidRates("vertex " + std::to_string(v) + " has " + std::to_string(row.size()) +
                         " rates for " + std::to_string(g.out_neighbors(v).size()) + " edges");
    }
    double sum = 0.0;
    for (double b : row) {
      if (!(b > 0.0) || !std::isfinite(b)) {
        throw InvalidRates("transition rates must be positive and finite");
      }
      sum += b;
    }
    if (!(sum < 1.0)) {
      throw InvalidRates("rates leaving vertex " + std::to_string(v) + " sum to " +
                         std::to_string(sum) + " (must be < 1)");
    }
  }
}

TransitionRates TransitionRates::uniform(const Graph& g, double beta) {
  std::vector<std::vector<double>> per_vertex(g.vertex_count());
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    per_vertex[v].assign(g.out_neighbors(v).size(), beta);
  }
  return TransitionRates(g, std::move(per_vertex));
}

namespace {

void check_rates_fit(const Graph& g, const TransitionRates& rates) {
  if (rates.vertex_count() != g.vertex_count()) {
    throw InvalidRates("transition rates do not belong to this graph");
  }
}

}  // namespace

TransitionRow follower_transition_probs(const Graph& g, const TransitionRates& rates,
                                        const LeaderState& leader, VertexId v) {
  check_rates_fit(g, rates);
  const auto& nbrs = g.out_neighbors(v);
  const auto beta = rates.at(v);
  if (beta.size() != nbrs.size()) throw InvalidRates("rate row does not match neighbor list");

  TransitionRow row;
  row.targets.assign(nbrs.begin(), nbrs.end());
  row.targets.push_back(v);
  row.probs.assign(row.targets.size(), 0.0);
  if (leader.repelling && leader.vertex == v) {
    double moved = 0.0;
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      row.probs[i] = beta[i];
      moved += beta[i];
    }
    if (!(moved < 1.0)) throw InvalidRates("rate sum at vertex must be < 1");
    row.probs.back() = 1.0 - moved;
  } else {
    row.probs.back() = 1.0;
  }
  return row;
}

void step_dtmc_in_place(const Graph& g, const TransitionRates& rates, const LeaderState& leader,
                        SwarmCounts& s, Rng& rng) {
  check_rates_fit(g, rates);
  if (!leader.repelling) return;
  const VertexId v = leader.vertex;
  const auto& nbrs = g.out_neighbors(v);
  const auto beta = rates.at(v);

  std::int64_t remaining = s.counts.at(v);
  double remaining_mass = 1.0;
  for (std::size_t i = 0; i < nbrs.size() && remaining > 0; ++i) {
    const double p = std::clamp(beta[i] / remaining_mass, 0.0, 1.0);
    std::binomial_distribution<std::int64_t> draw(remaining, p);
    const std::int64_t moved = draw(rng);
    s.counts[nbrs[i]] += moved;
    remaining -= moved;
    remaining_mass -= beta[i];
  }
  s.counts[v] = remaining;
}

SwarmCounts step_dtmc(const Graph& g, const TransitionRates& rates, const LeaderState& leader,
                      const SwarmCounts& s, Rng& rng) {
  SwarmCounts next = s;
  step_dtmc_in_place(g, rates, leader, next, rng);
  return next;
}

void mean_field_step_in_place(const Graph& g, const TransitionRates& rates,
                              const LeaderState& leader, MeanFieldState& s) {
  check_rates_fit(g, rates);
  check_simplex(s.density, g.vertex_count());
  if (!leader.repelling) return;
  const VertexId v = leader.vertex;
  const auto& nbrs = g.out_neighbors(v);
  const auto beta = rates.at(v);
  const double mass = s.density[v];
  double moved = 0.0;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    s.density[nbrs[i]] += beta[i] * mass;
    moved += beta[i];
  }
  s.density[v] = (1.0 - moved) * mass;
}

MeanFieldState mean_field_step(const Graph& g, const TransitionRates& rates,
                               const LeaderState& leader, const MeanFieldState& s) {
  MeanFieldState next = s;
  mean_field_step_in_place(g, rates, leader, next);
  return next;
}

MeanFieldState empirical_distribution(const SwarmCounts& s) {
  const std::int64_t n = s.total();
  if (n <= 0) throw EmptySwarm("empirical distribution of an empty swarm");
  MeanFieldState out;
  out.density.reserve(s.counts.size());
  for (std::int64_t c : s.counts) {
    if (c < 0) throw InvalidState("negative agent count");
    out.density.push_back(static_cast<double>(c) / static_cast<double>(n));
  }
  return out;
}

}  // namespace swarmherd
