#include "swarmherd/graph.hpp"

#include <algorithm>
#include <queue>

namespace swarmherd {

Graph::Graph(std::size_t vertex_count, const std::vector<Edge>& edges)
    : neighbors_(vertex_count) {
  if (vertex_count == 0) {
    throw InvalidDimension("graph must have at least one vertex");
  }
  edges_.reserve(edges.size() + vertex_count);
  for (const Edge& e : edges) {
    if (e.source >= vertex_count || e.target >= vertex_count) {
      throw InvalidGraph("edge (" + std::to_string(e.source) + "," +
                         std::to_string(e.target) + ") has an endpoint outside [0, " +
                         std::to_string(vertex_count) + ")");
    }
    edges_.push_back(e);
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
    throw InvalidGraph("duplicate edge in edge list");
  }
  for (VertexId v = 0; v < vertex_count; ++v) {
    if (!std::binary_search(edges_.begin(), edges_.end(), Edge{v, v})) {
      edges_.push_back(Edge{v, v});
    }
  }
  std::sort(edges_.begin(), edges_.end());
  for (const Edge& e : edges_) {
    if (e.source != e.target) neighbors_[e.source].push_back(e.target);
  }
}

void Graph::check_vertex(VertexId v) const {
  if (v >= neighbors_.size()) {
    throw VertexOutOfRange("vertex " + std::to_string(v) + " not in graph with " +
                           std::to_string(neighbors_.size()) + " vertices");
  }
}

const std::vector<VertexId>& Graph::out_neighbors(VertexId v) const {
  check_vertex(v);
  return neighbors_[v];
}

bool Graph::has_edge(VertexId source, VertexId target) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge{source, target});
}

std::size_t Graph::in_degree(VertexId v) const {
  check_vertex(v);
  return static_cast<std::size_t>(std::count_if(edges_.begin(), edges_.end(), [v](const Edge& e) {
    return e.target == v && e.source != v;
  }));
}

std::size_t Graph::max_out_degree() const {
  std::size_t best = 0;
  for (const auto& n : neighbors_) best = std::max(best, n.size());
  return best;
}

Graph make_grid(std::size_t rows, std::size_t cols) {
  if (rows < 1 || cols < 1) {
    throw InvalidDimension("grid dimensions must be >= 1, got " + std::to_string(rows) + "x" +
                           std::to_string(cols));
  }
  if (rows * cols < 2) {
    throw InvalidDimension("grid must have at least two vertices");
  }
  std::vector<Edge> edges;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const VertexId v = r * cols + c;
      if (c + 1 < cols) {
        edges.push_back({v, v + 1});
        edges.push_back({v + 1, v});
      }
      if (r + 1 < rows) {
        edges.push_back({v, v + cols});
        edges.push_back({v + cols, v});
      }
    }
  }
  Graph g(rows * cols, edges);
  g.grid_ = GridShape{rows, cols};
  return g;
}

namespace {

std::size_t reachable_count(const Graph& g, bool reverse) {
  const std::size_t m = g.vertex_count();
  std::vector<std::vector<VertexId>> adj(m);
  for (const Edge& e : g.edges()) {
    if (reverse) {
      adj[e.target].push_back(e.source);
    } else {
      adj[e.source].push_back(e.target);
    }
  }
  std::vector<bool> seen(m, false);
  std::queue<VertexId> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!frontier.empty()) {
    const VertexId v = frontier.front();
    frontier.pop();
    for (VertexId w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        frontier.push(w);
      }
    }
  }
  return count;
}

}  // namespace

bool is_strongly_connected(const Graph& g) {
  // Strongly connected iff vertex 0 reaches everything in both g and its transpose.
  const std::size_t m = g.vertex_count();
  return reachable_count(g, false) == m && reachable_count(g, true) == m;
}

}  // namespace swarmherd
