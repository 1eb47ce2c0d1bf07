#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmherd {

/// Vertex index, 0-based. Grid vertices are numbered row-major.
using VertexId = std::size_t;

struct Edge {
  VertexId source;
  VertexId target;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct GridShape {
  std::size_t rows;
  std::size_t cols;

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

class InvalidDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidGraph : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class VertexOutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Directed graph on which the leader and followers move.
///
/// Every vertex carries a self-edge. Outgoing non-self neighbors are kept
/// sorted by target index; that order fixes action indexing, multinomial
/// category order and Q-table layout. Immutable after construction.
class Graph {
 public:
  /// Builds a graph from an explicit edge list. Missing self-edges are added;
  /// out-of-range endpoints and duplicate edges are rejected.
  Graph(std::size_t vertex_count, const std::vector<Edge>& edges);

  std::size_t vertex_count() const { return neighbors_.size(); }

  /// Full edge set including self-edges, sorted by (source, target).
  const std::vector<Edge>& edges() const { return edges_; }

  /// Non-self targets of edges leaving `v`, strictly increasing.
  const std::vector<VertexId>& out_neighbors(VertexId v) const;

  bool has_edge(VertexId source, VertexId target) const;

  std::size_t in_degree(VertexId v) const;
  std::size_t out_degree(VertexId v) const { return out_neighbors(v).size(); }
  std::size_t max_out_degree() const;

  /// Set only for graphs produced by make_grid.
  const std::optional<GridShape>& grid() const { return grid_; }

 private:
  friend Graph make_grid(std::size_t rows, std::size_t cols);

  void check_vertex(VertexId v) const;

  std::vector<Edge> edges_;
  std::vector<std::vector<VertexId>> neighbors_;
  std::optional<GridShape> grid_;
};

/// Bidirected rows x cols lattice with 4-neighborhood and self-edges.
Graph make_grid(std::size_t rows, std::size_t cols);

bool is_strongly_connected(const Graph& g);

}  // namespace swarmherd
