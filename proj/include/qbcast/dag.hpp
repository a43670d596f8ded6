#pragma once

// Directed acyclic network model: topology, ordering, reachability, path
// counts and the qudit dimension recursion
//
//     d(v) - 1 = sum over arrows v->w of (d(w) - 1)
//
// that fixes every non-sink dimension from the sink dimensions.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace qbcast {

/// Dense vertex index in [0, vertex_count).
using VertexId = std::uint32_t;

/// Arrow tail -> head.
struct Edge {
  VertexId tail = 0;
  VertexId head = 0;

  auto operator<=>(const Edge&) const = default;
};

/// Immutable directed graph on dense vertex ids. Rejects self loops,
/// parallel arrows and out-of-range endpoints; cycles are allowed here and
/// reported by topo_sort / validate.
class Digraph {
 public:
  Digraph() = default;
  Digraph(std::size_t vertex_count, std::vector<Edge> edges);

  std::size_t vertex_count() const noexcept { return vertex_count_; }
  std::span<const Edge> edges() const noexcept { return edges_; }

  /// Direct successors (heads of outgoing arrows), ascending.
  std::span<const VertexId> children(VertexId v) const;
  /// Direct predecessors (tails of incoming arrows), ascending.
  std::span<const VertexId> parents(VertexId v) const;

  bool contains(VertexId v) const noexcept { return v < vertex_count_; }
  bool is_sink(VertexId v) const { return children(v).empty(); }
  bool is_source(VertexId v) const { return parents(v).empty(); }

  /// Same graph with every arrow leaving v removed.
  Digraph without_outgoing(VertexId v) const;

 private:
  void check_vertex(VertexId v) const;

  std::size_t vertex_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<VertexId>> children_;
  std::vector<std::vector<VertexId>> parents_;
};

/// Kahn's algorithm, ties broken by ascending id. Throws CycleDetected.
std::vector<VertexId> topo_sort(const Digraph& g);

std::vector<VertexId> sinks(const Digraph& g);
std::vector<VertexId> sources(const Digraph& g);

struct Reach {
  std::set<VertexId> successors;
  std::set<VertexId> predecessors;
};

/// Strict transitive successors and predecessors of x (x itself excluded).
Reach reach(const Digraph& g, VertexId x);

/// Number of distinct directed paths from `from` to `to`; zero when
/// from == to. Requires an acyclic graph.
std::uint64_t count_paths(const Digraph& g, VertexId from, VertexId to);

/// Topology plus one qudit dimension per vertex.
///
/// The constructor only checks shape (one dimension per vertex). Whether
/// the dimensions obey the recursion is a separate question answered by
/// validate(): networks with retired arrows keep their original dimensions.
class DagNetwork {
 public:
  DagNetwork() = default;
  DagNetwork(Digraph graph, std::vector<int> dims);

  const Digraph& graph() const noexcept { return graph_; }
  std::span<const int> dims() const noexcept { return dims_; }
  int dim(VertexId v) const;
  std::size_t vertex_count() const noexcept { return graph_.vertex_count(); }

  /// Product of all vertex dimensions, saturating at SIZE_MAX.
  std::size_t total_dimension() const noexcept;

  std::vector<VertexId> sinks() const { return qbcast::sinks(graph_); }
  /// Vertices with at least one outgoing arrow, ascending.
  std::vector<VertexId> non_sinks() const;

  DagNetwork without_outgoing(VertexId v) const;

 private:
  Digraph graph_;
  std::vector<int> dims_;
};

/// Computes non-sink dimensions bottom-up from the sink dimensions.
/// Throws CycleDetected, MissingSinkDim (absent or < 2 sink entry).
DagNetwork assign_dims(const Digraph& topology, const std::map<VertexId, int>& sink_dims);

/// All violations of acyclicity, dims >= 2 and the dimension recursion;
/// empty when the network is valid.
std::vector<std::string> validate(const DagNetwork& net);

inline bool is_valid(const DagNetwork& net) { return validate(net).empty(); }

}  // namespace qbcast
