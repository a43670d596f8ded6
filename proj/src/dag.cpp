#include "qbcast/dag.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>

#include "qbcast/error.hpp"

namespace qbcast {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::UnknownVertex: return "UnknownVertex";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::ParallelEdge: return "ParallelEdge";
    case ErrorCode::MissingSinkDim: return "MissingSinkDim";
    case ErrorCode::InvalidNetwork: return "InvalidNetwork";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::InvalidSite: return "InvalidSite";
    case ErrorCode::SameSite: return "SameSite";
    case ErrorCode::ControlInWord: return "ControlInWord";
    case ErrorCode::ZeroProbabilityBranchRequested: return "ZeroProbabilityBranchRequested";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::PhaseMissing: return "PhaseMissing";
    case ErrorCode::BranchExplosion: return "BranchExplosion";
    case ErrorCode::AncillaAlreadyMeasured: return "AncillaAlreadyMeasured";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

Digraph::Digraph(std::size_t vertex_count, std::vector<Edge> edges)
    : vertex_count_(vertex_count),
      edges_(std::move(edges)),
      children_(vertex_count),
      parents_(vertex_count) {
  for (const Edge& e : edges_) {
    if (e.tail >= vertex_count_ || e.head >= vertex_count_) {
      throw Error(ErrorCode::UnknownVertex, "edge (" + std::to_string(e.tail) + "," +
                                                std::to_string(e.head) + ") references a missing vertex");
    }
    if (e.tail == e.head) {
      throw Error(ErrorCode::SelfLoop, "self loop at " + std::to_string(e.tail));
    }
  }
  std::sort(edges_.begin(), edges_.end());
  if (auto dup = std::adjacent_find(edges_.begin(), edges_.end()); dup != edges_.end()) {
    throw Error(ErrorCode::ParallelEdge,
                "repeated edge (" + std::to_string(dup->tail) + "," + std::to_string(dup->head) + ")");
  }
  for (const Edge& e : edges_) {
    children_[e.tail].push_back(e.head);
    parents_[e.head].push_back(e.tail);
  }
  for (auto& p : parents_) std::sort(p.begin(), p.end());
}

void Digraph::check_vertex(VertexId v) const {
  if (!contains(v)) throw Error(ErrorCode::UnknownVertex, "vertex " + std::to_string(v));
}

std::span<const VertexId> Digraph::children(VertexId v) const {
  check_vertex(v);
  return children_[v];
}

std::span<const VertexId> Digraph::parents(VertexId v) const {
  check_vertex(v);
  return parents_[v];
}

Digraph Digraph::without_outgoing(VertexId v) const {
  check_vertex(v);
  std::vector<Edge> kept;
  std::copy_if(edges_.begin(), edges_.end(), std::back_inserter(kept),
               [v](const Edge& e) { return e.tail != v; });
  return Digraph(vertex_count_, std::move(kept));
}

std::vector<VertexId> topo_sort(const Digraph& g) {
  const std::size_t n = g.vertex_count();
  std::vector<std::size_t> indegree(n);
  for (const Edge& e : g.edges()) ++indegree[e.head];

  std::priority_queue<VertexId, std::vector<VertexId>, std::greater<>> ready;
  for (VertexId v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push(v);
  }
  std::vector<VertexId> order;
  order.reserve(n);
  while (!ready.empty()) {
    const VertexId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (VertexId w : g.children(v)) {
      if (--indegree[w] == 0) ready.push(w);
    }
  }
  if (order.size() != n) throw Error(ErrorCode::CycleDetected, "graph is not acyclic");
  return order;
}

std::vector<VertexId> sinks(const Digraph& g) {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (g.is_sink(v)) out.push_back(v);
  }
  return out;
}

std::vector<VertexId> sources(const Digraph& g) {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (g.is_source(v)) out.push_back(v);
  }
  return out;
}

namespace {

std::set<VertexId> closure(VertexId start, const std::function<std::span<const VertexId>(VertexId)>& next) {
  std::set<VertexId> seen;
  std::vector<VertexId> stack(next(start).begin(), next(start).end());
  while (!stack.empty()) {
    const VertexId v = stack.back();
    stack.pop_back();
    if (!seen.insert(v).second) continue;
    for (VertexId w : next(v)) stack.push_back(w);
  }
  // Only reachable through a cycle; Succ/Pred exclude the vertex itself.
  seen.erase(start);
  return seen;
}

}  // namespace

Reach reach(const Digraph& g, VertexId x) {
  if (!g.contains(x)) throw Error(ErrorCode::UnknownVertex, "vertex " + std::to_string(x));
  return Reach{closure(x, [&](VertexId v) { return g.children(v); }),
               closure(x, [&](VertexId v) { return g.parents(v); })};
}

std::uint64_t count_paths(const Digraph& g, VertexId from, VertexId to) {
  if (!g.contains(from)) throw Error(ErrorCode::UnknownVertex, "vertex " + std::to_string(from));
  if (!g.contains(to)) throw Error(ErrorCode::UnknownVertex, "vertex " + std::to_string(to));
  const auto order = topo_sort(g);
  if (from == to) return 0;

  // paths[x] = number of paths x ~> to, with the empty path counted at `to`.
  std::vector<std::uint64_t> paths(g.vertex_count(), 0);
  paths[to] = 1;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (*it == to) continue;
    std::uint64_t total = 0;
    for (VertexId w : g.children(*it)) total += paths[w];
    paths[*it] = total;
  }
  return paths[from];
}

DagNetwork::DagNetwork(Digraph graph, std::vector<int> dims) : graph_(std::move(graph)), dims_(std::move(dims)) {
  if (dims_.size() != graph_.vertex_count()) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(graph_.vertex_count()) +
                                                  " dimensions, got " + std::to_string(dims_.size()));
  }
}

int DagNetwork::dim(VertexId v) const {
  if (!graph_.contains(v)) throw Error(ErrorCode::UnknownVertex, "vertex " + std::to_string(v));
  return dims_[v];
}

std::size_t DagNetwork::total_dimension() const noexcept {
  std::size_t total = 1;
  for (int d : dims_) {
    const auto du = static_cast<std::size_t>(std::max(d, 1));
    if (total > std::numeric_limits<std::size_t>::max() / du) return std::numeric_limits<std::size_t>::max();
    total *= du;
  }
  return total;
}

std::vector<VertexId> DagNetwork::non_sinks() const {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < vertex_count(); ++v) {
    if (!graph_.is_sink(v)) out.push_back(v);
  }
  return out;
}

DagNetwork DagNetwork::without_outgoing(VertexId v) const {
  return DagNetwork(graph_.without_outgoing(v), dims_);
}

DagNetwork assign_dims(const Digraph& topology, const std::map<VertexId, int>& sink_dims) {
  const auto order = topo_sort(topology);
  std::vector<int> dims(topology.vertex_count(), 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const VertexId v = *it;
    if (topology.is_sink(v)) {
      auto found = sink_dims.find(v);
      if (found == sink_dims.end()) {
        throw Error(ErrorCode::MissingSinkDim, "no dimension given for sink " + std::to_string(v));
      }
      if (found->second < 2) {
        throw Error(ErrorCode::MissingSinkDim, "sink " + std::to_string(v) + " has dimension " +
                                                   std::to_string(found->second) + " < 2");
      }
      dims[v] = found->second;
    } else {
      int d = 1;
      for (VertexId w : topology.children(v)) d += dims[w] - 1;
      dims[v] = d;
    }
  }
  return DagNetwork(topology, std::move(dims));
}

std::vector<std::string> validate(const DagNetwork& net) {
  std::vector<std::string> violations;
  const Digraph& g = net.graph();
  try {
    (void)topo_sort(g);
  } catch (const Error&) {
    violations.emplace_back("not acyclic");
  }
  for (VertexId v = 0; v < net.vertex_count(); ++v) {
    if (net.dim(v) < 2) {
      violations.push_back("dimension below 2 at " + std::to_string(v));
      continue;
    }
    if (g.is_sink(v)) continue;
    int expected = 1;
    for (VertexId w : g.children(v)) expected += net.dim(w) - 1;
    if (expected != net.dim(v)) {
      violations.push_back("dimension recursion broken at " + std::to_string(v) + " (has " +
                           std::to_string(net.dim(v)) + ", successors require " + std::to_string(expected) + ")");
    }
  }
  return violations;
}

}  // namespace qbcast
