#pragma once

// Helpers shared by the test binaries: deterministic random networks and
// states, plus a few brute-force references that do not touch the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "qbcast/dag.hpp"
#include "qbcast/qudit.hpp"

namespace qbcast::testing {

inline constexpr double kPi = 3.14159265358979323846;

inline DagNetwork network(std::size_t n, std::vector<Edge> edges, std::map<VertexId, int> sink_dims) {
  return assign_dims(Digraph(n, std::move(edges)), sink_dims);
}

/// Sinks of `edges` on n vertices, all given dimension d.
inline DagNetwork uniform_network(std::size_t n, std::vector<Edge> edges, int d = 2) {
  Digraph g(n, std::move(edges));
  std::map<VertexId, int> sink_dims;
  for (VertexId v : sinks(g)) sink_dims[v] = d;
  return assign_dims(g, sink_dims);
}

inline DagNetwork chain(std::size_t n, int d = 2) {
  std::vector<Edge> edges;
  for (VertexId v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1});
  return uniform_network(n, edges, d);
}

/// Acyclic graph on n vertices: arrows follow a hidden random order, so
/// vertex ids are not a topological order.
inline Digraph random_digraph(std::mt19937_64& rng, std::size_t n, double edge_probability) {
  std::vector<VertexId> rank(n);
  std::iota(rank.begin(), rank.end(), 0);
  std::shuffle(rank.begin(), rank.end(), rng);
  std::bernoulli_distribution coin(edge_probability);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.push_back({rank[i], rank[j]});
    }
  }
  return Digraph(n, edges);
}

struct NetworkLimits {
  std::size_t max_vertices = 7;
  std::size_t max_total_dimension = 4096;
  /// Bound on prod d(v) over non-sinks, i.e. ancilla branches.
  std::size_t max_ancilla_branches = 1024;
  /// Bound on the preparation register (vertices plus ancillas).
  std::size_t max_prep_dimension = 1 << 20;
};

inline std::size_t ancilla_branches(const DagNetwork& g) {
  std::size_t out = 1;
  for (VertexId v : g.non_sinks()) out *= static_cast<std::size_t>(g.dim(v));
  return out;
}

/// Random valid network with at least one arrow and sink dims in {2, 3}.
inline DagNetwork random_network(std::mt19937_64& rng, const NetworkLimits& limits = {}) {
  std::uniform_int_distribution<std::size_t> size(2, limits.max_vertices);
  std::uniform_real_distribution<double> density(0.2, 0.6);
  std::uniform_int_distribution<int> sink_dim(2, 3);
  for (;;) {
    const Digraph g = random_digraph(rng, size(rng), density(rng));
    if (g.edges().empty()) continue;
    std::map<VertexId, int> dims;
    for (VertexId v : sinks(g)) dims[v] = sink_dim(rng);
    DagNetwork net = assign_dims(g, dims);
    const std::size_t total = net.total_dimension();
    const std::size_t branches = ancilla_branches(net);
    if (total > limits.max_total_dimension || branches > limits.max_ancilla_branches) continue;
    if (total * branches > limits.max_prep_dimension) continue;
    return net;
  }
}

inline std::vector<Amplitude> random_amplitudes(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> gauss;
  std::vector<Amplitude> amps(n);
  double norm = 0.0;
  for (auto& a : amps) {
    a = {gauss(rng), gauss(rng)};
    norm += std::norm(a);
  }
  for (auto& a : amps) a /= std::sqrt(norm);
  return amps;
}

inline MixedRadixRegister random_register(std::mt19937_64& rng, std::vector<int> dims) {
  SiteLayout layout(std::move(dims));
  return MixedRadixRegister(layout, random_amplitudes(rng, layout.total_dimension()));
}

inline double random_angle(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(-kPi, kPi)(rng);
}

/// Counts directed paths by walking every one of them.
inline std::uint64_t walk_paths(const Digraph& g, VertexId from, VertexId to) {
  std::function<std::uint64_t(VertexId)> walk = [&](VertexId v) -> std::uint64_t {
    if (v == to) return 1;
    std::uint64_t total = 0;
    for (const Edge& e : g.edges()) {
      if (e.tail == v) total += walk(e.head);
    }
    return total;
  };
  return from == to ? 0 : walk(from);
}

inline std::vector<int> digits_of(std::size_t flat, const std::vector<int>& dims) {
  std::vector<int> out(dims.size());
  for (std::size_t i = dims.size(); i-- > 0;) {
    out[i] = static_cast<int>(flat % static_cast<std::size_t>(dims[i]));
    flat /= static_cast<std::size_t>(dims[i]);
  }
  return out;
}

}  // namespace qbcast::testing
