#include "qbcast/broadcast.hpp"

#include <algorithm>
#include <numbers>
#include <random>
#include <string>

#include "qbcast/error.hpp"

namespace qbcast {

namespace {

void require_valid(const DagNetwork& g) {
  const auto violations = validate(g);
  if (!violations.empty()) throw Error(ErrorCode::InvalidNetwork, violations.front());
}

std::set<VertexId> agents_of(const DagNetwork& g, const ProtocolOptions& options) {
  if (!options.agents) {
    const auto ns = g.non_sinks();
    return {ns.begin(), ns.end()};
  }
  for (VertexId v : *options.agents) {
    if (!g.graph().contains(v)) throw Error(ErrorCode::UnknownVertex, "agent " + std::to_string(v));
  }
  for (const Edge& e : g.graph().edges()) {
    if (!options.agents->contains(e.tail)) {
      throw Error(ErrorCode::InvalidNetwork, "vertex " + std::to_string(e.tail) + " has outgoing arrows but is not an agent");
    }
  }
  return *options.agents;
}

std::vector<VertexId> outputs_of(const DagNetwork& g, const std::set<VertexId>& agents) {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (!agents.contains(v)) out.push_back(v);
  }
  return out;
}

SiteLayout layout_of(const DagNetwork& g, const std::vector<VertexId>& vertices) {
  std::vector<int> dims;
  dims.reserve(vertices.size());
  for (VertexId v : vertices) dims.push_back(g.dim(v));
  return SiteLayout(std::move(dims));
}

void check_phases(const PhaseAssignment& phases, const std::set<VertexId>& agents) {
  for (VertexId v : agents) {
    if (!phases.contains(v)) throw Error(ErrorCode::PhaseMissing, "no phase for vertex " + std::to_string(v));
  }
  for (const auto& [v, theta] : phases) {
    if (!agents.contains(v)) {
      throw Error(ErrorCode::ValidationError, "phase given for non-agent vertex " + std::to_string(v));
    }
  }
}

double correction_angle(int outcome, int from_dim) {
  return 2.0 * std::numbers::pi * outcome / from_dim;
}

struct Walk {
  const DagNetwork& g;
  const PhaseAssignment& phases;
  const std::vector<VertexId>& agent_order;
  const std::set<VertexId>& agents;
  const std::vector<VertexId>& outputs;
  const std::map<VertexId, double>& theta_effective;
  std::mt19937_64* rng = nullptr;  // null: enumerate
  std::vector<BroadcastResult>* results = nullptr;

  struct Frame {
    MixedRadixRegister state;
    std::vector<VertexId> site_vertex;
    std::map<VertexId, int> outcomes;
    ProtocolTranscript transcript;
    double probability = 1.0;
  };

  std::size_t site_of(const Frame& f, VertexId v) const {
    return static_cast<std::size_t>(std::find(f.site_vertex.begin(), f.site_vertex.end(), v) - f.site_vertex.begin());
  }

  TranscriptEvent correct(Frame& f, VertexId v) const {
    TranscriptEvent event;
    event.vertex = v;
    const std::size_t site = site_of(f, v);
    for (VertexId u : g.graph().parents(v)) {
      if (!agents.contains(u)) continue;
      const int s = f.outcomes.at(u);
      event.corrections.push_back({u, s, g.dim(u)});
      if (s != 0) apply_local_phase(f.state, site, correction_angle(s, g.dim(u)));
    }
    return event;
  }

  void finish(Frame f) const {
    for (VertexId v : outputs) f.transcript.events.push_back(correct(f, v));
    results->push_back(BroadcastResult{std::move(f.state), outputs, std::move(f.transcript), theta_effective,
                                       f.probability});
  }

  void step(Frame f, std::size_t index) const {
    if (index == agent_order.size()) {
      finish(std::move(f));
      return;
    }
    const VertexId v = agent_order[index];
    const std::size_t site = site_of(f, v);
    const double theta = phases.at(v);
    apply_local_phase(f.state, site, theta);
    TranscriptEvent event = correct(f, v);
    event.own_phase = theta;

    auto descend = [&](Branch branch, Frame& parent) {
      Frame child{std::move(branch.state), parent.site_vertex, parent.outcomes, parent.transcript,
                  parent.probability * branch.probability};
      child.site_vertex.erase(child.site_vertex.begin() + static_cast<std::ptrdiff_t>(site));
      child.outcomes[v] = branch.outcome;
      TranscriptEvent e = event;
      e.outcome = branch.outcome;
      e.outcome_probability = branch.probability;
      child.transcript.events.push_back(std::move(e));
      step(std::move(child), index + 1);
    };

    if (rng != nullptr) {
      descend(measure_fourier(f.state, site, *rng), f);
    } else {
      for (Branch& b : measure_fourier(f.state, site)) descend(std::move(b), f);
    }
  }
};

}  // namespace

SiteLayout sink_layout(const DagNetwork& g) { return layout_of(g, g.sinks()); }

std::vector<Edge> edge_application_order(const DagNetwork& g) {
  const auto order = topo_sort(g.graph());
  std::vector<std::size_t> position(g.vertex_count());
  for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = i;
  std::vector<Edge> edges(g.graph().edges().begin(), g.graph().edges().end());
  std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
    if (position[a.head] != position[b.head]) return position[a.head] > position[b.head];
    return a.tail < b.tail;
  });
  return edges;
}

MixedRadixRegister build_resource_state(const DagNetwork& g, const StateSpec& psi) {
  require_valid(g);
  const SiteLayout layout(std::vector<int>(g.dims().begin(), g.dims().end()));
  const auto sink_ids = g.sinks();
  std::vector<Placement> parts;
  parts.push_back({std::vector<std::size_t>(sink_ids.begin(), sink_ids.end()), make_state(sink_layout(g), psi)});
  for (VertexId v : g.non_sinks()) {
    parts.push_back({{v}, make_state(SiteLayout({g.dim(v)}), BasisSpec{{0}})});
  }
  MixedRadixRegister reg = compose(layout, parts);
  for (const Edge& e : edge_application_order(g)) apply_controlled_shift(reg, e.head, e.tail);
  return reg;
}

std::map<VertexId, double> effective_phases(const DagNetwork& g, const PhaseAssignment& phases,
                                            const ProtocolOptions& options) {
  const auto agents = agents_of(g, options);
  check_phases(phases, agents);
  std::map<VertexId, double> theta;
  for (VertexId v : outputs_of(g, agents)) {
    double total = 0.0;
    for (VertexId w : reach(g.graph(), v).predecessors) {
      if (agents.contains(w)) total += static_cast<double>(count_paths(g.graph(), w, v)) * phases.at(w);
    }
    theta[v] = total;
  }
  return theta;
}

std::vector<BroadcastResult> run_protocol(const DagNetwork& g, const PhaseAssignment& phases, const StateSpec& psi,
                                          const Mode& mode) {
  return run_protocol_on(g, build_resource_state(g, psi), phases, mode);
}

std::vector<BroadcastResult> run_protocol_on(const DagNetwork& g, MixedRadixRegister state,
                                             const PhaseAssignment& phases, const Mode& mode,
                                             const ProtocolOptions& options) {
  const auto agents = agents_of(g, options);
  check_phases(phases, agents);
  if (state.layout() != SiteLayout(std::vector<int>(g.dims().begin(), g.dims().end()))) {
    throw Error(ErrorCode::LayoutMismatch, "register layout does not match the network dimensions");
  }

  std::vector<VertexId> agent_order;
  for (VertexId v : topo_sort(g.graph())) {
    if (agents.contains(v)) agent_order.push_back(v);
  }
  const bool enumerate = std::holds_alternative<EnumerateMode>(mode);
  if (enumerate) {
    std::size_t branches = 1;
    for (VertexId v : agent_order) {
      branches *= static_cast<std::size_t>(g.dim(v));
      if (branches > options.branch_cap) {
        throw Error(ErrorCode::BranchExplosion, "more than " + std::to_string(options.branch_cap) + " branches");
      }
    }
  }

  const auto outputs = outputs_of(g, agents);
  const auto theta = effective_phases(g, phases, options);
  std::vector<BroadcastResult> results;
  std::mt19937_64 rng(enumerate ? 0 : std::get<SampleMode>(mode).seed);
  Walk walk{g, phases, agent_order, agents, outputs, theta, enumerate ? nullptr : &rng, &results};

  std::vector<VertexId> site_vertex(g.vertex_count());
  for (VertexId v = 0; v < g.vertex_count(); ++v) site_vertex[v] = v;
  walk.step(Walk::Frame{std::move(state), std::move(site_vertex), {}, {}, 1.0}, 0);
  return results;
}

MixedRadixRegister expected_sink_state(const DagNetwork& g, const PhaseAssignment& phases, const StateSpec& psi,
                                       const ProtocolOptions& options) {
  const auto agents = agents_of(g, options);
  const auto outputs = outputs_of(g, agents);
  const auto theta = effective_phases(g, phases, options);
  MixedRadixRegister reg = make_state(layout_of(g, outputs), psi);
  for (std::size_t i = 0; i < outputs.size(); ++i) apply_local_phase(reg, i, theta.at(outputs[i]));
  return reg;
}

}  // namespace qbcast
