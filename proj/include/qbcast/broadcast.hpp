#pragma once

// Phase-gate broadcasting over a DAG network.
//
// The resource state is built by controlled shifts CX_{v<=w}, one per arrow
// v->w, that shift the TAIL controlled by the HEAD. Agents then work in
// topological order: apply their own phase, apply the corrections sent by
// their measured direct predecessors, measure in the fourier basis and
// publish the outcome. What is left on the output vertices is
// (x)_v U_v(Theta_v)|psi>, Theta_v = sum_w n(w -> v) theta_w.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "qbcast/dag.hpp"
#include "qbcast/qudit.hpp"

namespace qbcast {

using PhaseAssignment = std::map<VertexId, double>;

struct SampleMode {
  std::uint64_t seed = 0;
};
struct EnumerateMode {};
using Mode = std::variant<SampleMode, EnumerateMode>;

inline constexpr std::size_t kMaxBranches = 100000;

struct PhaseCorrection {
  VertexId from = 0;
  int outcome = 0;
  int from_dim = 0;
};

struct TranscriptEvent {
  VertexId vertex = 0;
  double own_phase = 0.0;
  std::vector<PhaseCorrection> corrections;
  /// Empty for output vertices, which only apply corrections.
  std::optional<int> outcome;
  double outcome_probability = 1.0;
};

struct ProtocolTranscript {
  std::vector<TranscriptEvent> events;
};

struct BroadcastResult {
  /// Register over `outputs`, in that order.
  MixedRadixRegister sink_state;
  std::vector<VertexId> outputs;
  ProtocolTranscript transcript;
  std::map<VertexId, double> theta_effective;
  /// Probability of this outcome combination.
  double probability = 1.0;
};

/// Which vertices act as measuring agents. Defaults to every non-sink; a
/// vertex whose outgoing arrows were retired can stay an agent so that its
/// phase is applied and measured away without reaching anyone.
struct ProtocolOptions {
  std::optional<std::set<VertexId>> agents;
  std::size_t branch_cap = kMaxBranches;
};

/// Layout of the sink sites, ascending vertex id.
SiteLayout sink_layout(const DagNetwork& g);

/// Arrows ordered for left-to-right application: sorted by descending
/// topological position of the head, then ascending tail.
std::vector<Edge> edge_application_order(const DagNetwork& g);

/// |Psi(psi)> over all vertices (site i = vertex i). `psi` is read on the
/// sink layout. Throws InvalidNetwork, DimensionMismatch.
MixedRadixRegister build_resource_state(const DagNetwork& g, const StateSpec& psi);

/// Theta_v for every output vertex.
std::map<VertexId, double> effective_phases(const DagNetwork& g, const PhaseAssignment& phases,
                                            const ProtocolOptions& options = {});

/// Full protocol on the resource state of a valid network. Sample mode
/// returns one result; enumerate mode one per outcome combination, ordered
/// lexicographically by the outcome tuple in agent order.
std::vector<BroadcastResult> run_protocol(const DagNetwork& g, const PhaseAssignment& phases, const StateSpec& psi,
                                          const Mode& mode);

/// Protocol on an arbitrary register over all vertices of `g` (site i =
/// vertex i). `g` only needs to be acyclic.
std::vector<BroadcastResult> run_protocol_on(const DagNetwork& g, MixedRadixRegister state,
                                             const PhaseAssignment& phases, const Mode& mode,
                                             const ProtocolOptions& options = {});

/// Closed-form output (x)_v U_v(Theta_v)|psi> on the output vertices.
MixedRadixRegister expected_sink_state(const DagNetwork& g, const PhaseAssignment& phases, const StateSpec& psi,
                                       const ProtocolOptions& options = {});

}  // namespace qbcast
