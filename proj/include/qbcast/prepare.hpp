#pragma once

// Constant-round preparation of the broadcast resource state.
//
// Each non-sink v gets an ancilla v' in |+>, entangled through
//
//     CW_{v',v} = sum_l |l><l|_{v'} (x) (W_v)^l,
//     W_v = U_v(2pi/d(v)) prod_{v->w} U_w(-2pi/d(v)),
//
// which multiplies a basis state by exp(2pi i l K_v / d(v)) with
// K_v = k_v - sum_{v->w} k_w. Measuring v' in the fourier basis with outcome
// s enforces K_v = s (mod d(v)); shift corrections then restore K_v = 0.
// A computational-basis measurement of v' instead leaves the known phase
// word (W_v)^l and cuts v's outgoing arrows out of the network.

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "qbcast/broadcast.hpp"
#include "qbcast/dag.hpp"
#include "qbcast/qudit.hpp"

namespace qbcast {

enum class AncillaState { unmeasured, measured_fourier, measured_computational };

struct AncillaStatus {
  AncillaState state = AncillaState::unmeasured;
  int outcome = 0;
};

struct SiteTag {
  VertexId vertex = 0;
  bool ancilla = false;

  bool operator==(const SiteTag&) const = default;
};

/// Register over V plus one ancilla per non-sink of the original network.
/// Vertex sites come first in id order, ancillas after them.
struct PrepState {
  /// Current network; detachment removes arrows but keeps dimensions.
  DagNetwork network;
  MixedRadixRegister reg;
  std::vector<SiteTag> sites;
  std::map<VertexId, AncillaStatus> ancillas;

  std::optional<std::size_t> site_of(SiteTag tag) const;
  std::vector<VertexId> unmeasured_ancillas() const;
};

/// Stabilizer word W_v of vertex v, addressed by vertex id.
PhaseWord stabilizer_word(const DagNetwork& g, VertexId v);

/// Product state |+> on non-sinks and ancillas, psi on sinks, followed by
/// every CW_{v',v}. Throws InvalidNetwork, DimensionMismatch.
PrepState build_prep_state(const DagNetwork& g, const StateSpec& psi);

struct AncillaOutcome {
  std::map<VertexId, int> outcomes;
  /// Register over V (site i = vertex i).
  MixedRadixRegister state;
  double probability = 1.0;
};

/// Fourier-measures every remaining ancilla. All ancillas already measured
/// in the computational basis are skipped. Throws BranchExplosion.
std::vector<AncillaOutcome> measure_ancillas(const PrepState& prep, const Mode& mode);

/// Same with every outcome forced. Throws ZeroProbabilityBranchRequested.
AncillaOutcome measure_ancillas_as(const PrepState& prep, const std::map<VertexId, int>& outcomes);

struct ShiftPower {
  VertexId vertex = 0;
  int power = 0;

  bool operator==(const ShiftPower&) const = default;
};

/// Feedforward shifts for a pattern of fourier outcomes: each nonzero s_v
/// contributes X_v^{-s_v} and X_u^{-n(u,v) s_v} for every strict
/// predecessor u. Powers are reduced mod d(u); zero powers are dropped.
/// Throws UnknownVertex.
std::vector<ShiftPower> correction_operator(const DagNetwork& g, const std::map<VertexId, int>& outcomes);

/// Whether correction_operator restores K = 0 for a nonzero outcome at v.
/// Undoing the outcome moves k_v by -s or by d(v) - s depending on the
/// branch, and a single shift power on a strict predecessor u can absorb
/// both only when n(u,v) * d(v) = 0 (mod d(u)).
bool shift_correction_exact(const DagNetwork& g, VertexId v);

/// Applies shift powers to a register over V.
void apply_corrections(MixedRadixRegister& state, const std::vector<ShiftPower>& corrections);

struct PreparedBranch {
  std::map<VertexId, int> outcomes;
  std::vector<ShiftPower> corrections;
  MixedRadixRegister state;
  double probability = 1.0;
};

/// Measures remaining ancillas and applies the corrections computed on
/// prep.network.
std::vector<PreparedBranch> complete_preparation(const PrepState& prep, const Mode& mode);

/// build_prep_state followed by complete_preparation.
std::vector<PreparedBranch> prepare_resource(const DagNetwork& g, const StateSpec& psi, const Mode& mode);

struct StabilizerReport {
  /// ||W_v|Psi> - |Psi>|| per non-sink v.
  std::map<VertexId, double> deviation;
  /// Whether every amplitude above 1e-12 has K_v = 0 at every non-sink.
  bool support_ok = true;
  double max_deviation() const;
};

/// Throws LayoutMismatch when the register is not over g's dimensions.
StabilizerReport check_stabilizers(const MixedRadixRegister& state, const DagNetwork& g);

struct Detachment {
  int outcome = 0;
  PrepState state;
  /// (W_v)^l on vertex ids; apply its negation to cancel.
  PhaseWord residual;
  double probability = 1.0;
};

/// Computational-basis measurement of v'. Throws AncillaAlreadyMeasured,
/// UnknownVertex.
std::vector<Detachment> detach_vertex(const PrepState& prep, VertexId v, const Mode& mode);

/// Removes the residual phase word left by a detachment.
void cancel_residual(PrepState& prep, const PhaseWord& residual);

/// Ideal output of the preparation on `g`: the uniform superposition on
/// non-sinks projected onto K_v = 0 at every vertex with outgoing arrows,
/// psi on `psi_sites`. For an unmodified network this is the resource state.
MixedRadixRegister projected_reference(const DagNetwork& g, const std::vector<VertexId>& psi_sites,
                                       const StateSpec& psi);

}  // namespace qbcast
