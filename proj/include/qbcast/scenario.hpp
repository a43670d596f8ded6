#pragma once

// JSON scenario files:
//
//   {"vertices": N, "edges": [[tail, head], ...], "sink_dims": {"id": d, ...},
//    "phases": {"id": theta, ...}, "psi": {"preset": "plus"|"zero"}
//    | {"amps": [[re, im], ...]} | {"basis": [digit, ...]},
//    "mode": "sample"|"enumerate", "seed": u64, "detach": [id, ...]}
//
// Only the graph fields are required. Non-sink dimensions are always
// computed from the sink dimensions; anything else in sink_dims is ignored.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qbcast/broadcast.hpp"
#include "qbcast/dag.hpp"
#include "qbcast/qudit.hpp"

namespace qbcast {

enum class ModeKind { sample, enumerate };

struct Scenario {
  DagNetwork network;
  PhaseAssignment phases;
  StateSpec psi = PresetSpec{{Preset::plus}};
  std::optional<ModeKind> mode;
  std::optional<std::uint64_t> seed;
  std::vector<VertexId> detach;
  /// Normalized JSON text of the parsed input, used for config hashes.
  std::string canonical;
};

/// Throws Error with ParseError (malformed JSON or field), ValidationError,
/// or MissingSinkDim.
Scenario parse_scenario_text(std::string_view text);
Scenario parse_scenario(const std::filesystem::path& path);

/// Enumerate when the network has at most `enumerate_limit` branches and no
/// mode was requested; sample otherwise. Sample mode needs a seed (the
/// override wins) and throws ValidationError without one.
Mode resolve_mode(const Scenario& scenario, std::size_t branch_count, std::optional<std::uint64_t> seed_override,
                  std::size_t enumerate_limit = 1024);

/// FNV-1a, rendered as 16 hex digits.
std::string config_hash(std::string_view text);

}  // namespace qbcast
