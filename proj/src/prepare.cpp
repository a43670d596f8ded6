#include "qbcast/prepare.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "qbcast/error.hpp"

namespace qbcast {

namespace {

int positive_mod(long long value, int d) {
  const long long r = value % d;
  return static_cast<int>(r < 0 ? r + d : r);
}

SiteLayout vertex_layout(const DagNetwork& g) { return SiteLayout(std::vector<int>(g.dims().begin(), g.dims().end())); }

int k_value(const DagNetwork& g, const SiteLayout& layout, std::size_t flat, VertexId v) {
  int k = layout.digit(flat, v);
  for (VertexId w : g.graph().children(v)) k -= layout.digit(flat, w);
  return k;
}

std::size_t checked_branch_count(const PrepState& prep, const std::vector<VertexId>& ancillas) {
  std::size_t branches = 1;
  for (VertexId v : ancillas) {
    branches *= static_cast<std::size_t>(prep.network.dim(v));
    if (branches > kMaxBranches) {
      throw Error(ErrorCode::BranchExplosion, "more than " + std::to_string(kMaxBranches) + " ancilla branches");
    }
  }
  return branches;
}

struct AncillaWalk {
  const std::vector<VertexId>& order;
  std::mt19937_64* rng = nullptr;
  const std::map<VertexId, int>* forced = nullptr;
  std::vector<AncillaOutcome>* out = nullptr;

  void step(MixedRadixRegister state, std::vector<SiteTag> sites, std::map<VertexId, int> outcomes,
            double probability, std::size_t index) const {
    if (index == order.size()) {
      out->push_back({std::move(outcomes), std::move(state), probability});
      return;
    }
    const VertexId v = order[index];
    const auto site = static_cast<std::size_t>(
        std::find(sites.begin(), sites.end(), SiteTag{v, true}) - sites.begin());
    auto rest = sites;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(site));

    auto descend = [&](Branch b) {
      auto next = outcomes;
      next[v] = b.outcome;
      step(std::move(b.state), rest, std::move(next), probability * b.probability, index + 1);
    };
    if (forced != nullptr) {
      descend(project(state, site, Basis::fourier, forced->at(v)));
    } else if (rng != nullptr) {
      descend(measure_fourier(state, site, *rng));
    } else {
      for (Branch& b : measure_fourier(state, site)) descend(std::move(b));
    }
  }
};

std::vector<AncillaOutcome> walk_ancillas(const PrepState& prep, std::mt19937_64* rng,
                                          const std::map<VertexId, int>* forced) {
  const auto order = prep.unmeasured_ancillas();
  std::vector<AncillaOutcome> out;
  AncillaWalk walk{order, rng, forced, &out};
  walk.step(prep.reg, prep.sites, {}, 1.0, 0);
  return out;
}

}  // namespace

std::optional<std::size_t> PrepState::site_of(SiteTag tag) const {
  auto it = std::find(sites.begin(), sites.end(), tag);
  if (it == sites.end()) return std::nullopt;
  return static_cast<std::size_t>(it - sites.begin());
}

std::vector<VertexId> PrepState::unmeasured_ancillas() const {
  std::vector<VertexId> out;
  for (const auto& [v, status] : ancillas) {
    if (status.state == AncillaState::unmeasured) out.push_back(v);
  }
  return out;
}

PhaseWord stabilizer_word(const DagNetwork& g, VertexId v) {
  const double unit = 2.0 * std::numbers::pi / g.dim(v);
  PhaseWord word{{v, unit}};
  for (VertexId w : g.graph().children(v)) word.emplace_back(w, -unit);
  return word;
}

PrepState build_prep_state(const DagNetwork& g, const StateSpec& psi) {
  const auto violations = validate(g);
  if (!violations.empty()) throw Error(ErrorCode::InvalidNetwork, violations.front());

  PrepState prep;
  prep.network = g;
  std::vector<int> dims(g.dims().begin(), g.dims().end());
  for (VertexId v = 0; v < g.vertex_count(); ++v) prep.sites.push_back({v, false});
  for (VertexId v : g.non_sinks()) {
    prep.sites.push_back({v, true});
    dims.push_back(g.dim(v));
    prep.ancillas[v] = AncillaStatus{};
  }
  const SiteLayout layout(std::move(dims));

  const auto sink_ids = g.sinks();
  std::vector<Placement> parts;
  parts.push_back({std::vector<std::size_t>(sink_ids.begin(), sink_ids.end()), make_state(sink_layout(g), psi)});
  for (std::size_t site = 0; site < prep.sites.size(); ++site) {
    const SiteTag tag = prep.sites[site];
    if (!tag.ancilla && g.graph().is_sink(tag.vertex)) continue;
    parts.push_back({{site}, make_state(SiteLayout({layout.dim(site)}), PresetSpec{{Preset::plus}})});
  }
  prep.reg = compose(layout, parts);

  for (VertexId v : g.non_sinks()) {
    apply_controlled_phase_word(prep.reg, *prep.site_of({v, true}), stabilizer_word(g, v));
  }
  return prep;
}

std::vector<AncillaOutcome> measure_ancillas(const PrepState& prep, const Mode& mode) {
  if (std::holds_alternative<EnumerateMode>(mode)) {
    checked_branch_count(prep, prep.unmeasured_ancillas());
    return walk_ancillas(prep, nullptr, nullptr);
  }
  std::mt19937_64 rng(std::get<SampleMode>(mode).seed);
  return walk_ancillas(prep, &rng, nullptr);
}

AncillaOutcome measure_ancillas_as(const PrepState& prep, const std::map<VertexId, int>& outcomes) {
  for (VertexId v : prep.unmeasured_ancillas()) {
    if (!outcomes.contains(v)) {
      throw Error(ErrorCode::ValidationError, "no forced outcome for ancilla of " + std::to_string(v));
    }
  }
  return walk_ancillas(prep, nullptr, &outcomes).front();
}

std::vector<ShiftPower> correction_operator(const DagNetwork& g, const std::map<VertexId, int>& outcomes) {
  std::map<VertexId, long long> powers;
  for (const auto& [v, s] : outcomes) {
    if (!g.graph().contains(v)) throw Error(ErrorCode::UnknownVertex, "vertex " + std::to_string(v));
    if (s == 0) continue;
    powers[v] -= s;
    for (VertexId u : reach(g.graph(), v).predecessors) {
      const auto paths = static_cast<long long>(count_paths(g.graph(), u, v) % static_cast<std::uint64_t>(g.dim(u)));
      powers[u] -= paths * s;
    }
  }
  std::vector<ShiftPower> out;
  for (const auto& [u, p] : powers) {
    const int reduced = positive_mod(p, g.dim(u));
    if (reduced != 0) out.push_back({u, reduced});
  }
  return out;
}

bool shift_correction_exact(const DagNetwork& g, VertexId v) {
  if (!g.graph().contains(v)) throw Error(ErrorCode::UnknownVertex, "vertex " + std::to_string(v));
  for (VertexId u : reach(g.graph(), v).predecessors) {
    const std::uint64_t wrap = count_paths(g.graph(), u, v) * static_cast<std::uint64_t>(g.dim(v));
    if (wrap % static_cast<std::uint64_t>(g.dim(u)) != 0) return false;
  }
  return true;
}

void apply_corrections(MixedRadixRegister& state, const std::vector<ShiftPower>& corrections) {
  for (const auto& c : corrections) apply_shift_power(state, c.vertex, c.power);
}

std::vector<PreparedBranch> complete_preparation(const PrepState& prep, const Mode& mode) {
  std::vector<PreparedBranch> out;
  for (AncillaOutcome& measured : measure_ancillas(prep, mode)) {
    auto corrections = correction_operator(prep.network, measured.outcomes);
    apply_corrections(measured.state, corrections);
    out.push_back({std::move(measured.outcomes), std::move(corrections), std::move(measured.state),
                   measured.probability});
  }
  return out;
}

std::vector<PreparedBranch> prepare_resource(const DagNetwork& g, const StateSpec& psi, const Mode& mode) {
  return complete_preparation(build_prep_state(g, psi), mode);
}

double StabilizerReport::max_deviation() const {
  double worst = 0.0;
  for (const auto& [v, dev] : deviation) worst = std::max(worst, dev);
  return worst;
}

StabilizerReport check_stabilizers(const MixedRadixRegister& state, const DagNetwork& g) {
  if (state.layout() != vertex_layout(g)) {
    throw Error(ErrorCode::LayoutMismatch, "register layout does not match the network dimensions");
  }
  StabilizerReport report;
  const auto non_sinks = g.non_sinks();
  for (VertexId v : non_sinks) {
    MixedRadixRegister moved = state;
    apply_phase_word(moved, stabilizer_word(g, v));
    double sum = 0.0;
    for (std::size_t i = 0; i < moved.amplitudes().size(); ++i) {
      sum += std::norm(moved.amplitudes()[i] - state.amplitudes()[i]);
    }
    report.deviation[v] = std::sqrt(sum);
  }
  const auto& layout = state.layout();
  for (std::size_t flat = 0; flat < layout.total_dimension() && report.support_ok; ++flat) {
    if (std::abs(state.amplitudes()[flat]) <= 1e-12) continue;
    for (VertexId v : non_sinks) {
      if (k_value(g, layout, flat, v) != 0) {
        report.support_ok = false;
        break;
      }
    }
  }
  return report;
}

std::vector<Detachment> detach_vertex(const PrepState& prep, VertexId v, const Mode& mode) {
  auto status = prep.ancillas.find(v);
  if (status == prep.ancillas.end()) throw Error(ErrorCode::UnknownVertex, "vertex " + std::to_string(v) + " has no ancilla");
  if (status->second.state != AncillaState::unmeasured) {
    throw Error(ErrorCode::AncillaAlreadyMeasured, "ancilla of " + std::to_string(v));
  }
  const std::size_t site = *prep.site_of({v, true});
  const PhaseWord word = stabilizer_word(prep.network, v);

  BranchSet branches;
  if (std::holds_alternative<EnumerateMode>(mode)) {
    branches = measure_computational(prep.reg, site);
  } else {
    std::mt19937_64 rng(std::get<SampleMode>(mode).seed);
    branches.push_back(measure_computational(prep.reg, site, rng));
  }

  std::vector<Detachment> out;
  for (Branch& b : branches) {
    Detachment d;
    d.outcome = b.outcome;
    d.probability = b.probability;
    d.state.network = prep.network.without_outgoing(v);
    d.state.reg = std::move(b.state);
    d.state.sites = prep.sites;
    d.state.sites.erase(d.state.sites.begin() + static_cast<std::ptrdiff_t>(site));
    d.state.ancillas = prep.ancillas;
    d.state.ancillas[v] = {AncillaState::measured_computational, b.outcome};
    for (const auto& [target, angle] : word) d.residual.emplace_back(target, angle * b.outcome);
    out.push_back(std::move(d));
  }
  return out;
}

void cancel_residual(PrepState& prep, const PhaseWord& residual) {
  PhaseWord inverse;
  for (const auto& [vertex, angle] : residual) {
    const auto site = prep.site_of({static_cast<VertexId>(vertex), false});
    if (!site) throw Error(ErrorCode::UnknownVertex, "vertex " + std::to_string(vertex));
    inverse.emplace_back(*site, -angle);
  }
  apply_phase_word(prep.reg, inverse);
}

MixedRadixRegister projected_reference(const DagNetwork& g, const std::vector<VertexId>& psi_sites,
                                       const StateSpec& psi) {
  const SiteLayout layout = vertex_layout(g);
  std::vector<int> psi_dims;
  for (VertexId v : psi_sites) psi_dims.push_back(g.dim(v));
  std::vector<Placement> parts;
  parts.push_back({std::vector<std::size_t>(psi_sites.begin(), psi_sites.end()), make_state(SiteLayout(psi_dims), psi)});
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (std::find(psi_sites.begin(), psi_sites.end(), v) != psi_sites.end()) continue;
    parts.push_back({{v}, make_state(SiteLayout({g.dim(v)}), PresetSpec{{Preset::plus}})});
  }
  MixedRadixRegister reg = compose(layout, parts);
  const auto non_sinks = g.non_sinks();
  auto amps = reg.amplitudes();
  for (std::size_t flat = 0; flat < amps.size(); ++flat) {
    for (VertexId v : non_sinks) {
      if (k_value(g, layout, flat, v) != 0) {
        amps[flat] = 0.0;
        break;
      }
    }
  }
  reg.normalize();
  return reg;
}

}  // namespace qbcast
