#include "qbcast/scenario.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qbcast/error.hpp"

namespace qbcast {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ParseError, "field '" + field + "': " + what);
}

std::uint64_t as_unsigned(const json& value, const std::string& field) {
  if (!value.is_number_unsigned()) field_error(field, "expected a non-negative integer");
  return value.get<std::uint64_t>();
}

double as_number(const json& value, const std::string& field) {
  if (!value.is_number()) field_error(field, "expected a number");
  return value.get<double>();
}

VertexId vertex_key(const std::string& key, const std::string& field, std::size_t vertex_count) {
  unsigned long long id = 0;
  auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
  if (ec != std::errc{} || end != key.data() + key.size()) field_error(field, "key '" + key + "' is not a vertex id");
  if (id >= vertex_count) {
    throw Error(ErrorCode::ValidationError, field + " references unknown vertex " + key);
  }
  return static_cast<VertexId>(id);
}

StateSpec parse_psi(const json& psi, json& canonical) {
  if (!psi.is_object()) field_error("psi", "expected an object");
  if (psi.contains("preset")) {
    const json& preset = psi["preset"];
    if (preset == "plus") {
      canonical = {{"preset", "plus"}};
      return PresetSpec{{Preset::plus}};
    }
    if (preset == "zero") {
      canonical = {{"preset", "zero"}};
      return PresetSpec{{Preset::zero}};
    }
    field_error("psi.preset", "expected \"plus\" or \"zero\"");
  }
  if (psi.contains("amps")) {
    const json& amps = psi["amps"];
    if (!amps.is_array()) field_error("psi.amps", "expected an array of [re, im] pairs");
    AmplitudeSpec spec;
    for (std::size_t i = 0; i < amps.size(); ++i) {
      const std::string field = "psi.amps[" + std::to_string(i) + "]";
      const json& pair = amps[i];
      if (!pair.is_array() || pair.size() != 2) field_error(field, "expected [re, im]");
      spec.amps.emplace_back(as_number(pair[0], field), as_number(pair[1], field));
    }
    canonical = {{"amps", amps}};
    return spec;
  }
  if (psi.contains("basis")) {
    const json& digits = psi["basis"];
    if (!digits.is_array()) field_error("psi.basis", "expected an array of digits");
    BasisSpec spec;
    for (std::size_t i = 0; i < digits.size(); ++i) {
      spec.digits.push_back(static_cast<int>(as_unsigned(digits[i], "psi.basis[" + std::to_string(i) + "]")));
    }
    canonical = {{"basis", digits}};
    return spec;
  }
  field_error("psi", "expected one of preset, amps, basis");
}

}  // namespace

Scenario parse_scenario_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "scenario must be a JSON object");

  json canonical = json::object();
  if (!doc.contains("vertices")) field_error("vertices", "missing");
  const std::uint64_t vertex_count = as_unsigned(doc["vertices"], "vertices");
  if (vertex_count == 0) throw Error(ErrorCode::ValidationError, "network has no vertices");
  canonical["vertices"] = vertex_count;

  std::vector<Edge> edges;
  if (doc.contains("edges")) {
    const json& list = doc["edges"];
    if (!list.is_array()) field_error("edges", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string field = "edges[" + std::to_string(i) + "]";
      if (!list[i].is_array() || list[i].size() != 2) field_error(field, "expected [tail, head]");
      edges.push_back({static_cast<VertexId>(as_unsigned(list[i][0], field)),
                       static_cast<VertexId>(as_unsigned(list[i][1], field))});
    }
  }

  Digraph topology;
  try {
    topology = Digraph(vertex_count, edges);
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, e.what());
  }
  json canonical_edges = json::array();
  for (const Edge& e : topology.edges()) canonical_edges.push_back({e.tail, e.head});
  canonical["edges"] = canonical_edges;

  std::map<VertexId, int> sink_dims;
  if (doc.contains("sink_dims")) {
    const json& dims = doc["sink_dims"];
    if (!dims.is_object()) field_error("sink_dims", "expected an object");
    for (const auto& [key, value] : dims.items()) {
      const VertexId v = vertex_key(key, "sink_dims", vertex_count);
      sink_dims[v] = static_cast<int>(as_unsigned(value, "sink_dims." + key));
    }
  }

  Scenario scenario;
  try {
    scenario.network = assign_dims(topology, sink_dims);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CycleDetected) throw Error(ErrorCode::ValidationError, "not acyclic");
    throw;
  }
  if (const auto violations = validate(scenario.network); !violations.empty()) {
    throw Error(ErrorCode::ValidationError, violations.front());
  }
  json canonical_dims = json::object();
  for (VertexId v : scenario.network.sinks()) canonical_dims[std::to_string(v)] = scenario.network.dim(v);
  canonical["sink_dims"] = canonical_dims;

  if (doc.contains("phases")) {
    const json& phases = doc["phases"];
    if (!phases.is_object()) field_error("phases", "expected an object");
    for (const auto& [key, value] : phases.items()) {
      const VertexId v = vertex_key(key, "phases", vertex_count);
      scenario.phases[v] = as_number(value, "phases." + key);
    }
    canonical["phases"] = phases;
  }

  if (doc.contains("psi")) {
    json psi_canonical;
    scenario.psi = parse_psi(doc["psi"], psi_canonical);
    canonical["psi"] = psi_canonical;
  } else {
    canonical["psi"] = {{"preset", "plus"}};
  }

  if (doc.contains("mode")) {
    const json& mode = doc["mode"];
    if (mode == "sample") {
      scenario.mode = ModeKind::sample;
    } else if (mode == "enumerate") {
      scenario.mode = ModeKind::enumerate;
    } else {
      field_error("mode", "expected \"sample\" or \"enumerate\"");
    }
    canonical["mode"] = mode;
  }
  if (doc.contains("seed")) {
    scenario.seed = as_unsigned(doc["seed"], "seed");
    canonical["seed"] = *scenario.seed;
  }
  if (doc.contains("detach")) {
    const json& detach = doc["detach"];
    if (!detach.is_array()) field_error("detach", "expected an array of vertex ids");
    for (std::size_t i = 0; i < detach.size(); ++i) {
      const auto v = static_cast<VertexId>(as_unsigned(detach[i], "detach[" + std::to_string(i) + "]"));
      if (v >= vertex_count) throw Error(ErrorCode::ValidationError, "detach references unknown vertex " + std::to_string(v));
      scenario.detach.push_back(v);
    }
    canonical["detach"] = detach;
  }

  scenario.canonical = canonical.dump();
  return scenario;
}

Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario_text(text.str());
}

Mode resolve_mode(const Scenario& scenario, std::size_t branch_count, std::optional<std::uint64_t> seed_override,
                  std::size_t enumerate_limit) {
  const ModeKind kind =
      scenario.mode.value_or(branch_count <= enumerate_limit ? ModeKind::enumerate : ModeKind::sample);
  if (kind == ModeKind::enumerate) return EnumerateMode{};
  const auto seed = seed_override ? seed_override : scenario.seed;
  if (!seed) throw Error(ErrorCode::ValidationError, "sample mode requires a seed");
  return SampleMode{*seed};
}

std::string config_hash(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

}  // namespace qbcast
