#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "qbcast/broadcast.hpp"
#include "qbcast/error.hpp"
#include "qbcast/oracle.hpp"
#include "qbcast/prepare.hpp"
#include "support/fixtures.hpp"

using namespace qbcast;
using qbcast::testing::kPi;
using qbcast::testing::random_amplitudes;

namespace {

constexpr double kFidelity = 1.0 - 1e-9;
const StateSpec kPlus = PresetSpec{{Preset::plus}};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no qbcast::Error thrown");
  return ErrorCode::ValidationError;
}

DagNetwork star(int sink_dim = 2) { return qbcast::testing::uniform_network(3, {{0, 1}, {0, 2}}, sink_dim); }

MixedRadixRegister ghz(std::size_t n) {
  std::vector<Amplitude> amps(std::size_t{1} << n);
  amps.front() = amps.back() = 1.0;
  return make_state(SiteLayout(std::vector<int>(n, 2)), AmplitudeSpec{amps});
}

/// <Z_a Z_b> by summing |amplitude|^2 with signs.
double zz(const MixedRadixRegister& reg, std::size_t a, std::size_t b) {
  double out = 0.0;
  for (std::size_t flat = 0; flat < reg.amplitudes().size(); ++flat) {
    const int sign = (reg.layout().digit(flat, a) + reg.layout().digit(flat, b)) % 2 == 0 ? 1 : -1;
    out += sign * std::norm(reg.amplitudes()[flat]);
  }
  return out;
}

/// Reduced density matrix on `keep` (ascending sites), by explicit index loops.
Eigen::MatrixXcd reduced(const MixedRadixRegister& reg, const std::vector<std::size_t>& keep) {
  const auto& layout = reg.layout();
  std::vector<int> keep_dims;
  for (std::size_t s : keep) keep_dims.push_back(layout.dim(s));
  const SiteLayout kept(keep_dims);
  const auto n = static_cast<Eigen::Index>(kept.total_dimension());
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
  const auto amps = reg.amplitudes();
  auto split = [&](std::size_t flat) {
    auto digits = layout.digits(flat);
    std::vector<int> in, out;
    for (std::size_t s = 0; s < digits.size(); ++s) {
      (std::find(keep.begin(), keep.end(), s) != keep.end() ? in : out).push_back(digits[s]);
    }
    return std::pair{kept.flat_index(in), out};
  };
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (amps[i] == 0.0) continue;
    const auto [ri, rest_i] = split(i);
    for (std::size_t j = 0; j < amps.size(); ++j) {
      if (amps[j] == 0.0) continue;
      const auto [rj, rest_j] = split(j);
      if (rest_i != rest_j) continue;
      rho(static_cast<Eigen::Index>(ri), static_cast<Eigen::Index>(rj)) += amps[i] * std::conj(amps[j]);
    }
  }
  return rho;
}

/// Applies P_v via a fresh ancilla: |+>, CW, fourier outcome 0.
void project_with_ancilla(MixedRadixRegister& reg, const DagNetwork& g, VertexId v) {
  std::vector<int> dims(reg.layout().dims().begin(), reg.layout().dims().end());
  const std::size_t ancilla = dims.size();
  dims.push_back(g.dim(v));
  std::vector<std::size_t> old_sites(ancilla);
  for (std::size_t i = 0; i < ancilla; ++i) old_sites[i] = i;
  const std::vector<Placement> parts{{old_sites, reg},
                                     {{ancilla}, make_state(SiteLayout({g.dim(v)}), PresetSpec{{Preset::plus}})}};
  auto wide = compose(SiteLayout(dims), parts);
  apply_controlled_phase_word(wide, ancilla, stabilizer_word(g, v));
  reg = project(wide, ancilla, Basis::fourier, 0).state;
}

}  // namespace

TEST_CASE("prep state of the star carries the stabilizer phase") {
  const auto prep = build_prep_state(star(), kPlus);
  CHECK(prep.reg.layout() == SiteLayout({3, 2, 2, 3}));
  CHECK(prep.sites.back() == SiteTag{0, true});
  CHECK(prep.unmeasured_ancillas() == std::vector<VertexId>{0});
  const double scale = 1.0 / 6.0;
  for (int l = 0; l < 3; ++l) {
    for (int ka = 0; ka < 3; ++ka) {
      for (int kb = 0; kb < 2; ++kb) {
        for (int kc = 0; kc < 2; ++kc) {
          const double angle = 2 * kPi / 3 * l * (ka - kb - kc);
          const Amplitude expected = scale * Amplitude(std::cos(angle), std::sin(angle));
          CHECK(std::abs(prep.reg.amplitude(std::vector<int>{ka, kb, kc, l}) - expected) < 1e-14);
        }
      }
    }
  }
}

TEST_CASE("qubit chain prep state is the controlled-Z construction") {
  const auto prep = build_prep_state(qbcast::testing::chain(3), kPlus);
  // sites k0 k1 k2 l0 l1; CZ(l0,k0) CZ(l0,k1) CZ(l1,k1) CZ(l1,k2) on |+>^5
  for (std::size_t flat = 0; flat < 32; ++flat) {
    const auto d = prep.reg.layout().digits(flat);
    const int parity = d[3] * (d[0] + d[1]) + d[4] * (d[1] + d[2]);
    const double expected = (parity % 2 == 0 ? 1.0 : -1.0) / std::sqrt(32.0);
    CHECK(std::abs(prep.reg.amplitudes()[flat] - expected) < 1e-14);
  }
}

TEST_CASE("ancilla outcomes") {
  // all zeros reproduce the resource state
  const auto prep = build_prep_state(star(), kPlus);
  const auto zero = measure_ancillas_as(prep, {{0, 0}});
  CHECK(zero.probability == doctest::Approx(1.0 / 3.0));
  CHECK(fidelity(zero.state, build_resource_state(star(), kPlus)) >= kFidelity);

  // s_A = 1 puts the support on k_A - k_B - k_C = 1 (mod 3)
  const auto one = measure_ancillas_as(prep, {{0, 1}});
  for (std::size_t flat = 0; flat < one.state.amplitudes().size(); ++flat) {
    if (std::abs(one.state.amplitudes()[flat]) < 1e-12) continue;
    const auto d = one.state.layout().digits(flat);
    CHECK(((d[0] - d[1] - d[2]) % 3 + 3) % 3 == 1);
  }

  CHECK(measure_ancillas(prep, EnumerateMode{}).size() == 3);
  CHECK(code_of([&] { measure_ancillas_as(prep, {}); }) == ErrorCode::ValidationError);
}

TEST_CASE("correction operator examples") {
  const auto chain = qbcast::testing::chain(5);
  CHECK(correction_operator(chain, {{0, 0}, {1, 0}, {2, 0}, {3, 0}}).empty());
  // flip at x = 2: string X_0 X_1 X_2
  CHECK(correction_operator(chain, {{2, 1}}) == std::vector<ShiftPower>{{0, 1}, {1, 1}, {2, 1}});
  // two flips overlap and cancel on the shared prefix
  CHECK(correction_operator(chain, {{1, 1}, {3, 1}}) == std::vector<ShiftPower>{{2, 1}, {3, 1}});

  // diamond u=0, a=1, b=2, v=3 (d = 3, 2, 2, 2), s = 1 at a: X_a^{-1} X_u^{-1}
  const auto diamond = qbcast::testing::uniform_network(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  CHECK(correction_operator(diamond, {{1, 1}}) == std::vector<ShiftPower>{{0, 2}, {1, 1}});
  CHECK(correction_operator(star(), {{0, 2}}) == std::vector<ShiftPower>{{0, 1}});
  CHECK(code_of([&] { correction_operator(star(), {{9, 1}}); }) == ErrorCode::UnknownVertex);
}

TEST_CASE("GHZ chain of five: every ancilla pattern is corrected") {
  const auto chain = qbcast::testing::chain(5);
  const auto branches = prepare_resource(chain, kPlus, EnumerateMode{});
  REQUIRE(branches.size() == 16);
  double total = 0.0;
  for (const auto& b : branches) {
    total += b.probability;
    CHECK(fidelity(b.state, ghz(5)) >= kFidelity);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));

  // flipped at x = 1: Z_1 Z_2 = -1 before correction, repaired by X_0 X_1
  const auto prep = build_prep_state(chain, kPlus);
  auto flipped = measure_ancillas_as(prep, {{0, 0}, {1, 1}, {2, 0}, {3, 0}});
  CHECK(zz(flipped.state, 1, 2) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(zz(flipped.state, 0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fidelity(flipped.state, ghz(5)) < 0.5);
  apply_corrections(flipped.state, correction_operator(chain, flipped.outcomes));
  CHECK(fidelity(flipped.state, ghz(5)) >= kFidelity);
}

TEST_CASE("star preparation with a random sink state") {
  std::mt19937_64 rng(31);
  for (int sink_dim : {2, 3}) {
    const auto g = star(sink_dim);
    const AmplitudeSpec psi{random_amplitudes(rng, static_cast<std::size_t>(sink_dim * sink_dim))};
    const auto target = build_resource_state(g, psi);
    const auto branches = prepare_resource(g, psi, EnumerateMode{});
    CHECK(branches.size() == static_cast<std::size_t>(2 * sink_dim - 1));
    for (const auto& b : branches) {
      CHECK(fidelity(b.state, target) >= kFidelity);
      CHECK(check_stabilizers(b.state, g).max_deviation() <= 1e-10);
    }
  }
}

TEST_CASE("stabilizer checks") {
  const auto g = star(2);
  const auto ideal = check_stabilizers(build_resource_state(g, kPlus), g);
  CHECK(ideal.max_deviation() <= 1e-10);
  CHECK(ideal.support_ok);

  // uncorrected s_A = 1: W_A eigenvalue exp(2 pi i / 3), deviation 2 sin(pi / 3)
  const auto flipped = measure_ancillas_as(build_prep_state(g, kPlus), {{0, 1}});
  const auto report = check_stabilizers(flipped.state, g);
  CHECK(report.deviation.at(0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  CHECK(!report.support_ok);

  CHECK(code_of([&] { check_stabilizers(build_resource_state(g, kPlus), star(3)); }) == ErrorCode::LayoutMismatch);
}

TEST_CASE("projector identity: <+| CW |+> = (1/d) sum_l W^l = P_v") {
  // v at site 0 with children of the given dims, ancilla last
  const std::vector<std::vector<int>> child_dims{{2}, {2, 2}, {3}, {2, 3}, {2, 2, 2}, {4, 2}, {3, 3}, {2, 2, 2, 2}, {7}};
  for (const auto& children : child_dims) {
    int d = 1;
    for (int c : children) d += c - 1;
    REQUIRE(d <= 7);
    std::vector<int> dims{d};
    dims.insert(dims.end(), children.begin(), children.end());
    std::vector<int> with_ancilla = dims;
    with_ancilla.push_back(d);
    std::vector<std::pair<std::size_t, double>> word{{0, 2 * kPi / d}};
    for (std::size_t i = 1; i < dims.size(); ++i) word.emplace_back(i, -2 * kPi / d);

    const auto cw = oracle::controlled_phase_word(with_ancilla, dims.size(), word);
    const auto plus = oracle::DenseVector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
    const auto identity = oracle::DenseOperator::Identity(cw.rows() / d, cw.cols() / d);
    const oracle::DenseOperator bra = oracle::kron(identity, plus.adjoint());
    const oracle::DenseOperator ket = oracle::kron(identity, plus);
    const oracle::DenseOperator contracted = bra * cw * ket;

    oracle::DenseOperator average = oracle::DenseOperator::Zero(identity.rows(), identity.cols());
    const std::vector<std::size_t> flat_dims(dims.begin(), dims.end());
    for (int l = 0; l < d; ++l) {
      oracle::DenseOperator w = oracle::DenseOperator::Identity(identity.rows(), identity.cols());
      for (const auto& [site, angle] : word) {
        std::map<std::size_t, oracle::DenseOperator> op{{site, oracle::phase(dims[site], angle * l)}};
        w = w * oracle::embed(dims, op);
      }
      average += w / static_cast<double>(d);
    }

    oracle::DenseOperator projector = oracle::DenseOperator::Zero(identity.rows(), identity.cols());
    for (Eigen::Index i = 0; i < projector.rows(); ++i) {
      const auto digits = qbcast::testing::digits_of(static_cast<std::size_t>(i), dims);
      int k = digits[0];
      for (std::size_t c = 1; c < digits.size(); ++c) k -= digits[c];
      if (k == 0) projector(i, i) = 1.0;
    }
    CHECK(oracle::max_abs_difference(contracted, average) < 1e-12);
    CHECK(oracle::max_abs_difference(average, projector) < 1e-12);
  }
}

TEST_CASE("property: projectors commute") {
  std::mt19937_64 rng(32);
  int tested = 0;
  while (tested < 12) {
    const auto g = qbcast::testing::random_network(rng, {.max_vertices = 6, .max_total_dimension = 512});
    auto order = g.non_sinks();
    if (order.size() < 2 || order.size() > 4) continue;
    ++tested;
    const auto start = make_state(SiteLayout(std::vector<int>(g.dims().begin(), g.dims().end())),
                                  PresetSpec{{Preset::plus}});
    std::optional<MixedRadixRegister> first;
    std::sort(order.begin(), order.end());
    do {
      auto reg = start;
      for (VertexId v : order) project_with_ancilla(reg, g, v);
      if (!first) {
        first = reg;
        CHECK(fidelity(reg, build_resource_state(g, kPlus)) >= kFidelity);
      } else {
        CHECK(fidelity(reg, *first) >= kFidelity);
      }
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

TEST_CASE("property: K_v range bound on the full basis") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = qbcast::testing::random_network(rng, {.max_vertices = 6, .max_total_dimension = 2048});
    const SiteLayout layout(std::vector<int>(g.dims().begin(), g.dims().end()));
    for (std::size_t flat = 0; flat < layout.total_dimension(); ++flat) {
      for (VertexId v : g.non_sinks()) {
        int k = layout.digit(flat, v);
        for (VertexId w : g.graph().children(v)) k -= layout.digit(flat, w);
        CHECK(std::abs(k) <= g.dim(v) - 1);
      }
    }
  }
}

TEST_CASE("property: corrected branches agree up to global phase") {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = qbcast::testing::random_network(
        rng, {.max_vertices = 5, .max_total_dimension = 256, .max_ancilla_branches = 64, .max_prep_dimension = 1 << 14});
    bool exact = true;
    for (VertexId v : g.non_sinks()) exact = exact && shift_correction_exact(g, v);
    if (!exact) continue;
    const AmplitudeSpec psi{random_amplitudes(rng, sink_layout(g).total_dimension())};
    const auto branches = prepare_resource(g, psi, EnumerateMode{});
    for (const auto& b : branches) CHECK(fidelity(b.state, branches.front().state) >= kFidelity);
  }
}

TEST_CASE("shift corrections are exact precisely when no ancestor wraps") {
  CHECK(shift_correction_exact(qbcast::testing::chain(5), 3));
  CHECK(shift_correction_exact(star(3), 0));
  const auto diamond = qbcast::testing::uniform_network(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  CHECK(!shift_correction_exact(diamond, 1));
  CHECK(shift_correction_exact(diamond, 0));

  std::mt19937_64 rng(35);
  int exact_cases = 0;
  int inexact_cases = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = qbcast::testing::random_network(
        rng, {.max_vertices = 6, .max_total_dimension = 512, .max_ancilla_branches = 256, .max_prep_dimension = 1 << 16});
    const AmplitudeSpec psi{random_amplitudes(rng, sink_layout(g).total_dimension())};
    const auto prep = build_prep_state(g, psi);
    const auto target = build_resource_state(g, psi);
    for (VertexId v : g.non_sinks()) {
      std::map<VertexId, int> outcomes;
      for (VertexId u : g.non_sinks()) outcomes[u] = 0;
      for (int s = 1; s < g.dim(v); ++s) {
        outcomes[v] = s;
        auto branch = measure_ancillas_as(prep, outcomes);
        apply_corrections(branch.state, correction_operator(g, outcomes));
        const double f = fidelity(branch.state, target);
        if (shift_correction_exact(g, v)) {
          ++exact_cases;
          CHECK(f >= kFidelity);
        } else {
          ++inexact_cases;
          CHECK(f < 1.0 - 1e-6);
        }
      }
    }
  }
  CHECK(exact_cases > 0);
  CHECK(inexact_cases > 0);
}

TEST_CASE("diamond outcome at a needs a digit map no local operation provides") {
  // u=0 (d=3), a=1, b=2, v=3. With s_a = 1 the digit at u no longer follows
  // the sink digit through a fixed relabeling: the same uncorrected k_u must
  // go to different targets depending on k_v.
  const auto diamond = qbcast::testing::uniform_network(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  const auto flipped = measure_ancillas_as(build_prep_state(diamond, kPlus), {{0, 0}, {1, 1}, {2, 0}}).state;
  const auto target = build_resource_state(diamond, kPlus);
  std::map<int, std::set<int>> u_digit_map;
  for (int kv = 0; kv < 2; ++kv) {
    int from = -1, to = -1;
    for (std::size_t flat = 0; flat < target.amplitudes().size(); ++flat) {
      const auto d = target.layout().digits(flat);
      if (d[3] != kv) continue;
      if (std::abs(flipped.amplitudes()[flat]) > 1e-12) from = d[0];
      if (std::abs(target.amplitudes()[flat]) > 1e-12) to = d[0];
    }
    REQUIRE(from >= 0);
    REQUIRE(to >= 0);
    u_digit_map[from].insert(to);
  }
  CHECK(u_digit_map.size() == 1);
  CHECK(u_digit_map.begin()->second == std::set<int>{0, 2});
}

TEST_CASE("detachment of the star sender") {
  const auto g = star(2);
  const AmplitudeSpec psi{{0.5, {0.1, 0.2}, -0.3, 0.7}};
  const auto prep = build_prep_state(g, psi);
  const auto detached = detach_vertex(prep, 0, EnumerateMode{});
  REQUIRE(detached.size() == 3);
  for (auto d : detached) {
    CHECK(d.probability == doctest::Approx(1.0 / 3.0));
    CHECK(d.state.network.graph().edges().empty());
    CHECK(d.state.network.dim(0) == 3);
    CHECK(d.state.ancillas.at(0).state == AncillaState::measured_computational);
    CHECK(d.state.unmeasured_ancillas().empty());
    REQUIRE(d.residual.size() == 3);
    CHECK(d.residual[0].second == doctest::Approx(2 * kPi / 3 * d.outcome));
    cancel_residual(d.state, d.residual);
    const auto reference = projected_reference(d.state.network, g.sinks(), psi);
    CHECK(fidelity(d.state.reg, reference) >= kFidelity);
  }
  CHECK(code_of([&] { detach_vertex(detached[0].state, 0, EnumerateMode{}); }) == ErrorCode::AncillaAlreadyMeasured);
  CHECK(code_of([&] { detach_vertex(prep, 1, EnumerateMode{}); }) == ErrorCode::UnknownVertex);
}

TEST_CASE("detaching the tree root leaves |+> times the branch resource states") {
  // r=0 -> a=1, b=2; a -> 3, 4; b -> 5
  const auto tree = qbcast::testing::uniform_network(6, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}});
  std::mt19937_64 rng(36);
  const AmplitudeSpec psi{random_amplitudes(rng, 8)};
  const auto prep = build_prep_state(tree, psi);
  for (auto d : detach_vertex(prep, 0, EnumerateMode{})) {
    cancel_residual(d.state, d.residual);
    for (const auto& done : complete_preparation(d.state, EnumerateMode{})) {
      const auto reference = projected_reference(d.state.network, tree.sinks(), psi);
      CHECK(fidelity(done.state, reference) >= kFidelity);
      CHECK(check_stabilizers(done.state, d.state.network).max_deviation() <= 1e-10);
    }
  }
}

TEST_CASE("property: detachment leaves distant subsystems untouched") {
  std::mt19937_64 rng(37);
  int tested = 0;
  while (tested < 10) {
    const auto g = qbcast::testing::random_network(
        rng, {.max_vertices = 5, .max_total_dimension = 64, .max_ancilla_branches = 32, .max_prep_dimension = 1 << 11});
    if (g.non_sinks().size() < 2) continue;
    ++tested;
    const auto prep = build_prep_state(g, AmplitudeSpec{random_amplitudes(rng, sink_layout(g).total_dimension())});
    const VertexId v = g.non_sinks().front();
    std::vector<std::size_t> keep;
    for (std::size_t site = 0; site < prep.sites.size(); ++site) {
      const SiteTag tag = prep.sites[site];
      const auto children = g.graph().children(v);
      const bool touched = tag.vertex == v ||
                           (!tag.ancilla && std::find(children.begin(), children.end(), tag.vertex) != children.end());
      if (!touched) keep.push_back(site);
    }
    const auto before = reduced(prep.reg, keep);
    for (const auto& d : detach_vertex(prep, v, EnumerateMode{})) {
      std::vector<std::size_t> keep_after;
      for (std::size_t site : keep) keep_after.push_back(*d.state.site_of(prep.sites[site]));
      const auto after = reduced(d.state.reg, keep_after);
      CHECK((after - before).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}
