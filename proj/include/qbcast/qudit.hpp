#pragma once

// Dense state vectors over tensor products of qudits with per-site
// dimensions. Flat indices are row-major mixed radix: site 0 varies slowest.
//
// Gates mutate a register in place in O(total dimension); diagonal gates
// are single passes over the amplitudes and controlled shifts are index
// permutations. Measurements return the post-measurement state with the
// measured site removed from the layout.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace qbcast {

using Amplitude = std::complex<double>;

inline constexpr double kNormTolerance = 1e-12;
/// Branches below this Born probability are pruned.
inline constexpr double kBranchCutoff = 1e-14;

class SiteLayout {
 public:
  SiteLayout() = default;
  explicit SiteLayout(std::vector<int> dims);

  std::size_t site_count() const noexcept { return dims_.size(); }
  std::span<const int> dims() const noexcept { return dims_; }
  int dim(std::size_t site) const;
  std::size_t stride(std::size_t site) const;
  std::size_t total_dimension() const noexcept { return total_; }

  int digit(std::size_t flat, std::size_t site) const { return static_cast<int>((flat / strides_[site]) % dims_[site]); }
  std::vector<int> digits(std::size_t flat) const;
  std::size_t flat_index(std::span<const int> digits) const;

  /// Layout with one site removed; later sites shift down by one.
  SiteLayout without(std::size_t site) const;

  bool operator==(const SiteLayout& other) const { return dims_ == other.dims_; }

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 1;
};

class MixedRadixRegister {
 public:
  MixedRadixRegister() = default;
  /// Takes amplitudes as given (no normalization). Throws DimensionMismatch.
  MixedRadixRegister(SiteLayout layout, std::vector<Amplitude> amps);

  const SiteLayout& layout() const noexcept { return layout_; }
  std::span<const Amplitude> amplitudes() const noexcept { return amps_; }
  std::span<Amplitude> amplitudes() noexcept { return amps_; }
  Amplitude amplitude(std::span<const int> digits) const { return amps_[layout_.flat_index(digits)]; }

  double norm() const;
  /// Throws ZeroVector if the norm vanishes.
  void normalize();

 private:
  SiteLayout layout_;
  std::vector<Amplitude> amps_;
};

enum class Preset { zero, plus };

struct BasisSpec {
  std::vector<int> digits;
};
struct PresetSpec {
  /// One preset per site, or a single entry applied to every site.
  std::vector<Preset> sites;
};
struct AmplitudeSpec {
  std::vector<Amplitude> amps;
};
using StateSpec = std::variant<BasisSpec, PresetSpec, AmplitudeSpec>;

/// Normalized register for the given layout. Throws DimensionMismatch,
/// ZeroVector.
MixedRadixRegister make_state(const SiteLayout& layout, const StateSpec& spec);

/// Tensor product of registers placed on disjoint sites of `layout`.
/// Every site must be covered exactly once.
struct Placement {
  std::vector<std::size_t> sites;
  MixedRadixRegister state;
};
MixedRadixRegister compose(const SiteLayout& layout, std::span<const Placement> parts);

// --- gates -----------------------------------------------------------------

/// |k> -> |k + power mod d> at `site`.
void apply_shift_power(MixedRadixRegister& reg, std::size_t site, long long power);

/// |k> -> e^{i k theta}|k> at `site`.
void apply_local_phase(MixedRadixRegister& reg, std::size_t site, double theta);

/// Shifts `target` by the digit of `control`, modulo d(target).
void apply_controlled_shift(MixedRadixRegister& reg, std::size_t control, std::size_t target);

/// Phase word: list of (site, angle). A basis state picks up
/// e^{i * l * sum_t k_t * angle_t} where l is the control digit.
using PhaseWord = std::vector<std::pair<std::size_t, double>>;
void apply_controlled_phase_word(MixedRadixRegister& reg, std::size_t control, const PhaseWord& word);

/// Uncontrolled version: e^{i * sum_t k_t * angle_t}.
void apply_phase_word(MixedRadixRegister& reg, const PhaseWord& word);

// --- measurement -------------------------------------------------------------

enum class Basis { computational, fourier };

/// Basis vector |l> (computational) or Z^s|+> (fourier) of dimension d.
std::vector<Amplitude> basis_vector(Basis basis, int d, int outcome);

struct Branch {
  int outcome = 0;
  double probability = 0.0;
  MixedRadixRegister state;
};
using BranchSet = std::vector<Branch>;

/// Projects `site` onto the given outcome and removes it from the layout.
/// Throws ZeroProbabilityBranchRequested.
Branch project(const MixedRadixRegister& reg, std::size_t site, Basis basis, int outcome);

/// All outcomes with probability >= kBranchCutoff, ascending outcome.
BranchSet enumerate_outcomes(const MixedRadixRegister& reg, std::size_t site, Basis basis);

/// Born-rule sample drawn with the caller's generator.
Branch sample_outcome(const MixedRadixRegister& reg, std::size_t site, Basis basis, std::mt19937_64& rng);

inline BranchSet measure_fourier(const MixedRadixRegister& reg, std::size_t site) {
  return enumerate_outcomes(reg, site, Basis::fourier);
}
inline Branch measure_fourier(const MixedRadixRegister& reg, std::size_t site, std::mt19937_64& rng) {
  return sample_outcome(reg, site, Basis::fourier, rng);
}
inline BranchSet measure_computational(const MixedRadixRegister& reg, std::size_t site) {
  return enumerate_outcomes(reg, site, Basis::computational);
}
inline Branch measure_computational(const MixedRadixRegister& reg, std::size_t site, std::mt19937_64& rng) {
  return sample_outcome(reg, site, Basis::computational, rng);
}

// --- comparison and dumps ----------------------------------------------------

/// |<a|b>|. Throws LayoutMismatch.
double fidelity(const MixedRadixRegister& a, const MixedRadixRegister& b);

/// <a|b>. Throws LayoutMismatch.
Amplitude inner_product(const MixedRadixRegister& a, const MixedRadixRegister& b);

struct DumpEntry {
  std::vector<int> digits;
  double re = 0.0;
  double im = 0.0;
};
/// Amplitudes with magnitude >= threshold, in flat-index order.
std::vector<DumpEntry> dump(const MixedRadixRegister& reg, double threshold = 1e-12);

}  // namespace qbcast
