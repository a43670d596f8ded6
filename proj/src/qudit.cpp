#include "qbcast/qudit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "qbcast/error.hpp"

namespace qbcast {

namespace {

int positive_mod(long long value, int d) {
  const long long r = value % d;
  return static_cast<int>(r < 0 ? r + d : r);
}

Amplitude unit_phase(double angle) { return {std::cos(angle), std::sin(angle)}; }

void check_site(const SiteLayout& layout, std::size_t site) {
  if (site >= layout.site_count()) {
    throw Error(ErrorCode::InvalidSite,
                "site " + std::to_string(site) + " of " + std::to_string(layout.site_count()));
  }
}

}  // namespace

SiteLayout::SiteLayout(std::vector<int> dims) : dims_(std::move(dims)), strides_(dims_.size()) {
  for (std::size_t i = dims_.size(); i-- > 0;) {
    if (dims_[i] < 2) {
      throw Error(ErrorCode::DimensionMismatch,
                  "site " + std::to_string(i) + " has dimension " + std::to_string(dims_[i]));
    }
    strides_[i] = total_;
    total_ *= static_cast<std::size_t>(dims_[i]);
  }
}

int SiteLayout::dim(std::size_t site) const {
  check_site(*this, site);
  return dims_[site];
}

std::size_t SiteLayout::stride(std::size_t site) const {
  check_site(*this, site);
  return strides_[site];
}

std::vector<int> SiteLayout::digits(std::size_t flat) const {
  std::vector<int> out(dims_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) out[i] = digit(flat, i);
  return out;
}

std::size_t SiteLayout::flat_index(std::span<const int> digits) const {
  if (digits.size() != dims_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(dims_.size()) + " digits");
  }
  std::size_t flat = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (digits[i] < 0 || digits[i] >= dims_[i]) {
      throw Error(ErrorCode::DimensionMismatch,
                  "digit " + std::to_string(digits[i]) + " out of range at site " + std::to_string(i));
    }
    flat += static_cast<std::size_t>(digits[i]) * strides_[i];
  }
  return flat;
}

SiteLayout SiteLayout::without(std::size_t site) const {
  check_site(*this, site);
  std::vector<int> dims = dims_;
  dims.erase(dims.begin() + static_cast<std::ptrdiff_t>(site));
  return SiteLayout(std::move(dims));
}

MixedRadixRegister::MixedRadixRegister(SiteLayout layout, std::vector<Amplitude> amps)
    : layout_(std::move(layout)), amps_(std::move(amps)) {
  if (amps_.size() != layout_.total_dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(layout_.total_dimension()) +
                                                  " amplitudes, got " + std::to_string(amps_.size()));
  }
}

double MixedRadixRegister::norm() const {
  double sum = 0.0;
  for (const auto& a : amps_) sum += std::norm(a);
  return std::sqrt(sum);
}

void MixedRadixRegister::normalize() {
  const double n = norm();
  if (n == 0.0) throw Error(ErrorCode::ZeroVector, "cannot normalize the zero vector");
  for (auto& a : amps_) a /= n;
}

MixedRadixRegister make_state(const SiteLayout& layout, const StateSpec& spec) {
  const std::size_t total = layout.total_dimension();
  std::vector<Amplitude> amps(total);

  if (const auto* basis = std::get_if<BasisSpec>(&spec)) {
    amps[layout.flat_index(basis->digits)] = 1.0;
  } else if (const auto* presets = std::get_if<PresetSpec>(&spec)) {
    const auto& p = presets->sites;
    if (p.size() != 1 && p.size() != layout.site_count()) {
      throw Error(ErrorCode::DimensionMismatch, "expected 1 or " + std::to_string(layout.site_count()) +
                                                    " presets, got " + std::to_string(p.size()));
    }
    auto preset_at = [&](std::size_t site) { return p.size() == 1 ? p[0] : p[site]; };
    double scale = 1.0;
    for (std::size_t i = 0; i < layout.site_count(); ++i) {
      if (preset_at(i) == Preset::plus) scale /= std::sqrt(static_cast<double>(layout.dim(i)));
    }
    for (std::size_t flat = 0; flat < total; ++flat) {
      bool on = true;
      for (std::size_t i = 0; i < layout.site_count() && on; ++i) {
        on = preset_at(i) == Preset::plus || layout.digit(flat, i) == 0;
      }
      if (on) amps[flat] = scale;
    }
  } else {
    const auto& explicit_amps = std::get<AmplitudeSpec>(spec).amps;
    if (explicit_amps.size() != total) {
      throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(total) + " amplitudes, got " +
                                                    std::to_string(explicit_amps.size()));
    }
    amps = explicit_amps;
  }

  MixedRadixRegister reg(layout, std::move(amps));
  reg.normalize();
  return reg;
}

MixedRadixRegister compose(const SiteLayout& layout, std::span<const Placement> parts) {
  std::vector<int> owner(layout.site_count(), -1);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& part = parts[p];
    if (part.sites.size() != part.state.layout().site_count()) {
      throw Error(ErrorCode::DimensionMismatch, "placement site list does not match its register");
    }
    for (std::size_t j = 0; j < part.sites.size(); ++j) {
      const std::size_t site = part.sites[j];
      check_site(layout, site);
      if (owner[site] != -1) throw Error(ErrorCode::InvalidSite, "site " + std::to_string(site) + " placed twice");
      if (layout.dim(site) != part.state.layout().dim(j)) {
        throw Error(ErrorCode::DimensionMismatch, "dimension mismatch at site " + std::to_string(site));
      }
      owner[site] = static_cast<int>(p);
    }
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
    throw Error(ErrorCode::DimensionMismatch, "composition leaves a site uncovered");
  }

  std::vector<Amplitude> amps(layout.total_dimension());
  std::vector<std::size_t> local(parts.size());
  for (std::size_t flat = 0; flat < amps.size(); ++flat) {
    std::fill(local.begin(), local.end(), 0);
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const auto& sub = parts[p].state.layout();
      for (std::size_t j = 0; j < parts[p].sites.size(); ++j) {
        local[p] += static_cast<std::size_t>(layout.digit(flat, parts[p].sites[j])) * sub.stride(j);
      }
    }
    Amplitude a = 1.0;
    for (std::size_t p = 0; p < parts.size(); ++p) a *= parts[p].state.amplitudes()[local[p]];
    amps[flat] = a;
  }
  return MixedRadixRegister(layout, std::move(amps));
}

void apply_shift_power(MixedRadixRegister& reg, std::size_t site, long long power) {
  const auto& layout = reg.layout();
  check_site(layout, site);
  const int d = layout.dim(site);
  const int shift = positive_mod(power, d);
  if (shift == 0) return;
  const std::size_t stride = layout.stride(site);

  auto amps = reg.amplitudes();
  std::vector<Amplitude> out(amps.size());
  for (std::size_t flat = 0; flat < amps.size(); ++flat) {
    const int k = layout.digit(flat, site);
    const int moved = (k + shift) % d;
    out[flat + static_cast<std::size_t>(moved) * stride - static_cast<std::size_t>(k) * stride] = amps[flat];
  }
  std::copy(out.begin(), out.end(), amps.begin());
}

void apply_local_phase(MixedRadixRegister& reg, std::size_t site, double theta) {
  const auto& layout = reg.layout();
  check_site(layout, site);
  const int d = layout.dim(site);
  std::vector<Amplitude> table(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) table[static_cast<std::size_t>(k)] = unit_phase(k * theta);
  auto amps = reg.amplitudes();
  for (std::size_t flat = 0; flat < amps.size(); ++flat) {
    amps[flat] *= table[static_cast<std::size_t>(layout.digit(flat, site))];
  }
}

void apply_controlled_shift(MixedRadixRegister& reg, std::size_t control, std::size_t target) {
  const auto& layout = reg.layout();
  check_site(layout, control);
  check_site(layout, target);
  if (control == target) throw Error(ErrorCode::SameSite, "control and target are both site " + std::to_string(target));
  const int d = layout.dim(target);
  const std::size_t stride = layout.stride(target);

  auto amps = reg.amplitudes();
  std::vector<Amplitude> out(amps.size());
  for (std::size_t flat = 0; flat < amps.size(); ++flat) {
    const int k = layout.digit(flat, target);
    const int moved = (k + layout.digit(flat, control)) % d;
    out[flat + static_cast<std::size_t>(moved) * stride - static_cast<std::size_t>(k) * stride] = amps[flat];
  }
  std::copy(out.begin(), out.end(), amps.begin());
}

void apply_controlled_phase_word(MixedRadixRegister& reg, std::size_t control, const PhaseWord& word) {
  const auto& layout = reg.layout();
  check_site(layout, control);
  for (const auto& [site, angle] : word) {
    check_site(layout, site);
    if (site == control) throw Error(ErrorCode::ControlInWord, "site " + std::to_string(site));
  }
  auto amps = reg.amplitudes();
  for (std::size_t flat = 0; flat < amps.size(); ++flat) {
    const int l = layout.digit(flat, control);
    if (l == 0) continue;
    double angle = 0.0;
    for (const auto& [site, theta] : word) angle += layout.digit(flat, site) * theta;
    amps[flat] *= unit_phase(l * angle);
  }
}

void apply_phase_word(MixedRadixRegister& reg, const PhaseWord& word) {
  const auto& layout = reg.layout();
  for (const auto& [site, angle] : word) check_site(layout, site);
  auto amps = reg.amplitudes();
  for (std::size_t flat = 0; flat < amps.size(); ++flat) {
    double angle = 0.0;
    for (const auto& [site, theta] : word) angle += layout.digit(flat, site) * theta;
    amps[flat] *= unit_phase(angle);
  }
}

std::vector<Amplitude> basis_vector(Basis basis, int d, int outcome) {
  std::vector<Amplitude> v(static_cast<std::size_t>(d));
  if (basis == Basis::computational) {
    v[static_cast<std::size_t>(outcome)] = 1.0;
    return v;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int k = 0; k < d; ++k) {
    const long long e = (static_cast<long long>(outcome) * k) % d;
    v[static_cast<std::size_t>(k)] = scale * unit_phase(2.0 * std::numbers::pi * static_cast<double>(e) / d);
  }
  return v;
}

namespace {

// Unnormalized <b|_site |reg>, with the site removed.
MixedRadixRegister contract_site(const MixedRadixRegister& reg, std::size_t site, std::span<const Amplitude> bra) {
  const auto& layout = reg.layout();
  SiteLayout rest = layout.without(site);
  const std::size_t stride = layout.stride(site);
  const auto d = static_cast<std::size_t>(layout.dim(site));
  std::vector<Amplitude> out(rest.total_dimension());
  const auto amps = reg.amplitudes();
  // flat = high * (d * stride) + k * stride + low  ->  high * stride + low
  for (std::size_t r = 0; r < out.size(); ++r) {
    const std::size_t high = r / stride;
    const std::size_t low = r % stride;
    const std::size_t base = high * d * stride + low;
    Amplitude sum = 0.0;
    for (std::size_t k = 0; k < d; ++k) sum += std::conj(bra[k]) * amps[base + k * stride];
    out[r] = sum;
  }
  return MixedRadixRegister(std::move(rest), std::move(out));
}

Branch finish_branch(MixedRadixRegister projected, int outcome) {
  const double n = projected.norm();
  Branch b{outcome, n * n, std::move(projected)};
  if (n > 0.0) b.state.normalize();
  return b;
}

}  // namespace

Branch project(const MixedRadixRegister& reg, std::size_t site, Basis basis, int outcome) {
  check_site(reg.layout(), site);
  const int d = reg.layout().dim(site);
  if (outcome < 0 || outcome >= d) {
    throw Error(ErrorCode::InvalidSite, "outcome " + std::to_string(outcome) + " for dimension " + std::to_string(d));
  }
  Branch b = finish_branch(contract_site(reg, site, basis_vector(basis, d, outcome)), outcome);
  if (b.probability < kBranchCutoff) {
    throw Error(ErrorCode::ZeroProbabilityBranchRequested,
                "outcome " + std::to_string(outcome) + " at site " + std::to_string(site));
  }
  return b;
}

BranchSet enumerate_outcomes(const MixedRadixRegister& reg, std::size_t site, Basis basis) {
  check_site(reg.layout(), site);
  const int d = reg.layout().dim(site);
  BranchSet out;
  for (int s = 0; s < d; ++s) {
    Branch b = finish_branch(contract_site(reg, site, basis_vector(basis, d, s)), s);
    if (b.probability >= kBranchCutoff) out.push_back(std::move(b));
  }
  return out;
}

Branch sample_outcome(const MixedRadixRegister& reg, std::size_t site, Basis basis, std::mt19937_64& rng) {
  BranchSet all = enumerate_outcomes(reg, site, basis);
  double total = 0.0;
  for (const auto& b : all) total += b.probability;
  std::uniform_real_distribution<double> uniform(0.0, total);
  double draw = uniform(rng);
  for (auto& b : all) {
    if (draw < b.probability) return std::move(b);
    draw -= b.probability;
  }
  return std::move(all.back());
}

Amplitude inner_product(const MixedRadixRegister& a, const MixedRadixRegister& b) {
  if (!(a.layout() == b.layout())) throw Error(ErrorCode::LayoutMismatch, "registers have different layouts");
  Amplitude sum = 0.0;
  const auto x = a.amplitudes();
  const auto y = b.amplitudes();
  for (std::size_t i = 0; i < x.size(); ++i) sum += std::conj(x[i]) * y[i];
  return sum;
}

double fidelity(const MixedRadixRegister& a, const MixedRadixRegister& b) {
  return std::min(1.0, std::abs(inner_product(a, b)));
}

std::vector<DumpEntry> dump(const MixedRadixRegister& reg, double threshold) {
  std::vector<DumpEntry> out;
  const auto amps = reg.amplitudes();
  for (std::size_t flat = 0; flat < amps.size(); ++flat) {
    if (std::abs(amps[flat]) >= threshold) {
      out.push_back({reg.layout().digits(flat), amps[flat].real(), amps[flat].imag()});
    }
  }
  return out;
}

}  // namespace qbcast
