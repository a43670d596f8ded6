#include "qbcast/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "qbcast/broadcast.hpp"
#include "qbcast/error.hpp"

namespace qbcast::oracle {

namespace {

using Complex = std::complex<double>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Complex cis(double angle) { return {std::cos(angle), std::sin(angle)}; }

std::size_t product(std::span<const int> dims) {
  std::size_t total = 1;
  for (int d : dims) total *= static_cast<std::size_t>(d);
  return total;
}

void check_dense(std::size_t total) {
  if (total > kMaxDenseDimension) {
    throw Error(ErrorCode::DimensionTooLarge,
                "dense dimension " + std::to_string(total) + " exceeds " + std::to_string(kMaxDenseDimension));
  }
}

const std::vector<double>& theta_grid() {
  static const std::vector<double> grid{0.0, 0.7, std::numbers::pi / 5, 1.3, std::numbers::pi, 2.1, -0.4};
  return grid;
}

}  // namespace

DenseOperator shift(int d, int power) {
  DenseOperator m = DenseOperator::Zero(d, d);
  const int p = ((power % d) + d) % d;
  for (int k = 0; k < d; ++k) m((k + p) % d, k) = 1.0;
  return m;
}

DenseOperator clock(int d, int power) {
  DenseOperator m = DenseOperator::Zero(d, d);
  for (int k = 0; k < d; ++k) m(k, k) = cis(kTwoPi * ((static_cast<long long>(power) * k) % d) / d);
  return m;
}

DenseOperator phase(int d, double theta) {
  DenseOperator m = DenseOperator::Zero(d, d);
  for (int k = 0; k < d; ++k) m(k, k) = cis(k * theta);
  return m;
}

DenseOperator projector(int d, int k) {
  DenseOperator m = DenseOperator::Zero(d, d);
  m(k, k) = 1.0;
  return m;
}

DenseOperator kron(const DenseOperator& a, const DenseOperator& b) {
  DenseOperator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

DenseOperator embed(std::span<const int> dims, const std::map<std::size_t, DenseOperator>& ops) {
  check_dense(product(dims));
  DenseOperator out = DenseOperator::Identity(1, 1);
  for (std::size_t site = 0; site < dims.size(); ++site) {
    auto it = ops.find(site);
    out = kron(out, it == ops.end() ? DenseOperator::Identity(dims[site], dims[site]) : it->second);
  }
  return out;
}

DenseOperator controlled_shift(std::span<const int> dims, std::size_t control, std::size_t target) {
  const std::size_t total = product(dims);
  check_dense(total);
  DenseOperator out = DenseOperator::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  for (int k = 0; k < dims[control]; ++k) {
    out += embed(dims, {{control, projector(dims[control], k)}, {target, shift(dims[target], k)}});
  }
  return out;
}

DenseOperator controlled_phase_word(std::span<const int> dims, std::size_t control,
                                    const std::vector<std::pair<std::size_t, double>>& word) {
  const std::size_t total = product(dims);
  check_dense(total);
  DenseOperator out = DenseOperator::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  for (int l = 0; l < dims[control]; ++l) {
    std::map<std::size_t, DenseOperator> ops{{control, projector(dims[control], l)}};
    for (const auto& [site, angle] : word) {
      auto it = ops.find(site);
      const DenseOperator u = phase(dims[site], l * angle);
      if (it == ops.end()) {
        ops.emplace(site, u);
      } else {
        it->second = u * it->second;
      }
    }
    out += embed(dims, ops);
  }
  return out;
}

double max_abs_difference(const DenseOperator& a, const DenseOperator& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

CommutationDeviation verify_commutation_identity(int d_j, int D, double theta, int power) {
  if (d_j < 2 || d_j > D || D > 16) {
    throw Error(ErrorCode::DimensionTooLarge, "need 2 <= d_j <= D <= 16, got d_j=" + std::to_string(d_j) +
                                                  " D=" + std::to_string(D));
  }
  const std::vector<int> dims{d_j, D};
  const DenseOperator cx = controlled_shift(dims, 0, 1);
  const DenseOperator id_j = DenseOperator::Identity(d_j, d_j);

  const DenseOperator lhs = kron(id_j, phase(D, theta)) * cx;
  const DenseOperator rhs = cx * kron(phase(d_j, theta), phase(D, theta));

  CommutationDeviation out;
  out.phase_identity_full_space = max_abs_difference(lhs, rhs);
  for (int k = 0; k < d_j; ++k) {
    for (int m = 0; k + m <= D - 1; ++m) {
      const Eigen::Index col = k * D + m;
      out.phase_identity = std::max(out.phase_identity, (lhs.col(col) - rhs.col(col)).cwiseAbs().maxCoeff());
    }
  }

  const DenseOperator z = clock(D, power);
  const DenseOperator lhs_power = kron(id_j, z) * cx;
  const DenseOperator rhs_power = cx * kron(phase(d_j, kTwoPi * power / D), z);
  out.power_identity = max_abs_difference(lhs_power, rhs_power);
  return out;
}

double verify_splitting_identity(std::span<const int> dims, double theta, int outcome) {
  int D = 1;
  for (int d : dims) D += d - 1;
  if (D > 64) throw Error(ErrorCode::DimensionTooLarge, "D=" + std::to_string(D) + " exceeds 64");

  std::vector<int> all(dims.begin(), dims.end());
  all.push_back(D);
  const std::size_t anc = dims.size();
  DenseOperator circuit = embed(all, {{anc, phase(D, theta)}});
  for (std::size_t j = 0; j < dims.size(); ++j) circuit = circuit * controlled_shift(all, j, anc);

  const auto sys = static_cast<Eigen::Index>(product(dims));
  // <s~|_A = D^{-1/2} sum_a w^{-s a} <a|
  DenseOperator contracted = DenseOperator::Zero(sys, sys);
  for (Eigen::Index i = 0; i < sys; ++i) {
    for (Eigen::Index j = 0; j < sys; ++j) {
      Complex sum = 0.0;
      for (int a = 0; a < D; ++a) sum += cis(-kTwoPi * outcome * a / D) * circuit(i * D + a, j * D);
      contracted(i, j) = sum / std::sqrt(static_cast<double>(D));
    }
  }

  std::map<std::size_t, DenseOperator> ops;
  for (std::size_t j = 0; j < dims.size(); ++j) {
    ops.emplace(j, phase(dims[j], -kTwoPi * outcome / D) * phase(dims[j], theta));
  }
  const DenseOperator expected = embed(dims, ops) / std::sqrt(static_cast<double>(D));
  return max_abs_difference(contracted, expected);
}

double verify_unitarity(int d_max) {
  double worst = 0.0;
  auto unitary_gap = [&](const DenseOperator& m) {
    const DenseOperator gram = m.adjoint() * m;
    worst = std::max(worst, max_abs_difference(gram, DenseOperator::Identity(m.rows(), m.cols())));
  };
  for (int d = 2; d <= d_max; ++d) {
    unitary_gap(shift(d));
    unitary_gap(clock(d));
    for (double theta : theta_grid()) unitary_gap(phase(d, theta));
    for (int d2 = 2; d2 <= d_max; ++d2) {
      const std::vector<int> dims{d, d2};
      unitary_gap(controlled_shift(dims, 0, 1));
      unitary_gap(controlled_shift(dims, 1, 0));
    }
  }
  return worst;
}

double verify_measurement_bases(int d_max) {
  double worst = 0.0;
  for (int d = 2; d <= d_max; ++d) {
    DenseOperator fourier(d, d);  // column s = Z^s |+>
    for (int s = 0; s < d; ++s) {
      fourier.col(s) = clock(d, s) * DenseVector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
    }
    DenseOperator resolution = DenseOperator::Zero(d, d);
    DenseOperator computational = DenseOperator::Zero(d, d);
    for (int s = 0; s < d; ++s) {
      resolution += fourier.col(s) * fourier.col(s).adjoint();
      computational += projector(d, s);
    }
    const DenseOperator id = DenseOperator::Identity(d, d);
    worst = std::max({worst, max_abs_difference(resolution, id), max_abs_difference(computational, id),
                      max_abs_difference(fourier.adjoint() * fourier, id)});
  }
  return worst;
}

DenseVector closed_form_resource_state(const DagNetwork& g, const DenseVector& psi) {
  const std::size_t n = g.vertex_count();
  const std::size_t total = g.total_dimension();
  check_dense(total);

  std::vector<VertexId> sink_ids;
  for (VertexId v = 0; v < n; ++v) {
    if (g.graph().children(v).empty()) sink_ids.push_back(v);
  }
  std::size_t sink_total = 1;
  for (VertexId v : sink_ids) sink_total *= static_cast<std::size_t>(g.dim(v));
  if (static_cast<std::size_t>(psi.size()) != sink_total) {
    throw Error(ErrorCode::DimensionMismatch, "psi has the wrong length");
  }

  DenseVector out = DenseVector::Zero(static_cast<Eigen::Index>(total));
  std::vector<int> digit(n);
  for (std::size_t flat = 0; flat < sink_total; ++flat) {
    std::size_t rest = flat;
    for (std::size_t i = sink_ids.size(); i-- > 0;) {
      digit[sink_ids[i]] = static_cast<int>(rest % static_cast<std::size_t>(g.dim(sink_ids[i])));
      rest /= static_cast<std::size_t>(g.dim(sink_ids[i]));
    }
    std::function<int(VertexId)> value = [&](VertexId v) -> int {
      const auto children = g.graph().children(v);
      if (children.empty()) return digit[v];
      int sum = 0;
      for (VertexId w : children) sum += value(w);
      return sum;
    };
    std::size_t index = 0;
    for (VertexId v = 0; v < n; ++v) index = index * static_cast<std::size_t>(g.dim(v)) + static_cast<std::size_t>(value(v));
    out(static_cast<Eigen::Index>(index)) = psi(static_cast<Eigen::Index>(flat));
  }
  return out;
}

std::vector<std::vector<int>> support_violations(const DagNetwork& g, std::span<const Amplitude> amps) {
  const std::size_t n = g.vertex_count();
  std::vector<std::vector<int>> out;
  std::vector<int> digit(n);
  for (std::size_t flat = 0; flat < amps.size(); ++flat) {
    if (std::abs(amps[flat]) <= 1e-12) continue;
    std::size_t rest = flat;
    for (std::size_t v = n; v-- > 0;) {
      digit[v] = static_cast<int>(rest % static_cast<std::size_t>(g.dim(static_cast<VertexId>(v))));
      rest /= static_cast<std::size_t>(g.dim(static_cast<VertexId>(v)));
    }
    bool ok = true;
    for (VertexId v = 0; v < n && ok; ++v) {
      const auto children = g.graph().children(v);
      if (children.empty()) continue;
      int k = digit[v];
      for (VertexId w : children) k -= digit[w];
      ok = k == 0;
    }
    if (!ok) out.push_back(digit);
  }
  return out;
}

SupportCheck verify_support_condition(const DagNetwork& g, const StateSpec& psi) {
  check_dense(g.total_dimension());
  const MixedRadixRegister state = build_resource_state(g, psi);
  SupportCheck check;
  check.violations = support_violations(g, state.amplitudes());
  check.ok = check.violations.empty();
  return check;
}

std::vector<SweepEntry> run_property_sweeps(int d_max) {
  if (d_max < 2 || d_max > 16) throw Error(ErrorCode::DimensionTooLarge, "d_max must lie in [2, 16]");
  std::vector<SweepEntry> out;
  out.push_back({"unitarity", static_cast<std::size_t>(std::max(0, d_max - 1)), verify_unitarity(d_max)});
  out.push_back({"measurement_bases", static_cast<std::size_t>(std::max(0, d_max - 1)), verify_measurement_bases(d_max)});

  SweepEntry commutation{"commutation", 0, 0.0};
  for (int D = 2; D <= d_max; ++D) {
    for (int d_j = 2; d_j <= D; ++d_j) {
      for (double theta : theta_grid()) {
        for (int l = 0; l < D; ++l) {
          commutation.worst = std::max(commutation.worst, verify_commutation_identity(d_j, D, theta, l).worst());
          ++commutation.points;
        }
      }
    }
  }
  out.push_back(commutation);

  SweepEntry splitting{"splitting", 0, 0.0};
  const int d_top = std::min(3, d_max);
  const std::vector<double> thetas{0.0, 0.7, std::numbers::pi, 2.1};
  for (std::size_t count = 1; count <= 3; ++count) {
    std::vector<int> dims(count, 2);
    while (true) {
      int D = 1;
      for (int d : dims) D += d - 1;
      for (int s = 0; s < D; ++s) {
        for (double theta : thetas) {
          splitting.worst = std::max(splitting.worst, verify_splitting_identity(dims, theta, s));
          ++splitting.points;
        }
      }
      std::size_t i = 0;
      while (i < count && dims[i] == d_top) dims[i++] = 2;
      if (i == count) break;
      ++dims[i];
    }
  }
  out.push_back(splitting);
  return out;
}

}  // namespace qbcast::oracle
