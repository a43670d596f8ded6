#pragma once

// Brute-force ground truth built from explicit dense matrices and index
// loops. Nothing here goes through the streaming gate kernels, so agreement
// between the two is evidence rather than tautology.

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qbcast/dag.hpp"
#include "qbcast/qudit.hpp"

namespace qbcast::oracle {

using DenseOperator = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;

/// Dense matrices are refused above this total dimension.
inline constexpr std::size_t kMaxDenseDimension = 4096;

DenseOperator shift(int d, int power = 1);
DenseOperator clock(int d, int power = 1);
DenseOperator phase(int d, double theta);
DenseOperator projector(int d, int k);
DenseOperator kron(const DenseOperator& a, const DenseOperator& b);

/// Kronecker product over `dims`, with `ops` placed at their sites and the
/// identity elsewhere. Site 0 is the leftmost factor.
DenseOperator embed(std::span<const int> dims, const std::map<std::size_t, DenseOperator>& ops);

/// sum_k |k><k|_control (x) X_target^k.
DenseOperator controlled_shift(std::span<const int> dims, std::size_t control, std::size_t target);

/// sum_l |l><l|_control (x) prod_t U_t(l * angle_t).
DenseOperator controlled_phase_word(std::span<const int> dims, std::size_t control,
                                    const std::vector<std::pair<std::size_t, double>>& word);

double max_abs_difference(const DenseOperator& a, const DenseOperator& b);

/// Deviations for U_A(theta) pushed through CX_{j=>A} on H_j x H_A.
struct CommutationDeviation {
  /// General theta, on inputs |k>_j|m>_A with k + m <= D - 1 (no wraparound).
  double phase_identity = 0.0;
  /// General theta on all of H_j x H_A; nonzero in general, informational.
  double phase_identity_full_space = 0.0;
  /// Z_A^l specialization on all of H_j x H_A.
  double power_identity = 0.0;

  double worst() const { return std::max(phase_identity, power_identity); }
};

/// Requires 2 <= d_j <= D <= 16; throws DimensionTooLarge otherwise.
CommutationDeviation verify_commutation_identity(int d_j, int D, double theta, int power);

/// Max-abs difference between <s~|_A U_A(theta) prod_j CX_{j=>A} |0>_A and
/// D^{-1/2} (x)_j U_j(theta - 2 pi s / D) as maps on H_1 x ... x H_N.
/// D = 1 + sum_j (d_j - 1) <= 64.
double verify_splitting_identity(std::span<const int> dims, double theta, int outcome);

/// max ||M^dagger M - I|| over X, Z, U(theta) and CX for dimensions <= d_max.
double verify_unitarity(int d_max);

/// Completeness and orthogonality of both single-qudit measurement bases
/// for dimensions <= d_max.
double verify_measurement_bases(int d_max);

/// Closed-form resource state: sinks carry psi, every non-sink holds the
/// path-weighted sum of sink digits. Vertex order, site 0 slowest.
DenseVector closed_form_resource_state(const DagNetwork& g, const DenseVector& psi);

/// Digit tuples of amplitudes above 1e-12 whose K_v is nonzero somewhere.
std::vector<std::vector<int>> support_violations(const DagNetwork& g, std::span<const Amplitude> amps);

struct SupportCheck {
  bool ok = true;
  std::vector<std::vector<int>> violations;
};

/// Scans the streaming engine's resource state for K_v != 0 amplitudes.
SupportCheck verify_support_condition(const DagNetwork& g, const StateSpec& psi);

struct SweepEntry {
  std::string name;
  std::size_t points = 0;
  double worst = 0.0;
};

/// Deterministic grid sweeps of unitarity, measurement bases, commutation
/// and splitting up to d_max.
std::vector<SweepEntry> run_property_sweeps(int d_max);

}  // namespace qbcast::oracle
