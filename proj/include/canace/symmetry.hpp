#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "canace/expansion.hpp"
#include "canace/purification.hpp"

namespace canace {

enum class SymmetryGroup { O1, SO2, O3 };

std::string group_name(SymmetryGroup g);
SymmetryGroup parse_group(const std::string& name);

/// Tuples with an even entry sum (reflection x -> -x).
IndexSet filter_parity_O1(const BasisFamily& family, const IndexSet& K);
/// Tuples with zero frequency sum (rotations theta -> theta + theta0).
IndexSet filter_rotation_SO2(const BasisFamily& family, const IndexSet& K);
/// Tuples with zero m sum and even l sum.
IndexSet filter_O3(const BasisFamily& family, const IndexSet& K);

/// Rows are invariant labels alpha, columns are tuples; B = C * (features over cols).
struct SymmetrizationOperator {
  SymmetryGroup group = SymmetryGroup::O1;
  std::vector<std::string> labels;
  IndexSet cols;
  SparseComplex matrix;
};

/// 0/1 selection of every tuple of a filtered set (O(1) and SO(2)).
SymmetrizationOperator selection_operator(const IndexSet& K, SymmetryGroup group);

struct CouplingOptions {
  int rotations = 3;              // random rotations per block, plus the point reflection
  int validation_rotations = 2;   // fresh rotations for the residual check
  double null_tol = 1e-10;
  double validation_tol = 1e-8;
  int threads = 1;
};

/// Orthonormal rotation-and-reflection invariant couplings per (n, l) block.
/// Input must already satisfy the O(3) filter.
SymmetrizationOperator build_O3_coupling(const IndexSet& K_nlm, std::uint64_t seed,
                                         const CouplingOptions& options = {});

/// B = Cp * A with columns indexed by a feature index set.
struct FusedOperator {
  SymmetryGroup group = SymmetryGroup::O1;
  std::vector<std::string> labels;
  IndexSet cols;
  SparseComplex matrix;
};

/// Cp = C * P (canonical invariants from self-interacting features over K').
FusedOperator fuse_symmetrization(const SymmetrizationOperator& C, const PurificationOperator& P);
/// C applied directly to the self-interacting features over its own columns.
FusedOperator self_interacting_invariants(const SymmetrizationOperator& C);

/// Evaluates B = Cp * A. For O(3) the result must be real; the imaginary part
/// is checked and dropped.
Eigen::VectorXcd evaluate_invariants(const FusedOperator& Cp, const Eigen::VectorXcd& A);

/// Haar-random rotation; with `improper`, composed with the point reflection.
Eigen::Matrix3d random_rotation(std::mt19937_64& rng, bool improper = false);
/// D^l_{m m'}(Q) with Y_l^m(Q r) = sum_{m'} D_{m m'} Y_l^{m'}(r); indices m + l.
Eigen::MatrixXcd wigner_d(int l, const Eigen::Matrix3d& Q);
Configuration transform_configuration(const Configuration& X, const Eigen::Matrix3d& Q);

void write_symmetrization(std::ostream& os, const FusedOperator& C, bool spherical);

}  // namespace canace
