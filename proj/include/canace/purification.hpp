#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "canace/basis.hpp"
#include "canace/expansion.hpp"

namespace canace {

using SparseReal = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseComplex = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

struct ClosureOptions {
  /// Abort when the closed set would exceed this many tuples.
  std::size_t max_size = 2'000'000;
  /// Abort when a closure tuple exceeds max_deg(K) + headroom. Default 4 * max order.
  std::optional<double> degree_headroom;
  double prune_tol = 1e-12;
  int threads = 1;
};

struct ClosureReport {
  std::size_t original_size = 0;
  std::size_t closed_size = 0;
  std::vector<IndexTuple> extra;  // K' \ K in canonical order
  int iterations = 0;
};

/// Least fixed point K' of the purification recursion applied to K.
std::pair<IndexSet, ClosureReport> close_index_set(const IndexSet& K, const BasisFamily& family,
                                                   const ClosureOptions& options = {});

/// Sparse map with rows over K and columns over the closure K'; A_canonical = P * A_self.
class PurificationOperator {
 public:
  PurificationOperator() = default;
  PurificationOperator(IndexSet rows, IndexSet cols, SparseReal matrix, std::string family_tag,
                       int max_rule_terms = 0, ClosureReport closure = {});

  [[nodiscard]] const IndexSet& rows() const { return rows_; }
  [[nodiscard]] const IndexSet& cols() const { return cols_; }
  [[nodiscard]] const SparseReal& matrix() const { return matrix_; }
  [[nodiscard]] const std::string& family_tag() const { return family_tag_; }
  [[nodiscard]] int max_rule_terms() const { return max_rule_terms_; }
  [[nodiscard]] const ClosureReport& closure() const { return closure_; }
  [[nodiscard]] bool square() const;
  [[nodiscard]] std::size_t nnz() const { return static_cast<std::size_t>(matrix_.nonZeros()); }

  [[nodiscard]] double entry(const IndexTuple& row, const IndexTuple& col) const;
  [[nodiscard]] Eigen::VectorXcd apply(const Eigen::VectorXcd& A) const;

 private:
  IndexSet rows_, cols_;
  SparseReal matrix_;
  std::string family_tag_;
  int max_rule_terms_ = 0;
  ClosureReport closure_;
};

/// Builds P by the order-by-order recursion; closure is applied internally.
PurificationOperator build_purification_operator(const IndexSet& K, const BasisFamily& family,
                                                 const ClosureOptions& options = {});

/// Sparse matrix-vector product P * A, with A indexed by P.cols().
Eigen::VectorXcd apply_purification(const PurificationOperator& P, const Eigen::VectorXcd& A);

struct OrderSparsity {
  int order = 0;
  std::size_t rows = 0;
  std::size_t max_nnz = 0;
  double mean_nnz = 0.0;
  double bound = 1.0;  // prod_{t=1}^{N-1} (K t + 1)
  bool within_bound = true;
};

struct SparsityReport {
  std::vector<OrderSparsity> orders;
  std::size_t nnz = 0;
  double density = 0.0;  // nnz / (rows * cols)
  int K = 0;             // largest observed number of terms in a product rule
  bool order_triangular = true;   // off-diagonal entries only at strictly lower order
  bool degree_triangular = true;  // no entry with deg(col) > deg(row)
  bool unit_diagonal = true;
  bool bound_holds = true;
};

SparsityReport sparsity_report(const PurificationOperator& P, const BasisFamily& family);

struct SpanOptions {
  int min_particles = -1;  // default: max order of K
  int max_particles = -1;  // default: min_particles + 3
  double threshold = 1e-8;
  int threads = 1;
};

struct SpanEquivalence {
  bool equal = false;
  bool canonical_in_self = false;  // span{canonical over K} inside span{self-interacting over K}
  bool self_in_canonical = false;
  std::size_t canonical_outside = 0;  // columns failing the containment test
  std::size_t self_outside = 0;
  Eigen::Index canonical_rank = 0;
  Eigen::Index self_rank = 0;
  double max_residual = 0.0;
  ClosureReport closure;
};

/// Numerical check that span{A_k : k in K} equals span{canonical A_k : k in K}
/// as functions, using random configurations.
SpanEquivalence check_span_equivalence(const IndexSet& K, const BasisFamily& family, std::size_t sample_count,
                                       std::uint64_t seed, const SpanOptions& options = {});

/// Sparse triplet file: header lines, then "row_label,col_label,value" in row-major order.
void write_operator(std::ostream& os, const PurificationOperator& P, const std::string& caps_label);
PurificationOperator read_operator(std::istream& is, const BasisFamily& family);

}  // namespace canace
