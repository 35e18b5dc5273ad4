#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "canace/basis.hpp"
#include "canace/index.hpp"

namespace canace {

/// A configuration X = {x_1, ..., x_J}; particle order carries no meaning.
using Configuration = std::vector<Particle>;

/// Total-degree caps: either one cap D for every order, or a cap D_N per order N.
class DegreeCaps {
 public:
  DegreeCaps() = default;
  static DegreeCaps uniform(double D);
  static DegreeCaps per_order(std::vector<double> caps);  // caps[N - 1] bounds order N

  [[nodiscard]] double cap(int order) const;
  [[nodiscard]] double max_cap() const;
  [[nodiscard]] bool is_uniform() const { return per_order_.empty(); }
  [[nodiscard]] const std::vector<double>& per_order_caps() const { return per_order_; }
  [[nodiscard]] std::string label() const;

 private:
  double uniform_ = std::numeric_limits<double>::infinity();
  std::vector<double> per_order_;
};

double tuple_degree(const BasisFamily& family, const IndexTuple& t);

/// Finite set of tuples in canonical order: total degree, then order, then
/// lexicographic. Duplicates are removed on construction.
class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(const BasisFamily& family, std::vector<IndexTuple> tuples, int max_order = -1,
           DegreeCaps caps = {});

  [[nodiscard]] std::size_t size() const { return tuples_.size(); }
  [[nodiscard]] bool empty() const { return tuples_.empty(); }
  [[nodiscard]] const std::vector<IndexTuple>& tuples() const { return tuples_; }
  [[nodiscard]] const IndexTuple& operator[](std::size_t i) const { return tuples_[i]; }
  [[nodiscard]] auto begin() const { return tuples_.begin(); }
  [[nodiscard]] auto end() const { return tuples_.end(); }

  [[nodiscard]] std::optional<std::size_t> find(const IndexTuple& t) const;
  [[nodiscard]] bool contains(const IndexTuple& t) const { return find(t).has_value(); }
  [[nodiscard]] double degree(std::size_t i) const { return degrees_[i]; }
  [[nodiscard]] double max_degree() const;
  [[nodiscard]] int max_order() const { return max_order_; }
  [[nodiscard]] const DegreeCaps& caps() const { return caps_; }
  [[nodiscard]] bool spherical() const { return spherical_; }
  [[nodiscard]] std::string label(std::size_t i) const { return tuple_label(tuples_[i], spherical_); }
  [[nodiscard]] std::vector<std::string> labels() const;

  /// Indices of the tuples of a given order, in set order.
  [[nodiscard]] std::vector<std::size_t> of_order(int order) const;
  /// Distinct one-particle indices appearing in any tuple, sorted.
  [[nodiscard]] std::vector<OneParticleIndex> scalar_indices() const;

 private:
  std::vector<IndexTuple> tuples_;
  std::vector<double> degrees_;
  std::unordered_map<IndexTuple, std::size_t, IndexTupleHash> pos_;
  int max_order_ = 0;
  DegreeCaps caps_;
  bool spherical_ = false;
};

/// All nondecreasing tuples of order 0..max_order whose total degree respects
/// the caps. Tuple entries skip the constant index unless include_constant is set.
IndexSet generate_index_set(const BasisFamily& family, int max_order, const DegreeCaps& caps,
                            bool include_constant_indices = false);

/// Subset of K keeping the tuples for which keep(t) holds, same order.
template <class Pred>
IndexSet filter_index_set(const BasisFamily& family, const IndexSet& K, Pred keep) {
  std::vector<IndexTuple> out;
  for (const auto& t : K)
    if (keep(t)) out.push_back(t);
  return IndexSet(family, std::move(out), K.max_order(), K.caps());
}

/// A_k(X) = sum_j phi_k(x_j) for each k.
Eigen::VectorXcd pooled_features(const BasisFamily& family, std::span<const OneParticleIndex> scalar_indices,
                                 const Configuration& X);

/// Self-interacting products A_k = prod_t A_{k_t}; the empty tuple gives 1.
Eigen::VectorXcd product_features(std::span<const OneParticleIndex> scalar_indices,
                                  const Eigen::VectorXcd& pooled, const IndexSet& K);

/// Canonical basis by explicit summation over injective particle assignments.
/// Tuples with more entries than particles evaluate to 0.
Eigen::VectorXcd brute_force_canonical(const BasisFamily& family, const IndexSet& K, const Configuration& X);

/// Precompiled evaluator for the self-interacting basis over a fixed index set.
class SelfInteractingEvaluator {
 public:
  SelfInteractingEvaluator(BasisFamily family, const IndexSet& K);

  [[nodiscard]] const std::vector<OneParticleIndex>& scalar_indices() const { return scalars_; }
  [[nodiscard]] Eigen::VectorXcd pooled(const Configuration& X) const;
  [[nodiscard]] Eigen::VectorXcd products(const Eigen::VectorXcd& pooled) const;
  [[nodiscard]] Eigen::VectorXcd evaluate(const Configuration& X) const { return products(pooled(X)); }

 private:
  BasisFamily family_;
  std::vector<OneParticleIndex> scalars_;
  std::vector<std::vector<int>> positions_;
};

/// Feature CSV: one row per configuration, header = tuple labels. Complex
/// features are written as paired columns re(label), im(label).
void write_features_csv(std::ostream& os, const IndexSet& K, const std::vector<Eigen::VectorXcd>& rows,
                        bool complex_values);

}  // namespace canace
