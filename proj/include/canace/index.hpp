#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace canace {

/// Index of a single one-particle basis function.
///
/// Scalar families (monomial, Chebyshev, Legendre, trigonometric) use only
/// `n`; spherical families use the full triple (n, l, m) with |m| <= l.
struct OneParticleIndex {
  int n = 0;
  int l = 0;
  int m = 0;

  static constexpr OneParticleIndex scalar(int k) { return {k, 0, 0}; }
  static constexpr OneParticleIndex nlm(int n, int l, int m) { return {n, l, m}; }

  auto operator<=>(const OneParticleIndex&) const = default;
};

struct OneParticleIndexHash {
  std::size_t operator()(const OneParticleIndex& k) const noexcept {
    std::size_t h = static_cast<std::size_t>(k.n) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::size_t>(k.l + 0x1000) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::size_t>(k.m + 0x1000) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
    return h;
  }
};

/// Lexicographically nondecreasing tuple of one-particle indices.
/// The empty tuple represents the constant basis function.
class IndexTuple {
 public:
  IndexTuple() = default;
  explicit IndexTuple(std::vector<OneParticleIndex> entries);
  IndexTuple(std::initializer_list<OneParticleIndex> entries);

  /// Scalar-family convenience: IndexTuple::of({1, 2}).
  static IndexTuple of(std::initializer_list<int> scalars);

  [[nodiscard]] int order() const { return static_cast<int>(entries_.size()); }
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] const std::vector<OneParticleIndex>& entries() const { return entries_; }
  [[nodiscard]] const OneParticleIndex& operator[](std::size_t i) const { return entries_[i]; }

  /// Tuple with entry `pos` replaced by `k` (re-sorted).
  [[nodiscard]] IndexTuple replaced(std::size_t pos, const OneParticleIndex& k) const;
  /// Tuple with `k` appended (re-sorted).
  [[nodiscard]] IndexTuple extended(const OneParticleIndex& k) const;
  /// First order()-1 entries.
  [[nodiscard]] IndexTuple prefix() const;

  [[nodiscard]] int sum_n() const;
  [[nodiscard]] int sum_l() const;
  [[nodiscard]] int sum_m() const;

  auto operator<=>(const IndexTuple&) const = default;
  bool operator==(const IndexTuple&) const = default;

 private:
  std::vector<OneParticleIndex> entries_;
};

struct IndexTupleHash {
  std::size_t operator()(const IndexTuple& t) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL + static_cast<std::size_t>(t.order());
    OneParticleIndexHash eh;
    for (const auto& k : t.entries()) h = (h ^ eh(k)) * 0x100000001b3ULL;
    return h;
  }
};

/// Labels used in CSV headers and operator files:
///   scalar tuples  "1|2", spherical tuples "1:0:0;2:1:-1", empty tuple "()".
std::string tuple_label(const IndexTuple& t, bool spherical);
IndexTuple parse_tuple_label(const std::string& label, bool spherical);

}  // namespace canace
