#include "canace/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "canace/io.hpp"

namespace canace {

DegreeCaps DegreeCaps::uniform(double D) {
  if (!(D >= 0.0)) throw std::invalid_argument("degree cap must be nonnegative");
  DegreeCaps c;
  c.uniform_ = D;
  return c;
}

DegreeCaps DegreeCaps::per_order(std::vector<double> caps) {
  if (caps.empty()) throw std::invalid_argument("per-order degree caps must be nonempty");
  for (double d : caps)
    if (!(d >= 0.0)) throw std::invalid_argument("degree cap must be nonnegative");
  DegreeCaps c;
  c.per_order_ = std::move(caps);
  return c;
}

double DegreeCaps::cap(int order) const {
  if (order <= 0) return std::max(0.0, max_cap());
  if (per_order_.empty()) return uniform_;
  if (order > static_cast<int>(per_order_.size())) return -1.0;
  return per_order_[static_cast<std::size_t>(order - 1)];
}

double DegreeCaps::max_cap() const {
  if (per_order_.empty()) return uniform_;
  return *std::max_element(per_order_.begin(), per_order_.end());
}

std::string DegreeCaps::label() const {
  std::ostringstream os;
  if (per_order_.empty()) {
    os << "D=" << uniform_;
  } else {
    os << "D=(";
    for (std::size_t i = 0; i < per_order_.size(); ++i) os << (i ? " " : "") << per_order_[i];
    os << ")";
  }
  return os.str();
}

double tuple_degree(const BasisFamily& family, const IndexTuple& t) {
  double d = 0.0;
  for (const auto& k : t.entries()) d += family.degree(k);
  return d;
}

// ---------------------------------------------------------------------------

IndexSet::IndexSet(const BasisFamily& family, std::vector<IndexTuple> tuples, int max_order, DegreeCaps caps)
    : caps_(std::move(caps)), spherical_(family.is_spherical()) {
  std::vector<std::pair<double, IndexTuple>> keyed;
  keyed.reserve(tuples.size());
  for (auto& t : tuples) keyed.emplace_back(tuple_degree(family, t), std::move(t));
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    if (a.second.order() != b.second.order()) return a.second.order() < b.second.order();
    return a.second < b.second;
  });
  keyed.erase(std::unique(keyed.begin(), keyed.end(),
                          [](const auto& a, const auto& b) { return a.second == b.second; }),
              keyed.end());
  int observed = 0;
  for (auto& [d, t] : keyed) {
    observed = std::max(observed, t.order());
    pos_.emplace(t, tuples_.size());
    degrees_.push_back(d);
    tuples_.push_back(std::move(t));
  }
  max_order_ = max_order >= 0 ? max_order : observed;
}

std::optional<std::size_t> IndexSet::find(const IndexTuple& t) const {
  auto it = pos_.find(t);
  if (it == pos_.end()) return std::nullopt;
  return it->second;
}

double IndexSet::max_degree() const {
  return degrees_.empty() ? 0.0 : *std::max_element(degrees_.begin(), degrees_.end());
}

std::vector<std::string> IndexSet::labels() const {
  std::vector<std::string> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(label(i));
  return out;
}

std::vector<std::size_t> IndexSet::of_order(int order) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i)
    if (tuples_[i].order() == order) out.push_back(i);
  return out;
}

std::vector<OneParticleIndex> IndexSet::scalar_indices() const {
  std::vector<OneParticleIndex> out;
  for (const auto& t : tuples_) out.insert(out.end(), t.entries().begin(), t.entries().end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

IndexSet generate_index_set(const BasisFamily& family, int max_order, const DegreeCaps& caps,
                            bool include_constant_indices) {
  if (max_order < 0) throw std::invalid_argument("generate_index_set: max_order must be >= 0");
  const auto scalars = family.indices_up_to(caps.max_cap(), include_constant_indices);
  std::vector<double> deg;
  for (const auto& k : scalars) deg.push_back(family.degree(k));

  std::vector<IndexTuple> tuples{IndexTuple{}};
  std::vector<OneParticleIndex> cur;
  for (int N = 1; N <= max_order; ++N) {
    const double cap = caps.cap(N) + 1e-9;
    if (cap < 0.0) continue;
    std::function<void(std::size_t, double)> rec = [&](std::size_t start, double sum) {
      if (static_cast<int>(cur.size()) == N) {
        tuples.emplace_back(cur);
        return;
      }
      for (std::size_t i = start; i < scalars.size(); ++i) {
        if (sum + deg[i] > cap) continue;
        cur.push_back(scalars[i]);
        rec(i, sum + deg[i]);
        cur.pop_back();
      }
    };
    rec(0, 0.0);
  }
  return IndexSet(family, std::move(tuples), max_order, caps);
}

// ---------------------------------------------------------------------------

Eigen::VectorXcd pooled_features(const BasisFamily& family, std::span<const OneParticleIndex> scalar_indices,
                                 const Configuration& X) {
  Eigen::VectorXcd A = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(scalar_indices.size()));
  std::vector<Complex> vals(scalar_indices.size());
  for (const auto& x : X) {
    family.eval_many(x, scalar_indices, vals);
    for (std::size_t i = 0; i < vals.size(); ++i) A[static_cast<Eigen::Index>(i)] += vals[i];
  }
  return A;
}

namespace {

std::vector<std::vector<int>> tuple_positions(std::span<const OneParticleIndex> scalars, const IndexSet& K) {
  std::vector<std::vector<int>> pos;
  pos.reserve(K.size());
  for (const auto& t : K) {
    std::vector<int> p;
    for (const auto& k : t.entries()) {
      auto it = std::lower_bound(scalars.begin(), scalars.end(), k);
      if (it == scalars.end() || !(*it == k)) {
        // fall back to a linear scan for unsorted inputs
        it = std::find(scalars.begin(), scalars.end(), k);
        if (it == scalars.end())
          throw std::invalid_argument("product_features: pooled features do not cover tuple " +
                                      tuple_label(t, K.spherical()));
      }
      p.push_back(static_cast<int>(it - scalars.begin()));
    }
    pos.push_back(std::move(p));
  }
  return pos;
}

Eigen::VectorXcd products_from_positions(const std::vector<std::vector<int>>& pos, const Eigen::VectorXcd& pooled) {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(pos.size()));
  for (std::size_t i = 0; i < pos.size(); ++i) {
    Complex v = 1.0;
    for (int p : pos[i]) v *= pooled[p];
    out[static_cast<Eigen::Index>(i)] = v;
  }
  return out;
}

}  // namespace

Eigen::VectorXcd product_features(std::span<const OneParticleIndex> scalar_indices, const Eigen::VectorXcd& pooled,
                                  const IndexSet& K) {
  if (pooled.size() != static_cast<Eigen::Index>(scalar_indices.size()))
    throw std::invalid_argument("product_features: pooled vector length mismatch");
  return products_from_positions(tuple_positions(scalar_indices, K), pooled);
}

Eigen::VectorXcd brute_force_canonical(const BasisFamily& family, const IndexSet& K, const Configuration& X) {
  const auto scalars = K.scalar_indices();
  const auto pos = tuple_positions(scalars, K);
  const std::size_t J = X.size();
  std::vector<std::vector<Complex>> phi(J, std::vector<Complex>(scalars.size()));
  for (std::size_t j = 0; j < J; ++j) family.eval_many(X[j], scalars, phi[j]);

  Eigen::VectorXcd out(static_cast<Eigen::Index>(K.size()));
  std::vector<char> used(J, 0);
  for (std::size_t i = 0; i < K.size(); ++i) {
    const auto& p = pos[i];
    std::function<Complex(std::size_t)> rec = [&](std::size_t t) -> Complex {
      if (t == p.size()) return 1.0;
      Complex s = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        if (used[j]) continue;
        used[j] = 1;
        s += phi[j][static_cast<std::size_t>(p[t])] * rec(t + 1);
        used[j] = 0;
      }
      return s;
    };
    out[static_cast<Eigen::Index>(i)] = p.size() > J ? Complex(0.0) : rec(0);
  }
  return out;
}

// ---------------------------------------------------------------------------

SelfInteractingEvaluator::SelfInteractingEvaluator(BasisFamily family, const IndexSet& K)
    : family_(std::move(family)), scalars_(K.scalar_indices()), positions_(tuple_positions(scalars_, K)) {}

Eigen::VectorXcd SelfInteractingEvaluator::pooled(const Configuration& X) const {
  return pooled_features(family_, scalars_, X);
}

Eigen::VectorXcd SelfInteractingEvaluator::products(const Eigen::VectorXcd& pooled) const {
  return products_from_positions(positions_, pooled);
}

void write_features_csv(std::ostream& os, const IndexSet& K, const std::vector<Eigen::VectorXcd>& rows,
                        bool complex_values) {
  CsvTable t;
  for (const auto& l : K.labels()) {
    if (complex_values) {
      t.header.push_back("re(" + l + ")");
      t.header.push_back("im(" + l + ")");
    } else {
      t.header.push_back(l);
    }
  }
  for (const auto& r : rows) {
    if (r.size() != static_cast<Eigen::Index>(K.size()))
      throw std::invalid_argument("write_features_csv: feature vector length mismatch");
    std::vector<std::string> fields;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      fields.push_back(format_double(r[i].real()));
      if (complex_values) fields.push_back(format_double(r[i].imag()));
    }
    t.add_row(std::move(fields));
  }
  t.write(os);
}

}  // namespace canace
