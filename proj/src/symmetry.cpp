#include "canace/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "canace/io.hpp"
#include "canace/parallel.hpp"

namespace canace {

std::string group_name(SymmetryGroup g) {
  switch (g) {
    case SymmetryGroup::O1: return "O1";
    case SymmetryGroup::SO2: return "SO2";
    case SymmetryGroup::O3: return "O3";
  }
  return "?";
}

SymmetryGroup parse_group(const std::string& name) {
  if (name == "O1" || name == "o1") return SymmetryGroup::O1;
  if (name == "SO2" || name == "so2") return SymmetryGroup::SO2;
  if (name == "O3" || name == "o3") return SymmetryGroup::O3;
  throw std::invalid_argument("unknown symmetry group '" + name + "'");
}

IndexSet filter_parity_O1(const BasisFamily& family, const IndexSet& K) {
  if (family.is_spherical()) throw std::invalid_argument("O(1) filter needs a one-dimensional family");
  return filter_index_set(family, K, [](const IndexTuple& t) { return t.sum_n() % 2 == 0; });
}

IndexSet filter_rotation_SO2(const BasisFamily& family, const IndexSet& K) {
  if (family.is_spherical()) throw std::invalid_argument("SO(2) filter needs a one-dimensional family");
  return filter_index_set(family, K, [](const IndexTuple& t) { return t.sum_n() == 0; });
}

IndexSet filter_O3(const BasisFamily& family, const IndexSet& K) {
  if (!family.is_spherical()) throw std::invalid_argument("O(3) filter needs a spherical family");
  return filter_index_set(family, K, [](const IndexTuple& t) { return t.sum_m() == 0 && t.sum_l() % 2 == 0; });
}

SymmetrizationOperator selection_operator(const IndexSet& K, SymmetryGroup group) {
  SymmetrizationOperator C;
  C.group = group;
  C.cols = K;
  C.labels = K.labels();
  const auto n = static_cast<Eigen::Index>(K.size());
  C.matrix = SparseComplex(n, n);
  C.matrix.setIdentity();
  return C;
}

// ---------------------------------------------------------------------------

Eigen::Matrix3d random_rotation(std::mt19937_64& rng, bool improper) {
  std::normal_distribution<double> g;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  Eigen::Matrix3d Q = q.toRotationMatrix();
  return improper ? Eigen::Matrix3d(-Q) : Q;
}

Eigen::MatrixXcd wigner_d(int l, const Eigen::Matrix3d& Q) {
  if (l < 0) throw std::invalid_argument("wigner_d: negative l");
  const SphereRule rule = sphere_quadrature(std::max(l, 1));
  const int w = 2 * l + 1;
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(w, w);
  std::vector<Complex> y(static_cast<std::size_t>(sh_count(l))), yq(y.size());
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    const auto& p = rule.points[i];
    const Eigen::Vector3d q = Q * Eigen::Vector3d(p[0], p[1], p[2]);
    spherical_harmonics(l, p, y);
    spherical_harmonics(l, {q[0], q[1], q[2]}, yq);
    const double wt = 4.0 * kPi * rule.weights[i];
    for (int a = 0; a < w; ++a)
      for (int b = 0; b < w; ++b)
        D(a, b) += wt * yq[static_cast<std::size_t>(sh_index(l, a - l))] * std::conj(y[static_cast<std::size_t>(sh_index(l, b - l))]);
  }
  return D;
}

Configuration transform_configuration(const Configuration& X, const Eigen::Matrix3d& Q) {
  Configuration out;
  out.reserve(X.size());
  for (const auto& x : X) {
    const Eigen::Vector3d v = Q * Eigen::Vector3d(x[0], x[1], x[2]);
    out.push_back({v[0], v[1], v[2]});
  }
  return out;
}

namespace {

struct Block {
  std::vector<std::pair<int, int>> slots;  // (n, l) per position
  std::vector<std::size_t> cols;           // positions in K
};

struct BlockResult {
  std::vector<Eigen::VectorXcd> rows;  // over the block's columns
};

std::string block_label(const std::vector<std::pair<int, int>>& slots, std::size_t i) {
  if (slots.empty()) return "()/()/" + std::to_string(i);
  std::ostringstream os;
  for (std::size_t t = 0; t < slots.size(); ++t) os << (t ? ";" : "") << slots[t].first;
  os << "/";
  for (std::size_t t = 0; t < slots.size(); ++t) os << (t ? ";" : "") << slots[t].second;
  os << "/" << i;
  return os.str();
}

// Tensor-product representation on sorted m-tuples of one block.
class BlockRepresentation {
 public:
  BlockRepresentation(const Block& block, const IndexSet& K) : block_(block) {
    const std::size_t N = block.slots.size();
    for (std::size_t c = 0; c < block.cols.size(); ++c) {
      std::vector<int> m;
      for (const auto& e : K[block.cols[c]].entries()) m.push_back(e.m);
      col_m_.push_back(std::move(m));
    }
    // all m' combinations and the sorted key each one maps to
    std::vector<int> cur(N);
    std::map<IndexTuple, int> keys;
    std::function<void(std::size_t)> rec = [&](std::size_t t) {
      if (t == N) {
        std::vector<OneParticleIndex> e;
        for (std::size_t s = 0; s < N; ++s) e.push_back({block.slots[s].first, block.slots[s].second, cur[s]});
        const IndexTuple key(std::move(e));
        auto [it, fresh] = keys.try_emplace(key, static_cast<int>(keys.size()));
        combos_.push_back(cur);
        combo_key_.push_back(it->second);
        return;
      }
      const int l = block.slots[t].second;
      for (int m = -l; m <= l; ++m) {
        cur[t] = m;
        rec(t + 1);
      }
    };
    rec(0);
    nkeys_ = static_cast<int>(keys.size());
    for (std::size_t c = 0; c < block.cols.size(); ++c) col_key_.push_back(keys.at(K[block.cols[c]]));
    for (const auto& s : block.slots) lmax_ = std::max(lmax_, s.second);
  }

  // rows: keys, cols: block columns; entries (D(g) - I) restricted.
  [[nodiscard]] Eigen::MatrixXcd constraint(const Eigen::Matrix3d& Q) const {
    std::vector<Eigen::MatrixXcd> D;
    for (int l = 0; l <= lmax_; ++l) D.push_back(wigner_d(l, Q));
    const auto nc = static_cast<Eigen::Index>(col_m_.size());
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(nkeys_, nc);
    for (Eigen::Index c = 0; c < nc; ++c) {
      const auto& m = col_m_[static_cast<std::size_t>(c)];
      for (std::size_t k = 0; k < combos_.size(); ++k) {
        Complex v = 1.0;
        for (std::size_t t = 0; t < m.size(); ++t) {
          const int l = block_.slots[t].second;
          v *= D[static_cast<std::size_t>(l)](m[t] + l, combos_[k][t] + l);
        }
        M(combo_key_[k], c) += v;
      }
      M(col_key_[static_cast<std::size_t>(c)], c) -= 1.0;
    }
    return M;
  }

  // Position of the column whose m-tuple is negated, or -1.
  [[nodiscard]] std::vector<int> negation_map(const IndexSet& K) const {
    std::vector<int> out(block_.cols.size(), -1);
    std::map<IndexTuple, int> pos;
    for (std::size_t c = 0; c < block_.cols.size(); ++c) pos.emplace(K[block_.cols[c]], static_cast<int>(c));
    for (std::size_t c = 0; c < block_.cols.size(); ++c) {
      std::vector<OneParticleIndex> e = K[block_.cols[c]].entries();
      for (auto& k : e) k.m = -k.m;
      auto it = pos.find(IndexTuple(std::move(e)));
      if (it != pos.end()) out[c] = it->second;
    }
    return out;
  }

 private:
  const Block& block_;
  std::vector<std::vector<int>> col_m_;
  std::vector<std::vector<int>> combos_;
  std::vector<int> combo_key_;
  std::vector<int> col_key_;
  int nkeys_ = 0;
  int lmax_ = 0;
};

BlockResult couple_block(const Block& block, const IndexSet& K, std::uint64_t seed, const CouplingOptions& opt) {
  const BlockRepresentation rep(block, K);
  const auto nc = static_cast<Eigen::Index>(block.cols.size());
  std::mt19937_64 rng(seed);

  std::vector<Eigen::MatrixXcd> parts;
  for (int r = 0; r < opt.rotations; ++r) parts.push_back(rep.constraint(random_rotation(rng)));
  parts.push_back(rep.constraint(-Eigen::Matrix3d::Identity()));
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.rows();
  Eigen::MatrixXcd M(total, nc);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    M.middleRows(at, p.rows()) = p;
    at += p.rows();
  }

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = opt.null_tol * std::max(1.0, s.size() ? s[0] : 0.0);
  std::vector<Eigen::Index> null_cols;
  for (Eigen::Index j = 0; j < nc; ++j)
    if (j >= s.size() || s[j] <= cut) null_cols.push_back(j);
  const auto d = static_cast<Eigen::Index>(null_cols.size());
  BlockResult out;
  if (d == 0) return out;
  Eigen::MatrixXcd V(nc, d);
  for (Eigen::Index j = 0; j < d; ++j) V.col(j) = svd.matrixV().col(null_cols[static_cast<std::size_t>(j)]);
  const Eigen::MatrixXcd proj = V * V.adjoint();

  // Canonical basis: Gram-Schmidt over projected vectors fixed by v_m -> conj(v_{-m}).
  const auto neg = rep.negation_map(K);
  std::vector<Eigen::VectorXcd> basis;
  auto try_add = [&](Eigen::VectorXcd v) {
    for (const auto& b : basis) v -= b.dot(v) * b;
    const double n = v.norm();
    if (n < 1e-6) return;
    v /= n;
    for (const auto& b : basis) v -= b.dot(v) * b;
    v.normalize();
    basis.push_back(std::move(v));
  };
  const Complex I(0.0, 1.0);
  for (Eigen::Index c = 0; c < nc && static_cast<Eigen::Index>(basis.size()) < d; ++c) {
    const int nm = neg[static_cast<std::size_t>(c)];
    if (nm < 0) throw std::runtime_error("O(3) coupling: block is not closed under m -> -m");
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(nc), f = Eigen::VectorXcd::Zero(nc);
    e[c] += 1.0;
    e[nm] += 1.0;
    f[c] += I;
    f[nm] -= I;
    try_add(proj * e);
    if (static_cast<Eigen::Index>(basis.size()) < d) try_add(proj * f);
  }
  if (static_cast<Eigen::Index>(basis.size()) != d)
    throw std::runtime_error("O(3) coupling: could not build a canonical basis for block " + block_label(block.slots, 0));

  for (auto& v : basis) {
    const double vmax = v.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < nc; ++j) {
      if (std::abs(v[j]) < vmax * (1.0 - 1e-9)) continue;
      const double lead = std::abs(v[j].real()) > 1e-12 ? v[j].real() : v[j].imag();
      if (lead < 0.0) v = -v;
      break;
    }
    for (auto& x : v) {
      if (std::abs(x.real()) < 1e-15) x.real(0.0);
      if (std::abs(x.imag()) < 1e-15) x.imag(0.0);
    }
  }

  std::mt19937_64 fresh(seed ^ 0xF2E5A7D3ULL);
  for (int r = 0; r < opt.validation_rotations; ++r) {
    const Eigen::MatrixXcd G = rep.constraint(random_rotation(fresh, r % 2 == 1));
    for (const auto& v : basis) {
      const double res = (G * v).norm();
      if (res > opt.validation_tol) {
        std::ostringstream os;
        os << "O(3) coupling: invariance residual " << res << " on a fresh rotation for block "
           << block_label(block.slots, 0);
        throw std::runtime_error(os.str());
      }
    }
  }
  out.rows = std::move(basis);
  return out;
}

}  // namespace

SymmetrizationOperator build_O3_coupling(const IndexSet& K_nlm, std::uint64_t seed, const CouplingOptions& options) {
  if (!K_nlm.spherical()) throw std::invalid_argument("build_O3_coupling: spherical index set required");
  std::map<std::vector<std::pair<int, int>>, Block> blocks;
  for (std::size_t i = 0; i < K_nlm.size(); ++i) {
    const auto& t = K_nlm[i];
    if (t.sum_m() != 0 || t.sum_l() % 2 != 0)
      throw std::invalid_argument("build_O3_coupling: tuple " + K_nlm.label(i) + " violates the O(3) filter");
    std::vector<std::pair<int, int>> key;
    for (const auto& e : t.entries()) key.emplace_back(e.n, e.l);
    auto& b = blocks[key];
    b.slots = key;
    b.cols.push_back(i);
  }
  // deterministic block order: first appearance in K
  std::vector<const Block*> order;
  for (const auto& [k, b] : blocks) order.push_back(&b);
  std::sort(order.begin(), order.end(), [](const Block* a, const Block* b) { return a->cols[0] < b->cols[0]; });

  std::vector<BlockResult> results(order.size());
  parallel_for(order.size(), options.threads, [&](std::size_t i) {
    results[i] = couple_block(*order[i], K_nlm, seed + 0x9E3779B97F4A7C15ULL * (order[i]->cols[0] + 1), options);
  });

  SymmetrizationOperator C;
  C.group = SymmetryGroup::O3;
  C.cols = K_nlm;
  std::vector<Eigen::Triplet<Complex>> trip;
  int row = 0;
  for (std::size_t b = 0; b < order.size(); ++b) {
    for (std::size_t i = 0; i < results[b].rows.size(); ++i, ++row) {
      C.labels.push_back(block_label(order[b]->slots, i));
      const auto& v = results[b].rows[i];
      for (Eigen::Index j = 0; j < v.size(); ++j)
        if (std::abs(v[j]) > 1e-13) trip.emplace_back(row, static_cast<int>(order[b]->cols[static_cast<std::size_t>(j)]), v[j]);
    }
  }
  C.matrix = SparseComplex(row, static_cast<Eigen::Index>(K_nlm.size()));
  C.matrix.setFromTriplets(trip.begin(), trip.end());
  C.matrix.makeCompressed();
  return C;
}

// ---------------------------------------------------------------------------

FusedOperator fuse_symmetrization(const SymmetrizationOperator& C, const PurificationOperator& P) {
  // Re-index C's columns onto P's rows.
  std::vector<Eigen::Triplet<Complex>> trip;
  for (Eigen::Index i = 0; i < C.matrix.outerSize(); ++i) {
    for (SparseComplex::InnerIterator it(C.matrix, i); it; ++it) {
      const auto r = P.rows().find(C.cols[static_cast<std::size_t>(it.col())]);
      if (!r)
        throw std::invalid_argument("fuse_symmetrization: tuple " + C.cols.label(static_cast<std::size_t>(it.col())) +
                                    " is not a row of the purification operator");
      trip.emplace_back(static_cast<int>(i), static_cast<int>(*r), it.value());
    }
  }
  SparseComplex Cr(C.matrix.rows(), static_cast<Eigen::Index>(P.rows().size()));
  Cr.setFromTriplets(trip.begin(), trip.end());
  const SparseComplex Pc = P.matrix().cast<Complex>();
  SparseComplex prod = (Cr * Pc).pruned();
  prod.prune([](const Eigen::Index&, const Eigen::Index&, const Complex& v) { return std::abs(v) > 1e-14; });
  prod.makeCompressed();
  FusedOperator F;
  F.group = C.group;
  F.labels = C.labels;
  F.cols = P.cols();
  F.matrix = std::move(prod);
  return F;
}

FusedOperator self_interacting_invariants(const SymmetrizationOperator& C) {
  FusedOperator F;
  F.group = C.group;
  F.labels = C.labels;
  F.cols = C.cols;
  F.matrix = C.matrix;
  return F;
}

Eigen::VectorXcd evaluate_invariants(const FusedOperator& Cp, const Eigen::VectorXcd& A) {
  if (A.size() != Cp.matrix.cols())
    throw std::invalid_argument("evaluate_invariants: feature vector does not match operator columns");
  Eigen::VectorXcd B = Eigen::VectorXcd::Zero(Cp.matrix.rows());
  Eigen::VectorXd mag = Eigen::VectorXd::Zero(Cp.matrix.rows());
  for (Eigen::Index i = 0; i < Cp.matrix.outerSize(); ++i) {
    for (SparseComplex::InnerIterator it(Cp.matrix, i); it; ++it) {
      const Complex v = it.value() * A[it.col()];
      B[i] += v;
      mag[i] += std::abs(v);
    }
  }
  if (Cp.group == SymmetryGroup::O3) {
    for (Eigen::Index i = 0; i < B.size(); ++i) {
      if (std::abs(B[i].imag()) > 1e-10 * std::max(1.0, mag[i])) {
        std::ostringstream os;
        os << "evaluate_invariants: imaginary residue " << B[i].imag() << " in invariant "
           << Cp.labels[static_cast<std::size_t>(i)];
        throw std::runtime_error(os.str());
      }
      B[i] = B[i].real();
    }
  }
  return B;
}

void write_symmetrization(std::ostream& os, const FusedOperator& C, bool spherical) {
  os << "# symmetrization operator\n";
  os << "rows " << C.matrix.rows() << "\n";
  os << "cols " << C.matrix.cols() << "\n";
  os << "nnz " << C.matrix.nonZeros() << "\n";
  os << "group " << group_name(C.group) << "\n";
  os << "[entries]\n";
  os << "alpha,col_tuple,re,im\n";
  for (Eigen::Index i = 0; i < C.matrix.outerSize(); ++i)
    for (SparseComplex::InnerIterator it(C.matrix, i); it; ++it)
      os << C.labels[static_cast<std::size_t>(i)] << "," << tuple_label(C.cols[static_cast<std::size_t>(it.col())], spherical)
         << "," << format_double(it.value().real()) << "," << format_double(it.value().imag()) << "\n";
}

}  // namespace canace
