#include "canace/purification.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "canace/io.hpp"
#include "canace/parallel.hpp"

namespace canace {

namespace {

using Row = std::vector<std::pair<IndexTuple, double>>;

void merge_and_prune(Row& row, double tol) {
  std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Row out;
  out.reserve(row.size());
  for (auto& e : row) {
    if (!out.empty() && out.back().first == e.first)
      out.back().second += e.second;
    else
      out.push_back(std::move(e));
  }
  double vmax = 0.0;
  for (const auto& e : out) vmax = std::max(vmax, std::abs(e.second));
  std::erase_if(out, [&](const auto& e) { return std::abs(e.second) <= tol * vmax; });
  row = std::move(out);
}

struct PairKey {
  OneParticleIndex a, b;
  bool operator<(const PairKey& o) const { return std::tie(a, b) < std::tie(o.a, o.b); }
};

// Memoized rows of the recursion, including auxiliary tuples that never
// become rows of the exported operator.
class RowEngine {
 public:
  RowEngine(const BasisFamily& family, double tol, int threads) : family_(family), tol_(tol), threads_(threads) {}

  void ensure(const std::vector<IndexTuple>& targets) {
    std::vector<std::vector<IndexTuple>> levels;
    std::unordered_set<IndexTuple, IndexTupleHash> queued;
    auto enqueue = [&](const IndexTuple& t) {
      if (rows_.count(t) || !queued.insert(t).second) return;
      if (static_cast<int>(levels.size()) <= t.order()) levels.resize(static_cast<std::size_t>(t.order() + 1));
      levels[static_cast<std::size_t>(t.order())].push_back(t);
    };
    for (const auto& t : targets) enqueue(t);
    for (int N = static_cast<int>(levels.size()) - 1; N >= 2; --N) {
      for (std::size_t i = 0; i < levels[static_cast<std::size_t>(N)].size(); ++i) {
        const IndexTuple t = levels[static_cast<std::size_t>(N)][i];
        const IndexTuple prefix = t.prefix();
        const auto& last = t[static_cast<std::size_t>(N - 1)];
        enqueue(prefix);
        for (std::size_t b = 0; b < prefix.entries().size(); ++b) {
          if (b > 0 && prefix[b] == prefix[b - 1]) continue;
          for (const auto& term : rule(prefix[b], last)) enqueue(prefix.replaced(b, term.index));
        }
      }
    }
    for (auto& level : levels) {
      std::vector<Row> out(level.size());
      parallel_for(level.size(), threads_, [&](std::size_t i) { out[i] = compute(level[i]); });
      for (std::size_t i = 0; i < level.size(); ++i) rows_.emplace(std::move(level[i]), std::move(out[i]));
    }
  }

  [[nodiscard]] const Row& row(const IndexTuple& t) const { return rows_.at(t); }
  [[nodiscard]] int max_rule_terms() const { return max_rule_terms_; }

 private:
  const LinearizationRule& rule(const OneParticleIndex& a, const OneParticleIndex& b) {
    auto [it, fresh] = rules_.try_emplace(PairKey{a, b});
    if (fresh) {
      it->second = family_.linearize(a, b);
      max_rule_terms_ = std::max(max_rule_terms_, static_cast<int>(it->second.size()));
    }
    return it->second;
  }

  [[nodiscard]] Row compute(const IndexTuple& t) const {
    const int N = t.order();
    if (N <= 1) return {{t, 1.0}};
    const IndexTuple prefix = t.prefix();
    const auto& last = t[static_cast<std::size_t>(N - 1)];
    Row out;
    for (const auto& [c, v] : rows_.at(prefix)) out.emplace_back(c.extended(last), v);
    const auto& pe = prefix.entries();
    for (std::size_t b = 0; b < pe.size(); ++b) {
      if (b > 0 && pe[b] == pe[b - 1]) continue;
      std::size_t mult = 1;
      while (b + mult < pe.size() && pe[b + mult] == pe[b]) ++mult;
      for (const auto& term : rules_.at(PairKey{pe[b], last})) {
        const double w = static_cast<double>(mult) * term.coeff;
        for (const auto& [c, v] : rows_.at(prefix.replaced(b, term.index))) out.emplace_back(c, -w * v);
      }
    }
    merge_and_prune(out, tol_);
    return out;
  }

  const BasisFamily& family_;
  double tol_;
  int threads_;
  std::unordered_map<IndexTuple, Row, IndexTupleHash> rows_;
  std::map<PairKey, LinearizationRule> rules_;
  int max_rule_terms_ = 0;
};

std::pair<IndexSet, ClosureReport> close_with(RowEngine& engine, const IndexSet& K, const BasisFamily& family,
                                              const ClosureOptions& options) {
  const double headroom = options.degree_headroom.value_or(4.0 * K.max_order());
  const double deg_limit = K.max_degree() + headroom + 1e-9;
  std::unordered_set<IndexTuple, IndexTupleHash> in(K.begin(), K.end());
  std::vector<IndexTuple> all(K.begin(), K.end());
  std::vector<IndexTuple> frontier = all;
  ClosureReport report;
  report.original_size = K.size();
  while (!frontier.empty()) {
    ++report.iterations;
    engine.ensure(frontier);
    std::vector<IndexTuple> next;
    for (const auto& t : frontier) {
      for (const auto& [c, v] : engine.row(t)) {
        if (!in.insert(c).second) continue;
        if (tuple_degree(family, c) > deg_limit) {
          std::ostringstream os;
          os << "closure: tuple " << tuple_label(c, family.is_spherical()) << " exceeds the degree headroom ("
             << deg_limit << "); raise degree_headroom or reduce the caps";
          throw std::runtime_error(os.str());
        }
        if (in.size() > options.max_size) {
          std::ostringstream os;
          os << "closure: index set grew beyond " << options.max_size << " tuples";
          throw std::runtime_error(os.str());
        }
        next.push_back(c);
        all.push_back(c);
      }
    }
    frontier = std::move(next);
  }
  IndexSet closed(family, std::move(all), K.max_order(), K.caps());
  report.closed_size = closed.size();
  for (const auto& t : closed)
    if (!K.contains(t)) report.extra.push_back(t);
  return {std::move(closed), std::move(report)};
}

}  // namespace

std::pair<IndexSet, ClosureReport> close_index_set(const IndexSet& K, const BasisFamily& family,
                                                   const ClosureOptions& options) {
  RowEngine engine(family, options.prune_tol, options.threads);
  return close_with(engine, K, family, options);
}

PurificationOperator build_purification_operator(const IndexSet& K, const BasisFamily& family,
                                                 const ClosureOptions& options) {
  RowEngine engine(family, options.prune_tol, options.threads);
  auto [closed, report] = close_with(engine, K, family, options);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < K.size(); ++i) {
    for (const auto& [c, v] : engine.row(K[i])) {
      const auto j = closed.find(c);
      if (!j) throw std::logic_error("purification: column missing from closure");
      trip.emplace_back(static_cast<int>(i), static_cast<int>(*j), v);
    }
  }
  SparseReal M(static_cast<Eigen::Index>(K.size()), static_cast<Eigen::Index>(closed.size()));
  M.setFromTriplets(trip.begin(), trip.end());
  M.makeCompressed();
  return PurificationOperator(K, std::move(closed), std::move(M), family.name(), engine.max_rule_terms(),
                              std::move(report));
}

// ---------------------------------------------------------------------------

PurificationOperator::PurificationOperator(IndexSet rows, IndexSet cols, SparseReal matrix, std::string family_tag,
                                           int max_rule_terms, ClosureReport closure)
    : rows_(std::move(rows)),
      cols_(std::move(cols)),
      matrix_(std::move(matrix)),
      family_tag_(std::move(family_tag)),
      max_rule_terms_(max_rule_terms),
      closure_(std::move(closure)) {
  if (matrix_.rows() != static_cast<Eigen::Index>(rows_.size()) ||
      matrix_.cols() != static_cast<Eigen::Index>(cols_.size()))
    throw std::invalid_argument("purification operator: matrix shape does not match index sets");
}

bool PurificationOperator::square() const {
  if (rows_.size() != cols_.size()) return false;
  for (std::size_t i = 0; i < rows_.size(); ++i)
    if (!(rows_[i] == cols_[i])) return false;
  return true;
}

double PurificationOperator::entry(const IndexTuple& row, const IndexTuple& col) const {
  const auto i = rows_.find(row);
  const auto j = cols_.find(col);
  if (!i || !j) return 0.0;
  return matrix_.coeff(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*j));
}

Eigen::VectorXcd PurificationOperator::apply(const Eigen::VectorXcd& A) const {
  if (A.size() != matrix_.cols())
    throw std::invalid_argument("apply_purification: feature vector does not match operator columns");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(matrix_.rows());
  for (Eigen::Index i = 0; i < matrix_.outerSize(); ++i)
    for (SparseReal::InnerIterator it(matrix_, i); it; ++it) out[i] += it.value() * A[it.col()];
  return out;
}

Eigen::VectorXcd apply_purification(const PurificationOperator& P, const Eigen::VectorXcd& A) { return P.apply(A); }

// ---------------------------------------------------------------------------

SparsityReport sparsity_report(const PurificationOperator& P, const BasisFamily& family) {
  SparsityReport rep;
  rep.K = P.max_rule_terms();
  rep.nnz = P.nnz();
  const auto& M = P.matrix();
  if (M.rows() > 0 && M.cols() > 0)
    rep.density = static_cast<double>(rep.nnz) / (static_cast<double>(M.rows()) * static_cast<double>(M.cols()));
  std::map<int, OrderSparsity> by_order;
  for (Eigen::Index i = 0; i < M.outerSize(); ++i) {
    const IndexTuple& r = P.rows()[static_cast<std::size_t>(i)];
    const double rdeg = tuple_degree(family, r);
    std::size_t nnz = 0;
    bool diag = false;
    for (SparseReal::InnerIterator it(M, i); it; ++it) {
      ++nnz;
      const IndexTuple& c = P.cols()[static_cast<std::size_t>(it.col())];
      if (c == r) {
        diag = it.value() == 1.0;
        continue;
      }
      if (c.order() >= r.order()) rep.order_triangular = false;
      if (tuple_degree(family, c) > rdeg + 1e-9) rep.degree_triangular = false;
    }
    if (!diag) rep.unit_diagonal = false;
    auto& o = by_order[r.order()];
    o.order = r.order();
    ++o.rows;
    o.max_nnz = std::max(o.max_nnz, nnz);
    o.mean_nnz += static_cast<double>(nnz);
  }
  for (auto& [N, o] : by_order) {
    o.mean_nnz /= static_cast<double>(o.rows);
    o.bound = 1.0;
    for (int t = 1; t <= N - 1; ++t) o.bound *= rep.K * t + 1.0;
    o.within_bound = static_cast<double>(o.max_nnz) <= o.bound;
    rep.bound_holds = rep.bound_holds && o.within_bound;
    rep.orders.push_back(o);
  }
  return rep;
}

// ---------------------------------------------------------------------------

SpanEquivalence check_span_equivalence(const IndexSet& K, const BasisFamily& family, std::size_t sample_count,
                                       std::uint64_t seed, const SpanOptions& options) {
  if (sample_count < 3 * K.size())
    throw std::invalid_argument("check_span_equivalence: need at least 3 samples per tuple");
  const int jmin = options.min_particles >= 0 ? options.min_particles : std::max(1, K.max_order());
  const int jmax = options.max_particles >= 0 ? options.max_particles : jmin + 3;
  if (jmax < jmin) throw std::invalid_argument("check_span_equivalence: empty particle-count range");

  ClosureOptions copt;
  copt.threads = options.threads;
  const PurificationOperator P = build_purification_operator(K, family, copt);
  const SelfInteractingEvaluator self(family, K);
  const SelfInteractingEvaluator closed(family, P.cols());

  const auto ns = static_cast<Eigen::Index>(sample_count);
  const auto nk = static_cast<Eigen::Index>(K.size());
  Eigen::MatrixXcd Ms(ns, nk), Mc(ns, nk);
  std::vector<Configuration> configs(sample_count);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> jdist(jmin, jmax);
  for (auto& X : configs) {
    X.resize(static_cast<std::size_t>(jdist(rng)));
    for (auto& x : X) x = sample_uniform_particle(family.domain(), rng);
  }
  parallel_for(sample_count, options.threads, [&](std::size_t s) {
    const auto i = static_cast<Eigen::Index>(s);
    Ms.row(i) = self.evaluate(configs[s]).transpose();
    Mc.row(i) = P.apply(closed.evaluate(configs[s])).transpose();
  });
  auto scale = [](Eigen::MatrixXcd& M) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const double n = M.col(j).norm();
      if (n > 0.0) M.col(j) /= n;
    }
  };
  scale(Ms);
  scale(Mc);

  SpanEquivalence out;
  auto outside = [&](const Eigen::MatrixXcd& basis, const Eigen::MatrixXcd& test, Eigen::Index& rank) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(basis);
    rank = qr.rank();
    std::size_t count = 0;
    for (Eigen::Index j = 0; j < test.cols(); ++j) {
      const double n = test.col(j).norm();
      if (n == 0.0) continue;
      const Eigen::VectorXcd x = qr.solve(test.col(j));
      const double r = (basis * x - test.col(j)).norm() / n;
      out.max_residual = std::max(out.max_residual, r);
      if (r > options.threshold) ++count;
    }
    return count;
  };
  out.canonical_outside = outside(Ms, Mc, out.self_rank);
  out.self_outside = outside(Mc, Ms, out.canonical_rank);
  out.canonical_in_self = out.canonical_outside == 0;
  out.self_in_canonical = out.self_outside == 0;
  out.equal = out.canonical_in_self && out.self_in_canonical;
  out.closure = P.closure();
  return out;
}

// ---------------------------------------------------------------------------

void write_operator(std::ostream& os, const PurificationOperator& P, const std::string& caps_label) {
  const bool sph = P.rows().spherical();
  os << "# purification operator\n";
  os << "rows " << P.rows().size() << "\n";
  os << "cols " << P.cols().size() << "\n";
  os << "nnz " << P.nnz() << "\n";
  os << "family " << P.family_tag() << "\n";
  os << "caps " << caps_label << "\n";
  os << "[rows]\n";
  for (const auto& t : P.rows()) os << tuple_label(t, sph) << "\n";
  os << "[cols]\n";
  for (const auto& t : P.cols()) os << tuple_label(t, sph) << "\n";
  os << "[entries]\n";
  os << "row_tuple,col_tuple,value\n";
  const auto& M = P.matrix();
  for (Eigen::Index i = 0; i < M.outerSize(); ++i) {
    std::vector<std::pair<Eigen::Index, double>> entries;
    for (SparseReal::InnerIterator it(M, i); it; ++it) entries.emplace_back(it.col(), it.value());
    std::sort(entries.begin(), entries.end());
    for (const auto& [j, v] : entries)
      os << tuple_label(P.rows()[static_cast<std::size_t>(i)], sph) << ","
         << tuple_label(P.cols()[static_cast<std::size_t>(j)], sph) << "," << format_double(v) << "\n";
  }
}

PurificationOperator read_operator(std::istream& is, const BasisFamily& family) {
  const bool sph = family.is_spherical();
  std::string line, family_tag;
  std::size_t nrows = 0, ncols = 0, nnz = 0;
  std::vector<IndexTuple> rows, cols;
  std::vector<std::tuple<IndexTuple, IndexTuple, double>> entries;
  enum { header, in_rows, in_cols, in_entries } section = header;
  auto fail = [](const std::string& why) { return std::runtime_error("read_operator: " + why); };
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line == "[rows]") { section = in_rows; continue; }
    if (line == "[cols]") { section = in_cols; continue; }
    if (line == "[entries]") { section = in_entries; continue; }
    switch (section) {
      case header: {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "rows") ls >> nrows;
        else if (key == "cols") ls >> ncols;
        else if (key == "nnz") ls >> nnz;
        else if (key == "family") ls >> family_tag;
        break;
      }
      case in_rows: rows.push_back(parse_tuple_label(line, sph)); break;
      case in_cols: cols.push_back(parse_tuple_label(line, sph)); break;
      case in_entries: {
        if (line == "row_tuple,col_tuple,value") break;
        const auto a = line.find(','), b = line.rfind(',');
        if (a == std::string::npos || a == b) throw fail("malformed entry '" + line + "'");
        entries.emplace_back(parse_tuple_label(line.substr(0, a), sph),
                             parse_tuple_label(line.substr(a + 1, b - a - 1), sph), std::stod(line.substr(b + 1)));
        break;
      }
    }
  }
  if (family_tag != family.name()) throw fail("family tag '" + family_tag + "' does not match " + family.name());
  if (rows.size() != nrows || cols.size() != ncols || entries.size() != nnz) throw fail("header counts disagree");
  IndexSet R(family, rows), C(family, cols);
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& [r, c, v] : entries) {
    const auto i = R.find(r), j = C.find(c);
    if (!i || !j) throw fail("entry references an unknown tuple");
    trip.emplace_back(static_cast<int>(*i), static_cast<int>(*j), v);
  }
  SparseReal M(static_cast<Eigen::Index>(R.size()), static_cast<Eigen::Index>(C.size()));
  M.setFromTriplets(trip.begin(), trip.end());
  M.makeCompressed();
  return PurificationOperator(std::move(R), std::move(C), std::move(M), family_tag);
}

}  // namespace canace
