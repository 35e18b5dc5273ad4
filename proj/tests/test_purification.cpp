#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"

#include "canace/purification.hpp"

using namespace canace;

namespace {

Configuration scalars(std::initializer_list<double> xs) {
  Configuration X;
  for (double x : xs) X.push_back(scalar_particle(x));
  return X;
}

// |P A - brute force| over random configurations.
double oracle_error(const BasisFamily& f, const IndexSet& K, int reps, std::uint64_t seed) {
  const auto P = build_purification_operator(K, f);
  const SelfInteractingEvaluator ev(f, P.cols());
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int r = 0; r < reps; ++r) {
    Configuration X(static_cast<std::size_t>(2 + r % 5));
    for (auto& x : X) x = sample_uniform_particle(f.domain(), rng);
    const auto got = P.apply(ev.evaluate(X));
    const auto want = brute_force_canonical(f, K, X);
    for (Eigen::Index i = 0; i < got.size(); ++i)
      worst = std::max(worst, std::abs(got[i] - want[i]) / (1.0 + std::abs(want[i])));
  }
  return worst;
}

}  // namespace

TEST_CASE("closure examples") {
  const auto mono = BasisFamily::make(FamilyKind::monomial);
  auto [Km, rm] = close_index_set(IndexSet(mono, {IndexTuple::of({1, 1})}), mono);
  CHECK(Km.size() == 2);
  CHECK(Km.contains(IndexTuple::of({2})));
  CHECK(rm.extra.size() == 1);

  const auto cheb = BasisFamily::make(FamilyKind::chebyshev);
  auto [Kc, rc] = close_index_set(IndexSet(cheb, {IndexTuple::of({1, 1})}), cheb);
  CHECK(Kc.size() == 3);
  CHECK(Kc.contains(IndexTuple::of({0})));
  CHECK(Kc.contains(IndexTuple::of({2})));
  CHECK(rc.original_size == 1);
  CHECK(rc.closed_size == 3);
}

TEST_CASE("purification rows") {
  const auto mono = BasisFamily::make(FamilyKind::monomial, {.check_domain = false});
  const auto P = build_purification_operator(IndexSet(mono, {IndexTuple::of({1, 1})}), mono);
  CHECK(P.entry(IndexTuple::of({1, 1}), IndexTuple::of({1, 1})) == 1.0);
  CHECK(P.entry(IndexTuple::of({1, 1}), IndexTuple::of({2})) == -1.0);
  CHECK(P.nnz() == 2);
  Eigen::VectorXcd A(2);
  A[P.cols().find(IndexTuple::of({1, 1})).value()] = 9.0;
  A[P.cols().find(IndexTuple::of({2})).value()] = 5.0;
  CHECK(apply_purification(P, A)[0] == Complex(4.0));
  CHECK_THROWS_AS(P.apply(Eigen::VectorXcd::Zero(3)), std::invalid_argument);

  const auto cheb = BasisFamily::make(FamilyKind::chebyshev);
  const auto Pc = build_purification_operator(IndexSet(cheb, {IndexTuple::of({1, 1})}), cheb);
  CHECK(Pc.entry(IndexTuple::of({1, 1}), IndexTuple::of({2})) == -0.5);
  CHECK(Pc.entry(IndexTuple::of({1, 1}), IndexTuple::of({0})) == -0.5);
  const auto X = scalars({0.5, -0.25});
  const auto v = Pc.apply(SelfInteractingEvaluator(cheb, Pc.cols()).evaluate(X));
  CHECK(v[0].real() == doctest::Approx(-0.25));

  // order-3 rows with distinct entries
  const auto P3 = build_purification_operator(IndexSet(cheb, {IndexTuple::of({1, 2, 3}), IndexTuple::of({2, 5, 9})}), cheb);
  const auto rep = sparsity_report(P3, cheb);
  CHECK(rep.K == 2);
  for (const auto& o : rep.orders)
    if (o.order == 3) {
      CHECK(o.max_nnz == 11);
      CHECK(o.bound == 15.0);
    }
  CHECK(rep.unit_diagonal);
  CHECK(rep.order_triangular);
  CHECK(rep.degree_triangular);
}

TEST_CASE("purification matches the brute-force canonical basis") {
  FamilyOptions o;
  o.max_degree = 6;
  for (auto kind : {FamilyKind::monomial, FamilyKind::chebyshev, FamilyKind::legendre, FamilyKind::trigonometric}) {
    const auto f = BasisFamily::make(kind, o);
    const auto K = generate_index_set(f, 4, DegreeCaps::uniform(6));
    CHECK(oracle_error(f, K, 10, 5) < 1e-9);
  }
  FamilyOptions s;
  s.max_degree = 4;
  const auto sph = BasisFamily::make(FamilyKind::spherical, s);
  CHECK(oracle_error(sph, generate_index_set(sph, 3, DegreeCaps::uniform(2)), 6, 9) < 1e-9);
}

TEST_CASE("structural properties") {
  const auto trig = BasisFamily::make(FamilyKind::trigonometric);
  const auto K = generate_index_set(trig, 4, DegreeCaps::uniform(5));
  const auto P = build_purification_operator(K, trig);
  const auto rep = sparsity_report(P, trig);
  CHECK(rep.K == 1);
  CHECK(rep.unit_diagonal);
  CHECK(rep.order_triangular);
  CHECK(rep.degree_triangular);
  CHECK(rep.bound_holds);

  // a different row request order gives the same operator
  std::vector<IndexTuple> rev(K.begin(), K.end());
  std::reverse(rev.begin(), rev.end());
  const auto P2 = build_purification_operator(IndexSet(trig, rev), trig);
  CHECK((P.matrix() - P2.matrix()).norm() == 0.0);

  const auto env = make_radial_envelope_family(1.0, RadialTransform::unit, 10);
  const auto Ke = generate_index_set(env, 2, DegreeCaps::uniform(2));
  const auto Pe = build_purification_operator(Ke, env);
  CHECK(!Pe.closure().extra.empty());
  CHECK(!sparsity_report(Pe, env).degree_triangular);
}

TEST_CASE("closure limits") {
  const auto env = make_radial_envelope_family(1.0, RadialTransform::unit, 12);
  const auto Ke = generate_index_set(env, 2, DegreeCaps::uniform(2));
  ClosureOptions tight;
  tight.degree_headroom = 1.0;
  CHECK_THROWS_AS(close_index_set(Ke, env, tight), std::runtime_error);
  ClosureOptions small;
  small.max_size = Ke.size();
  CHECK_THROWS_AS(close_index_set(Ke, env, small), std::runtime_error);
}

TEST_CASE("span equivalence") {
  const auto mono = BasisFamily::make(FamilyKind::monomial);
  const auto K = generate_index_set(mono, 3, DegreeCaps::uniform(4));
  const auto eq = check_span_equivalence(K, mono, 3 * K.size() + 20, 1);
  CHECK(eq.closure.extra.empty());
  CHECK(eq.equal);

  const auto env = make_radial_envelope_family(1.0, RadialTransform::unit, 10);
  const auto Ke = generate_index_set(env, 2, DegreeCaps::uniform(2));
  const auto ne = check_span_equivalence(Ke, env, 3 * Ke.size() + 20, 1);
  CHECK(!ne.closure.extra.empty());
  CHECK(!ne.equal);
  CHECK_THROWS_AS(check_span_equivalence(K, mono, 3, 1), std::invalid_argument);
}

TEST_CASE("operator file round trip") {
  const auto cheb = BasisFamily::make(FamilyKind::chebyshev);
  const auto K = generate_index_set(cheb, 3, DegreeCaps::uniform(5));
  const auto P = build_purification_operator(K, cheb);
  std::stringstream ss;
  write_operator(ss, P, K.caps().label());
  const auto Q = read_operator(ss, cheb);
  CHECK(Q.rows().size() == P.rows().size());
  CHECK(Q.cols().size() == P.cols().size());
  CHECK((Q.matrix() - P.matrix()).norm() == 0.0);
  std::stringstream bad("family legendre\n");
  CHECK_THROWS_AS(read_operator(bad, cheb), std::runtime_error);
}
