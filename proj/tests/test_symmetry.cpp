#include <cmath>
#include <random>

#include "doctest.h"

#include "canace/symmetry.hpp"

using namespace canace;

namespace {

BasisFamily spherical(int D) {
  FamilyOptions o;
  o.max_degree = D;
  return BasisFamily::make(FamilyKind::spherical, o);
}

Configuration random_config(const BasisFamily& f, std::size_t J, std::mt19937_64& rng) {
  Configuration X(J);
  for (auto& x : X) x = sample_uniform_particle(f.domain(), rng);
  return X;
}

double rel(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]) / (1.0 + std::abs(b[i])));
  return worst;
}

}  // namespace

TEST_CASE("selection filters") {
  const auto mono = BasisFamily::make(FamilyKind::monomial);
  const IndexSet K(mono, {IndexTuple::of({1, 1}), IndexTuple::of({1, 2}), IndexTuple::of({2, 2})});
  const auto F = filter_parity_O1(mono, K);
  CHECK(F.size() == 2);
  CHECK(!F.contains(IndexTuple::of({1, 2})));
  CHECK(filter_parity_O1(mono, IndexSet(mono, {IndexTuple{}})).size() == 1);
  CHECK(filter_parity_O1(mono, IndexSet(mono, {IndexTuple::of({1}), IndexTuple::of({2}), IndexTuple::of({3})})).size() == 1);

  const auto trig = BasisFamily::make(FamilyKind::trigonometric);
  const IndexSet T(trig, {IndexTuple::of({-1, 1}), IndexTuple::of({1, 1}), IndexTuple::of({1, 1, -2})});
  CHECK(filter_rotation_SO2(trig, T).size() == 2);
  CHECK(filter_rotation_SO2(trig, IndexSet(trig, {IndexTuple::of({2, -1})})).empty());
  CHECK_THROWS_AS(filter_O3(trig, T), std::invalid_argument);
}

TEST_CASE("selection compatible with closure") {
  const auto mono = BasisFamily::make(FamilyKind::monomial);
  const auto K = filter_parity_O1(mono, generate_index_set(mono, 4, DegreeCaps::uniform(8)));
  auto [Kp, rep] = close_index_set(K, mono);
  for (const auto& t : Kp) CHECK(t.sum_n() % 2 == 0);

  const auto trig = BasisFamily::make(FamilyKind::trigonometric);
  const auto T = filter_rotation_SO2(trig, generate_index_set(trig, 4, DegreeCaps::uniform(6)));
  auto [Tp, trep] = close_index_set(T, trig);
  for (const auto& t : Tp) CHECK(t.sum_n() == 0);
}

TEST_CASE("O(1) fused row") {
  const auto mono = BasisFamily::make(FamilyKind::monomial);
  const IndexSet K(mono, {IndexTuple::of({1, 1})});
  const auto P = build_purification_operator(K, mono);
  const auto F = fuse_symmetrization(selection_operator(K, SymmetryGroup::O1), P);
  CHECK(F.matrix.nonZeros() == 2);
  CHECK(F.matrix.coeff(0, F.cols.find(IndexTuple::of({1, 1})).value()) == Complex(1.0));
  CHECK(F.matrix.coeff(0, F.cols.find(IndexTuple::of({2})).value()) == Complex(-1.0));
  Configuration X{scalar_particle(0.3), scalar_particle(-0.3)};
  const auto B = evaluate_invariants(F, SelfInteractingEvaluator(mono, F.cols).evaluate(X));
  CHECK(B[0].real() == doctest::Approx(-0.18));
}

TEST_CASE("wigner matrices represent rotations") {
  std::mt19937_64 rng(1);
  const Eigen::Matrix3d Q = random_rotation(rng, true);
  CHECK(std::abs(std::abs(Q.determinant()) - 1.0) < 1e-12);
  const Vec3 r{0.2, -0.5, 0.7};
  const Eigen::Vector3d qr = Q * Eigen::Vector3d(r[0], r[1], r[2]);
  std::vector<Complex> y(sh_count(4)), yq(sh_count(4));
  spherical_harmonics(4, r, y);
  spherical_harmonics(4, {qr[0], qr[1], qr[2]}, yq);
  for (int l = 0; l <= 4; ++l) {
    const auto D = wigner_d(l, Q);
    CHECK((D * D.adjoint() - Eigen::MatrixXcd::Identity(2 * l + 1, 2 * l + 1)).norm() < 1e-12);
    for (int m = -l; m <= l; ++m) {
      Complex s = 0.0;
      for (int mp = -l; mp <= l; ++mp) s += D(m + l, mp + l) * y[sh_index(l, mp)];
      CHECK(std::abs(s - yq[sh_index(l, m)]) < 1e-12);
    }
  }
}

TEST_CASE("O(3) couplings") {
  const auto sph = spherical(4);
  const IndexSet K0(sph, {IndexTuple{{0, 0, 0}}});
  const auto C0 = build_O3_coupling(K0, 1);
  REQUIRE(C0.matrix.rows() == 1);
  CHECK(std::abs(C0.matrix.coeff(0, 0) - 1.0) < 1e-14);

  const auto K11 = filter_O3(sph, IndexSet(sph, {IndexTuple{{0, 1, -1}, {0, 1, 1}}, IndexTuple{{0, 1, 0}, {0, 1, 0}}}));
  const auto C = build_O3_coupling(K11, 2);
  REQUIRE(C.matrix.rows() == 1);
  const auto F = self_interacting_invariants(C);
  const SelfInteractingEvaluator ev(sph, K11);
  std::mt19937_64 rng(3);
  double ratio = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const auto X = random_config(sph, 3, rng);
    double dot = 0.0;
    for (const auto& a : X)
      for (const auto& b : X) {
        const double ra = norm3(a), rb = norm3(b);
        const double ca = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (ra * rb);
        dot += sph.radial(0, ra) * sph.radial(0, rb) * ca;
      }
    const double B = evaluate_invariants(F, ev.evaluate(X))[0].real();
    if (rep == 0) ratio = B / dot;
    CHECK(B / dot == doctest::Approx(ratio).epsilon(1e-10));
  }
  double norm = 0.0;
  for (Eigen::Index j = 0; j < C.matrix.cols(); ++j) norm += std::norm(C.matrix.coeff(0, j));
  CHECK(norm == doctest::Approx(1.0));
  CHECK_THROWS_AS(build_O3_coupling(IndexSet(sph, {IndexTuple{{0, 1, 1}}}), 1), std::invalid_argument);
}

TEST_CASE("O(3) invariance, closure and fusion") {
  const auto sph = spherical(6);
  const auto K = filter_O3(sph, generate_index_set(sph, 3, DegreeCaps::uniform(4), true));
  auto [Kp, rep] = close_index_set(K, sph);
  CHECK(rep.extra.empty());
  const auto C = build_O3_coupling(K, 5);
  const auto P = build_purification_operator(K, sph);
  const auto Fc = fuse_symmetrization(C, P);
  const auto Fs = self_interacting_invariants(C);
  const SelfInteractingEvaluator ev(sph, Kp);
  std::mt19937_64 rng(4);
  for (int r = 0; r < 10; ++r) {
    const auto X = random_config(sph, 4, rng);
    const auto Y = transform_configuration(X, random_rotation(rng, r % 2 == 0));
    const auto A = ev.evaluate(X), AY = ev.evaluate(Y);
    CHECK(rel(evaluate_invariants(Fc, AY), evaluate_invariants(Fc, A)) < 1e-10);
    CHECK(rel(evaluate_invariants(Fs, AY), evaluate_invariants(Fs, A)) < 1e-10);
    // two-step evaluation
    const Eigen::VectorXcd two = C.matrix * P.apply(A);
    CHECK(rel(evaluate_invariants(Fc, A), two) < 1e-12);
  }
}
