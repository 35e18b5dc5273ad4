#include <cmath>
#include <random>

#include "doctest.h"

#include "canace/regression.hpp"

using namespace canace;

namespace {

RegressionProblem make_problem(Eigen::MatrixXd psi, Eigen::VectorXd y, Regularizer g) {
  RegressionProblem p;
  p.design = std::move(psi);
  p.targets = std::move(y);
  p.regularizer = std::move(g);
  return p;
}

std::vector<Configuration> random_configs(const BasisFamily& f, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Configuration> out;
  for (int i = 0; i < count; ++i) {
    Configuration X(static_cast<std::size_t>(2 + i % 4));
    for (auto& x : X) x = sample_uniform_particle(f.domain(), rng);
    out.push_back(std::move(X));
  }
  return out;
}

}  // namespace

TEST_CASE("tikhonov scalar examples") {
  Eigen::MatrixXd psi(1, 1);
  psi << 1.0;
  Eigen::VectorXd y(1), g(1);
  y << 1.0;
  g << 2.0;
  auto fit = tikhonov_solve(make_problem(psi, y, Regularizer::diagonal(g)), 1.0);
  CHECK(fit.coefficients[0] == doctest::Approx(0.2).epsilon(1e-14));

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd y3(3);
  y3 << 1.0, -4.0, 0.5;
  fit = tikhonov_solve(make_problem(I, y3, Regularizer::identity(3)), 1.0);
  CHECK((fit.coefficients - y3 / 2).norm() < 1e-14);
}

TEST_CASE("rank deficient designs give the minimum norm solution") {
  Eigen::MatrixXd psi(2, 2);
  psi << 1, 1, 1, 1;
  Eigen::VectorXd y(2);
  y << 2, 2;
  const auto p = make_problem(psi, y, Regularizer::identity(2));
  const auto t = scaled_tsvd_solve(p, 1e-8);
  CHECK(t.effective_rank == 1);
  CHECK(t.dropped_singular_values == 1);
  CHECK(std::abs(t.coefficients[0] - 1.0) < 1e-12);
  CHECK(std::abs(t.coefficients[1] - 1.0) < 1e-12);
  const auto z = tikhonov_solve(p, 0.0);
  CHECK((z.coefficients - Eigen::Vector2d(1, 1)).norm() < 1e-12);
}

TEST_CASE("tsvd with rtol = 1 keeps only the leading direction") {
  Eigen::MatrixXd psi(3, 2);
  psi << 3, 0, 0, 1, 0, 0;
  Eigen::VectorXd y(3);
  y << 3, 5, 7;
  const auto fit = scaled_tsvd_solve(make_problem(psi, y, Regularizer::identity(2)), 1.0);
  CHECK(fit.effective_rank == 1);
  CHECK(fit.coefficients[0] == doctest::Approx(1.0));
  CHECK(fit.coefficients[1] == doctest::Approx(0.0));
}

TEST_CASE("tikhonov matches the normal equations") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd psi(30, 6), gam(6, 6);
  Eigen::VectorXd y(30);
  for (Eigen::Index i = 0; i < psi.size(); ++i) psi.data()[i] = n01(rng);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = n01(rng);
  gam = Eigen::MatrixXd::Identity(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < i; ++j) gam(i, j) = 0.3 * n01(rng);
  for (double lambda : {1e-6, 1e-2, 1.0, 10.0}) {
    const auto fit = tikhonov_solve(make_problem(psi, y, Regularizer::matrix(gam)), lambda);
    const Eigen::MatrixXd A = psi.transpose() * psi + lambda * gam.transpose() * gam;
    const Eigen::VectorXd c = A.ldlt().solve(psi.transpose() * y);
    CHECK((fit.coefficients - c).norm() < 1e-10 * (1.0 + c.norm()));
  }
  const auto d = scaled_tsvd_solve(make_problem(psi, y, Regularizer::matrix(gam)), 1e-12);
  const Eigen::VectorXd ls = psi.colPivHouseholderQr().solve(y);
  CHECK((d.coefficients - ls).norm() < 1e-10);
}

TEST_CASE("regularization strength is monotone") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd psi(20, 8);
  Eigen::VectorXd y(20), g(8);
  for (Eigen::Index i = 0; i < psi.size(); ++i) psi.data()[i] = n01(rng);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = n01(rng);
  for (int i = 0; i < 8; ++i) g[i] = 1.0 + i;
  const auto p = make_problem(psi, y, Regularizer::diagonal(g));
  double prev_pen = INFINITY, prev_rmse = 0.0;
  for (double lambda : default_lambda_grid(12, 1e-6, 1e3)) {
    const auto fit = tikhonov_solve(p, lambda);
    const double pen = fit.coefficients.cwiseProduct(g).norm();
    CHECK(pen <= prev_pen * (1 + 1e-12));
    CHECK(fit.train_rmse >= prev_rmse * (1 - 1e-12));
    prev_pen = pen;
    prev_rmse = fit.train_rmse;
  }
}

TEST_CASE("grid search picks the best lambda and breaks ties upward") {
  Eigen::MatrixXd psi = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd y(2);
  y << 1, 1;
  auto p = make_problem(psi, y, Regularizer::identity(2));
  p.lambdas = {1e-3, 1e-1, 10.0};
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 2);
  const Eigen::VectorXd vy = Eigen::VectorXd::Ones(3);
  auto fit = grid_search_lambda(p, zero, vy, 2);
  CHECK(fit.lambda == 10.0);
  fit = grid_search_lambda(p, psi, y, 2);
  CHECK(fit.lambda == 1e-3);
  REQUIRE(fit.validation_rmse.has_value());
  CHECK(*fit.validation_rmse < 1e-3);
}

TEST_CASE("regression input validation") {
  Eigen::MatrixXd psi = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(2);
  const auto p = make_problem(psi, y, Regularizer::identity(2));
  CHECK_THROWS_AS(scaled_tsvd_solve(p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(scaled_tsvd_solve(p, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(tikhonov_solve(p, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(tikhonov_solve(make_problem(psi, Eigen::VectorXd::Ones(3), Regularizer::identity(2)), 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(tikhonov_solve(make_problem(psi, y, Regularizer::identity(3)), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Regularizer::diagonal(Eigen::Vector2d(1.0, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(Regularizer::matrix(Eigen::MatrixXd::Zero(2, 2)), std::invalid_argument);
  auto bad = p;
  bad.lambdas = {1.0, 0.5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  Eigen::MatrixXcd cz(1, 1);
  cz(0, 0) = Complex(1.0, 0.5);
  CHECK_THROWS_AS(real_design(cz), std::runtime_error);
}

TEST_CASE("purification prior makes canonical and self-interacting fits agree") {
  const auto f = BasisFamily::make(FamilyKind::chebyshev);
  const auto K = close_index_set(generate_index_set(f, 3, DegreeCaps::uniform(6), true), f).first;
  const auto P = build_purification_operator(K, f);
  REQUIRE(P.square());

  const auto configs = random_configs(f, 200, 17);
  std::vector<double> ys;
  for (const auto& X : configs) {
    double e = 0.0;
    for (const auto& a : X)
      for (const auto& b : X) e += std::exp(-std::pow(a[0] - b[0], 2));
    ys.push_back(e);
  }
  const Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));

  const auto can = DesignPipeline::canonical(f, P);
  const auto self = DesignPipeline::self_interacting(f, P.cols());
  const Eigen::MatrixXd Pc = real_design(assemble_design(can, configs, 2));
  const Eigen::MatrixXd Ps = real_design(assemble_design(self, configs, 2));
  CHECK(can.column_labels() == K.labels());

  const double lambda = 1e-3;
  const auto fc = tikhonov_solve(make_problem(Pc, y, Regularizer::identity(Pc.cols())), lambda);
  const auto fs = tikhonov_solve(make_problem(Ps, y, purification_prior(P)), lambda);
  CHECK((Pc * fc.coefficients - Ps * fs.coefficients).norm() < 1e-8 * y.norm());
  CHECK(std::abs(fc.train_rmse - fs.train_rmse) < 1e-9);

  const auto sp = smoothness_prior(K, f);
  CHECK(sp.diag()[static_cast<Eigen::Index>(*K.find(IndexTuple{}))] == 1.0);
  CHECK(sp.diag()[static_cast<Eigen::Index>(*K.find(IndexTuple::of({1, 2})))] == doctest::Approx(4.0 + 9.0));
}

TEST_CASE("complex designs split into real and imaginary rows") {
  Eigen::MatrixXcd d(2, 1);
  d << Complex(1, 2), Complex(3, -1);
  const auto [M, t] = split_complex(d, Eigen::Vector2d(5, 6));
  CHECK(M.rows() == 4);
  CHECK(M(2, 0) == 2.0);
  CHECK(M(3, 0) == -1.0);
  CHECK(t[1] == 6.0);
  CHECK(t[3] == 0.0);
}
