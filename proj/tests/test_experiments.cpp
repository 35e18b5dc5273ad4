#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"

#include "canace/experiments.hpp"

using namespace canace;

namespace {

std::string csv(const CsvTable& t) {
  std::ostringstream os;
  t.write(os);
  return os.str();
}

Configuration scalars(std::initializer_list<double> xs) {
  Configuration X;
  for (double x : xs) X.push_back(scalar_particle(x));
  return X;
}

}  // namespace

TEST_CASE("samplers") {
  const auto u = sample_configurations({Distribution::uniform, 1, 100000, 7, 1.0});
  double mean = 0.0;
  for (const auto& X : u) mean += X[0][0];
  mean /= static_cast<double>(u.size());
  CHECK(std::abs(mean) < 0.01);

  const auto a = sample_configurations({Distribution::arcsine, 1, 100000, 8, 1.0});
  std::size_t inside = 0;
  for (const auto& X : a) inside += std::abs(X[0][0]) <= 0.1;
  const double expected = 2.0 / std::numbers::pi * std::asin(0.1);
  CHECK(std::abs(static_cast<double>(inside) / 1e5 - expected) < 0.003);

  const auto b = sample_configurations({Distribution::mu, 3, 2000, 9, 2.5});
  double rmean = 0.0;
  for (const auto& X : b)
    for (const auto& x : X) {
      CHECK(norm3(x) <= 2.5);
      rmean += norm3(x);
    }
  // radius uniform on [0, r_cut]
  CHECK(rmean / 6000.0 == doctest::Approx(1.25).epsilon(0.03));

  const auto again = sample_configurations({Distribution::mu, 3, 2000, 9, 2.5});
  CHECK(again == b);
  CHECK_THROWS_AS(sample_configurations({Distribution::uniform, 0, 1, 0, 1.0}), std::invalid_argument);
}

TEST_CASE("targets and degrees") {
  CHECK(eval_target(TargetFunction::runge(3.0), scalars({0.0, 0.0})) == 1.0);
  CHECK(eval_target(TargetFunction::runge(1.0), scalars({1.0})) == 0.5);
  CHECK(eval_target(TargetFunction::multiset(1.0, 0.1, 1), scalars({1.0, 1.0})) == doctest::Approx(1.1));
  const auto X = scalars({0.3, -0.7, 0.1, 0.9});
  CHECK(eval_target(TargetFunction::multiset(5.0, 0.0, 4), X) == eval_target(TargetFunction::runge(5.0), X));
  // three of the four 3-subsets by hand
  double by_hand = 0.0;
  const double v[] = {0.3, -0.7, 0.1, 0.9};
  for (int skip = 0; skip < 4; ++skip) {
    double sq = 0.0;
    for (int i = 0; i < 4; ++i)
      if (i != skip) sq += v[i] * v[i];
    by_hand += 1.0 / (1.0 + 2.0 * sq);
  }
  by_hand += 0.5 * 0.3 * -0.7 * 0.1 * 0.9;
  CHECK(eval_target(TargetFunction::multiset(2.0, 0.5, 3), X) == doctest::Approx(by_hand).epsilon(1e-14));
  const auto Y = scalars({0.9, 0.1, 0.3, -0.7});
  CHECK(eval_target(TargetFunction::multiset(2.0, 0.5, 3), Y) ==
        doctest::Approx(eval_target(TargetFunction::multiset(2.0, 0.5, 3), X)).epsilon(1e-15));
  CHECK_THROWS_AS(eval_target(TargetFunction::multiset(1.0, 0.0, 3), scalars({0.1, 0.2})), std::invalid_argument);
  CHECK_THROWS_AS(TargetFunction::runge(0.0), std::invalid_argument);

  CHECK(euclidean_degree(IndexTuple::of({3, 4})) == 5.0);
  CHECK(euclidean_degree(IndexTuple{}) == 0.0);
  CHECK(euclidean_degree(IndexTuple::of({2})) == 2.0);
  const auto cheb = BasisFamily::make(FamilyKind::chebyshev);
  for (const auto& t : generate_index_set(cheb, 4, DegreeCaps::uniform(8))) {
    const double e = euclidean_degree(t), d = tuple_degree(cheb, t);
    CHECK(e <= d + 1e-12);
    CHECK(d <= std::sqrt(static_cast<double>(t.order())) * e + 1e-12);
  }
}

TEST_CASE("scaled condition number") {
  Eigen::MatrixXd one(1, 1);
  one << 3.7;
  CHECK(scaled_condition_number(one) == 1.0);
  Eigen::MatrixXd d = Eigen::Vector3d(1.0, 100.0, 1e-4).asDiagonal();
  CHECK(scaled_condition_number(d) == doctest::Approx(1.0));
  Eigen::MatrixXd g(2, 2);
  g << 1.0, 0.5, 0.5, 1.0;
  CHECK(scaled_condition_number(g) == doctest::Approx(3.0));
}

TEST_CASE("constant and realizable targets") {
  const auto f = BasisFamily::make(FamilyKind::chebyshev);
  const auto K = generate_index_set(f, 2, DegreeCaps::uniform(6));
  const auto P = build_purification_operator(K, f);
  const auto can = DesignPipeline::canonical(f, P);
  const auto train = sample_configurations({Distribution::arcsine, 2, 4 * K.size(), 3, 1.0});
  const Eigen::MatrixXd D = real_design(assemble_design(can, train));
  RegressionProblem p;
  p.design = D;
  p.targets = Eigen::VectorXd::Ones(D.rows());
  p.regularizer = Regularizer::identity(D.cols());
  const auto fit = scaled_tsvd_solve(p, 1e-14);
  const auto empty = static_cast<Eigen::Index>(*K.find(IndexTuple{}));
  for (Eigen::Index i = 0; i < fit.coefficients.size(); ++i)
    CHECK(std::abs(fit.coefficients[i] - (i == empty ? 1.0 : 0.0)) < 1e-10);

  // y is itself a canonical basis function
  const auto col = static_cast<Eigen::Index>(*K.find(IndexTuple::of({1, 3})));
  p.targets = D.col(col);
  p.lambdas = {1e-15, 1e-12, 1e-9};
  const auto test = sample_configurations({Distribution::uniform, 2, 500, 4, 1.0});
  const Eigen::MatrixXd T = real_design(assemble_design(can, test));
  const auto g = grid_search_lambda(p, T, T.col(col));
  CHECK(*g.validation_rmse < 1e-8);
}

TEST_CASE("grid and cross-validation selection") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  const int reps = 20;
  int large = 0;
  for (int r = 0; r < reps; ++r) {
    Eigen::MatrixXd psi(40, 15), val(40, 15);
    Eigen::VectorXd y(40), yv(40);
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi.data()[i] = n01(rng);
    for (Eigen::Index i = 0; i < val.size(); ++i) val.data()[i] = n01(rng);
    for (Eigen::Index i = 0; i < 40; ++i) y[i] = n01(rng), yv[i] = n01(rng);
    RegressionProblem p;
    p.design = psi;
    p.targets = y;
    p.regularizer = Regularizer::identity(15);
    p.lambdas = default_lambda_grid();
    const auto fit = grid_search_lambda(p, val, yv);
    large += fit.lambda >= p.lambdas[p.lambdas.size() / 2];
  }
  CHECK(large >= reps * 3 / 4);

  Eigen::MatrixXd psi = Eigen::MatrixXd::Identity(4, 4);
  RegressionProblem p;
  p.design = psi;
  p.targets = Eigen::Vector4d(1, 2, 3, 4);
  p.regularizer = Regularizer::identity(4);
  p.lambdas = {0.3};
  CHECK(grid_search_lambda(p, psi, p.targets).lambda == 0.3);
  CHECK(cross_validate_lambda(p, 2).lambda == 0.3);
  CHECK_THROWS_AS(cross_validate_lambda(p, 1), std::invalid_argument);

  // exact data: both rules stay at small lambda, one_se never below min
  Eigen::MatrixXd A(60, 5);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = n01(rng);
  p.design = A;
  p.targets = A * Eigen::VectorXd::LinSpaced(5, 1.0, 2.0);
  p.regularizer = Regularizer::identity(5);
  p.lambdas = default_lambda_grid(20);
  const auto lo = cross_validate_lambda(p, 5, 1, LambdaRule::min);
  const auto se = cross_validate_lambda(p, 5, 1, LambdaRule::one_se);
  CHECK(se.lambda >= lo.lambda);
  CHECK(lo.train_rmse < 1e-6);
}

TEST_CASE("config parsing") {
  using nlohmann::json;
  CHECK(parse_condition_config(json::object()).orders.size() == 6);
  CHECK(parse_condition_config(json{{"max_order", 3}}).orders == std::vector<int>{1, 2, 3});
  CHECK_THROWS_AS(parse_condition_config(json{{"samples_per_basis", 4}}), std::invalid_argument);
  CHECK_THROWS_AS(parse_condition_config(json{{"bogus", 1}}), std::invalid_argument);
  CHECK_THROWS_AS(parse_decay_config(json{{"order", "two"}}), std::invalid_argument);
  CHECK_THROWS_AS(parse_decay_config(json{{"family", "spherical"}}), std::invalid_argument);
  const auto fc = parse_fit_config(json::parse(R"({"J": 8, "target": {"kind": "multiset", "a": 5, "epsilon": 0.1}})"));
  CHECK(fc.target.kind == TargetFunction::Kind::multiset);
  CHECK(fc.target.order == 4);
  CHECK_THROWS_AS(parse_fit_config(json{{"J", 2}}), std::invalid_argument);
  CHECK_THROWS_AS(parse_fit_config(json{{"lambda_rule", "median"}}), std::invalid_argument);
  CHECK(parse_span_config(json{{"caps", 3}}).caps == std::vector<double>{3.0});
  CHECK(parse_span_config(json{{"expect", false}}).expect == false);
  CHECK_THROWS_AS(parse_span_config(json{{"caps", json::array()}}), std::invalid_argument);
  CHECK_THROWS_AS(parse_purify_info_config(json{{"caps", {1, 2}}, {"max_order", 3}}), std::invalid_argument);
  CHECK_THROWS_AS(parse_invariance_config(json::array()), std::invalid_argument);
}

TEST_CASE("experiment reports are deterministic") {
  DecayConfig c;
  c.total_degree = 8;
  c.samples_per_basis = 10;
  const auto r1 = run_decay_experiment(c, {11, 1});
  const auto r2 = run_decay_experiment(c, {11, 3});
  REQUIRE(r1.tables.size() == r2.tables.size());
  for (const auto& [name, t] : r1.tables) CHECK(csv(t) == csv(r2.tables.at(name)));
  CHECK(r1.metadata["config_hash"] == r2.metadata["config_hash"]);

  SpanConfig s;
  s.expect = true;
  const auto sp = run_span_check(s, {1, 1});
  CHECK(sp.passed);
  s.family = FamilyKind::spherical_envelope;
  s.max_order = 2;
  s.caps = {2.0};
  s.expect = false;
  const auto se = run_span_check(s, {1, 1});
  CHECK(se.passed);
  CHECK(se.tables.at("closure_extra").rows.size() > 0);
}

TEST_CASE("small condition and invariance runs") {
  ConditionConfig c;
  c.total_degree = 6;
  c.max_order = 3;
  c.orders = {1, 2, 3};
  c.samples_per_basis = 30;
  const auto r = run_condition_experiment(c, {3, 1});
  const auto& rows = r.tables.at("condition_numbers").rows;
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    CHECK(std::stod(row[6]) < 5.0);
    CHECK(std::stod(row[6]) >= 1.0);
  }
  CHECK(std::stod(rows[1][7]) > std::stod(rows[1][6]));

  InvarianceConfig ic;
  ic.actions = 20;
  ic.degree_O1 = 5;
  ic.degree_SO2 = 4;
  ic.degree_O3 = 4;
  const auto inv = run_invariance_check(ic, {2, 1});
  CHECK(inv.passed);
  CHECK(inv.tables.at("invariance").rows.size() == 6);
}
