// Acceptance suite: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "canace/experiments.hpp"

using namespace canace;

namespace {

constexpr std::uint64_t kSeed = 42;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double table_value(const ExperimentReport& r, const std::string& table, std::size_t row, const std::string& col) {
  const auto& t = r.tables.at(table);
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c] == col) return std::stod(t.rows.at(row)[c]);
  throw std::runtime_error("no column " + col);
}

bool check(const ExperimentReport& r, const std::string& name) {
  return r.checks.contains(name) && r.checks[name].get<bool>();
}

Outcome purification_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream os;
  bool ok = true;
  for (const auto kind : {FamilyKind::monomial, FamilyKind::chebyshev, FamilyKind::legendre, FamilyKind::trigonometric,
                          FamilyKind::spherical}) {
    FamilyOptions o;
    o.max_degree = 8;
    o.seed = kSeed;
    const auto f = BasisFamily::make(kind, o);
    const auto K = generate_index_set(f, 4, DegreeCaps::uniform(8));
    const auto P = build_purification_operator(K, f);
    const SelfInteractingEvaluator ev(f, P.cols());
    std::mt19937_64 rng(kSeed);
    std::uniform_int_distribution<int> J(1, 6);
    double worst = 0.0;
    for (int r = 0; r < 50; ++r) {
      Configuration X(static_cast<std::size_t>(J(rng)));
      for (auto& x : X) x = sample_uniform_particle(f.domain(), rng);
      const Eigen::VectorXcd got = P.apply(ev.evaluate(X));
      const Eigen::VectorXcd want = brute_force_canonical(f, K, X);
      for (Eigen::Index i = 0; i < got.size(); ++i)
        worst = std::max(worst, std::abs(got[i] - want[i]) / std::max(1.0, std::abs(want[i])));
    }
    ok = ok && worst < 1e-9;
    os << f.name() << " " << fmt(worst) << "; ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  os << "runtime " << fmt(secs) << " s";
  return {ok && secs < 120.0, os.str()};
}

Outcome chebyshev_sparsity() {
  const auto r = run_purify_info(PurifyInfoConfig{}, {kSeed, 0});
  const auto& orders = r.tables.at("sparsity_by_order");
  double max_nnz = 0, bound = 0;
  bool within = false;
  for (std::size_t i = 0; i < orders.rows.size(); ++i)
    if (orders.rows[i][0] == "3") {
      max_nnz = table_value(r, "sparsity_by_order", i, "max_nnz");
      bound = table_value(r, "sparsity_by_order", i, "bound");
      within = orders.rows[i][5] == "true";
    }
  const double density = 100.0 * table_value(r, "purification_summary", 0, "density");
  const bool ok = max_nnz <= 11 && bound == 15 && within && std::abs(density - 1.48) <= 0.5;
  return {ok, "order-3 max nnz " + fmt(max_nnz) + ", bound " + fmt(bound) + ", density " + fmt(density) +
                  "% (target 1.48 +/- 0.5)"};
}

Outcome gram_conditioning() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_condition_experiment(ConditionConfig{}, {kSeed, 0});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream os;
  bool ok = true;
  const auto& t = r.tables.at("condition_numbers");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const int N = std::stoi(t.rows[i][1]);
    if (N < 2) continue;
    const double kc = table_value(r, "condition_numbers", i, "canonical_cond");
    const double ks = table_value(r, "condition_numbers", i, "self_cond");
    ok = ok && kc >= 1.0 && kc <= 5.0;
    if (N <= 5) ok = ok && ks >= 50.0;
    os << "N=" << N << " " << fmt(kc) << "/" << fmt(ks) << "; ";
  }
  os << "runtime " << fmt(secs) << " s";
  return {ok && secs < 900.0, os.str()};
}

Outcome regularizer_equivalence() {
  struct Problem {
    FamilyKind kind;
    int order, degree, J;
  };
  const Problem problems[] = {{FamilyKind::chebyshev, 3, 6, 4},
                              {FamilyKind::legendre, 3, 6, 5},
                              {FamilyKind::monomial, 2, 6, 3},
                              {FamilyKind::chebyshev, 4, 5, 6},
                              {FamilyKind::legendre, 2, 8, 2}};
  double worst = 0.0;
  bool square = true;
  std::uint64_t seed = kSeed;
  for (const auto& p : problems) {
    FamilyOptions o;
    o.max_degree = 2 * p.degree;
    const auto f = BasisFamily::make(p.kind, o);
    const auto K = close_index_set(generate_index_set(f, p.order, DegreeCaps::uniform(p.degree)), f).first;
    const auto P = build_purification_operator(K, f);
    square = square && P.square();
    const auto configs = sample_configurations({Distribution::uniform, p.J, 3 * K.size(), ++seed, 1.0});
    const Eigen::MatrixXd Dc = real_design(assemble_design(DesignPipeline::canonical(f, P), configs));
    const Eigen::MatrixXd Ds = real_design(assemble_design(DesignPipeline::self_interacting(f, P.cols()), configs));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    Eigen::VectorXd y(Dc.rows());
    for (auto& v : y) v = n01(rng);
    const auto gamma = purification_prior(P);
    for (double lambda : {1e-6, 1e-3, 1.0}) {
      RegressionProblem a{Dc, y, Regularizer::identity(Dc.cols()), {}, Solver::tikhonov};
      RegressionProblem b{Ds, y, gamma, {}, Solver::tikhonov};
      const Eigen::VectorXd pa = Dc * tikhonov_solve(a, lambda).coefficients;
      const Eigen::VectorXd pb = Ds * tikhonov_solve(b, lambda).coefficients;
      worst = std::max(worst, (pa - pb).norm() / pa.norm());
    }
  }
  return {square && worst < 1e-8, "5 problems x 3 lambdas, max relative prediction gap " + fmt(worst)};
}

Outcome invariance() {
  const auto r = run_invariance_check(InvarianceConfig{}, {kSeed, 0});
  std::ostringstream os;
  double worst = 0.0;
  for (std::size_t i = 0; i < r.tables.at("invariance").rows.size(); ++i)
    worst = std::max(worst, table_value(r, "invariance", i, "max_residual"));
  os << "O(1), SO(2), O(3) x 200 actions, both bases, max residual " << fmt(worst);
  return {r.passed && worst < 1e-10, os.str()};
}

Outcome decay() {
  const auto r = run_decay_experiment(DecayConfig{}, {kSeed, 0});
  const double sc = table_value(r, "decay_slopes", 0, "slope"), ss = table_value(r, "decay_slopes", 1, "slope");
  const bool ok = sc < 0 && ss < 0 && sc <= ss + 0.05 * std::abs(ss);
  return {ok, "slope canonical " + fmt(sc) + ", self-interacting " + fmt(ss)};
}

std::string final_rmse(const ExperimentReport& r, const char* model) {
  return fmt(r.metadata["final_test_rmse"][model].get<double>());
}

Outcome regression_ordering() {
  const auto r = run_regression_experiment(FitConfig{}, {kSeed, 0});
  const bool ok = check(r, "canonical_smoothness_le_self_identity") && check(r, "smoothness_le_identity_canonical");
  return {ok, "held-out RMSE canonical+smoothness " + final_rmse(r, "canonical+smoothness") + ", canonical+identity " +
                  final_rmse(r, "canonical+identity") + ", self+identity " + final_rmse(r, "self+identity")};
}

Outcome multiset_parity() {
  FitConfig c;
  c.J = 8;
  c.order = 4;
  c.target = TargetFunction::multiset(5.0, 0.1, 4);
  const auto r = run_regression_experiment(c, {kSeed, 0});
  return {check(r, "canonical_self_parity"), "held-out RMSE canonical+smoothness " +
                                                 final_rmse(r, "canonical+smoothness") + ", self+smoothness " +
                                                 final_rmse(r, "self+smoothness") + " (factor 2 allowed)"};
}

Outcome span_equivalence() {
  SpanConfig closed;
  closed.expect = true;
  const auto a = run_span_check(closed, {kSeed, 0});
  SpanConfig env;
  env.family = FamilyKind::spherical_envelope;
  env.max_order = 2;
  env.caps = {2.0};
  env.expect = false;
  const auto b = run_span_check(env, {kSeed, 0});
  const double extra = table_value(b, "span_check", 0, "extra");
  const bool ok = a.passed && b.passed && extra > 0;
  return {ok, std::string("monomial closed set equal=") + a.tables.at("span_check").rows[0][11] +
                  "; enveloped set equal=" + b.tables.at("span_check").rows[0][11] + " with " + fmt(extra) +
                  " extra closure tuples"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"purification matches brute force", purification_oracle},
      {"Chebyshev order-3 sparsity", chebyshev_sparsity},
      {"Gram conditioning of O(3) invariants", gram_conditioning},
      {"purification prior equivalence", regularizer_equivalence},
      {"group invariance", invariance},
      {"coefficient decay", decay},
      {"regression ordering", regression_ordering},
      {"multiset parity", multiset_parity},
      {"span equivalence", span_equivalence},
  };
  int failures = 0, i = 0;
  for (const auto& [name, fn] : criteria) {
    ++i;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d %s: %s (%s)\n", i, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
