#include <algorithm>
#include <set>
#include <stdexcept>

#include "canace/experiments.hpp"

namespace canace {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  if (j.is_null()) return;
  if (!j.is_object()) throw std::invalid_argument(what + " config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw std::invalid_argument(what + " config: unknown key '" + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.is_null() || !j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config key '") + key + "': " + e.what());
  }
}

void read_family(const json& j, FamilyKind& out) {
  std::string name;
  read(j, "family", name);
  if (!name.empty()) out = parse_family_kind(name);
}

void read_distribution(const json& j, Distribution& out) {
  std::string name;
  read(j, "distribution", name);
  if (!name.empty()) out = parse_distribution(name);
}

void read_caps(const json& j, std::vector<double>& out) {
  if (j.is_null() || !j.contains("caps")) return;
  const auto& c = j.at("caps");
  if (c.is_number()) {
    out = {c.get<double>()};
  } else {
    read(j, "caps", out);
  }
  if (out.empty()) throw std::invalid_argument("config: caps must not be empty");
  for (double v : out)
    if (!(v >= 0.0)) throw std::invalid_argument("config: caps must be nonnegative");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument("config: " + message);
}

}  // namespace

PurifyInfoConfig parse_purify_info_config(const json& j) {
  check_keys(j, {"family", "max_order", "caps", "include_constant", "max_degree", "r_cut", "write_operator"},
             "purify-info");
  PurifyInfoConfig c;
  read_family(j, c.family);
  read(j, "max_order", c.max_order);
  read_caps(j, c.caps);
  read(j, "include_constant", c.include_constant);
  read(j, "max_degree", c.max_degree);
  read(j, "r_cut", c.r_cut);
  read(j, "write_operator", c.write_operator);
  require(c.max_order >= 1, "max_order must be >= 1");
  require(c.caps.size() == 1 || static_cast<int>(c.caps.size()) == c.max_order,
          "caps must have one entry or one per order");
  require(c.max_degree >= 0, "max_degree must be >= 0");
  require(c.r_cut > 0.0, "r_cut must be positive");
  return c;
}

ConditionConfig parse_condition_config(const json& j) {
  check_keys(j,
             {"total_degree", "max_order", "orders", "samples_per_basis", "j_sweep", "j_sweep_factor", "r_cut",
              "canonical_max", "self_min"},
             "cond");
  ConditionConfig c;
  read(j, "total_degree", c.total_degree);
  read(j, "max_order", c.max_order);
  read(j, "orders", c.orders);
  read(j, "samples_per_basis", c.samples_per_basis);
  read(j, "j_sweep", c.j_sweep);
  read(j, "j_sweep_factor", c.j_sweep_factor);
  read(j, "r_cut", c.r_cut);
  read(j, "canonical_max", c.canonical_max);
  read(j, "self_min", c.self_min);
  if (!j.is_null() && j.contains("max_order") && !j.contains("orders")) {
    c.orders.clear();
    for (int n = 1; n <= c.max_order; ++n) c.orders.push_back(n);
  }
  require(c.max_order >= 1, "max_order must be >= 1");
  require(c.total_degree >= c.max_order, "total_degree must be >= max_order");
  require(!c.orders.empty(), "orders must not be empty");
  for (int n : c.orders) require(n >= 1 && n <= c.max_order, "orders must lie in [1, max_order]");
  require(c.samples_per_basis >= 5.0, "samples_per_basis must be >= 5");
  require(c.j_sweep_factor >= 1, "j_sweep_factor must be >= 1");
  require(c.r_cut > 0.0, "r_cut must be positive");
  return c;
}

DecayConfig parse_decay_config(const json& j) {
  check_keys(j, {"family", "order", "total_degree", "a", "distribution", "samples_per_basis", "rtol", "slope_margin"},
             "decay");
  DecayConfig c;
  read_family(j, c.family);
  read(j, "order", c.order);
  read(j, "total_degree", c.total_degree);
  read(j, "a", c.a);
  read_distribution(j, c.distribution);
  read(j, "samples_per_basis", c.samples_per_basis);
  read(j, "rtol", c.rtol);
  read(j, "slope_margin", c.slope_margin);
  require(c.family == FamilyKind::monomial || c.family == FamilyKind::chebyshev || c.family == FamilyKind::legendre,
          "decay needs a polynomial family on [-1, 1]");
  require(c.distribution != Distribution::mu, "decay samples on [-1, 1]");
  require(c.order >= 1, "order must be >= 1");
  require(c.total_degree >= 1, "total_degree must be >= 1");
  require(c.a > 0.0, "a must be positive");
  require(c.samples_per_basis >= 1.0, "samples_per_basis must be >= 1");
  require(c.rtol > 0.0 && c.rtol <= 1.0, "rtol must lie in (0, 1]");
  require(c.slope_margin >= 0.0, "slope_margin must be >= 0");
  return c;
}

FitConfig parse_fit_config(const json& j) {
  check_keys(j,
             {"family", "target", "order", "J", "total_degree", "distribution", "train_factors",
              "validation_fraction", "cv_folds", "lambda_rule", "test_samples", "models", "lambda_count", "lambda_min", "lambda_max",
              "profile_points", "parity_factor"},
             "fit");
  FitConfig c;
  read_family(j, c.family);
  read(j, "order", c.order);
  read(j, "J", c.J);
  read(j, "total_degree", c.total_degree);
  read_distribution(j, c.distribution);
  read(j, "train_factors", c.train_factors);
  read(j, "validation_fraction", c.validation_fraction);
  read(j, "cv_folds", c.cv_folds);
  std::string rule;
  read(j, "lambda_rule", rule);
  if (rule == "min")
    c.lambda_rule = LambdaRule::min;
  else if (rule == "one_se")
    c.lambda_rule = LambdaRule::one_se;
  else if (!rule.empty())
    throw std::invalid_argument("config: lambda_rule must be min or one_se");
  read(j, "test_samples", c.test_samples);
  read(j, "models", c.models);
  read(j, "lambda_count", c.lambda_count);
  read(j, "lambda_min", c.lambda_min);
  read(j, "lambda_max", c.lambda_max);
  read(j, "profile_points", c.profile_points);
  read(j, "parity_factor", c.parity_factor);
  if (!j.is_null() && j.contains("target")) {
    const auto& t = j.at("target");
    check_keys(t, {"kind", "a", "epsilon", "order"}, "fit target");
    std::string kind = "runge";
    double a = 5.0, eps = 0.0;
    int order = c.order;
    read(t, "kind", kind);
    read(t, "a", a);
    read(t, "epsilon", eps);
    read(t, "order", order);
    if (kind == "runge")
      c.target = TargetFunction::runge(a);
    else if (kind == "multiset")
      c.target = TargetFunction::multiset(a, eps, order);
    else
      throw std::invalid_argument("config: target kind must be runge or multiset");
  }
  require(c.family == FamilyKind::monomial || c.family == FamilyKind::chebyshev || c.family == FamilyKind::legendre,
          "fit needs a polynomial family on [-1, 1]");
  require(c.distribution != Distribution::mu, "fit samples on [-1, 1]");
  require(c.order >= 1 && c.J >= c.order, "need 1 <= order <= J");
  require(c.total_degree >= 1, "total_degree must be >= 1");
  require(!c.train_factors.empty(), "train_factors must not be empty");
  for (double f : c.train_factors) require(f > 0.0, "train_factors must be positive");
  require(c.validation_fraction > 0.0 && c.validation_fraction < 1.0, "validation_fraction must lie in (0, 1)");
  require(c.cv_folds >= 0, "cv_folds must be >= 0");
  require(c.test_samples >= 1, "test_samples must be >= 1");
  require(!c.models.empty(), "models must not be empty");
  require(c.lambda_count >= 1 && c.lambda_min > 0.0 && c.lambda_max >= c.lambda_min, "invalid lambda grid");
  require(c.profile_points >= 2, "profile_points must be >= 2");
  require(c.target.a > 0.0, "target a must be positive");
  require(c.target.kind == TargetFunction::Kind::runge || (c.target.order >= 1 && c.target.order <= c.J),
          "multiset target order must lie in [1, J]");
  return c;
}

InvarianceConfig parse_invariance_config(const json& j) {
  check_keys(j, {"actions", "J", "tol", "degree_O1", "degree_SO2", "degree_O3", "max_order"}, "invariance-check");
  InvarianceConfig c;
  read(j, "actions", c.actions);
  read(j, "J", c.J);
  read(j, "tol", c.tol);
  read(j, "degree_O1", c.degree_O1);
  read(j, "degree_SO2", c.degree_SO2);
  read(j, "degree_O3", c.degree_O3);
  read(j, "max_order", c.max_order);
  require(c.actions >= 1, "actions must be >= 1");
  require(c.J >= 1, "J must be >= 1");
  require(c.tol > 0.0, "tol must be positive");
  require(c.degree_O1 >= 0 && c.degree_SO2 >= 0 && c.degree_O3 >= 0, "degrees must be >= 0");
  require(c.max_order >= 1, "max_order must be >= 1");
  return c;
}

SpanConfig parse_span_config(const json& j) {
  check_keys(j,
             {"family", "max_order", "caps", "include_constant", "max_degree", "r_cut", "sample_factor",
              "extra_samples", "threshold", "expect"},
             "span-check");
  SpanConfig c;
  read_family(j, c.family);
  read(j, "max_order", c.max_order);
  read_caps(j, c.caps);
  read(j, "include_constant", c.include_constant);
  read(j, "max_degree", c.max_degree);
  read(j, "r_cut", c.r_cut);
  read(j, "sample_factor", c.sample_factor);
  read(j, "extra_samples", c.extra_samples);
  read(j, "threshold", c.threshold);
  if (!j.is_null() && j.contains("expect")) {
    bool e = false;
    read(j, "expect", e);
    c.expect = e;
  }
  require(c.max_order >= 1, "max_order must be >= 1");
  require(c.caps.size() == 1 || static_cast<int>(c.caps.size()) == c.max_order,
          "caps must have one entry or one per order");
  require(c.max_degree >= 0, "max_degree must be >= 0");
  require(c.r_cut > 0.0, "r_cut must be positive");
  require(c.sample_factor >= 3.0, "sample_factor must be >= 3");
  require(c.threshold > 0.0, "threshold must be positive");
  return c;
}

}  // namespace canace
