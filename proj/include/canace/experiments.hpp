#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "canace/io.hpp"
#include "canace/regression.hpp"

namespace canace {

// ---------------------------------------------------------------------------
// Sampling and targets

enum class Distribution {
  uniform,  // uniform on [-1, 1]
  arcsine,  // density 1 / (pi sqrt(1 - x^2)) on [-1, 1]
  mu,       // uniform radius on [0, r_cut] times uniform direction
};

std::string distribution_name(Distribution d);
Distribution parse_distribution(const std::string& name);

struct SamplerSpec {
  Distribution distribution = Distribution::uniform;
  int J = 1;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  double r_cut = 1.0;
};

std::vector<Configuration> sample_configurations(const SamplerSpec& spec);

struct TargetFunction {
  enum class Kind { runge, multiset };
  Kind kind = Kind::runge;
  double a = 1.0;
  double epsilon = 0.0;
  int order = 0;  // sub-cluster size for the multiset variant

  static TargetFunction runge(double a);
  static TargetFunction multiset(double a, double epsilon, int order);
  [[nodiscard]] std::string label() const;
};

/// f_a(x) = 1 / (1 + a |x|^2) over the first coordinates, or the sub-cluster sum
/// F_{a,eps}(x) = sum_{|S| = N} f_a(x_S) + eps prod_i x_i.
double eval_target(const TargetFunction& t, const Configuration& X);

/// sqrt(sum_t k_t^2) over the scalar degrees n of the tuple entries.
double euclidean_degree(const IndexTuple& k);

/// Condition number of D^{-1/2} G D^{-1/2} from its singular values.
double scaled_condition_number(const Eigen::MatrixXd& gram);

// ---------------------------------------------------------------------------
// Reports

struct ExperimentReport {
  std::string experiment;
  std::map<std::string, CsvTable> tables;
  nlohmann::json metadata;
  nlohmann::json checks = nlohmann::json::object();  // name -> bool
  std::map<std::string, std::string> files;            // extra text artifacts by file name
  bool passed = true;

  void check(const std::string& name, bool ok);
  /// Writes <table>.csv for each table and <experiment>.json.
  void write(const std::filesystem::path& dir) const;
};

struct RunOptions {
  std::uint64_t seed = 0;
  int threads = 1;
};

// ---------------------------------------------------------------------------
// Experiment configurations. Each parser rejects unknown keys and invalid values
// with std::invalid_argument.

struct PurifyInfoConfig {
  FamilyKind family = FamilyKind::chebyshev;
  int max_order = 3;
  std::vector<double> caps = {20.0};  // one entry = uniform cap, else per order
  bool include_constant = true;
  int max_degree = 40;
  double r_cut = 1.0;
  bool write_operator = false;
};

struct ConditionConfig {
  int total_degree = 10;
  int max_order = 6;
  std::vector<int> orders = {1, 2, 3, 4, 5, 6};
  double samples_per_basis = 70.0;
  bool j_sweep = false;
  int j_sweep_factor = 4;  // J in {N, ..., factor N}
  double r_cut = 1.0;
  double canonical_max = 5.0;
  double self_min = 50.0;
};

struct DecayConfig {
  FamilyKind family = FamilyKind::chebyshev;
  int order = 2;  // N = J
  int total_degree = 24;
  double a = 25.0;
  Distribution distribution = Distribution::arcsine;
  double samples_per_basis = 20.0;
  double rtol = 1e-13;
  double slope_margin = 0.05;
};

struct FitConfig {
  FamilyKind family = FamilyKind::chebyshev;
  TargetFunction target = TargetFunction::runge(5.0);
  int order = 4;  // N
  int J = 4;
  int total_degree = 10;
  Distribution distribution = Distribution::uniform;
  std::vector<double> train_factors = {0.25, 0.5, 1.0, 2.0, 4.0};
  double validation_fraction = 0.2;  // used when cv_folds < 2
  int cv_folds = 5;
  LambdaRule lambda_rule = LambdaRule::one_se;
  std::size_t test_samples = 100000;
  std::vector<std::string> models = {"canonical+smoothness", "canonical+identity", "self+identity",
                                     "self+smoothness", "self+purification"};
  int lambda_count = 40;
  double lambda_min = 1e-15;
  double lambda_max = 1e3;
  int profile_points = 101;
  double parity_factor = 2.0;
};

struct InvarianceConfig {
  int actions = 200;
  int J = 5;
  double tol = 1e-10;
  int degree_O1 = 8;
  int degree_SO2 = 6;
  int degree_O3 = 6;
  int max_order = 3;
};

struct SpanConfig {
  FamilyKind family = FamilyKind::monomial;
  int max_order = 3;
  std::vector<double> caps = {4.0};
  bool include_constant = false;
  int max_degree = 10;
  double r_cut = 1.0;
  double sample_factor = 3.0;
  std::size_t extra_samples = 20;
  double threshold = 1e-8;
  std::optional<bool> expect;  // expected span equality, checked when set
};

PurifyInfoConfig parse_purify_info_config(const nlohmann::json& j);
ConditionConfig parse_condition_config(const nlohmann::json& j);
DecayConfig parse_decay_config(const nlohmann::json& j);
FitConfig parse_fit_config(const nlohmann::json& j);
InvarianceConfig parse_invariance_config(const nlohmann::json& j);
SpanConfig parse_span_config(const nlohmann::json& j);

ExperimentReport run_purify_info(const PurifyInfoConfig& config, const RunOptions& run);
/// Gram condition numbers per order for canonical and self-interacting O(3) invariants.
ExperimentReport run_condition_experiment(const ConditionConfig& config, const RunOptions& run);
/// Coefficient decay against the Euclidean degree for both bases.
ExperimentReport run_decay_experiment(const DecayConfig& config, const RunOptions& run);
/// Learning curves for each (basis, prior) model, with held-out RMSE and max error.
ExperimentReport run_regression_experiment(const FitConfig& config, const RunOptions& run);
/// Invariant features under random group actions for O(1), SO(2) and O(3).
ExperimentReport run_invariance_check(const InvarianceConfig& config, const RunOptions& run);
ExperimentReport run_span_check(const SpanConfig& config, const RunOptions& run);

}  // namespace canace
