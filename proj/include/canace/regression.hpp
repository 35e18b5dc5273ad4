#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "canace/expansion.hpp"
#include "canace/purification.hpp"
#include "canace/symmetry.hpp"

namespace canace {

/// Tikhonov operator Gamma in lambda * ||Gamma c||^2.
class Regularizer {
 public:
  enum class Kind { identity, diagonal, matrix };

  static Regularizer identity(Eigen::Index n);
  static Regularizer diagonal(Eigen::VectorXd gamma);
  static Regularizer matrix(Eigen::MatrixXd gamma);

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] Eigen::Index size() const { return n_; }
  [[nodiscard]] const Eigen::VectorXd& diag() const { return diag_; }
  [[nodiscard]] Eigen::MatrixXd dense() const;
  /// Gamma^{-1} b.
  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  /// Psi Gamma^{-1}.
  [[nodiscard]] Eigen::MatrixXd scale_design(const Eigen::MatrixXd& psi) const;

 private:
  Kind kind_ = Kind::identity;
  Eigen::Index n_ = 0;
  Eigen::VectorXd diag_;
  Eigen::MatrixXd mat_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

enum class Solver { tikhonov, scaled_tsvd };

struct RegressionProblem {
  Eigen::MatrixXd design;
  Eigen::VectorXd targets;
  Regularizer regularizer;
  std::vector<double> lambdas;  // grid for tikhonov
  Solver solver = Solver::tikhonov;

  void validate() const;
};

struct FitResult {
  Eigen::VectorXd coefficients;
  std::string solver;
  double lambda = 0.0;
  double rtol = 0.0;
  double train_rmse = 0.0;
  std::optional<double> validation_rmse;
  Eigen::Index effective_rank = 0;
  Eigen::Index dropped_singular_values = 0;
};

nlohmann::json to_json(const FitResult& fit);

/// 40 log-spaced values over [1e-15, 1e3] by default.
std::vector<double> default_lambda_grid(int count = 40, double lo = 1e-15, double hi = 1e3);

double rmse(const Eigen::MatrixXd& design, const Eigen::VectorXd& coefficients, const Eigen::VectorXd& targets);

/// Minimizes ||Psi c - y||^2 + lambda ||Gamma c||^2 via QR of [Psi; sqrt(lambda) Gamma].
FitResult tikhonov_solve(const RegressionProblem& problem, double lambda);
/// Truncated SVD of Psi Gamma^{-1}, dropping singular values strictly below rtol * sigma_max.
FitResult scaled_tsvd_solve(const RegressionProblem& problem, double rtol);
/// Fits every grid lambda and keeps the lowest validation RMSE (ties go to the larger lambda).
FitResult grid_search_lambda(const RegressionProblem& problem, const Eigen::MatrixXd& val_design,
                             const Eigen::VectorXd& val_targets, int threads = 1);

enum class LambdaRule {
  min,     // lowest cross-validation error, ties to the larger lambda
  one_se,  // largest lambda within one standard error of the minimum
};

/// k-fold cross-validation over the lambda grid with contiguous folds; the
/// selected lambda is refitted on all rows. validation_rmse holds the pooled
/// cross-validation RMSE at the selected lambda.
FitResult cross_validate_lambda(const RegressionProblem& problem, int folds, int threads = 1,
                                LambdaRule rule = LambdaRule::min);

/// gamma(k) = sum_t (1 + deg(k_t))^2; the empty tuple gets 1.
Regularizer smoothness_prior(const IndexSet& K, const BasisFamily& family);
/// Gamma = P^{-T} for a square purification operator.
Regularizer purification_prior(const PurificationOperator& P);

/// Real least-squares form of a complex design: rows [Re; Im], targets [y; 0].
std::pair<Eigen::MatrixXd, Eigen::VectorXd> split_complex(const Eigen::MatrixXcd& design, const Eigen::VectorXd& y);
/// Real part of a design whose imaginary part must vanish (up to tol * max magnitude).
Eigen::MatrixXd real_design(const Eigen::MatrixXcd& design, double tol = 1e-10);

/// Feature pipeline: raw self-interacting features, canonical features via P,
/// or invariants via a fused operator.
class DesignPipeline {
 public:
  static DesignPipeline self_interacting(BasisFamily family, IndexSet K);
  static DesignPipeline canonical(BasisFamily family, PurificationOperator P);
  static DesignPipeline invariant(BasisFamily family, FusedOperator F);

  [[nodiscard]] Eigen::Index columns() const;
  [[nodiscard]] std::vector<std::string> column_labels() const;
  [[nodiscard]] Eigen::VectorXcd features(const Configuration& X) const;
  [[nodiscard]] const BasisFamily& family() const { return family_; }

 private:
  DesignPipeline(BasisFamily family, IndexSet evaluated);

  BasisFamily family_;
  IndexSet evaluated_;
  SelfInteractingEvaluator evaluator_;
  std::optional<PurificationOperator> P_;
  std::optional<FusedOperator> F_;
};

Eigen::MatrixXcd assemble_design(const DesignPipeline& pipeline, const std::vector<Configuration>& configs,
                                 int threads = 1);

}  // namespace canace
