#include "canace/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "canace/parallel.hpp"

namespace canace {

Regularizer Regularizer::identity(Eigen::Index n) {
  Regularizer r;
  r.kind_ = Kind::identity;
  r.n_ = n;
  return r;
}

Regularizer Regularizer::diagonal(Eigen::VectorXd gamma) {
  if (!gamma.allFinite() || (gamma.size() > 0 && gamma.minCoeff() <= 0.0))
    throw std::invalid_argument("diagonal regularizer entries must be positive and finite");
  Regularizer r;
  r.kind_ = Kind::diagonal;
  r.n_ = gamma.size();
  r.diag_ = std::move(gamma);
  return r;
}

Regularizer Regularizer::matrix(Eigen::MatrixXd gamma) {
  if (gamma.rows() != gamma.cols()) throw std::invalid_argument("matrix regularizer must be square");
  if (!gamma.allFinite()) throw std::invalid_argument("matrix regularizer has non-finite entries");
  Regularizer r;
  r.kind_ = Kind::matrix;
  r.n_ = gamma.rows();
  r.mat_ = std::move(gamma);
  r.lu_.compute(r.mat_);
  if (r.n_ > 0 && r.lu_.rcond() < 1e-14) throw std::invalid_argument("matrix regularizer is numerically singular");
  return r;
}

Eigen::MatrixXd Regularizer::dense() const {
  switch (kind_) {
    case Kind::identity: return Eigen::MatrixXd::Identity(n_, n_);
    case Kind::diagonal: return diag_.asDiagonal();
    case Kind::matrix: return mat_;
  }
  return {};
}

Eigen::VectorXd Regularizer::solve(const Eigen::VectorXd& b) const {
  switch (kind_) {
    case Kind::identity: return b;
    case Kind::diagonal: return b.cwiseQuotient(diag_);
    case Kind::matrix: return lu_.solve(b);
  }
  return {};
}

Eigen::MatrixXd Regularizer::scale_design(const Eigen::MatrixXd& psi) const {
  switch (kind_) {
    case Kind::identity: return psi;
    case Kind::diagonal: return psi * diag_.cwiseInverse().asDiagonal();
    case Kind::matrix: return psi * lu_.inverse();
  }
  return {};
}

void RegressionProblem::validate() const {
  if (design.rows() != targets.size()) throw std::invalid_argument("regression: design rows do not match targets");
  if (design.rows() == 0) throw std::invalid_argument("regression: empty design");
  if (regularizer.size() != design.cols())
    throw std::invalid_argument("regression: regularizer size does not match design columns");
  if (!design.allFinite() || !targets.allFinite()) throw std::invalid_argument("regression: non-finite inputs");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) throw std::invalid_argument("regression: lambda grid must be positive");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw std::invalid_argument("regression: lambda grid must be increasing");
  }
}

nlohmann::json to_json(const FitResult& fit) {
  nlohmann::json j;
  j["solver"] = fit.solver;
  j["lambda"] = fit.lambda;
  j["rtol"] = fit.rtol;
  j["train_rmse"] = fit.train_rmse;
  j["validation_rmse"] = fit.validation_rmse ? nlohmann::json(*fit.validation_rmse) : nlohmann::json(nullptr);
  j["effective_rank"] = fit.effective_rank;
  j["dropped_singular_values"] = fit.dropped_singular_values;
  j["coefficients"] = std::vector<double>(fit.coefficients.data(), fit.coefficients.data() + fit.coefficients.size());
  return j;
}

std::vector<double> default_lambda_grid(int count, double lo, double hi) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("lambda grid: invalid range");
  std::vector<double> g(static_cast<std::size_t>(count));
  if (count == 1) return {lo};
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
  return g;
}

double rmse(const Eigen::MatrixXd& design, const Eigen::VectorXd& coefficients, const Eigen::VectorXd& targets) {
  if (targets.size() == 0) return 0.0;
  return std::sqrt((design * coefficients - targets).squaredNorm() / static_cast<double>(targets.size()));
}

FitResult tikhonov_solve(const RegressionProblem& problem, double lambda) {
  problem.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("tikhonov: lambda must be >= 0");
  const auto& psi = problem.design;
  const Eigen::Index n = psi.cols(), m = psi.rows();
  FitResult fit;
  fit.solver = "tikhonov";
  fit.lambda = lambda;
  if (lambda == 0.0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(psi);
    fit.coefficients = cod.solve(problem.targets);
    fit.effective_rank = cod.rank();
  } else {
    Eigen::MatrixXd stacked(m + n, n);
    stacked.topRows(m) = psi;
    stacked.bottomRows(n) = std::sqrt(lambda) * problem.regularizer.dense();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + n);
    rhs.head(m) = problem.targets;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stacked);
    fit.coefficients = qr.solve(rhs);
    fit.effective_rank = qr.rank();
  }
  fit.train_rmse = rmse(psi, fit.coefficients, problem.targets);
  return fit;
}

FitResult scaled_tsvd_solve(const RegressionProblem& problem, double rtol) {
  problem.validate();
  if (!(rtol > 0.0 && rtol <= 1.0)) throw std::invalid_argument("scaled_tsvd: rtol must lie in (0, 1]");
  const Eigen::MatrixXd scaled = problem.regularizer.scale_design(problem.design);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  FitResult fit;
  fit.solver = "scaled_tsvd";
  fit.rtol = rtol;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(scaled.cols());
  const double smax = s.size() ? s[0] : 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (smax == 0.0 || s[i] < rtol * smax) {
      ++fit.dropped_singular_values;
      continue;
    }
    b += svd.matrixV().col(i) * (svd.matrixU().col(i).dot(problem.targets) / s[i]);
    ++fit.effective_rank;
  }
  fit.coefficients = problem.regularizer.solve(b);
  fit.train_rmse = rmse(problem.design, fit.coefficients, problem.targets);
  return fit;
}

FitResult grid_search_lambda(const RegressionProblem& problem, const Eigen::MatrixXd& val_design,
                             const Eigen::VectorXd& val_targets, int threads) {
  problem.validate();
  if (val_targets.size() == 0) throw std::invalid_argument("grid search: empty validation set");
  if (val_design.rows() != val_targets.size() || val_design.cols() != problem.design.cols())
    throw std::invalid_argument("grid search: validation shape mismatch");
  if (problem.lambdas.empty()) throw std::invalid_argument("grid search: empty lambda grid");
  std::vector<FitResult> fits(problem.lambdas.size());
  parallel_for(fits.size(), threads, [&](std::size_t i) {
    fits[i] = tikhonov_solve(problem, problem.lambdas[i]);
    fits[i].validation_rmse = rmse(val_design, fits[i].coefficients, val_targets);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < fits.size(); ++i)
    if (*fits[i].validation_rmse <= *fits[best].validation_rmse) best = i;
  return fits[best];
}

FitResult cross_validate_lambda(const RegressionProblem& problem, int folds, int threads, LambdaRule rule) {
  problem.validate();
  const Eigen::Index m = problem.design.rows();
  if (folds < 2 || folds > m) throw std::invalid_argument("cross validation: need 2 <= folds <= rows");
  if (problem.lambdas.empty()) throw std::invalid_argument("cross validation: empty lambda grid");
  const auto nl = problem.lambdas.size();
  Eigen::MatrixXd sse(static_cast<Eigen::Index>(nl), folds);  // per lambda and fold
  parallel_for(nl, threads, [&](std::size_t li) {
    for (int f = 0; f < folds; ++f) {
      const Eigen::Index lo = m * f / folds, hi = m * (f + 1) / folds;
      RegressionProblem sub;
      sub.design.resize(m - (hi - lo), problem.design.cols());
      sub.targets.resize(m - (hi - lo));
      sub.design << problem.design.topRows(lo), problem.design.bottomRows(m - hi);
      sub.targets << problem.targets.head(lo), problem.targets.tail(m - hi);
      sub.regularizer = problem.regularizer;
      const auto fit = tikhonov_solve(sub, problem.lambdas[li]);
      sse(static_cast<Eigen::Index>(li), f) =
          (problem.design.middleRows(lo, hi - lo) * fit.coefficients - problem.targets.segment(lo, hi - lo))
              .squaredNorm();
    }
  });
  const Eigen::VectorXd total = sse.rowwise().sum();
  std::size_t best = 0;
  for (std::size_t i = 1; i < nl; ++i)
    if (total[static_cast<Eigen::Index>(i)] <= total[static_cast<Eigen::Index>(best)]) best = i;
  if (rule == LambdaRule::one_se) {
    // Fold-level mean squared errors at the minimum.
    Eigen::VectorXd mse(folds);
    for (int f = 0; f < folds; ++f) {
      const Eigen::Index lo = m * f / folds, hi = m * (f + 1) / folds;
      mse[f] = sse(static_cast<Eigen::Index>(best), f) / static_cast<double>(hi - lo);
    }
    const double mean = mse.mean();
    const double se = std::sqrt((mse.array() - mean).square().sum() / (folds - 1) / folds);
    const double limit = total[static_cast<Eigen::Index>(best)] / static_cast<double>(m) + se;
    for (std::size_t i = nl; i-- > best;)
      if (total[static_cast<Eigen::Index>(i)] / static_cast<double>(m) <= limit) {
        best = i;
        break;
      }
  }
  auto fit = tikhonov_solve(problem, problem.lambdas[best]);
  fit.validation_rmse = std::sqrt(total[static_cast<Eigen::Index>(best)] / static_cast<double>(m));
  return fit;
}

Regularizer smoothness_prior(const IndexSet& K, const BasisFamily& family) {
  Eigen::VectorXd g(static_cast<Eigen::Index>(K.size()));
  for (std::size_t i = 0; i < K.size(); ++i) {
    double s = 0.0;
    for (const auto& k : K[i].entries()) s += std::pow(1.0 + family.degree(k), 2);
    g[static_cast<Eigen::Index>(i)] = K[i].empty() ? 1.0 : s;
  }
  return Regularizer::diagonal(std::move(g));
}

Regularizer purification_prior(const PurificationOperator& P) {
  if (!P.square())
    throw std::invalid_argument("purification prior: operator is not square (closure added tuples outside the model)");
  const auto n = static_cast<Eigen::Index>(P.rows().size());
  // Order the tuples by correlation order; P is then unit lower triangular.
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](Eigen::Index a, Eigen::Index b) {
    return P.rows()[static_cast<std::size_t>(a)].order() < P.rows()[static_cast<std::size_t>(b)].order();
  });
  std::vector<Eigen::Index> where(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) where[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < P.matrix().outerSize(); ++i)
    for (SparseReal::InnerIterator it(P.matrix(), i); it; ++it) {
      const auto r = where[static_cast<std::size_t>(i)], c = where[static_cast<std::size_t>(it.col())];
      if (c > r) throw std::invalid_argument("purification prior: operator is not triangular by order");
      L(r, c) = it.value();
    }
  const Eigen::MatrixXd Linv = L.triangularView<Eigen::UnitLower>().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd gamma(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      gamma(i, j) = Linv(where[static_cast<std::size_t>(j)], where[static_cast<std::size_t>(i)]);
  return Regularizer::matrix(std::move(gamma));
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> split_complex(const Eigen::MatrixXcd& design, const Eigen::VectorXd& y) {
  if (design.rows() != y.size()) throw std::invalid_argument("split_complex: shape mismatch");
  Eigen::MatrixXd M(2 * design.rows(), design.cols());
  M.topRows(design.rows()) = design.real();
  M.bottomRows(design.rows()) = design.imag();
  Eigen::VectorXd t = Eigen::VectorXd::Zero(2 * y.size());
  t.head(y.size()) = y;
  return {std::move(M), std::move(t)};
}

Eigen::MatrixXd real_design(const Eigen::MatrixXcd& design, double tol) {
  const double scale = std::max(1.0, design.cwiseAbs().maxCoeff());
  if (design.size() && design.imag().cwiseAbs().maxCoeff() > tol * scale)
    throw std::runtime_error("real_design: design has a non-negligible imaginary part");
  return design.real();
}

// ---------------------------------------------------------------------------

DesignPipeline::DesignPipeline(BasisFamily family, IndexSet evaluated)
    : family_(std::move(family)), evaluated_(std::move(evaluated)), evaluator_(family_, evaluated_) {}

DesignPipeline DesignPipeline::self_interacting(BasisFamily family, IndexSet K) {
  return DesignPipeline(std::move(family), std::move(K));
}

DesignPipeline DesignPipeline::canonical(BasisFamily family, PurificationOperator P) {
  DesignPipeline d(std::move(family), P.cols());
  d.P_ = std::move(P);
  return d;
}

DesignPipeline DesignPipeline::invariant(BasisFamily family, FusedOperator F) {
  DesignPipeline d(std::move(family), F.cols);
  d.F_ = std::move(F);
  return d;
}

Eigen::Index DesignPipeline::columns() const {
  if (F_) return F_->matrix.rows();
  if (P_) return static_cast<Eigen::Index>(P_->rows().size());
  return static_cast<Eigen::Index>(evaluated_.size());
}

std::vector<std::string> DesignPipeline::column_labels() const {
  if (F_) return F_->labels;
  if (P_) return P_->rows().labels();
  return evaluated_.labels();
}

Eigen::VectorXcd DesignPipeline::features(const Configuration& X) const {
  const Eigen::VectorXcd A = evaluator_.evaluate(X);
  if (F_) return evaluate_invariants(*F_, A);
  if (P_) return P_->apply(A);
  return A;
}

Eigen::MatrixXcd assemble_design(const DesignPipeline& pipeline, const std::vector<Configuration>& configs,
                                 int threads) {
  if (configs.empty()) throw std::invalid_argument("assemble_design: no configurations");
  Eigen::MatrixXcd M(static_cast<Eigen::Index>(configs.size()), pipeline.columns());
  parallel_for(configs.size(), threads, [&](std::size_t i) {
    M.row(static_cast<Eigen::Index>(i)) = pipeline.features(configs[i]).transpose();
  });
  return M;
}

}  // namespace canace
