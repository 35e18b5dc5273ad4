#include "canace/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "canace/parallel.hpp"

namespace canace {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kChunk = 256;

std::string yes_no(bool b) { return b ? "true" : "false"; }

std::string hash_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

DegreeCaps make_caps(const std::vector<double>& caps) {
  if (caps.size() == 1) return DegreeCaps::uniform(caps[0]);
  return DegreeCaps::per_order(caps);
}

BasisFamily make_family(FamilyKind kind, int max_degree, double r_cut, std::uint64_t seed) {
  FamilyOptions o;
  o.max_degree = max_degree;
  o.r_cut = r_cut;
  o.seed = seed;
  return BasisFamily::make(kind, o);
}

void finish(ExperimentReport& r, const std::string& name, json config, const RunOptions& run, Clock::time_point t0) {
  r.experiment = name;
  const std::string dumped = config.dump();
  r.metadata["experiment"] = name;
  r.metadata["config"] = std::move(config);
  r.metadata["config_hash"] = hash_hex(dumped);
  r.metadata["seed"] = run.seed;
  r.metadata["threads"] = resolve_threads(run.threads);
  r.metadata["runtime_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();
  json tables = json::array();
  for (const auto& [k, v] : r.tables) tables.push_back(k + ".csv");
  r.metadata["tables"] = tables;
  r.metadata["checks"] = r.checks;
  r.metadata["passed"] = r.passed;
}

// Rows of the per-order blocks of a fused operator, keyed by the order of its columns.
std::vector<int> row_orders(const FusedOperator& F) {
  std::vector<int> out(static_cast<std::size_t>(F.matrix.rows()), 0);
  for (Eigen::Index i = 0; i < F.matrix.outerSize(); ++i) {
    SparseComplex::InnerIterator it(F.matrix, i);
    if (it) out[static_cast<std::size_t>(i)] = F.cols[static_cast<std::size_t>(it.col())].order();
  }
  return out;
}

Eigen::VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd targets_of(const TargetFunction& t, const std::vector<Configuration>& configs) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(configs.size()));
  for (std::size_t i = 0; i < configs.size(); ++i) y[static_cast<Eigen::Index>(i)] = eval_target(t, configs[i]);
  return y;
}

Eigen::MatrixXd real_features(const DesignPipeline& p, const std::vector<Configuration>& configs, int threads) {
  return real_design(assemble_design(p, configs, threads), 1e-10);
}

// Least-squares line through (x, y): returns {slope, intercept}.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return {NAN, NAN};
  Eigen::MatrixXd M(static_cast<Eigen::Index>(x.size()), 2);
  for (std::size_t i = 0; i < x.size(); ++i) M.row(static_cast<Eigen::Index>(i)) << x[i], 1.0;
  const Eigen::Vector2d c = M.colPivHouseholderQr().solve(as_vector(y));
  return {c[0], c[1]};
}

}  // namespace

// ---------------------------------------------------------------------------

std::string distribution_name(Distribution d) {
  switch (d) {
    case Distribution::uniform: return "uniform";
    case Distribution::arcsine: return "arcsine";
    case Distribution::mu: return "mu";
  }
  return "?";
}

Distribution parse_distribution(const std::string& name) {
  if (name == "uniform") return Distribution::uniform;
  if (name == "arcsine" || name == "chebyshev") return Distribution::arcsine;
  if (name == "mu") return Distribution::mu;
  throw std::invalid_argument("unknown distribution '" + name + "'");
}

std::vector<Configuration> sample_configurations(const SamplerSpec& spec) {
  if (spec.J < 1) throw std::invalid_argument("sampler: J must be >= 1");
  if (!(spec.r_cut > 0.0)) throw std::invalid_argument("sampler: r_cut must be positive");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0), sym(-1.0, 1.0);
  std::normal_distribution<double> gauss;
  std::vector<Configuration> out(spec.count, Configuration(static_cast<std::size_t>(spec.J)));
  for (auto& X : out)
    for (auto& x : X) {
      switch (spec.distribution) {
        case Distribution::uniform: x = scalar_particle(sym(rng)); break;
        case Distribution::arcsine: x = scalar_particle(std::cos(std::numbers::pi * u01(rng))); break;
        case Distribution::mu: {
          Vec3 v{gauss(rng), gauss(rng), gauss(rng)};
          const double n = norm3(v);
          const double r = spec.r_cut * u01(rng);
          x = {v[0] / n * r, v[1] / n * r, v[2] / n * r};
          break;
        }
      }
    }
  return out;
}

TargetFunction TargetFunction::runge(double a) {
  if (!(a > 0.0)) throw std::invalid_argument("target: a must be positive");
  TargetFunction t;
  t.a = a;
  return t;
}

TargetFunction TargetFunction::multiset(double a, double epsilon, int order) {
  if (!(a > 0.0)) throw std::invalid_argument("target: a must be positive");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("target: epsilon must be >= 0");
  if (order < 1) throw std::invalid_argument("target: sub-cluster order must be >= 1");
  TargetFunction t;
  t.kind = Kind::multiset;
  t.a = a;
  t.epsilon = epsilon;
  t.order = order;
  return t;
}

std::string TargetFunction::label() const {
  std::ostringstream os;
  if (kind == Kind::runge)
    os << "f_" << a;
  else
    os << "F_" << a << "_" << epsilon << "_N" << order;
  return os.str();
}

double eval_target(const TargetFunction& t, const Configuration& X) {
  auto runge = [&](double sq) { return 1.0 / (1.0 + t.a * sq); };
  if (t.kind == TargetFunction::Kind::runge) {
    double sq = 0.0;
    for (const auto& x : X) sq += x[0] * x[0];
    return runge(sq);
  }
  const int J = static_cast<int>(X.size());
  const int N = t.order;
  if (N > J) throw std::invalid_argument("target: sub-cluster order exceeds the number of particles");
  double total = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    double sq = 0.0;
    for (int i : idx) sq += X[static_cast<std::size_t>(i)][0] * X[static_cast<std::size_t>(i)][0];
    total += runge(sq);
    int p = N - 1;
    while (p >= 0 && idx[static_cast<std::size_t>(p)] == J - N + p) --p;
    if (p < 0) break;
    ++idx[static_cast<std::size_t>(p)];
    for (int q = p + 1; q < N; ++q) idx[static_cast<std::size_t>(q)] = idx[static_cast<std::size_t>(q - 1)] + 1;
  }
  if (t.epsilon != 0.0) {
    double prod = 1.0;
    for (const auto& x : X) prod *= x[0];
    total += t.epsilon * prod;
  }
  return total;
}

double euclidean_degree(const IndexTuple& k) {
  double s = 0.0;
  for (const auto& e : k.entries()) s += static_cast<double>(e.n) * e.n;
  return std::sqrt(s);
}

double scaled_condition_number(const Eigen::MatrixXd& gram) {
  if (gram.rows() != gram.cols() || gram.rows() == 0) throw std::invalid_argument("condition number: bad Gram matrix");
  const Eigen::VectorXd d = gram.diagonal();
  if (d.minCoeff() <= 0.0) return INFINITY;
  const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = s.asDiagonal() * gram * s.asDiagonal();
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(scaled).singularValues();
  const double lo = sv[sv.size() - 1];
  return lo > 0.0 ? sv[0] / lo : INFINITY;
}

void ExperimentReport::check(const std::string& name, bool ok) {
  checks[name] = ok;
  passed = passed && ok;
}

void ExperimentReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [name, table] : tables) table.write_file(dir / (name + ".csv"));
  for (const auto& [name, text] : files) {
    std::ofstream os(dir / name);
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    os << text;
  }
  std::ofstream os(dir / (experiment + ".json"));
  if (!os) throw std::runtime_error("cannot write metadata to " + dir.string());
  os << metadata.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

ExperimentReport run_purify_info(const PurifyInfoConfig& c, const RunOptions& run) {
  const auto t0 = Clock::now();
  const auto f = make_family(c.family, c.max_degree, c.r_cut, run.seed);
  const auto caps = make_caps(c.caps);
  const auto K = generate_index_set(f, c.max_order, caps, c.include_constant);
  ClosureOptions co;
  co.threads = run.threads;
  const auto P = build_purification_operator(K, f, co);
  const auto rep = sparsity_report(P, f);

  ExperimentReport r;
  CsvTable summary{{"family", "caps", "max_order", "include_constant", "K", "K_closed", "extra", "nnz", "density",
                    "max_rule_terms", "order_triangular", "degree_triangular", "unit_diagonal", "bound_holds"},
                   {}};
  summary.add_row({f.name(), caps.label(), std::to_string(c.max_order), yes_no(c.include_constant),
                   std::to_string(P.rows().size()), std::to_string(P.cols().size()),
                   std::to_string(P.closure().extra.size()), std::to_string(rep.nnz), format_double(rep.density),
                   std::to_string(rep.K), yes_no(rep.order_triangular), yes_no(rep.degree_triangular),
                   yes_no(rep.unit_diagonal), yes_no(rep.bound_holds)});
  CsvTable orders{{"order", "rows", "max_nnz", "mean_nnz", "bound", "within_bound"}, {}};
  for (const auto& o : rep.orders)
    orders.add_row({std::to_string(o.order), std::to_string(o.rows), std::to_string(o.max_nnz),
                    format_double(o.mean_nnz), format_double(o.bound), yes_no(o.within_bound)});
  r.tables["purification_summary"] = std::move(summary);
  r.tables["sparsity_by_order"] = std::move(orders);
  if (c.write_operator) {
    std::ostringstream os;
    write_operator(os, P, caps.label());
    r.files["operator.txt"] = os.str();
  }
  r.check("order_triangular", rep.order_triangular);
  r.check("unit_diagonal", rep.unit_diagonal);
  if (f.degree_preserving()) {
    r.check("degree_triangular", rep.degree_triangular);
    r.check("sparsity_bound", rep.bound_holds);
  }
  finish(r, "purify-info",
         {{"family", f.name()},
          {"max_order", c.max_order},
          {"caps", c.caps},
          {"include_constant", c.include_constant},
          {"max_degree", c.max_degree},
          {"r_cut", c.r_cut},
          {"write_operator", c.write_operator}},
         run, t0);
  r.metadata["density_percent"] = 100.0 * rep.density;
  return r;
}

// ---------------------------------------------------------------------------

ExperimentReport run_condition_experiment(const ConditionConfig& c, const RunOptions& run) {
  const auto t0 = Clock::now();
  if (c.samples_per_basis < 5.0) throw std::invalid_argument("cond: sample budget below 5 x basis size");
  const auto f = make_family(FamilyKind::spherical, c.total_degree, c.r_cut, run.seed);
  // n counts from zero here, so a tuple of order N carries N fewer degrees.
  std::vector<double> caps;
  for (int N = 1; N <= c.max_order; ++N) caps.push_back(static_cast<double>(c.total_degree - N));
  const auto K = filter_O3(f, generate_index_set(f, c.max_order, DegreeCaps::per_order(caps), true));
  CouplingOptions cop;
  cop.threads = run.threads;
  const auto C = build_O3_coupling(K, run.seed, cop);
  ClosureOptions clo;
  clo.threads = run.threads;
  const auto P = build_purification_operator(K, f, clo);
  const auto Fc = fuse_symmetrization(C, P);
  const auto Fs = self_interacting_invariants(C);
  const auto orders = row_orders(Fs);
  const std::size_t basis_size = C.labels.size();
  const auto samples = static_cast<std::size_t>(std::ceil(c.samples_per_basis * static_cast<double>(basis_size)));

  const SelfInteractingEvaluator ev_c(f, Fc.cols);
  const bool shared = Fc.cols.tuples() == Fs.cols.tuples();
  const SelfInteractingEvaluator ev_s(f, Fs.cols);

  ExperimentReport r;
  CsvTable table{{"total_degree", "N", "J", "block_size", "basis_size", "samples", "canonical_cond", "self_cond"}, {}};
  for (int N : c.orders) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < orders.size(); ++i)
      if (orders[i] == N) rows.push_back(static_cast<Eigen::Index>(i));
    if (rows.empty()) continue;
    const int Jmax = c.j_sweep ? c.j_sweep_factor * N : N;
    for (int J = N; J <= Jmax; ++J) {
      const auto configs =
          sample_configurations({Distribution::mu, J, samples, run.seed + 1000003ULL * N + 7919ULL * J, c.r_cut});
      const std::size_t chunks = (configs.size() + kChunk - 1) / kChunk;
      const auto m = static_cast<Eigen::Index>(rows.size());
      std::vector<Eigen::MatrixXd> gc(chunks), gs(chunks);
      parallel_for(chunks, run.threads, [&](std::size_t ch) {
        const std::size_t lo = ch * kChunk, hi = std::min(configs.size(), lo + kChunk);
        Eigen::MatrixXd Bc(m, static_cast<Eigen::Index>(hi - lo)), Bs(m, static_cast<Eigen::Index>(hi - lo));
        for (std::size_t s = lo; s < hi; ++s) {
          const Eigen::VectorXcd A = ev_c.evaluate(configs[s]);
          const Eigen::VectorXcd bc = evaluate_invariants(Fc, A);
          const Eigen::VectorXcd bs = evaluate_invariants(Fs, shared ? A : ev_s.evaluate(configs[s]));
          for (Eigen::Index i = 0; i < m; ++i) {
            Bc(i, static_cast<Eigen::Index>(s - lo)) = bc[rows[static_cast<std::size_t>(i)]].real();
            Bs(i, static_cast<Eigen::Index>(s - lo)) = bs[rows[static_cast<std::size_t>(i)]].real();
          }
        }
        gc[ch] = Bc * Bc.transpose();
        gs[ch] = Bs * Bs.transpose();
      });
      Eigen::MatrixXd Gc = Eigen::MatrixXd::Zero(m, m), Gs = Gc;
      for (std::size_t ch = 0; ch < chunks; ++ch) {
        Gc += gc[ch];
        Gs += gs[ch];
      }
      const double kc = scaled_condition_number(Gc), ks = scaled_condition_number(Gs);
      table.add_row({std::to_string(c.total_degree), std::to_string(N), std::to_string(J), std::to_string(m),
                     std::to_string(basis_size), std::to_string(samples), format_double(kc), format_double(ks)});
      if (J == N) {
        r.check("canonical_cond_N" + std::to_string(N), kc >= 1.0 && kc <= c.canonical_max);
        if (N >= 2 && N <= 5 && c.total_degree >= 10)
          r.check("self_cond_N" + std::to_string(N), ks >= c.self_min);
      }
    }
  }
  r.tables["condition_numbers"] = std::move(table);
  finish(r, "cond",
         {{"total_degree", c.total_degree},
          {"max_order", c.max_order},
          {"orders", c.orders},
          {"samples_per_basis", c.samples_per_basis},
          {"j_sweep", c.j_sweep},
          {"j_sweep_factor", c.j_sweep_factor},
          {"r_cut", c.r_cut},
          {"canonical_max", c.canonical_max},
          {"self_min", c.self_min}},
         run, t0);
  r.metadata["basis_size"] = basis_size;
  r.metadata["tuples"] = K.size();
  r.metadata["sampler"] = "uniform radius on [0, r_cut] times uniform direction";
  return r;
}

// ---------------------------------------------------------------------------

ExperimentReport run_decay_experiment(const DecayConfig& c, const RunOptions& run) {
  const auto t0 = Clock::now();
  const auto f = make_family(c.family, c.total_degree, 1.0, run.seed);
  const auto K = generate_index_set(f, c.order, DegreeCaps::uniform(c.total_degree), false);
  ClosureOptions clo;
  clo.threads = run.threads;
  const auto P = build_purification_operator(K, f, clo);
  const auto samples = static_cast<std::size_t>(std::ceil(c.samples_per_basis * static_cast<double>(K.size())));
  const auto configs = sample_configurations({c.distribution, c.order, samples, run.seed, 1.0});
  const Eigen::VectorXd y = targets_of(TargetFunction::runge(c.a), configs);

  struct Basis {
    std::string name;
    DesignPipeline pipeline;
  };
  const std::vector<Basis> bases = {{"canonical", DesignPipeline::canonical(f, P)},
                                    {"self", DesignPipeline::self_interacting(f, K)}};

  ExperimentReport r;
  CsvTable coeffs{{"basis", "tuple", "order", "total_degree", "eucl", "coefficient", "abs_coefficient"}, {}};
  CsvTable slopes{{"basis", "slope", "intercept", "bins", "slope_all_points", "points", "effective_rank", "train_rmse"},
                  {}};
  std::map<std::string, double> slope_of;
  for (const auto& b : bases) {
    RegressionProblem prob;
    prob.design = real_features(b.pipeline, configs, run.threads);
    prob.targets = y;
    prob.regularizer = Regularizer::identity(prob.design.cols());
    const auto fit = scaled_tsvd_solve(prob, c.rtol);
    std::vector<double> xs, ls;
    std::map<long, double> envelope;  // floor(eucl) -> max |c|
    for (std::size_t i = 0; i < K.size(); ++i) {
      const double v = fit.coefficients[static_cast<Eigen::Index>(i)];
      const double e = euclidean_degree(K[i]);
      coeffs.add_row({b.name, K.label(i), std::to_string(K[i].order()), format_double(K.degree(i)), format_double(e),
                      format_double(v), format_double(std::abs(v))});
      if (K[i].order() > 0 && std::abs(v) > 0.0) {
        xs.push_back(e);
        ls.push_back(std::log(std::abs(v)));
        auto& m = envelope[static_cast<long>(std::floor(e))];
        m = std::max(m, std::abs(v));
      }
    }
    std::vector<double> ex, el;
    for (const auto& [bin, m] : envelope) {
      ex.push_back(static_cast<double>(bin) + 0.5);
      el.push_back(std::log(m));
    }
    const auto [slope, intercept] = fit_line(ex, el);
    const double slope_all = fit_line(xs, ls).first;
    slope_of[b.name] = slope;
    slopes.add_row({b.name, format_double(slope), format_double(intercept), std::to_string(ex.size()),
                    format_double(slope_all), std::to_string(xs.size()), std::to_string(fit.effective_rank),
                    format_double(fit.train_rmse)});
  }
  const double sc = slope_of["canonical"], ss = slope_of["self"];
  r.check("canonical_slope_negative", sc < 0.0);
  r.check("self_slope_negative", ss < 0.0);
  r.check("canonical_decays_faster", sc <= ss + c.slope_margin * std::abs(ss));
  r.tables["decay_coefficients"] = std::move(coeffs);
  r.tables["decay_slopes"] = std::move(slopes);
  finish(r, "decay",
         {{"family", family_name(c.family)},
          {"order", c.order},
          {"total_degree", c.total_degree},
          {"a", c.a},
          {"distribution", distribution_name(c.distribution)},
          {"samples_per_basis", c.samples_per_basis},
          {"rtol", c.rtol},
          {"slope_margin", c.slope_margin}},
         run, t0);
  r.metadata["basis_size"] = K.size();
  r.metadata["samples"] = samples;
  r.metadata["slope_fit"] =
      "least squares of log max|c| per unit Euclidean-degree bin against the bin centre, non-constant tuples";
  return r;
}

// ---------------------------------------------------------------------------

ExperimentReport run_regression_experiment(const FitConfig& c, const RunOptions& run) {
  const auto t0 = Clock::now();
  const auto f = make_family(c.family, c.total_degree, 1.0, run.seed);
  const auto K = generate_index_set(f, c.order, DegreeCaps::uniform(c.total_degree), false);
  ClosureOptions clo;
  clo.threads = run.threads;

  struct Model {
    std::string name, basis, prior;
    int pipeline = 0;  // 0 canonical, 1 self over K, 2 self over the closure
  };
  std::vector<Model> models;
  bool need_canonical = false, need_closed = false;
  for (const auto& name : c.models) {
    const auto plus = name.find('+');
    if (plus == std::string::npos) throw std::invalid_argument("fit: model '" + name + "' must read basis+prior");
    Model m{name, name.substr(0, plus), name.substr(plus + 1), 0};
    if (m.basis != "canonical" && m.basis != "self")
      throw std::invalid_argument("fit: unknown basis '" + m.basis + "'");
    if (m.prior != "identity" && m.prior != "smoothness" && m.prior != "purification")
      throw std::invalid_argument("fit: unknown prior '" + m.prior + "'");
    if (m.prior == "purification" && m.basis != "self")
      throw std::invalid_argument("fit: the purification prior applies to the self-interacting basis");
    m.pipeline = m.basis == "canonical" ? 0 : (m.prior == "purification" ? 2 : 1);
    need_canonical = need_canonical || m.pipeline == 0;
    need_closed = need_closed || m.pipeline == 2;
    models.push_back(std::move(m));
  }

  std::vector<std::optional<DesignPipeline>> pipes(3);
  std::vector<Regularizer> purif;
  std::size_t closed_size = 0;
  if (need_canonical) pipes[0] = DesignPipeline::canonical(f, build_purification_operator(K, f, clo));
  pipes[1] = DesignPipeline::self_interacting(f, K);
  if (need_closed) {
    const auto Kc = close_index_set(K, f, clo).first;
    const auto Pc = build_purification_operator(Kc, f, clo);
    closed_size = Kc.size();
    purif.push_back(purification_prior(Pc));
    pipes[2] = DesignPipeline::self_interacting(f, Pc.cols());
  }
  auto regularizer_for = [&](const Model& m) {
    if (m.prior == "purification") return purif.front();
    if (m.prior == "smoothness") return smoothness_prior(K, f);
    return Regularizer::identity(static_cast<Eigen::Index>(K.size()));
  };

  const auto lambdas = default_lambda_grid(c.lambda_count, c.lambda_min, c.lambda_max);
  std::vector<std::size_t> sizes;
  for (double fct : c.train_factors)
    sizes.push_back(std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(fct * static_cast<double>(K.size())))));

  struct Cell {
    std::size_t model, size_index, samples, fit_size;
    FitResult fit;
  };
  std::vector<Cell> cells;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    const std::size_t n = sizes[si];
    const auto configs =
        sample_configurations({c.distribution, c.J, n, run.seed + 7919ULL * (si + 1), 1.0});
    const Eigen::VectorXd y = targets_of(c.target, configs);
    const bool cv = c.cv_folds >= 2 && n >= static_cast<std::size_t>(c.cv_folds);
    const auto nval = cv ? 0
                         : std::clamp<std::size_t>(
                               static_cast<std::size_t>(std::llround(c.validation_fraction * static_cast<double>(n))),
                               1, n - 1);
    const auto ntr = static_cast<Eigen::Index>(n - nval);
    std::vector<std::optional<Eigen::MatrixXd>> designs(3);
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
      const auto& m = models[mi];
      auto& D = designs[static_cast<std::size_t>(m.pipeline)];
      if (!D) D = real_features(*pipes[static_cast<std::size_t>(m.pipeline)], configs, run.threads);
      RegressionProblem prob;
      prob.design = D->topRows(ntr);
      prob.targets = y.head(ntr);
      prob.regularizer = regularizer_for(m);
      prob.lambdas = lambdas;
      auto fit = cv ? cross_validate_lambda(prob, c.cv_folds, run.threads, c.lambda_rule)
                    : grid_search_lambda(prob, D->bottomRows(static_cast<Eigen::Index>(nval)),
                                         y.tail(static_cast<Eigen::Index>(nval)), run.threads);
      cells.push_back({mi, si, n, static_cast<std::size_t>(ntr), std::move(fit)});
    }
  }

  // Held-out error on fresh samples, evaluated in fixed chunks.
  const auto test = sample_configurations({c.distribution, c.J, c.test_samples, run.seed + 104729ULL, 1.0});
  const Eigen::VectorXd ytest = targets_of(c.target, test);
  const std::size_t chunks = (test.size() + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> sse(chunks, std::vector<double>(cells.size(), 0.0)), mx = sse;
  parallel_for(chunks, run.threads, [&](std::size_t ch) {
    const std::size_t lo = ch * kChunk, hi = std::min(test.size(), lo + kChunk);
    const std::vector<Configuration> part(test.begin() + static_cast<std::ptrdiff_t>(lo),
                                          test.begin() + static_cast<std::ptrdiff_t>(hi));
    const Eigen::VectorXd yp = ytest.segment(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo));
    for (int p = 0; p < 3; ++p) {
      if (!pipes[static_cast<std::size_t>(p)]) continue;
      bool used = false;
      for (const auto& cell : cells) used = used || models[cell.model].pipeline == p;
      if (!used) continue;
      const Eigen::MatrixXd D = real_features(*pipes[static_cast<std::size_t>(p)], part, 1);
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (models[cells[k].model].pipeline != p) continue;
        const Eigen::VectorXd err = D * cells[k].fit.coefficients - yp;
        sse[ch][k] = err.squaredNorm();
        mx[ch][k] = err.cwiseAbs().maxCoeff();
      }
    }
  });

  ExperimentReport r;
  CsvTable curve{{"target", "family", "N", "J", "total_degree", "model", "basis", "prior", "columns", "samples",
                  "fit_samples", "lambda", "effective_rank", "train_rmse", "validation_rmse", "test_rmse",
                  "max_error"},
                 {}};
  std::map<std::string, double> final_rmse;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    double s = 0.0, m = 0.0;
    for (std::size_t ch = 0; ch < chunks; ++ch) {
      s += sse[ch][k];
      m = std::max(m, mx[ch][k]);
    }
    const double trmse = std::sqrt(s / static_cast<double>(test.size()));
    const auto& cell = cells[k];
    const auto& mod = models[cell.model];
    if (cell.size_index + 1 == sizes.size()) final_rmse[mod.name] = trmse;
    curve.add_row({c.target.label(), family_name(c.family), std::to_string(c.order), std::to_string(c.J),
                   std::to_string(c.total_degree), mod.name, mod.basis, mod.prior,
                   std::to_string(cell.fit.coefficients.size()), std::to_string(cell.samples),
                   std::to_string(cell.fit_size), format_double(cell.fit.lambda),
                   std::to_string(cell.fit.effective_rank), format_double(cell.fit.train_rmse),
                   format_double(cell.fit.validation_rmse.value_or(NAN)), format_double(trmse), format_double(m)});
  }

  // Profile along the diagonal x_j = t at the largest train size.
  CsvTable profile{{"t", "target"}, {}};
  std::vector<const Cell*> last;
  for (const auto& cell : cells)
    if (cell.size_index + 1 == sizes.size()) {
      last.push_back(&cell);
      profile.header.push_back(models[cell.model].name);
    }
  for (int i = 0; i < c.profile_points; ++i) {
    const double t = -1.0 + 2.0 * i / (c.profile_points - 1);
    const Configuration X(static_cast<std::size_t>(c.J), scalar_particle(t));
    std::vector<std::string> row{format_double(t), format_double(eval_target(c.target, X))};
    for (const auto* cell : last) {
      const auto& p = *pipes[static_cast<std::size_t>(models[cell->model].pipeline)];
      row.push_back(format_double(p.features(X).real().dot(cell->fit.coefficients)));
    }
    profile.add_row(std::move(row));
  }

  auto has = [&](const char* n) { return final_rmse.count(n) > 0; };
  if (c.target.kind == TargetFunction::Kind::runge) {
    if (has("canonical+smoothness") && has("self+identity"))
      r.check("canonical_smoothness_le_self_identity",
              final_rmse["canonical+smoothness"] <= final_rmse["self+identity"]);
    if (has("canonical+smoothness") && has("canonical+identity"))
      r.check("smoothness_le_identity_canonical",
              final_rmse["canonical+smoothness"] <= final_rmse["canonical+identity"]);
  } else if (has("canonical+smoothness") && has("self+smoothness")) {
    const double a = final_rmse["canonical+smoothness"], b = final_rmse["self+smoothness"];
    r.check("canonical_self_parity", std::max(a, b) <= c.parity_factor * std::min(a, b));
  }

  r.tables["learning_curve"] = std::move(curve);
  r.tables["radial_profile"] = std::move(profile);
  json target{{"kind", c.target.kind == TargetFunction::Kind::runge ? "runge" : "multiset"}, {"a", c.target.a}};
  if (c.target.kind == TargetFunction::Kind::multiset) {
    target["epsilon"] = c.target.epsilon;
    target["order"] = c.target.order;
  }
  finish(r, "fit",
         {{"family", family_name(c.family)},
          {"target", target},
          {"order", c.order},
          {"J", c.J},
          {"total_degree", c.total_degree},
          {"distribution", distribution_name(c.distribution)},
          {"train_factors", c.train_factors},
          {"validation_fraction", c.validation_fraction},
          {"cv_folds", c.cv_folds},
          {"lambda_rule", c.lambda_rule == LambdaRule::min ? "min" : "one_se"},
          {"test_samples", c.test_samples},
          {"models", c.models},
          {"lambda_count", c.lambda_count},
          {"lambda_min", c.lambda_min},
          {"lambda_max", c.lambda_max},
          {"profile_points", c.profile_points},
          {"parity_factor", c.parity_factor}},
         run, t0);
  r.metadata["basis_size"] = K.size();
  r.metadata["closed_basis_size"] = closed_size;
  r.metadata["final_test_rmse"] = final_rmse;
  r.metadata["max_error_estimator"] = "max absolute error over the held-out test samples";
  r.metadata["lambda_selection"] =
      c.cv_folds >= 2 ? "k-fold cross-validation over the lambda grid, then a refit on the whole training sample"
                      : "grid search on a held-out validation split of each training sample";
  return r;
}

// ---------------------------------------------------------------------------

ExperimentReport run_invariance_check(const InvarianceConfig& c, const RunOptions& run) {
  const auto t0 = Clock::now();
  ExperimentReport r;
  CsvTable table{{"group", "family", "basis", "invariants", "actions", "J", "max_residual", "passed"}, {}};
  ClosureOptions clo;
  clo.threads = run.threads;
  for (const SymmetryGroup g : {SymmetryGroup::O1, SymmetryGroup::SO2, SymmetryGroup::O3}) {
    BasisFamily f = make_family(FamilyKind::chebyshev, 1, 1.0, run.seed);
    IndexSet K;
    SymmetrizationOperator C;
    switch (g) {
      case SymmetryGroup::O1:
        f = make_family(FamilyKind::chebyshev, 4 * c.degree_O1, 1.0, run.seed);
        K = filter_parity_O1(f, generate_index_set(f, c.max_order, DegreeCaps::uniform(c.degree_O1), true));
        C = selection_operator(K, g);
        break;
      case SymmetryGroup::SO2:
        f = make_family(FamilyKind::trigonometric, 4 * c.degree_SO2, 1.0, run.seed);
        K = filter_rotation_SO2(f, generate_index_set(f, c.max_order, DegreeCaps::uniform(c.degree_SO2), true));
        C = selection_operator(K, g);
        break;
      case SymmetryGroup::O3: {
        f = make_family(FamilyKind::spherical, c.degree_O3, 1.0, run.seed);
        K = filter_O3(f, generate_index_set(f, c.max_order, DegreeCaps::uniform(c.degree_O3), true));
        CouplingOptions cop;
        cop.threads = run.threads;
        C = build_O3_coupling(K, run.seed, cop);
        break;
      }
    }
    const auto P = build_purification_operator(K, f, clo);
    const std::vector<std::pair<std::string, DesignPipeline>> bases = {
        {"canonical", DesignPipeline::invariant(f, fuse_symmetrization(C, P))},
        {"self", DesignPipeline::invariant(f, self_interacting_invariants(C))}};
    std::mt19937_64 rng(run.seed + 31ULL * (static_cast<std::uint64_t>(g) + 1));
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::bernoulli_distribution coin(0.5);
    std::vector<std::pair<Configuration, Configuration>> pairs;
    for (int a = 0; a < c.actions; ++a) {
      Configuration X(static_cast<std::size_t>(c.J));
      for (auto& x : X) x = sample_uniform_particle(f.domain(), rng);
      Configuration Y = X;
      std::shuffle(Y.begin(), Y.end(), rng);
      switch (g) {
        case SymmetryGroup::O1: {
          const double s = coin(rng) ? -1.0 : 1.0;
          for (auto& y : Y) y[0] *= s;
          break;
        }
        case SymmetryGroup::SO2: {
          const double th = angle(rng);
          for (auto& y : Y) y[0] += th;
          break;
        }
        case SymmetryGroup::O3: Y = transform_configuration(Y, random_rotation(rng, coin(rng))); break;
      }
      pairs.emplace_back(std::move(X), std::move(Y));
    }
    for (const auto& [name, pipe] : bases) {
      std::vector<double> res(pairs.size());
      parallel_for(pairs.size(), run.threads, [&](std::size_t i) {
        const Eigen::VectorXcd bx = pipe.features(pairs[i].first), by = pipe.features(pairs[i].second);
        res[i] = (by - bx).norm() / std::max(bx.norm(), 1e-300);
      });
      const double worst = *std::max_element(res.begin(), res.end());
      const bool ok = worst < c.tol;
      table.add_row({group_name(g), f.name(), name, std::to_string(pipe.columns()), std::to_string(c.actions),
                     std::to_string(c.J), format_double(worst), yes_no(ok)});
      r.check(group_name(g) + "_" + name, ok);
    }
  }
  r.tables["invariance"] = std::move(table);
  finish(r, "invariance-check",
         {{"actions", c.actions},
          {"J", c.J},
          {"tol", c.tol},
          {"degree_O1", c.degree_O1},
          {"degree_SO2", c.degree_SO2},
          {"degree_O3", c.degree_O3},
          {"max_order", c.max_order}},
         run, t0);
  return r;
}

// ---------------------------------------------------------------------------

ExperimentReport run_span_check(const SpanConfig& c, const RunOptions& run) {
  const auto t0 = Clock::now();
  const auto f = make_family(c.family, c.max_degree, c.r_cut, run.seed);
  const auto caps = make_caps(c.caps);
  const auto K = generate_index_set(f, c.max_order, caps, c.include_constant);
  const auto samples = static_cast<std::size_t>(std::ceil(c.sample_factor * static_cast<double>(K.size()))) +
                       c.extra_samples;
  SpanOptions so;
  so.threshold = c.threshold;
  so.threads = run.threads;
  const auto eq = check_span_equivalence(K, f, samples, run.seed, so);

  ExperimentReport r;
  CsvTable table{{"family", "caps", "max_order", "K", "K_closed", "extra", "samples", "canonical_rank", "self_rank",
                  "canonical_in_self", "self_in_canonical", "equal", "max_residual"},
                 {}};
  table.add_row({f.name(), caps.label(), std::to_string(c.max_order), std::to_string(K.size()),
                 std::to_string(eq.closure.closed_size), std::to_string(eq.closure.extra.size()),
                 std::to_string(samples), std::to_string(eq.canonical_rank), std::to_string(eq.self_rank),
                 yes_no(eq.canonical_in_self), yes_no(eq.self_in_canonical), yes_no(eq.equal),
                 format_double(eq.max_residual)});
  CsvTable extra{{"tuple"}, {}};
  for (const auto& t : eq.closure.extra) extra.add_row({tuple_label(t, f.is_spherical())});
  r.tables["span_check"] = std::move(table);
  r.tables["closure_extra"] = std::move(extra);
  if (c.expect) r.check("span_equality_as_expected", eq.equal == *c.expect);
  json cfg{{"family", f.name()},
           {"max_order", c.max_order},
           {"caps", c.caps},
           {"include_constant", c.include_constant},
           {"max_degree", c.max_degree},
           {"r_cut", c.r_cut},
           {"sample_factor", c.sample_factor},
           {"extra_samples", c.extra_samples},
           {"threshold", c.threshold}};
  if (c.expect) cfg["expect"] = *c.expect;
  finish(r, "span-check", std::move(cfg), run, t0);
  r.metadata["equal"] = eq.equal;
  return r;
}

}  // namespace canace
