#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "canace/experiments.hpp"
#include "canace/symmetry.hpp"

namespace py = pybind11;
using namespace canace;

namespace {

// Rows of X are particles: shape (J,) for scalar families, (J, 3) for spherical ones.
Configuration to_configuration(const Eigen::MatrixXd& X) {
  if (X.cols() != 1 && X.cols() != 3) throw std::invalid_argument("configuration must have 1 or 3 columns");
  Configuration out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index j = 0; j < X.rows(); ++j)
    for (Eigen::Index d = 0; d < X.cols(); ++d) out[j][d] = X(j, d);
  return out;
}

std::vector<Configuration> to_configurations(const std::vector<Eigen::MatrixXd>& Xs) {
  std::vector<Configuration> out;
  out.reserve(Xs.size());
  for (const auto& X : Xs) out.push_back(to_configuration(X));
  return out;
}

OneParticleIndex to_index(const std::vector<int>& k) {
  if (k.size() == 1) return OneParticleIndex::scalar(k[0]);
  if (k.size() == 3) return OneParticleIndex::nlm(k[0], k[1], k[2]);
  throw std::invalid_argument("index must be (n,) or (n, l, m)");
}

DegreeCaps to_caps(const std::vector<double>& caps) {
  if (caps.empty()) throw std::invalid_argument("caps must not be empty");
  return caps.size() == 1 ? DegreeCaps::uniform(caps[0]) : DegreeCaps::per_order(caps);
}

Regularizer to_regularizer(const std::optional<Eigen::MatrixXd>& gamma, Eigen::Index n) {
  if (!gamma) return Regularizer::identity(n);
  if (gamma->cols() == 1 && n != 1) return Regularizer::diagonal(gamma->col(0));
  return Regularizer::matrix(*gamma);
}

py::dict fit_dict(const FitResult& f) {
  py::dict d;
  d["coefficients"] = f.coefficients;
  d["solver"] = f.solver;
  d["lambda"] = f.lambda;
  d["rtol"] = f.rtol;
  d["train_rmse"] = f.train_rmse;
  d["validation_rmse"] = f.validation_rmse;
  d["effective_rank"] = f.effective_rank;
  return d;
}

py::tuple report_tuple(const ExperimentReport& r) {
  py::dict tables;
  for (const auto& [name, t] : r.tables) tables[py::str(name)] = py::make_tuple(t.header, t.rows);
  return py::make_tuple(r.metadata.dump(), tables, r.passed);
}

template <class Config, class Parse, class Run>
py::tuple run_json(Parse parse, Run run, const std::string& config, std::uint64_t seed, int threads) {
  nlohmann::json j;
  try {
    j = config.empty() ? nlohmann::json() : nlohmann::json::parse(config);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(e.what());
  }
  const Config c = parse(j);
  ExperimentReport r;
  {
    py::gil_scoped_release release;
    r = run(c, RunOptions{seed, threads});
  }
  return report_tuple(r);
}

}  // namespace

PYBIND11_MODULE(_canace, m) {
  m.doc() = "Canonical cluster expansions: bases, purification, symmetrization and regression";

  py::class_<BasisFamily>(m, "Family")
      .def(py::init([](const std::string& kind, int max_degree, double r_cut, std::uint64_t seed) {
             FamilyOptions o;
             o.max_degree = max_degree;
             o.r_cut = r_cut;
             o.seed = seed;
             return BasisFamily::make(parse_family_kind(kind), o);
           }),
           py::arg("kind"), py::arg("max_degree") = 10, py::arg("r_cut") = 1.0, py::arg("seed") = 0)
      .def_property_readonly("name", &BasisFamily::name)
      .def_property_readonly("max_degree", &BasisFamily::max_degree)
      .def_property_readonly("measure", &BasisFamily::measure)
      .def_property_readonly("spherical", &BasisFamily::is_spherical)
      .def(
          "eval",
          [](const BasisFamily& f, const std::vector<int>& k, const Eigen::VectorXd& x) {
            if (x.size() != 1 && x.size() != 3) throw std::invalid_argument("particle must have 1 or 3 coordinates");
            Particle p{};
            for (Eigen::Index d = 0; d < x.size(); ++d) p[d] = x[d];
            return f.eval(to_index(k), p);
          },
          py::arg("index"), py::arg("x"))
      .def(
          "linearize",
          [](const BasisFamily& f, const std::vector<int>& k1, const std::vector<int>& k2) {
            std::vector<std::pair<std::vector<int>, double>> out;
            for (const auto& t : f.linearize(to_index(k1), to_index(k2))) {
              std::vector<int> idx = f.is_spherical() ? std::vector<int>{t.index.n, t.index.l, t.index.m}
                                                      : std::vector<int>{t.index.n};
              out.emplace_back(std::move(idx), t.coeff);
            }
            return out;
          },
          py::arg("k1"), py::arg("k2"));

  py::class_<IndexSet>(m, "IndexSet")
      .def("__len__", &IndexSet::size)
      .def("labels", &IndexSet::labels)
      .def("degree", &IndexSet::degree)
      .def("of_order", &IndexSet::of_order)
      .def_property_readonly("max_order", &IndexSet::max_order);

  m.def(
      "generate_index_set",
      [](const BasisFamily& f, int max_order, const std::vector<double>& caps, bool include_constant) {
        return generate_index_set(f, max_order, to_caps(caps), include_constant);
      },
      py::arg("family"), py::arg("max_order"), py::arg("caps"), py::arg("include_constant") = false);
  m.def(
      "close_index_set", [](const IndexSet& K, const BasisFamily& f) { return close_index_set(K, f).first; },
      py::arg("K"), py::arg("family"));
  m.def(
      "filter_invariant",
      [](const IndexSet& K, const BasisFamily& f) {
        switch (f.kind()) {
          case FamilyKind::trigonometric:
            return filter_rotation_SO2(f, K);
          case FamilyKind::spherical:
          case FamilyKind::spherical_envelope:
            return filter_O3(f, K);
          default:
            return filter_parity_O1(f, K);
        }
      },
      py::arg("K"), py::arg("family"));

  py::class_<PurificationOperator>(m, "PurificationOperator")
      .def_property_readonly("rows", &PurificationOperator::rows)
      .def_property_readonly("cols", &PurificationOperator::cols)
      .def_property_readonly("nnz", &PurificationOperator::nnz)
      .def_property_readonly("square", &PurificationOperator::square)
      .def("to_dense", [](const PurificationOperator& P) { return Eigen::MatrixXd(P.matrix()); })
      .def("apply", &PurificationOperator::apply, py::arg("A"))
      .def("sparsity", [](const PurificationOperator& P, const BasisFamily& f) {
        const auto s = sparsity_report(P, f);
        py::dict d;
        d["nnz"] = s.nnz;
        d["density"] = s.density;
        d["order_triangular"] = s.order_triangular;
        d["degree_triangular"] = s.degree_triangular;
        d["unit_diagonal"] = s.unit_diagonal;
        d["bound_holds"] = s.bound_holds;
        py::list orders;
        for (const auto& o : s.orders) {
          py::dict od;
          od["order"] = o.order;
          od["rows"] = o.rows;
          od["max_nnz"] = o.max_nnz;
          od["bound"] = o.bound;
          orders.append(od);
        }
        d["orders"] = orders;
        return d;
      });

  m.def(
      "build_purification_operator",
      [](const IndexSet& K, const BasisFamily& f) {
        py::gil_scoped_release release;
        return build_purification_operator(K, f);
      },
      py::arg("K"), py::arg("family"));

  m.def(
      "self_interacting",
      [](const BasisFamily& f, const IndexSet& K, const Eigen::MatrixXd& X) {
        return SelfInteractingEvaluator(f, K).evaluate(to_configuration(X));
      },
      py::arg("family"), py::arg("K"), py::arg("X"));
  m.def(
      "brute_force_canonical",
      [](const BasisFamily& f, const IndexSet& K, const Eigen::MatrixXd& X) {
        return brute_force_canonical(f, K, to_configuration(X));
      },
      py::arg("family"), py::arg("K"), py::arg("X"));

  m.def(
      "canonical_design",
      [](const BasisFamily& f, const PurificationOperator& P, const std::vector<Eigen::MatrixXd>& Xs, int threads) {
        const auto configs = to_configurations(Xs);
        py::gil_scoped_release release;
        return assemble_design(DesignPipeline::canonical(f, P), configs, threads);
      },
      py::arg("family"), py::arg("P"), py::arg("configs"), py::arg("threads") = 1);
  m.def(
      "self_design",
      [](const BasisFamily& f, const IndexSet& K, const std::vector<Eigen::MatrixXd>& Xs, int threads) {
        const auto configs = to_configurations(Xs);
        py::gil_scoped_release release;
        return assemble_design(DesignPipeline::self_interacting(f, K), configs, threads);
      },
      py::arg("family"), py::arg("K"), py::arg("configs"), py::arg("threads") = 1);

  m.def(
      "tikhonov_solve",
      [](const Eigen::MatrixXd& design, const Eigen::VectorXd& y, double lambda,
         const std::optional<Eigen::MatrixXd>& gamma) {
        RegressionProblem p{design, y, to_regularizer(gamma, design.cols()), {}, Solver::tikhonov};
        return fit_dict(tikhonov_solve(p, lambda));
      },
      py::arg("design"), py::arg("y"), py::arg("lam"), py::arg("gamma") = py::none());
  m.def(
      "tsvd_solve",
      [](const Eigen::MatrixXd& design, const Eigen::VectorXd& y, double rtol,
         const std::optional<Eigen::MatrixXd>& gamma) {
        RegressionProblem p{design, y, to_regularizer(gamma, design.cols()), {}, Solver::scaled_tsvd};
        return fit_dict(scaled_tsvd_solve(p, rtol));
      },
      py::arg("design"), py::arg("y"), py::arg("rtol"), py::arg("gamma") = py::none());
  m.def(
      "cross_validate",
      [](const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const std::vector<double>& lambdas, int folds,
         const std::string& rule, const std::optional<Eigen::MatrixXd>& gamma) {
        if (rule != "min" && rule != "one_se") throw std::invalid_argument("rule must be min or one_se");
        RegressionProblem p{design, y, to_regularizer(gamma, design.cols()), lambdas, Solver::tikhonov};
        return fit_dict(cross_validate_lambda(p, folds, 1, rule == "min" ? LambdaRule::min : LambdaRule::one_se));
      },
      py::arg("design"), py::arg("y"), py::arg("lambdas"), py::arg("folds") = 5, py::arg("rule") = "one_se",
      py::arg("gamma") = py::none());
  m.def("purification_prior", [](const PurificationOperator& P) { return purification_prior(P).dense(); },
        py::arg("P"));
  m.def(
      "smoothness_prior",
      [](const IndexSet& K, const BasisFamily& f) { return Eigen::VectorXd(smoothness_prior(K, f).diag()); },
      py::arg("K"), py::arg("family"));

  m.def(
      "_run_experiment",
      [](const std::string& name, const std::string& config, std::uint64_t seed, int threads) {
        if (name == "purify-info")
          return run_json<PurifyInfoConfig>(parse_purify_info_config, run_purify_info, config, seed, threads);
        if (name == "cond")
          return run_json<ConditionConfig>(parse_condition_config, run_condition_experiment, config, seed, threads);
        if (name == "decay")
          return run_json<DecayConfig>(parse_decay_config, run_decay_experiment, config, seed, threads);
        if (name == "fit")
          return run_json<FitConfig>(parse_fit_config, run_regression_experiment, config, seed, threads);
        if (name == "invariance-check")
          return run_json<InvarianceConfig>(parse_invariance_config, run_invariance_check, config, seed, threads);
        if (name == "span-check")
          return run_json<SpanConfig>(parse_span_config, run_span_check, config, seed, threads);
        throw std::invalid_argument("unknown experiment '" + name + "'");
      },
      py::arg("name"), py::arg("config") = "", py::arg("seed") = 42, py::arg("threads") = 1);
}
