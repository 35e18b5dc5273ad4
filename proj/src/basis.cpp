#include "canace/basis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace canace {

namespace {

constexpr double kDomainSlack = 1e-12;
constexpr double kTableResidualTol = 1e-8;
constexpr int kSamplesPerCandidate = 8;

using SparsePairs = std::vector<std::pair<int, double>>;

SparsePairs prune_pairs(const Eigen::VectorXcd& c, const std::vector<int>& ids, double tol,
                        const char* what) {
  double cmax = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) cmax = std::max(cmax, std::abs(c[i]));
  SparsePairs out;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (std::abs(c[i]) <= tol * cmax) continue;
    if (std::abs(c[i].imag()) > 1e-10 * std::max(1.0, cmax))
      throw std::runtime_error(std::string(what) + ": complex linearization coefficient");
    out.emplace_back(ids[static_cast<std::size_t>(i)], c[i].real());
  }
  return out;
}

}  // namespace

bool ParticleDomain::contains(const Particle& x) const {
  switch (kind) {
    case Kind::interval:
      return std::isfinite(x[0]) && std::abs(x[0]) <= 1.0 + kDomainSlack;
    case Kind::torus:
      return std::isfinite(x[0]);
    case Kind::ball:
      return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]) &&
             norm3(x) <= r_cut * (1.0 + kDomainSlack);
  }
  return false;
}

std::string ParticleDomain::name() const {
  switch (kind) {
    case Kind::interval: return "interval";
    case Kind::torus: return "torus";
    case Kind::ball: return "ball";
  }
  return "?";
}

double reduce_angle(double theta) {
  double t = std::remainder(theta, 2.0 * kPi);
  if (t <= -kPi) t += 2.0 * kPi;
  return t;
}

Particle sample_uniform_particle(const ParticleDomain& domain, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  switch (domain.kind) {
    case ParticleDomain::Kind::interval: return scalar_particle(u(rng));
    case ParticleDomain::Kind::torus: return scalar_particle(reduce_angle(kPi * u(rng)));
    case ParticleDomain::Kind::ball: {
      for (;;) {
        const Particle p{u(rng), u(rng), u(rng)};
        if (norm3(p) <= 1.0) return {p[0] * domain.r_cut, p[1] * domain.r_cut, p[2] * domain.r_cut};
      }
    }
  }
  return {};
}

std::string family_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::monomial: return "monomial";
    case FamilyKind::chebyshev: return "chebyshev";
    case FamilyKind::legendre: return "legendre";
    case FamilyKind::trigonometric: return "trigonometric";
    case FamilyKind::spherical: return "spherical";
    case FamilyKind::spherical_envelope: return "spherical_envelope";
  }
  return "?";
}

FamilyKind parse_family_kind(const std::string& name) {
  static const std::map<std::string, FamilyKind> names = {
      {"monomial", FamilyKind::monomial},
      {"chebyshev", FamilyKind::chebyshev},
      {"legendre", FamilyKind::legendre},
      {"trigonometric", FamilyKind::trigonometric},
      {"trig", FamilyKind::trigonometric},
      {"spherical", FamilyKind::spherical},
      {"spherical_envelope", FamilyKind::spherical_envelope},
  };
  auto it = names.find(name);
  if (it == names.end()) throw std::invalid_argument("unknown basis family '" + name + "'");
  return it->second;
}

LinearizationRule normalize_rule(LinearizationRule rule, double tol) {
  std::sort(rule.begin(), rule.end(),
            [](const LinearizationTerm& a, const LinearizationTerm& b) { return a.index < b.index; });
  LinearizationRule merged;
  for (const auto& t : rule) {
    if (!merged.empty() && merged.back().index == t.index)
      merged.back().coeff += t.coeff;
    else
      merged.push_back(t);
  }
  double cmax = 0.0;
  for (const auto& t : merged) cmax = std::max(cmax, std::abs(t.coeff));
  std::erase_if(merged, [&](const LinearizationTerm& t) { return std::abs(t.coeff) <= tol * cmax; });
  return merged;
}

// ---------------------------------------------------------------------------

LeastSquaresLinearizer::LeastSquaresLinearizer(Eigen::MatrixXcd design, double prune_tol)
    : design_(std::move(design)), qr_(design_), prune_tol_(prune_tol) {
  if (design_.rows() < design_.cols())
    throw std::invalid_argument("least-squares linearization: fewer samples than candidates");
  if (qr_.rank() < design_.cols())
    throw std::runtime_error("least-squares linearization: rank-deficient candidate design");
}

LeastSquaresLinearizer::Solution LeastSquaresLinearizer::solve(const Eigen::VectorXcd& target) const {
  Solution s;
  s.coeffs = qr_.solve(target);
  s.residual = (design_ * s.coeffs - target).norm() / std::max(1.0, target.norm());
  double cmax = s.coeffs.cwiseAbs().maxCoeff();
  for (auto& c : s.coeffs)
    if (std::abs(c) <= prune_tol_ * cmax) c = 0.0;
  return s;
}

// ---------------------------------------------------------------------------

struct LinearizationTables {
  // scalar families: rule for (k1, k2) at (k1 - kmin) * width + (k2 - kmin)
  int kmin = 0;
  int width = 0;
  std::vector<LinearizationRule> scalar;

  // spherical families: product of radial and angular re-expansions
  int nmax = 0;
  int lmax = 0;
  std::vector<SparsePairs> radial;   // (n1, n2) -> (nu, coeff)
  std::vector<SparsePairs> angular;  // (sh1, sh2) -> (sh_index(L, M), coeff)
};

namespace {

std::shared_ptr<LinearizationTables> scalar_tables(const BasisFamily& family) {
  const int D = family.max_degree();
  const bool torus = family.kind() == FamilyKind::trigonometric;
  auto t = std::make_shared<LinearizationTables>();
  t->kmin = torus ? -D : 0;
  t->width = torus ? 2 * D + 1 : D + 1;

  std::vector<OneParticleIndex> cands;
  for (int k = torus ? -2 * D : 0; k <= 2 * D; ++k) cands.push_back(OneParticleIndex::scalar(k));
  const int ns = kSamplesPerCandidate * static_cast<int>(cands.size());
  std::vector<Particle> samples;
  if (torus) {
    for (int i = 0; i < ns; ++i) samples.push_back(scalar_particle(-kPi + 2.0 * kPi * (i + 0.5) / ns));
  } else {
    for (double x : gauss_legendre(ns).nodes) samples.push_back(scalar_particle(x));
  }

  const auto nc = static_cast<Eigen::Index>(cands.size());
  Eigen::MatrixXcd design(ns, nc);
  std::vector<Complex> row(cands.size());
  for (int i = 0; i < ns; ++i) {
    family.eval_many(samples[i], cands, row);
    for (Eigen::Index j = 0; j < nc; ++j) design(i, j) = row[static_cast<std::size_t>(j)];
  }
  const LeastSquaresLinearizer ls(design, family.options().prune_tol);
  std::vector<int> ids;
  for (const auto& c : cands) ids.push_back(c.n);

  t->scalar.resize(static_cast<std::size_t>(t->width * t->width));
  for (int a = 0; a < t->width; ++a) {
    for (int b = a; b < t->width; ++b) {
      const Eigen::VectorXcd target =
          design.col(a + t->kmin - cands.front().n).cwiseProduct(design.col(b + t->kmin - cands.front().n));
      const auto sol = ls.solve(target);
      if (sol.residual > kTableResidualTol) {
        std::ostringstream os;
        os << family.name() << ": least-squares product rule (" << a + t->kmin << ", " << b + t->kmin
           << ") has residual " << sol.residual;
        throw std::runtime_error(os.str());
      }
      LinearizationRule rule;
      for (auto [k, c] : prune_pairs(sol.coeffs, ids, family.options().prune_tol, "linearize"))
        rule.push_back({OneParticleIndex::scalar(k), c});
      t->scalar[static_cast<std::size_t>(a * t->width + b)] = rule;
      t->scalar[static_cast<std::size_t>(b * t->width + a)] = rule;
    }
  }
  return t;
}

std::shared_ptr<LinearizationTables> spherical_tables(const BasisFamily& family) {
  auto t = std::make_shared<LinearizationTables>();
  const int D = family.max_degree();
  const double tol = family.options().prune_tol;
  t->nmax = D;
  t->lmax = D;

  // Radial factor: one shared design over all candidate radial degrees.
  {
    const int extra = family.kind() == FamilyKind::spherical_envelope ? 4 : 0;
    const int nc = 2 * D + extra + 1;
    const int ns = kSamplesPerCandidate * nc;
    const GaussRule g = gauss_legendre(ns);
    const double rc = family.options().r_cut;
    Eigen::MatrixXcd design(ns, nc);
    std::vector<double> vals(static_cast<std::size_t>(nc));
    for (int i = 0; i < ns; ++i) {
      const double r = 0.5 * rc * (g.nodes[i] + 1.0);
      for (int nu = 0; nu < nc; ++nu) design(i, nu) = family.radial(nu, r);
    }
    const LeastSquaresLinearizer ls(design, tol);
    std::vector<int> ids(static_cast<std::size_t>(nc));
    for (int nu = 0; nu < nc; ++nu) ids[static_cast<std::size_t>(nu)] = nu;
    t->radial.resize(static_cast<std::size_t>((D + 1) * (D + 1)));
    for (int a = 0; a <= D; ++a) {
      for (int b = a; b <= D; ++b) {
        const auto sol = ls.solve(design.col(a).cwiseProduct(design.col(b)));
        if (sol.residual > kTableResidualTol)
          throw std::runtime_error(family.name() + ": radial product rule residual too large");
        auto pairs = prune_pairs(sol.coeffs, ids, tol, "radial linearization");
        t->radial[static_cast<std::size_t>(a * (D + 1) + b)] = pairs;
        t->radial[static_cast<std::size_t>(b * (D + 1) + a)] = pairs;
      }
    }
  }

  // Angular factor: candidates Y_L^M with M = m1 + m2 and |M| <= L <= l1 + l2,
  // one factorization per (M, l1 + l2) group.
  struct Group {
    std::vector<Vec3> points;
    std::vector<int> ids;
    std::unique_ptr<LeastSquaresLinearizer> ls;
    std::vector<std::vector<Complex>> ylm;  // per point, all harmonics up to Lsum
  };
  const double s4pi = std::sqrt(4.0 * kPi);
  std::mt19937_64 rng(family.options().seed ^ 0x5eedA11CE5ULL);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::map<std::pair<int, int>, Group> groups;
  auto group_for = [&](int M, int lsum) -> Group& {
    auto [it, fresh] = groups.try_emplace({M, lsum});
    Group& g = it->second;
    if (!fresh) return g;
    for (int L = std::abs(M); L <= lsum; ++L) g.ids.push_back(sh_index(L, M));
    const int nc = static_cast<int>(g.ids.size());
    const int ns = std::max(32, kSamplesPerCandidate * nc);
    Eigen::MatrixXcd design(ns, nc);
    g.ylm.assign(static_cast<std::size_t>(ns), std::vector<Complex>(static_cast<std::size_t>(sh_count(lsum))));
    for (int i = 0; i < ns; ++i) {
      const double z = 2.0 * uni(rng) - 1.0;
      const double phi = 2.0 * kPi * uni(rng);
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      g.points.push_back({s * std::cos(phi), s * std::sin(phi), z});
      spherical_harmonics(lsum, g.points.back(), g.ylm[static_cast<std::size_t>(i)]);
      for (int j = 0; j < nc; ++j) design(i, j) = s4pi * g.ylm[static_cast<std::size_t>(i)][static_cast<std::size_t>(g.ids[static_cast<std::size_t>(j)])];
    }
    g.ls = std::make_unique<LeastSquaresLinearizer>(std::move(design), tol);
    return g;
  };

  const int S = sh_count(D);
  t->angular.resize(static_cast<std::size_t>(S * S));
  for (int l1 = 0; l1 <= D; ++l1) {
    for (int m1 = -l1; m1 <= l1; ++m1) {
      const int a = sh_index(l1, m1);
      for (int l2 = l1; l2 <= D; ++l2) {
        for (int m2 = -l2; m2 <= l2; ++m2) {
          const int b = sh_index(l2, m2);
          if (b < a) continue;
          Group& g = group_for(m1 + m2, l1 + l2);
          Eigen::VectorXcd target(static_cast<Eigen::Index>(g.points.size()));
          for (std::size_t i = 0; i < g.points.size(); ++i)
            target[static_cast<Eigen::Index>(i)] = 4.0 * kPi * g.ylm[i][static_cast<std::size_t>(a)] * g.ylm[i][static_cast<std::size_t>(b)];
          const auto sol = g.ls->solve(target);
          if (sol.residual > kTableResidualTol)
            throw std::runtime_error(family.name() + ": angular product rule residual too large");
          auto pairs = prune_pairs(sol.coeffs, g.ids, tol, "angular linearization");
          t->angular[static_cast<std::size_t>(a * S + b)] = pairs;
          t->angular[static_cast<std::size_t>(b * S + a)] = pairs;
        }
      }
    }
  }
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------

BasisFamily BasisFamily::make(FamilyKind kind, const FamilyOptions& options) {
  if (options.max_degree < 0) throw std::invalid_argument("basis family: max_degree must be >= 0");
  if (!(options.r_cut > 0.0)) throw std::invalid_argument("basis family: r_cut must be positive");
  if (!(options.prune_tol >= 0.0 && options.prune_tol < 1.0))
    throw std::invalid_argument("basis family: prune_tol must lie in [0, 1)");
  BasisFamily f;
  f.kind_ = kind;
  f.options_ = options;
  switch (kind) {
    case FamilyKind::monomial:
    case FamilyKind::chebyshev:
    case FamilyKind::legendre: f.domain_ = ParticleDomain::interval(); break;
    case FamilyKind::trigonometric: f.domain_ = ParticleDomain::torus(); break;
    case FamilyKind::spherical:
    case FamilyKind::spherical_envelope: f.domain_ = ParticleDomain::ball(options.r_cut); break;
  }
  const bool analytic_ok = kind == FamilyKind::monomial || kind == FamilyKind::chebyshev ||
                           kind == FamilyKind::trigonometric;
  f.mode_ = options.mode.value_or(analytic_ok ? LinearizationMode::analytic : LinearizationMode::least_squares);
  if (f.mode_ == LinearizationMode::analytic && !analytic_ok)
    throw std::invalid_argument(family_name(kind) + ": no analytic product rule; use least_squares");

  if (f.mode_ == LinearizationMode::least_squares) {
    if (f.is_spherical())
      f.tables_ = spherical_tables(f);
    else
      f.tables_ = scalar_tables(f);
  }
  return f;
}

bool BasisFamily::is_spherical() const {
  return kind_ == FamilyKind::spherical || kind_ == FamilyKind::spherical_envelope;
}

bool BasisFamily::is_complex() const { return kind_ == FamilyKind::trigonometric || is_spherical(); }

std::string BasisFamily::measure() const {
  switch (kind_) {
    case FamilyKind::monomial:
    case FamilyKind::legendre: return "uniform on [-1, 1]";
    case FamilyKind::chebyshev: return "arcsine (1 - x^2)^(-1/2) / pi on [-1, 1]";
    case FamilyKind::trigonometric: return "uniform on the torus";
    case FamilyKind::spherical:
    case FamilyKind::spherical_envelope: return "uniform radius on [0, r_cut] times uniform direction";
  }
  return "?";
}

bool BasisFamily::valid(const OneParticleIndex& k) const {
  if (is_spherical()) return k.n >= 0 && k.l >= 0 && std::abs(k.m) <= k.l;
  if (k.l != 0 || k.m != 0) return false;
  return kind_ == FamilyKind::trigonometric || k.n >= 0;
}

void BasisFamily::check(const OneParticleIndex& k) const {
  if (!valid(k)) {
    std::ostringstream os;
    os << name() << ": invalid one-particle index (" << k.n << ", " << k.l << ", " << k.m << ")";
    throw std::invalid_argument(os.str());
  }
}

void BasisFamily::check_particle(const Particle& x) const {
  if (options_.check_domain && !domain_.contains(x)) {
    std::ostringstream os;
    os << name() << ": particle (" << x[0] << ", " << x[1] << ", " << x[2] << ") outside the "
       << domain_.name() << " domain";
    throw std::domain_error(os.str());
  }
}

double BasisFamily::degree(const OneParticleIndex& k) const {
  check(k);
  if (is_spherical()) return k.n + k.l;
  return std::abs(k.n);
}

double BasisFamily::effective_degree(const OneParticleIndex& k) const {
  return degree(k) + (kind_ == FamilyKind::spherical_envelope ? 4.0 : 0.0);
}

double BasisFamily::transform(double r) const {
  const double rc = options_.r_cut;
  return options_.transform == RadialTransform::unit ? r / rc : 2.0 * r / rc - 1.0;
}

double BasisFamily::envelope(double y) const {
  const double d = y - y_cut();
  return y * y * d * d;
}

void BasisFamily::radial_values(double r, int nmax, std::span<double> out) const {
  if (kind_ == FamilyKind::spherical) {
    legendre_p(2.0 * r / options_.r_cut - 1.0, out.first(static_cast<std::size_t>(nmax + 1)));
    for (int n = 0; n <= nmax; ++n) out[static_cast<std::size_t>(n)] *= std::sqrt(2.0 * n + 1.0);
    return;
  }
  const double y = transform(r);
  const double arg = options_.transform == RadialTransform::unit ? 2.0 * y - 1.0 : y;
  legendre_p(arg, out.first(static_cast<std::size_t>(nmax + 1)));
  const double f = envelope(y);
  for (int n = 0; n <= nmax; ++n) out[static_cast<std::size_t>(n)] *= f;
}

double BasisFamily::radial(int n, double r) const {
  if (!is_spherical()) throw std::logic_error(name() + ": no radial factor");
  if (n < 0) throw std::invalid_argument("radial: negative degree");
  std::vector<double> v(static_cast<std::size_t>(n + 1));
  radial_values(r, n, v);
  return v.back();
}

Complex BasisFamily::eval(const OneParticleIndex& k, const Particle& x) const {
  Complex out;
  eval_many(x, std::span<const OneParticleIndex>(&k, 1), std::span<Complex>(&out, 1));
  return out;
}

void BasisFamily::eval_many(const Particle& x, std::span<const OneParticleIndex> ks,
                            std::span<Complex> out) const {
  if (out.size() < ks.size()) throw std::invalid_argument("eval_many: output too small");
  check_particle(x);
  if (ks.empty()) return;
  for (const auto& k : ks) check(k);

  if (is_spherical()) {
    int nmax = 0, lmax = 0;
    for (const auto& k : ks) {
      nmax = std::max(nmax, k.n);
      lmax = std::max(lmax, k.l);
    }
    std::vector<double> rad(static_cast<std::size_t>(nmax + 1));
    std::vector<Complex> ylm(static_cast<std::size_t>(sh_count(lmax)));
    radial_values(norm3(x), nmax, rad);
    spherical_harmonics(lmax, x, ylm);
    const double s4pi = std::sqrt(4.0 * kPi);
    for (std::size_t i = 0; i < ks.size(); ++i)
      out[i] = rad[static_cast<std::size_t>(ks[i].n)] * s4pi * ylm[static_cast<std::size_t>(sh_index(ks[i].l, ks[i].m))];
    return;
  }

  if (kind_ == FamilyKind::trigonometric) {
    for (std::size_t i = 0; i < ks.size(); ++i) out[i] = std::polar(1.0, ks[i].n * x[0]);
    return;
  }

  int kmax = 0;
  for (const auto& k : ks) kmax = std::max(kmax, k.n);
  std::vector<double> v(static_cast<std::size_t>(kmax + 1));
  switch (kind_) {
    case FamilyKind::monomial:
      v[0] = 1.0;
      for (int k = 1; k <= kmax; ++k) v[static_cast<std::size_t>(k)] = v[static_cast<std::size_t>(k - 1)] * x[0];
      break;
    case FamilyKind::chebyshev: chebyshev_t(x[0], v); break;
    default: legendre_p(x[0], v); break;
  }
  for (std::size_t i = 0; i < ks.size(); ++i) out[i] = v[static_cast<std::size_t>(ks[i].n)];
}

LinearizationRule BasisFamily::linearize(const OneParticleIndex& k1, const OneParticleIndex& k2) const {
  check(k1);
  check(k2);
  const double tol = options_.prune_tol;
  if (mode_ == LinearizationMode::analytic) {
    const auto sk = [](int k) { return OneParticleIndex::scalar(k); };
    switch (kind_) {
      case FamilyKind::monomial:
      case FamilyKind::trigonometric: return {{sk(k1.n + k2.n), 1.0}};
      case FamilyKind::chebyshev:
        return normalize_rule({{sk(k1.n + k2.n), 0.5}, {sk(std::abs(k1.n - k2.n)), 0.5}}, tol);
      default: break;
    }
    throw std::logic_error("analytic linearization unavailable");
  }

  const auto out_of_range = [&]() {
    std::ostringstream os;
    os << name() << ": product rule requested beyond the tabulated degree " << max_degree()
       << "; increase max_degree";
    return std::out_of_range(os.str());
  };
  const auto& t = *tables_;
  if (!is_spherical()) {
    const int a = k1.n - t.kmin, b = k2.n - t.kmin;
    if (a < 0 || b < 0 || a >= t.width || b >= t.width) throw out_of_range();
    return t.scalar[static_cast<std::size_t>(a * t.width + b)];
  }
  if (k1.n > t.nmax || k2.n > t.nmax || k1.l > t.lmax || k2.l > t.lmax) throw out_of_range();
  const auto& rad = t.radial[static_cast<std::size_t>(k1.n * (t.nmax + 1) + k2.n)];
  const int S = sh_count(t.lmax);
  const auto& ang = t.angular[static_cast<std::size_t>(sh_index(k1.l, k1.m) * S + sh_index(k2.l, k2.m))];
  LinearizationRule rule;
  rule.reserve(rad.size() * ang.size());
  for (auto [nu, cr] : rad) {
    for (auto [lm, ca] : ang) {
      const int L = static_cast<int>(std::sqrt(static_cast<double>(lm)) + 1e-9);
      rule.push_back({OneParticleIndex::nlm(nu, L, lm - L * L - L), cr * ca});
    }
  }
  return normalize_rule(std::move(rule), tol);
}

std::vector<OneParticleIndex> BasisFamily::indices_up_to(double max_deg, bool include_constant) const {
  std::vector<OneParticleIndex> out;
  const int D = static_cast<int>(std::floor(max_deg + 1e-9));
  // The enveloped family has no constant function, so (0, 0, 0) is always kept.
  const bool drop_zero = !include_constant && kind_ != FamilyKind::spherical_envelope;
  if (is_spherical()) {
    for (int n = 0; n <= D; ++n)
      for (int l = 0; n + l <= D; ++l)
        for (int m = -l; m <= l; ++m)
          if (!(drop_zero && n == 0 && l == 0)) out.push_back(OneParticleIndex::nlm(n, l, m));
  } else {
    const int lo = kind_ == FamilyKind::trigonometric ? -D : 0;
    for (int k = lo; k <= D; ++k)
      if (!(drop_zero && k == 0)) out.push_back(OneParticleIndex::scalar(k));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

Complex eval_one_particle(const BasisFamily& family, const OneParticleIndex& k, const Particle& x) {
  return family.eval(k, x);
}

double degree_of(const BasisFamily& family, const OneParticleIndex& k) { return family.degree(k); }

LinearizationRule linearize_product(const BasisFamily& family, const OneParticleIndex& k1,
                                    const OneParticleIndex& k2) {
  return family.linearize(k1, k2);
}

LsLinearization fit_linearization_ls(const BasisFamily& family, const OneParticleIndex& k1,
                                     const OneParticleIndex& k2,
                                     std::span<const OneParticleIndex> candidates,
                                     std::span<const Particle> samples) {
  if (candidates.empty()) throw std::invalid_argument("fit_linearization_ls: empty candidate set");
  if (samples.size() < 4 * candidates.size())
    throw std::invalid_argument("fit_linearization_ls: need at least 4 samples per candidate");
  const auto ns = static_cast<Eigen::Index>(samples.size());
  const auto nc = static_cast<Eigen::Index>(candidates.size());
  Eigen::MatrixXcd design(ns, nc);
  Eigen::VectorXcd target(ns);
  std::vector<Complex> row(candidates.size());
  for (Eigen::Index i = 0; i < ns; ++i) {
    family.eval_many(samples[static_cast<std::size_t>(i)], candidates, row);
    for (Eigen::Index j = 0; j < nc; ++j) design(i, j) = row[static_cast<std::size_t>(j)];
    target[i] = family.eval(k1, samples[static_cast<std::size_t>(i)]) *
                family.eval(k2, samples[static_cast<std::size_t>(i)]);
  }
  const LeastSquaresLinearizer ls(design, family.options().prune_tol);
  const auto sol = ls.solve(target);
  LsLinearization out;
  out.residual = sol.residual;
  double cmax = 0.0;
  for (auto c : sol.coeffs) cmax = std::max(cmax, std::abs(c));
  for (Eigen::Index j = 0; j < nc; ++j) {
    const Complex c = sol.coeffs[j];
    if (std::abs(c) == 0.0) continue;
    if (std::abs(c.imag()) > 1e-10 * std::max(1.0, cmax))
      throw std::runtime_error("fit_linearization_ls: complex coefficient");
    out.rule.push_back({candidates[static_cast<std::size_t>(j)], c.real()});
  }
  out.rule = normalize_rule(std::move(out.rule), 0.0);
  return out;
}

BasisFamily make_radial_envelope_family(double r_cut, RadialTransform transform, int n_max) {
  FamilyOptions o;
  o.r_cut = r_cut;
  o.transform = transform;
  o.max_degree = n_max;
  return BasisFamily::make(FamilyKind::spherical_envelope, o);
}

}  // namespace canace
