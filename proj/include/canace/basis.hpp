#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "canace/index.hpp"
#include "canace/special.hpp"

namespace canace {

/// A particle is a point in R^3; one-dimensional families read only the
/// first coordinate (x on [-1, 1], or the angle theta on the torus).
using Particle = Vec3;

inline Particle scalar_particle(double x) { return {x, 0.0, 0.0}; }

struct ParticleDomain {
  enum class Kind { interval, torus, ball };

  Kind kind = Kind::interval;
  double r_cut = 1.0;  // ball only

  static ParticleDomain interval() { return {Kind::interval, 1.0}; }
  static ParticleDomain torus() { return {Kind::torus, 1.0}; }
  static ParticleDomain ball(double r_cut) { return {Kind::ball, r_cut}; }

  [[nodiscard]] bool contains(const Particle& x) const;
  [[nodiscard]] std::string name() const;
};

/// Reduce an angle to (-pi, pi].
double reduce_angle(double theta);

/// Uniform draw from the domain: uniform x, uniform angle, or uniform in the ball volume.
Particle sample_uniform_particle(const ParticleDomain& domain, std::mt19937_64& rng);

enum class FamilyKind { monomial, chebyshev, legendre, trigonometric, spherical, spherical_envelope };
enum class LinearizationMode { analytic, least_squares };

std::string family_name(FamilyKind kind);
FamilyKind parse_family_kind(const std::string& name);

struct LinearizationTerm {
  OneParticleIndex index;
  double coeff = 0.0;
};

/// Sparse re-expansion phi_{k1} phi_{k2} = sum_kappa coeff * phi_kappa,
/// sorted by kappa.
using LinearizationRule = std::vector<LinearizationTerm>;

/// Coordinate map y(r) used by the enveloped radial basis.
enum class RadialTransform {
  unit,       // y = r / r_cut on [0, 1]; envelope vanishes at r = 0 and r = r_cut
  symmetric,  // y = 2 r / r_cut - 1 on [-1, 1]; envelope vanishes at r = r_cut / 2 and r = r_cut
};

struct FamilyOptions {
  /// Largest one-particle degree for which product rules are tabulated.
  int max_degree = 10;
  double r_cut = 1.0;
  std::optional<LinearizationMode> mode;  // family default when unset
  double prune_tol = 1e-12;
  std::uint64_t seed = 0;
  bool check_domain = true;
  RadialTransform transform = RadialTransform::unit;
};

struct LinearizationTables;

/// One-particle basis {phi_k} over a particle domain. Immutable after
/// construction; copies share the precomputed product tables.
class BasisFamily {
 public:
  static BasisFamily make(FamilyKind kind, const FamilyOptions& options = {});

  [[nodiscard]] FamilyKind kind() const { return kind_; }
  [[nodiscard]] const ParticleDomain& domain() const { return domain_; }
  [[nodiscard]] const FamilyOptions& options() const { return options_; }
  [[nodiscard]] int max_degree() const { return options_.max_degree; }
  [[nodiscard]] LinearizationMode mode() const { return mode_; }
  [[nodiscard]] std::string name() const { return family_name(kind_); }
  [[nodiscard]] bool is_spherical() const;
  [[nodiscard]] bool is_complex() const;
  /// Whether products satisfy deg(kappa) <= deg(k1) + deg(k2).
  [[nodiscard]] bool degree_preserving() const { return kind_ != FamilyKind::spherical_envelope; }
  /// Human-readable description of the orthogonality measure mu.
  [[nodiscard]] std::string measure() const;

  [[nodiscard]] bool valid(const OneParticleIndex& k) const;
  [[nodiscard]] double degree(const OneParticleIndex& k) const;
  /// Polynomial degree including the envelope factor (n + l + 4 for the enveloped family).
  [[nodiscard]] double effective_degree(const OneParticleIndex& k) const;

  [[nodiscard]] Complex eval(const OneParticleIndex& k, const Particle& x) const;
  /// Evaluates phi_k(x) for every k in `ks`, sharing recurrences.
  void eval_many(const Particle& x, std::span<const OneParticleIndex> ks, std::span<Complex> out) const;

  /// Exact (analytic) or tabulated least-squares product rule.
  [[nodiscard]] LinearizationRule linearize(const OneParticleIndex& k1, const OneParticleIndex& k2) const;

  /// All valid indices with degree <= max_deg in lexicographic order.
  [[nodiscard]] std::vector<OneParticleIndex> indices_up_to(double max_deg, bool include_constant) const;

  /// Radial factor R_n(r) (spherical families only).
  [[nodiscard]] double radial(int n, double r) const;
  /// Envelope y^2 (y - y_cut)^2 as a function of the transformed coordinate.
  [[nodiscard]] double envelope(double y) const;
  [[nodiscard]] double transform(double r) const;
  [[nodiscard]] double y_cut() const { return transform(options_.r_cut); }

 private:
  BasisFamily() = default;
  void check(const OneParticleIndex& k) const;
  void check_particle(const Particle& x) const;
  void radial_values(double r, int nmax, std::span<double> out) const;

  FamilyKind kind_ = FamilyKind::monomial;
  ParticleDomain domain_;
  FamilyOptions options_;
  LinearizationMode mode_ = LinearizationMode::analytic;
  std::shared_ptr<const LinearizationTables> tables_;
};

// Free-function forms of the basis operations.
Complex eval_one_particle(const BasisFamily& family, const OneParticleIndex& k, const Particle& x);
double degree_of(const BasisFamily& family, const OneParticleIndex& k);
LinearizationRule linearize_product(const BasisFamily& family, const OneParticleIndex& k1,
                                    const OneParticleIndex& k2);

/// Least-squares fit of sum_kappa c_kappa phi_kappa(x) ~ target(x) on a fixed
/// design. The factorization is computed once and reused for every target.
class LeastSquaresLinearizer {
 public:
  LeastSquaresLinearizer(Eigen::MatrixXcd design, double prune_tol);

  struct Solution {
    Eigen::VectorXcd coeffs;
    double residual = 0.0;  // ||design c - target|| / max(1, ||target||)
  };
  [[nodiscard]] Solution solve(const Eigen::VectorXcd& target) const;
  [[nodiscard]] Eigen::Index candidates() const { return design_.cols(); }

 private:
  Eigen::MatrixXcd design_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr_;
  double prune_tol_;
};

struct LsLinearization {
  LinearizationRule rule;
  double residual = 0.0;
};

/// Generic least-squares product linearization against an explicit candidate
/// set. Requires samples.size() >= 4 * candidates.size().
LsLinearization fit_linearization_ls(const BasisFamily& family, const OneParticleIndex& k1,
                                     const OneParticleIndex& k2,
                                     std::span<const OneParticleIndex> candidates,
                                     std::span<const Particle> samples);

/// Enveloped spherical family R_n(r) = f_env(y(r)) P_n(y(r)), f_env = y^2 (y - y_cut)^2.
BasisFamily make_radial_envelope_family(double r_cut, RadialTransform transform, int n_max);

/// Drops terms whose magnitude is below tol * max magnitude; merges duplicates.
LinearizationRule normalize_rule(LinearizationRule rule, double tol);

}  // namespace canace
