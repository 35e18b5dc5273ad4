#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

namespace canace {

using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;

inline constexpr double kPi = 3.14159265358979323846;

// Three-term recurrences; `out` must have size >= max_degree + 1.
void chebyshev_t(double x, std::span<double> out);
void legendre_p(double x, std::span<double> out);

/// Gauss-Legendre nodes and weights on [-1, 1] (weights sum to 2).
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_legendre(int count);

/// Orthonormal complex spherical harmonics (Condon-Shortley phase) for all
/// 0 <= l <= lmax, |m| <= l at the unit direction `dir`. Layout: index l*l + l + m.
/// Normalized against the surface measure (integral over S^2 of |Y|^2 = 1).
void spherical_harmonics(int lmax, const Vec3& dir, std::span<Complex> out);
inline int sh_index(int l, int m) { return l * l + l + m; }
inline int sh_count(int lmax) { return (lmax + 1) * (lmax + 1); }

/// Product quadrature on S^2 against the normalized uniform measure
/// (weights sum to 1), exact for spherical harmonics of degree <= 2*degree.
struct SphereRule {
  std::vector<Vec3> points;
  std::vector<double> weights;
};
SphereRule sphere_quadrature(int degree);

double norm3(const Vec3& v);

}  // namespace canace
