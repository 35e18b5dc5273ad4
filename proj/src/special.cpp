#include "canace/special.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace canace {

void chebyshev_t(double x, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = x;
  for (std::size_t k = 2; k < out.size(); ++k) out[k] = 2.0 * x * out[k - 1] - out[k - 2];
}

void legendre_p(double x, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = x;
  for (std::size_t k = 1; k + 1 < out.size(); ++k) {
    const double kk = static_cast<double>(k);
    out[k + 1] = ((2.0 * kk + 1.0) * x * out[k] - kk * out[k - 1]) / (kk + 1.0);
  }
}

GaussRule gauss_legendre(int count) {
  if (count < 1) throw std::invalid_argument("gauss_legendre: count must be positive");
  // P_count(x) and P_{count-1}(x)
  auto eval = [count](double x, double& p_n, double& p_nm1) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= count; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    p_n = p1;
    p_nm1 = p0;
  };
  GaussRule rule;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  const int half = (count + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (count + 0.5));
    double pn = 0.0, pnm1 = 0.0, dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      eval(x, pn, pnm1);
      dp = count * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    eval(x, pn, pnm1);
    dp = count * (x * pn - pnm1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[count - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[count - 1 - i] = w;
  }
  return rule;
}

void spherical_harmonics(int lmax, const Vec3& dir, std::span<Complex> out) {
  if (static_cast<int>(out.size()) < sh_count(lmax))
    throw std::invalid_argument("spherical_harmonics: output too small");
  const double r = norm3(dir);
  double ct = 1.0, st = 0.0, phi = 0.0;
  if (r > 0.0) {
    ct = std::clamp(dir[2] / r, -1.0, 1.0);
    st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    phi = std::atan2(dir[1], dir[0]);
  }
  // Fully normalized associated Legendre functions, computed column by column in m.
  std::vector<double> p(static_cast<std::size_t>(lmax + 1));
  double pmm = std::sqrt(1.0 / (4.0 * kPi));
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st;
    p[m] = pmm;
    if (m + 1 <= lmax) p[m + 1] = std::sqrt(2.0 * m + 3.0) * ct * pmm;
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - static_cast<double>(m) * m) /
                                 (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      p[l] = a * (ct * p[l - 1] - b * p[l - 2]);
    }
    const Complex e = std::polar(1.0, m * phi);
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    for (int l = m; l <= lmax; ++l) {
      const Complex y = p[l] * e;
      out[sh_index(l, m)] = y;
      if (m > 0) out[sh_index(l, -m)] = sign * std::conj(y);
    }
  }
}

SphereRule sphere_quadrature(int degree) {
  const int ntheta = degree + 1;
  const int nphi = 2 * degree + 1;
  const GaussRule g = gauss_legendre(ntheta);
  SphereRule rule;
  rule.points.reserve(static_cast<std::size_t>(ntheta * nphi));
  rule.weights.reserve(static_cast<std::size_t>(ntheta * nphi));
  for (int i = 0; i < ntheta; ++i) {
    const double ct = g.nodes[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2.0 * kPi * (j + 0.5) / nphi;
      rule.points.push_back({st * std::cos(phi), st * std::sin(phi), ct});
      rule.weights.push_back(0.5 * g.weights[i] / nphi);
    }
  }
  return rule;
}

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

}  // namespace canace
