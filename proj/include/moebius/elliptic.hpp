#pragma once

// Jacobi elliptic functions and the elliptic integrals needed by the
// geodesic construction. The second argument of every Jacobi function here
// is the MODULUS k (Lawden's convention), not the parameter m = k^2.

#include <cmath>
#include <stdexcept>

#include "moebius/jet.hpp"
#include "moebius/numerics.hpp"

namespace moebius {

struct EllipticModulus {
  double k;             // modulus in [0,1]
  double k_complement;  // sqrt(1 - k^2)

  explicit EllipticModulus(double modulus) : k(modulus) {
    detail::require(k >= 0.0 && k <= 1.0, "elliptic: modulus outside [0,1]");
    k_complement = std::sqrt((1.0 - k) * (1.0 + k));
  }
};

// Arithmetic-geometric mean.
inline double agm(double a, double b) {
  detail::require(a > 0.0 && b > 0.0, "agm: arguments must be positive");
  for (int i = 0; i < 60; ++i) {
    const double an = 0.5 * (a + b);
    const double bn = std::sqrt(a * b);
    a = an;
    b = bn;
    if (std::fabs(a - b) <= 4.0 * std::numeric_limits<double>::epsilon() * a) break;
  }
  return 0.5 * (a + b);
}

// Complete elliptic integral of the first kind, K(k) = pi / (2 agm(1, k')).
inline double complete_first_kind(const EllipticModulus& m) {
  detail::require(m.k < 1.0, "K(k): diverges at k = 1");
  return M_PI / (2.0 * agm(1.0, m.k_complement));
}

struct JacobiTriple {
  double sn, cn, dn;
};

// sn, cn, dn by the descending-Landen (AGM) scheme. Near k = 1 the scheme
// degenerates, so hyperbolic asymptotics take over (error O(k'^2)).
inline JacobiTriple jacobi_sn_cn_dn(double u, const EllipticModulus& m) {
  const double k = m.k;
  if (k < 1e-12) return {std::sin(u), std::cos(u), 1.0};
  if (m.k_complement < 1e-8) {
    const double sech = 1.0 / std::cosh(u);
    return {std::tanh(u), sech, sech};
  }
  double a[24], c[24];
  a[0] = 1.0;
  c[0] = k;
  double b = m.k_complement;
  int nlev = 0;
  for (int i = 1; i < 24; ++i) {
    a[i] = 0.5 * (a[i - 1] + b);
    c[i] = 0.5 * (a[i - 1] - b);
    b = std::sqrt(a[i - 1] * b);
    nlev = i;
    if (std::fabs(c[i]) <= std::numeric_limits<double>::epsilon() * a[i]) break;
  }
  double phi = std::ldexp(a[nlev] * u, nlev);
  for (int i = nlev; i >= 1; --i)
    phi = 0.5 * (phi + std::asin(std::clamp(c[i] * std::sin(phi) / a[i], -1.0, 1.0)));
  const double sn = std::sin(phi);
  const double cn = std::cos(phi);
  // dn is positive for real arguments, so the defining identity is stable
  const double dn = std::sqrt(std::max(0.0, 1.0 - k * k * sn * sn));
  return {sn, cn, dn};
}

inline double jacobi_sd(double u, const EllipticModulus& m) {
  const auto j = jacobi_sn_cn_dn(u, m);
  return j.sn / j.dn;
}

// Jet of (sn, cn, dn) at u: values from the AGM evaluator, higher Taylor
// coefficients from the defining ODE system
//   sn' = cn dn, cn' = -sn dn, dn' = -k^2 sn cn.
inline void jacobi_jets(const Jet& u, const EllipticModulus& m, Jet& sn, Jet& cn, Jet& dn) {
  const int nc = u.coeffs();
  const auto j0 = jacobi_sn_cn_dn(u.value(), m);
  Jet s(j0.sn, nc), c(j0.cn, nc), d(j0.dn, nc);
  const double k2 = m.k * m.k;
  // build in the local variable (u - u0), then compose with the u jet
  for (int order = 0; order + 1 < nc; ++order) {
    double cd = 0.0, sd = 0.0, sc = 0.0;
    for (int i = 0; i <= order; ++i) {
      cd += c[i] * d[order - i];
      sd += s[i] * d[order - i];
      sc += s[i] * c[order - i];
    }
    s.raw(order + 1) = cd / (order + 1);
    c.raw(order + 1) = -sd / (order + 1);
    d.raw(order + 1) = -k2 * sc / (order + 1);
  }
  // compose with w(t) = u(t) - u0 (Horner on jets)
  Jet w = u - u.value();
  auto compose = [&](const Jet& p) {
    Jet r(p[nc - 1], nc);
    for (int i = nc - 2; i >= 0; --i) r = r * w + p[i];
    return r;
  };
  sn = compose(s);
  cn = compose(c);
  dn = compose(d);
}

// Carlson symmetric integral R_F (for the incomplete integral of 1st kind).
inline double carlson_rf(double x, double y, double z) {
  double dx, dy, dz;
  do {
    const double sx = std::sqrt(x), sy = std::sqrt(y), sz = std::sqrt(z);
    const double lam = sx * (sy + sz) + sy * sz;
    x = 0.25 * (x + lam);
    y = 0.25 * (y + lam);
    z = 0.25 * (z + lam);
    const double mean = (x + y + z) / 3.0;
    dx = (mean - x) / mean;
    dy = (mean - y) / mean;
    dz = (mean - z) / mean;
  } while (std::max({std::fabs(dx), std::fabs(dy), std::fabs(dz)}) > 1e-10);
  const double e2 = dx * dy - dz * dz;
  const double e3 = dx * dy * dz;
  const double mean = (x + y + z) / 3.0;
  return (1.0 + (e2 * (e2 / 24.0 - e3 * 3.0 / 44.0 - 0.1) + e3 / 14.0)) / std::sqrt(mean);
}

// Legendre F(phi, k) via Carlson.
inline double incomplete_F(double phi, const EllipticModulus& m) {
  const double s = std::sin(phi), c = std::cos(phi);
  return s * carlson_rf(c * c, 1.0 - m.k * m.k * s * s, 1.0);
}

// Inverse of sd on [0, sd(K)]: u with sd(u, k) = y.
inline double jacobi_sd_inverse(double y, const EllipticModulus& m) {
  detail::require(y >= 0.0, "sd^{-1}: negative argument");
  const double sn = y / std::sqrt(1.0 + m.k * m.k * y * y);
  detail::require(sn <= 1.0, "sd^{-1}: argument beyond range");
  return incomplete_F(std::asin(std::min(sn, 1.0)), m);
}

// Lawden p.51:
//   int_0^x dt / (sqrt(b^2-t^2) sqrt(a^2+t^2))
//     = sd^{-1}[ x sqrt(a^2+b^2)/(ab), b/sqrt(a^2+b^2) ] / sqrt(a^2+b^2).
inline double incomplete_first_kind(double x, double a, double b) {
  detail::require(a > 0.0 && b > 0.0, "incomplete_first_kind: need a, b > 0");
  detail::require(x >= 0.0 && x <= b, "incomplete_first_kind: need 0 <= x <= b");
  const double c = std::sqrt(a * a + b * b);
  const EllipticModulus m(b / c);
  return jacobi_sd_inverse(x * c / (a * b), m) / c;
}

}  // namespace moebius
