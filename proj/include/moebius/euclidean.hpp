#pragma once

// Euclidean Frenet apparatus of curves in R^n and the bridge formulas to the
// conformal invariants: the arclength-density relation
// ds = [(k')^2 + k^2 |Y|^2]^{1/4} ds_e, the mu_1 expression through the
// inverse density, and the total twist of closed space curves.

#include <vector>

#include <Eigen/Dense>

#include "moebius/jet.hpp"
#include "moebius/models.hpp"
#include "moebius/numerics.hpp"

namespace moebius {

struct EuclideanFrenetData {
  int n = 0;
  std::vector<double> ts;
  std::vector<double> se;        // Euclidean arclength
  std::vector<double> speed;     // ds_e/dt
  std::vector<Mat> frame;        // columns (F, E_1, ..., E_n)
  std::vector<double> k;         // curvature
  std::vector<std::vector<double>> taus;  // taus[j-2][i] = tau_j, j = 2..n-1
  std::vector<double> k_prime;   // dk/ds_e
  std::vector<double> Y_norm, Z_norm;
  std::vector<int> genericity;   // largest j with kappa_1..kappa_j all nonzero

  // jets kept for the conformal bridge (exact d/ds_e derivatives)
  std::vector<Jet> k_jets, tau2_jets, speed_jets;
};

namespace detail {

struct FrenetPoint {
  Jet speed;
  std::vector<JetVec> frame_cols;  // E_1..E_n as jets
  std::vector<Jet> kappa;          // kappa_1..kappa_{n-1}, last one signed
  int rank = 0;
};

// Gram-Schmidt on the derivative jets; the last frame vector is flipped if
// needed so the frame is positively oriented, which makes the last curvature
// the classical signed torsion.
inline FrenetPoint frenet_point(const Curve& c, double t, int coeffs, double tol) {
  const int n = c.sphere_dim();
  const JetVec x = c.jets(t, coeffs);
  FrenetPoint out;

  std::vector<JetVec> deriv(static_cast<std::size_t>(n));
  deriv[0] = JetVec(x.size());
  for (std::size_t q = 0; q < x.size(); ++q) deriv[0][q] = x[q].derivative_jet();
  for (int m = 1; m < n; ++m) {
    deriv[static_cast<std::size_t>(m)] = JetVec(x.size());
    for (std::size_t q = 0; q < x.size(); ++q)
      deriv[static_cast<std::size_t>(m)][q] = deriv[static_cast<std::size_t>(m - 1)][q].derivative_jet();
  }

  out.speed = sqrt(squared_norm(deriv[0]));
  require(out.speed.value() > 1e-13, "euclidean_frenet: not an immersion");

  std::vector<JetVec> u;
  for (int m = 0; m < n; ++m) {
    JetVec w = deriv[static_cast<std::size_t>(m)];
    for (const auto& prev : u) {
      const Jet proj = dot(w, prev);
      for (std::size_t q = 0; q < w.size(); ++q) w[q] = w[q] - proj * prev[q];
    }
    const Jet nrm2 = squared_norm(w);
    const double ref = squared_norm(deriv[static_cast<std::size_t>(m)]).value();
    if (nrm2.value() <= tol * tol * std::max(1.0, ref)) break;
    const Jet nrm = sqrt(nrm2);
    for (auto& wq : w) wq = wq / nrm;
    u.push_back(std::move(w));
  }
  out.rank = static_cast<int>(u.size());

  if (out.rank == n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = u[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)].value();
    if (m.determinant() < 0.0)
      for (auto& q : u.back()) q = -q;
  }
  // kappa_j = <E_j', E_{j+1}> / speed
  for (int j = 0; j + 1 < out.rank; ++j) {
    JetVec du(u[static_cast<std::size_t>(j)].size());
    for (std::size_t q = 0; q < du.size(); ++q)
      du[q] = u[static_cast<std::size_t>(j)][q].derivative_jet();
    out.kappa.push_back(dot(du, u[static_cast<std::size_t>(j + 1)]) / out.speed.truncated(du[0].coeffs()));
  }
  out.frame_cols = std::move(u);
  return out;
}

}  // namespace detail

inline EuclideanFrenetData euclidean_frenet(const Curve& c, const std::vector<double>& grid,
                                            double degeneracy_tol = 1e-8) {
  detail::require(c.ambient() == Ambient::Euclidean, "euclidean_frenet: need a curve in R^n");
  detail::require(!grid.empty(), "euclidean_frenet: empty grid");
  const int n = c.sphere_dim();
  const int coeffs = std::min(c.max_coeffs(), std::max(n + 3, 7));
  const std::size_t npts = grid.size();

  EuclideanFrenetData out;
  out.n = n;
  out.ts = grid;
  out.speed.resize(npts);
  out.frame.resize(npts);
  out.k.resize(npts);
  out.k_prime.resize(npts);
  out.Y_norm.resize(npts);
  out.Z_norm.resize(npts);
  out.genericity.resize(npts);
  out.k_jets.resize(npts);
  out.tau2_jets.resize(npts);
  out.speed_jets.resize(npts);
  out.taus.assign(static_cast<std::size_t>(std::max(0, n - 2)),
                  std::vector<double>(npts, std::numeric_limits<double>::quiet_NaN()));

  for (std::size_t i = 0; i < npts; ++i) {
    const auto fp = detail::frenet_point(c, grid[i], coeffs, degeneracy_tol);
    out.speed[i] = fp.speed.value();
    out.speed_jets[i] = fp.speed;
    Mat fr(n, fp.rank + 1);
    fr.col(0) = c.point(grid[i]);
    for (int j = 0; j < fp.rank; ++j)
      for (int q = 0; q < n; ++q)
        fr(q, j + 1) = fp.frame_cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(q)].value();
    out.frame[i] = fr;

    const Jet kj = fp.kappa.empty() ? Jet(0.0, Jet::kMaxCoeffs) : fp.kappa[0];
    out.k[i] = kj.value();
    out.k_jets[i] = kj;
    out.k_prime[i] = (kj.coeffs() > 1) ? kj.derivative_jet().value() / fp.speed.value() : 0.0;

    Jet tau2 = (n >= 3 && fp.kappa.size() >= 2) ? fp.kappa[1] : Jet(0.0, Jet::kMaxCoeffs);
    out.tau2_jets[i] = tau2;
    out.Y_norm[i] = (n >= 3) ? std::fabs(tau2.value()) : 0.0;
    const double kp = out.k_prime[i];
    out.Z_norm[i] = std::sqrt(kp * kp + out.k[i] * out.k[i] * out.Y_norm[i] * out.Y_norm[i]);

    for (int j = 2; j <= n - 1; ++j)
      if (static_cast<int>(fp.kappa.size()) >= j)
        out.taus[static_cast<std::size_t>(j - 2)][i] = fp.kappa[static_cast<std::size_t>(j - 1)].value();

    int g = 0;
    for (std::size_t j = 0; j < fp.kappa.size(); ++j) {
      if (std::fabs(fp.kappa[j].value()) >= degeneracy_tol) g = static_cast<int>(j) + 1;
      else break;
    }
    out.genericity[i] = g;
  }

  out.se = cumulative_integral(
      [&](double t) {
        const JetVec x = c.jets(t, 2);
        JetVec d1(x.size());
        for (std::size_t q = 0; q < x.size(); ++q) d1[q] = x[q].derivative_jet();
        return std::sqrt(squared_norm(d1).value());
      },
      grid, 1e-13);
  return out;
}

// ds/ds_e = [(k')^2 + k^2 |Y|^2]^{1/4}; zero exactly at vertexes.
inline std::vector<double> conformal_density(const EuclideanFrenetData& d) {
  std::vector<double> out(d.ts.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(d.Z_norm[i]);
  return out;
}

// mu_1 = (dr/ds_e)^2 / 2 - r^2 k^2 / 2 - r d^2r/ds_e^2 with
// r = [(k')^2 + k^2 tau_2^2]^{-1/4}. Derivatives are taken on the jets.
inline std::vector<double> mu1_from_euclidean(const EuclideanFrenetData& d) {
  std::vector<double> out(d.ts.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    detail::require(d.Z_norm[i] > 0.0, "mu1_from_euclidean: vertex in range");
    const Jet& k = d.k_jets[i];
    const Jet& tau2 = d.tau2_jets[i];
    const Jet& v = d.speed_jets[i];
    const Jet kp = k.derivative_jet() / v.truncated(k.coeffs() - 1);  // dk/ds_e
    const Jet z2 = kp * kp + k * k * tau2 * tau2;
    const Jet r = 1.0 / sqrt(sqrt(z2));
    const Jet r_se = r.derivative_jet() / v.truncated(r.coeffs() - 1);
    const Jet r_sese = r_se.derivative_jet() / v.truncated(r_se.coeffs() - 1);
    out[i] = 0.5 * r_se.value() * r_se.value() -
             0.5 * r.value() * r.value() * k.value() * k.value() -
             r.value() * r_sese.value();
  }
  return out;
}

// Total twist (1/2pi) oint tau ds_e mod 1, for closed curves in R^3.
inline double total_twist(const Curve& c, double quad_tol = 1e-10) {
  detail::require(c.ambient() == Ambient::Euclidean && c.sphere_dim() == 3,
                  "total_twist: need a closed curve in R^3");
  detail::require(c.closed(), "total_twist: curve must be closed");
  auto integrand = [&](double t) {
    const auto fp = detail::frenet_point(c, t, 5, 1e-10);
    detail::require(fp.rank >= 2 && std::fabs(fp.kappa[0].value()) > 1e-10,
                    "total_twist: curvature vanishes");
    const double tau = (fp.kappa.size() >= 2) ? fp.kappa[1].value() : 0.0;
    return tau * fp.speed.value();
  };
  const double tw = integrate_periodic(integrand, c.t_min(), c.t_max(), quad_tol) / (2.0 * M_PI);
  double frac = tw - std::floor(tw);
  if (frac < 0.0) frac += 1.0;
  if (frac >= 1.0) frac -= 1.0;
  return frac;
}

// Distance of a mod-1 value to the nearest integer.
inline double mod1_distance_to_integer(double frac) { return std::min(frac, 1.0 - frac); }

}  // namespace moebius
