#pragma once

// Conformal geodesics: first integrals and admissible triples, the elliptic
// closed form for the curvatures, the Lax pair and its conserved matrix, the
// explicit light-like geodesics in Q_4, Euler-Lagrange residuals, and the
// codimension-reduction verification.
//
// Conventions fixed here (see README): the sd argument of the curvature
// closed form is s*sqrt(xi2 - xi_minus), which is the unique scaling that
// satisfies the energy law (d(mu2^2)/ds)^2 = 4 P(mu2^2); the tau_1 phase of
// the explicit solution is taken with positive denominator mu2^2 - tau_1^2,
// which selects the representative with mu_3 = +C2/mu2^2 > 0 under the
// orientation conventions of the frame reduction.

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "moebius/conformal.hpp"
#include "moebius/elliptic.hpp"
#include "moebius/jet.hpp"
#include "moebius/lorentz.hpp"
#include "moebius/models.hpp"
#include "moebius/numerics.hpp"

namespace moebius {

// ---------------------------------------------------------------------------
// Admissible triples and the cubic P(t) = -t^3 + 2 C1 t^2 + C3 t - C2^2.

struct AdmissibleTriple {
  double C1 = 0.0, C2 = 0.0, C3 = 0.0;
  double xi_minus = 0.0, xi1 = 0.0, xi2 = 0.0;

  double P(double t) const { return -t * t * t + 2.0 * C1 * t * t + C3 * t - C2 * C2; }
  double scale() const { return 1.0 + std::fabs(C1) + std::fabs(C2) + std::fabs(C3); }
};

inline AdmissibleTriple triple_from_roots(double xi_minus, double xi1, double xi2) {
  detail::require(xi_minus < 0.0 && 0.0 < xi1 && xi1 < xi2,
                  "triple_from_roots: need xi_minus < 0 < xi1 < xi2");
  AdmissibleTriple t;
  t.xi_minus = xi_minus;
  t.xi1 = xi1;
  t.xi2 = xi2;
  t.C1 = 0.5 * (xi_minus + xi1 + xi2);
  t.C3 = -(xi_minus * xi1 + xi_minus * xi2 + xi1 * xi2);
  t.C2 = std::sqrt(-xi_minus * xi1 * xi2);
  return t;
}

enum class TripleCase { OneRealNegative, AllNegative, DoublePositive, Admissible };

struct TripleClassification {
  TripleCase kind = TripleCase::OneRealNegative;
  int n_real = 0;
  std::array<double, 3> roots{};  // ascending real roots (when n_real == 3)
  AdmissibleTriple triple;        // filled when kind == Admissible
};

// Case analysis of the cubic roots; only the admissible case supports
// non-constant curvature solutions.
inline TripleClassification classify_triple(double C1, double C2, double C3) {
  detail::require(C2 != 0.0,
                  "classify_triple: C2 = 0 is the degenerate branch (Q3 system, see "
                  "degenerate_q3_curvatures)");
  const double scale = 1.0 + std::fabs(C1) + std::fabs(C2) + std::fabs(C3);
  const double mult_tol = 1e-10 * scale;
  // roots of P(t) = 0, i.e. t^3 - 2 C1 t^2 - C3 t + C2^2 = 0
  const CubicRoots r = solve_cubic(-2.0 * C1, -C3, C2 * C2);
  TripleClassification out;
  out.n_real = r.n_real;
  if (r.n_real == 1) {
    // one real root; by the product identity it is negative
    out.kind = TripleCase::OneRealNegative;
    out.roots[0] = r.real[0];
    if (std::fabs(r.complex_im) <= mult_tol) {
      // borderline double root resolved by the multiplicity tolerance
      out.n_real = 3;
      out.roots = {r.real[0], r.complex_re, r.complex_re};
      std::sort(out.roots.begin(), out.roots.end());
      out.kind = (r.complex_re > mult_tol) ? TripleCase::DoublePositive : TripleCase::AllNegative;
    }
    return out;
  }
  out.roots = r.real;
  if (out.roots[2] < mult_tol) {
    out.kind = TripleCase::AllNegative;
  } else if (std::fabs(out.roots[2] - out.roots[1]) <= mult_tol) {
    out.kind = TripleCase::DoublePositive;
  } else {
    out.kind = TripleCase::Admissible;
    out.triple.C1 = C1;
    out.triple.C2 = C2;
    out.triple.C3 = C3;
    out.triple.xi_minus = out.roots[0];
    out.triple.xi1 = out.roots[1];
    out.triple.xi2 = out.roots[2];
  }
  return out;
}

inline AdmissibleTriple triple_from_constants(double C1, double C2, double C3) {
  const auto cl = classify_triple(C1, C2, C3);
  detail::require(cl.kind == TripleCase::Admissible,
                  "triple_from_constants: constants are not an admissible triple");
  return cl.triple;
}

// ---------------------------------------------------------------------------
// Closed-form curvatures.

// mu2(s)^2 = xi1 + beta sd^2(alpha s, k), beta = (xi2-xi1)(xi1-xi_minus)/(xi2-xi_minus),
// alpha = sqrt(xi2 - xi_minus), k = sqrt((xi2-xi1)/(xi2-xi_minus));
// mu1 = -3/2 mu2^2 + C1, mu3 = C2 / mu2^2. Phase convention mu2(0) = sqrt(xi1).
class CurvatureSolution {
 public:
  explicit CurvatureSolution(const AdmissibleTriple& t)
      : triple_(t),
        alpha_(std::sqrt(t.xi2 - t.xi_minus)),
        beta_((t.xi2 - t.xi1) * (t.xi1 - t.xi_minus) / (t.xi2 - t.xi_minus)),
        modulus_(std::sqrt((t.xi2 - t.xi1) / (t.xi2 - t.xi_minus))) {
    period_ = 2.0 * complete_first_kind(modulus_) / alpha_;
  }

  const AdmissibleTriple& triple() const { return triple_; }
  double period() const { return period_; }
  const EllipticModulus& modulus() const { return modulus_; }

  // mu2^2 and its derivative as a jet in s.
  Jet v_jet(const Jet& s) const {
    Jet sn, cn, dn;
    jacobi_jets(alpha_ * s, modulus_, sn, cn, dn);
    const Jet sd = sn / dn;
    return triple_.xi1 + beta_ * sd * sd;
  }

  double v(double s) const { return v_jet(Jet(s, 1)).value(); }

  double mu2(double s) const { return std::sqrt(v(s)); }
  double mu1(double s) const { return -1.5 * v(s) + triple_.C1; }
  double mu3(double s) const { return triple_.C2 / v(s); }

  // analytic derivative through sd' = cd nd
  double mu2dot(double s) const {
    const Jet vj = v_jet(Jet::variable(s, 2));
    return vj.derivative(1) / (2.0 * std::sqrt(vj.value()));
  }

  // (mu1, mu2, mu3) as jets of s, for reconstruction and Lax checks.
  JetVec mu_jets(const Jet& s) const {
    const Jet vj = v_jet(s);
    const Jet m2 = sqrt(vj);
    return {-1.5 * vj + triple_.C1, m2, triple_.C2 / vj};
  }

  // residual of  mu2dot^2/2 + mu2^4/2 - C1 mu2^2 + C2^2/(2 mu2^2) - C3/2
  double energy_residual(double s) const {
    const Jet vj = v_jet(Jet::variable(s, 2));
    const double vv = vj.value();
    const double m2d = vj.derivative(1) / (2.0 * std::sqrt(vv));
    return 0.5 * m2d * m2d + 0.5 * vv * vv - triple_.C1 * vv +
           triple_.C2 * triple_.C2 / (2.0 * vv) - 0.5 * triple_.C3;
  }

 private:
  AdmissibleTriple triple_;
  double alpha_, beta_;
  EllipticModulus modulus_;
  double period_;
};

inline CurvatureSolution solve_curvatures(const AdmissibleTriple& t) {
  detail::require(t.xi_minus < 0.0 && 0.0 < t.xi1 && t.xi1 < t.xi2,
                  "solve_curvatures: triple is not admissible (case (iv) ordering)");
  const double tol = 1e-10 * t.scale() * t.scale() * t.scale();
  for (double xi : {t.xi_minus, t.xi1, t.xi2})
    detail::require(std::fabs(t.P(xi)) <= tol, "solve_curvatures: roots do not solve P");
  detail::require(std::fabs(t.xi_minus * t.xi1 * t.xi2 + t.C2 * t.C2) <= tol,
                  "solve_curvatures: root product violates -C2^2");
  return CurvatureSolution(t);
}

// ---------------------------------------------------------------------------
// Lax pair.

// The 6x6 Lax matrix Theta(s) in moeb(4) whose flow equation along the
// Frenet connection is equivalent to the Euler-Lagrange system.
inline Mat lax_matrix_entries(double mu1, double mu2, double mu3, double mu2dot) {
  Mat t = Mat::Zero(6, 6);
  const double a = -(mu1 + mu2 * mu2);
  t(0, 1) = 1.0; t(0, 2) = a; t(0, 3) = mu2dot; t(0, 4) = mu2 * mu3;
  t(1, 3) = -mu2; t(1, 5) = 1.0;
  t(2, 0) = 1.0; t(2, 5) = a;
  t(3, 1) = mu2; t(3, 5) = mu2dot;
  t(4, 5) = mu2 * mu3;
  t(5, 2) = 1.0;
  return t;
}

inline Mat lax_matrix(const CurvatureSolution& sol, double s) {
  return lax_matrix_entries(sol.mu1(s), sol.mu2(s), sol.mu3(s), sol.mu2dot(s));
}

// chi_Theta(t) = t^6 + 2 C1 t^4 - (1 + C3) t^2 - C2^2
inline std::array<double, 4> lax_char_poly(const AdmissibleTriple& t) {
  return {1.0, 2.0 * t.C1, -(1.0 + t.C3), -t.C2 * t.C2};
}

struct ConservedOmega {
  Mat omega;     // e(0) Theta(0) e(0)^{-1}
  double drift;  // max over the grid of |e Theta e^{-1} - omega|
};

// Conservation of e Theta e^{-1} along a reconstructed Frenet frame.
inline ConservedOmega conserved_omega(const CurvatureSolution& sol, const ReconstructedFrames& rf,
                                      const std::vector<double>& s_check, double tol = 1e-7) {
  ConservedOmega out;
  const Mat e0 = rf.frame_at(0.0);
  out.omega = e0 * lax_matrix(sol, 0.0) * moebius_inverse(e0);
  out.drift = 0.0;
  for (double s : s_check) {
    const Mat e = rf.frame_at(s);
    const Mat om = e * lax_matrix(sol, s) * moebius_inverse(e);
    out.drift = std::max(out.drift, (om - out.omega).cwiseAbs().maxCoeff());
  }
  if (out.drift > tol)
    throw std::runtime_error("conserved_omega: integration drift " + std::to_string(out.drift));
  return out;
}

// ---------------------------------------------------------------------------
// Explicit geodesics in Q_4.

namespace detail {
// Cumulative phase integral of a smooth periodic integrand, with per-period
// caching and linear accumulation across periods.
class PhaseCache {
 public:
  PhaseCache(std::function<double(double)> f, double period, int nodes = 1024)
      : f_(std::move(f)), period_(period), nodes_(nodes) {
    cum_.resize(static_cast<std::size_t>(nodes_) + 1, 0.0);
    const double h = period_ / nodes_;
    for (int i = 0; i < nodes_; ++i)
      cum_[static_cast<std::size_t>(i) + 1] =
          cum_[static_cast<std::size_t>(i)] + integrate(f_, i * h, (i + 1) * h, 1e-14);
  }

  double operator()(double s) const {
    const double m = std::floor(s / period_);
    const double rem = s - m * period_;
    const double h = period_ / nodes_;
    int idx = std::min(static_cast<int>(rem / h), nodes_ - 1);
    return m * cum_.back() + cum_[static_cast<std::size_t>(idx)] +
           integrate(f_, idx * h, rem, 1e-14);
  }

  double per_period() const { return cum_.back(); }

 private:
  std::function<double(double)> f_;
  double period_;
  int nodes_;
  std::vector<double> cum_;
};
}  // namespace detail

// The explicit conformal geodesic of an admissible triple, canonical gauge
// (A, theta1, theta2) = (1, 0, 0), s0 = 0.
class GeodesicCurve {
 public:
  explicit GeodesicCurve(const AdmissibleTriple& t)
      : sol_(t) {
    const auto cl = lax_char_poly(t);
    // eigenvalue cubic in x = t^2: x^3 + 2C1 x^2 - (C3+1) x - C2^2
    const CubicRoots r = solve_cubic(cl[1], cl[2], cl[3]);
    detail::require(r.n_real == 3 && r.real[0] < 0.0 && r.real[1] < 0.0 && r.real[2] > 0.0,
                    "geodesic: eigenvalue cubic lacks the (-,-,+) root pattern");
    lambda_ = std::sqrt(r.real[2]);
    tau1_ = std::sqrt(-r.real[1]);
    tau2_ = std::sqrt(-r.real[0]);
    const double T = sol_.period();
    auto vf = [sol = sol_](double s) { return sol.v(s); };
    p_lambda_ = std::make_shared<detail::PhaseCache>(
        [vf, l2 = lambda_ * lambda_](double s) { return 1.0 / (vf(s) + l2); }, T);
    p_tau1_ = std::make_shared<detail::PhaseCache>(
        [vf, t2 = tau1_ * tau1_](double s) { return 1.0 / (vf(s) - t2); }, T);
    p_tau2_ = std::make_shared<detail::PhaseCache>(
        [vf, t2 = tau2_ * tau2_](double s) { return 1.0 / (t2 - vf(s)); }, T);
  }

  const CurvatureSolution& curvatures() const { return sol_; }
  double lambda() const { return lambda_; }
  double tau1() const { return tau1_; }
  double tau2() const { return tau2_; }

  // spectral data of the conserved matrix in the Frenet gauge at s = 0,
  // where the frame is the identity and omega = Theta(0)
  SpectralSplit spectral() const { return spectral_split(lax_matrix(sol_, 0.0)); }

  // gauge constants of the general light-like solution, canonical values
  double p0() const { return std::sqrt(tau2_ * tau2_ - tau1_ * tau1_) / std::sqrt(2.0); }
  double p5() const { return p0(); }
  double rho1() const { return std::sqrt(lambda_ * lambda_ + tau2_ * tau2_); }
  double rho2() const { return std::sqrt(lambda_ * lambda_ + tau1_ * tau1_); }

  // homogeneous components e_0^0..e_0^5 with jets
  JetVec e0_jets(const Jet& s) const {
    const int nc = s.coeffs();
    const Jet v = sol_.v_jet(s);
    const double l2 = lambda_ * lambda_;
    const double t1s = tau1_ * tau1_, t2s = tau2_ * tau2_;
    auto phase_jet = [&](const detail::PhaseCache& cache, const Jet& gprime) {
      Jet p(cache(s.value()), nc);
      for (int i = 1; i < nc && i - 1 < gprime.coeffs(); ++i) p.raw(i) = gprime[i - 1] / i;
      return p.truncated(std::min(nc, gprime.coeffs() + 1));
    };
    const Jet pl = phase_jet(*p_lambda_, 1.0 / (v + l2));
    const Jet p1 = phase_jet(*p_tau1_, 1.0 / (v - t1s));
    const Jet p2 = phase_jet(*p_tau2_, 1.0 / (t2s - v));
    const double c05 = p0();
    const double c12 = rho1(), c34 = rho2();
    Jet s1, c1, s2, c2;
    sincos(tau1_ * p1, s1, c1);
    sincos(tau2_ * p2, s2, c2);
    const Jet r05 = sqrt(v + l2);
    const Jet r12 = sqrt(v - t1s);
    const Jet r34 = sqrt(t2s - v);
    JetVec out(6, Jet(0.0, nc));
    out[0] = c05 * r05 * exp(lambda_ * pl);
    out[1] = c12 * r12 * s1;
    out[2] = c12 * r12 * c1;
    out[3] = c34 * r34 * s2;
    out[4] = c34 * r34 * c2;
    out[5] = c05 * r05 * exp(-lambda_ * pl);
    return out;
  }

  Vec e0(double s) const {
    const JetVec j = e0_jets(Jet(s, 1));
    Vec v(6);
    for (int i = 0; i < 6; ++i) v(i) = j[static_cast<std::size_t>(i)].value();
    return v;
  }

  // the geodesic as a light-cone curve on [s_min, s_max]
  Curve curve(double s_min, double s_max) const {
    auto self = *this;
    return Curve(
        s_min, s_max, Ambient::LightCone, 4,
        [self](double t, int coeffs) { return self.e0_jets(Jet::variable(t, coeffs)); }, false,
        Jet::kMaxCoeffs);
  }

 private:
  CurvatureSolution sol_;
  double lambda_ = 0.0, tau1_ = 0.0, tau2_ = 0.0;
  std::shared_ptr<detail::PhaseCache> p_lambda_, p_tau1_, p_tau2_;
};

inline GeodesicCurve build_geodesic(const AdmissibleTriple& t) { return GeodesicCurve(t); }

// ---------------------------------------------------------------------------
// Euler-Lagrange residuals on reduced data.

struct ElResidualReport {
  double max_first = 0.0;   // d mu1/ds + 3/2 d|X|^2/ds
  double max_second = 0.0;  // normal equation, all components
  double rms = 0.0;
  std::size_t samples = 0;
};

namespace detail {
inline std::vector<double> grid_derivative(const std::vector<double>& s,
                                           const std::vector<double>& f, int order) {
  const std::size_t npts = s.size();
  const std::size_t width = std::min<std::size_t>(7, npts);
  std::vector<double> out(npts, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < npts; ++i) {
    std::size_t lo = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(i) -
                                                static_cast<std::ptrdiff_t>(width / 2),
                                                0, static_cast<std::ptrdiff_t>(npts - width));
    std::vector<double> xs(s.begin() + static_cast<std::ptrdiff_t>(lo),
                           s.begin() + static_cast<std::ptrdiff_t>(lo + width));
    bool ok = true;
    for (std::size_t q = 0; q < width; ++q)
      if (!std::isfinite(f[lo + q])) ok = false;
    if (!ok) continue;
    const auto w = fornberg_weights(s[i], xs, order);
    double acc = 0.0;
    for (std::size_t q = 0; q < width; ++q) acc += w[q] * f[lo + q];
    out[i] = acc;
  }
  return out;
}
}  // namespace detail

// Euler-Lagrange residuals of reduced invariants. Works on 1-generic data;
// totally 2-degenerate stretches contribute |d mu1/ds| alone.
inline ElResidualReport el_residual(const ConformalFrenetData& d) {
  const std::size_t npts = d.ts.size();
  detail::require(npts >= 7, "el_residual: need at least 7 grid points");
  const int n = d.n;
  std::vector<double> mu2(npts, 0.0), mu3(npts, 0.0);
  for (std::size_t i = 0; i < npts; ++i) {
    if (n >= 3 && d.genericity_order[i] >= 2) {
      mu2[i] = d.mus[1][i];
      if (n >= 4 && std::isfinite(d.mus[2][i])) mu3[i] = d.mus[2][i];
    }
  }
  const auto mu1p = detail::grid_derivative(d.s, d.mus[0], 1);
  const auto mu2p = detail::grid_derivative(d.s, mu2, 1);
  const auto mu2pp = detail::grid_derivative(d.s, mu2, 2);
  const auto mu3p = detail::grid_derivative(d.s, mu3, 1);

  ElResidualReport rep;
  double sumsq = 0.0;
  const std::size_t margin = 3;
  for (std::size_t i = margin; i + margin < npts; ++i) {
    if (!std::isfinite(mu1p[i])) continue;
    const double eq1 = mu1p[i] + 3.0 * mu2[i] * mu2p[i];
    double eq2 = 0.0, eq3 = 0.0, eq4 = 0.0;
    if (n >= 3 && d.genericity_order[i] >= 2) {
      eq2 = mu2pp[i] - mu2[i] * mu2[i] * mu2[i] - 2.0 * d.mus[0][i] * mu2[i] -
            mu2[i] * mu3[i] * mu3[i];
      if (n >= 4) eq3 = 2.0 * mu2p[i] * mu3[i] + mu2[i] * mu3p[i];
      if (n >= 5 && d.genericity_order[i] >= 4 && std::isfinite(d.mus[3][i]))
        eq4 = mu2[i] * mu3[i] * d.mus[3][i];
    }
    rep.max_first = std::max(rep.max_first, std::fabs(eq1));
    const double second = std::max({std::fabs(eq2), std::fabs(eq3), std::fabs(eq4)});
    rep.max_second = std::max(rep.max_second, second);
    sumsq += eq1 * eq1 + eq2 * eq2 + eq3 * eq3 + eq4 * eq4;
    ++rep.samples;
  }
  rep.rms = (rep.samples > 0) ? std::sqrt(sumsq / static_cast<double>(rep.samples)) : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Codimension reduction: E = (e0 | e1 | e2 | X | nabla X/ds | e_{n+1}).

struct CodimReductionReport {
  int rank_min = 0, rank_max = 0;
  double span_drift = 0.0;          // principal angles vs the first point
  double stacked_sigma6 = 0.0, stacked_sigma7 = 0.0;
  double linear_residual = 0.0;     // max |E' - E A| over the grid
  // constant of |X|^2 = -2/3 mu1 + C1; equals 2/3 of the triple constant C1
  double C1_estimate = 0.0;
};

inline CodimReductionReport verify_codimension_reduction(const ConformalFrenetData& d,
                                                         double rank_tol = 1e-8) {
  const int n = d.n;
  const int dim = n + 2;
  const std::size_t npts = d.ts.size();
  detail::require(npts >= 7, "verify_codimension_reduction: need at least 7 grid points");

  std::vector<double> mu2(npts, 0.0), mu3(npts, 0.0);
  for (std::size_t i = 0; i < npts; ++i) {
    if (n >= 3 && d.genericity_order[i] >= 2) mu2[i] = d.mus[1][i];
    if (n >= 4 && d.genericity_order[i] >= 2 && std::isfinite(d.mus[2][i])) mu3[i] = d.mus[2][i];
  }
  const auto mu1p = detail::grid_derivative(d.s, d.mus[0], 1);
  const auto mu2p = detail::grid_derivative(d.s, mu2, 1);
  const auto mu2pp = detail::grid_derivative(d.s, mu2, 2);
  const auto mu3p = detail::grid_derivative(d.s, mu3, 1);

  CodimReductionReport rep;
  // C1 from |X|^2 = -2/3 mu1 + C1
  {
    double acc = 0.0;
    for (std::size_t i = 0; i < npts; ++i) acc += mu2[i] * mu2[i] + (2.0 / 3.0) * d.mus[0][i];
    rep.C1_estimate = acc / static_cast<double>(npts);
  }

  auto e_matrix = [&](std::size_t i) {
    Mat e(dim, 6);
    e.col(0) = d.frames[i].col(0);
    e.col(1) = d.frames[i].col(1);
    e.col(2) = d.frames[i].col(2);
    if (n >= 3 && d.genericity_order[i] >= 2) {
      e.col(3) = mu2[i] * d.frames[i].col(3);
      Vec nx = mu2p[i] * d.frames[i].col(3);
      if (n >= 4) nx += mu2[i] * mu3[i] * d.frames[i].col(4);
      e.col(4) = nx;
    } else {
      e.col(3).setZero();
      e.col(4).setZero();
    }
    e.col(5) = d.frames[i].col(dim - 1);
    return e;
  };

  rep.rank_min = 7;
  rep.rank_max = 0;
  Mat stacked(dim, static_cast<Eigen::Index>(6 * npts));
  Mat base;
  int base_rank = 0;
  const std::size_t margin = 3;
  for (std::size_t i = 0; i < npts; ++i) {
    const Mat e = e_matrix(i);
    stacked.block(0, static_cast<Eigen::Index>(6 * i), dim, 6) = e;
    Eigen::JacobiSVD<Mat> svd(e, Eigen::ComputeThinU);
    int rank = 0;
    for (int q = 0; q < svd.singularValues().size(); ++q)
      if (svd.singularValues()(q) > rank_tol * svd.singularValues()(0)) ++rank;
    rep.rank_min = std::min(rep.rank_min, rank);
    rep.rank_max = std::max(rep.rank_max, rank);
    if (i == 0) {
      base_rank = rank;
      base = svd.matrixU().leftCols(rank);
    } else {
      Eigen::JacobiSVD<Mat> s2(e, Eigen::ComputeThinU);
      const Mat u = s2.matrixU().leftCols(std::min(rank, base_rank));
      const auto ang = principal_angles(base, u);
      rep.span_drift = std::max(rep.span_drift, ang.back());
    }

    // linear system residual E' = E A(s) away from stencil edges
    if (i >= margin && i + margin < npts && std::isfinite(mu1p[i]) &&
        d.genericity_order[i] >= std::min(2, n - 2)) {
      const double mu1 = d.mus[0][i];
      Mat a = Mat::Zero(6, 6);
      a(1, 0) = 1.0;
      a(0, 1) = mu1; a(5, 1) = 1.0;
      a(0, 2) = 1.0; a(3, 2) = 1.0;
      a(2, 3) = (2.0 / 3.0) * mu1 - rep.C1_estimate; a(4, 3) = 1.0;
      a(2, 4) = mu1p[i] / 3.0; a(3, 4) = (4.0 / 3.0) * mu1 + rep.C1_estimate;
      a(1, 5) = mu1; a(2, 5) = 1.0;
      // E' columns from the frame derivatives and the invariant derivatives
      Mat ep(dim, 6);
      const double dens = d.density[i];
      auto fdot = [&](int c) { return Vec(d.frame_dots[i].col(c) / dens); };
      ep.col(0) = fdot(0);
      ep.col(1) = fdot(1);
      ep.col(2) = fdot(2);
      if (n >= 3 && d.genericity_order[i] >= 2) {
        ep.col(3) = mu2p[i] * d.frames[i].col(3) + mu2[i] * fdot(3);
        Vec c4 = mu2pp[i] * d.frames[i].col(3) + mu2p[i] * fdot(3);
        if (n >= 4)
          c4 += (mu2p[i] * mu3[i] + mu2[i] * mu3p[i]) * d.frames[i].col(4) +
                mu2[i] * mu3[i] * fdot(4);
        ep.col(4) = c4;
      } else {
        ep.col(3).setZero();
        ep.col(4).setZero();
      }
      ep.col(5) = fdot(dim - 1);
      rep.linear_residual = std::max(rep.linear_residual, (ep - e * a).cwiseAbs().maxCoeff());
    }
  }
  Eigen::JacobiSVD<Mat> ssvd(stacked);
  const auto& sv = ssvd.singularValues();
  rep.stacked_sigma6 = (sv.size() >= 6) ? sv(5) : 0.0;
  rep.stacked_sigma7 = (sv.size() >= 7) ? sv(6) : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Degenerate Q3 branch: numeric integration of mu2'' = mu2^3 + 2 mu1 mu2 with
// mu1 = -3/2 mu2^2 + C1 (and optionally the C2 forcing for comparisons).

struct Q3Solution {
  std::vector<double> s, mu2, mu2dot;
  double energy_drift = 0.0;
  bool truncated = false;  // hit mu2 -> 0
};

inline Q3Solution degenerate_q3_curvatures(double C1, double mu2_0, double mu2dot_0,
                                           double s_max, double step = 1e-4, double C2 = 0.0) {
  detail::require(mu2_0 > 0.0, "degenerate_q3_curvatures: mu2(0) must be positive");
  Q3Solution out;
  auto accel = [&](double m) { return -2.0 * m * m * m + 2.0 * C1 * m + C2 * C2 / (m * m * m); };
  auto energy = [&](double m, double md) {
    double e = 0.5 * md * md + 0.5 * m * m * m * m - C1 * m * m;
    if (C2 != 0.0) e += C2 * C2 / (2.0 * m * m);
    return e;
  };
  double m = mu2_0, md = mu2dot_0, s = 0.0;
  const double e0 = energy(m, md);
  double emin = e0, emax = e0;
  const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(1e-2 / step));
  std::size_t istep = 0;
  out.s.push_back(s);
  out.mu2.push_back(m);
  out.mu2dot.push_back(md);
  while (s < s_max - 1e-15) {
    const double h = std::min(step, s_max - s);
    if (m < 1e-6) {
      out.truncated = true;
      break;
    }
    auto f = [&](double mm, double mmd) { return std::make_pair(mmd, accel(mm)); };
    const auto [k1m, k1d] = f(m, md);
    const auto [k2m, k2d] = f(m + h / 2 * k1m, md + h / 2 * k1d);
    const auto [k3m, k3d] = f(m + h / 2 * k2m, md + h / 2 * k2d);
    const auto [k4m, k4d] = f(m + h * k3m, md + h * k3d);
    m += h / 6.0 * (k1m + 2 * k2m + 2 * k3m + k4m);
    md += h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
    s += h;
    ++istep;
    if (istep % stride == 0 || s >= s_max - 1e-15) {
      out.s.push_back(s);
      out.mu2.push_back(m);
      out.mu2dot.push_back(md);
      const double e = energy(m, md);
      emin = std::min(emin, e);
      emax = std::max(emax, e);
    }
  }
  out.energy_drift = emax - emin;
  return out;
}

}  // namespace moebius
