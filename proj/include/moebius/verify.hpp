#pragma once

// Verification suite: every analytic identity and invariance claim of the
// geodesic construction, run with seeded randomness and pinned tolerances.
// Shared by the `verify` CLI command and the acceptance test binary.

#include <functional>
#include <string>
#include <vector>

#include "moebius/conformal.hpp"
#include "moebius/elliptic.hpp"
#include "moebius/euclidean.hpp"
#include "moebius/geodesics.hpp"
#include "moebius/lorentz.hpp"

namespace moebius {

struct CheckResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct VerifyConfig {
  std::uint64_t seed = 1;
  double perturb = 0.0;  // optional distortion of mu_2 in the EL check
  double tol_algebra = 1e-9;
  double tol_ode = 1e-6;
};

namespace detail {

inline CheckResult make_result(std::string name, double residual, double tol,
                               std::string detail = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.residual = residual;
  r.tolerance = tol;
  r.pass = residual <= tol;
  r.detail = std::move(detail);
  return r;
}

inline Curve seeded_quartic_r4(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::array<double, 8> c{};
  for (auto& v : c) v = u(rng);
  return Curve::analytic(-0.9, 0.9, Ambient::Euclidean, 4, [c](const Jet& t) {
    const Jet t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    return JetVec{t + 0.3 * c[0] * t3 - 0.1 * c[1] * t4, t2 + 0.2 * c[2] * t3,
                  0.5 * t3 + 0.15 * c[3] * t2 + 0.05 * c[4] * t4,
                  0.25 * t4 + 0.4 * t3 + 0.1 * c[5] * t2};
  });
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

}  // namespace detail

// Criterion: closed-form geodesic end to end (triple (1, sqrt2, 1)).
inline void check_geodesic_end_to_end(const VerifyConfig&, std::vector<CheckResult>& out) {
  const auto triple = triple_from_roots(-1.0, 1.0, 2.0);
  const auto geo = build_geodesic(triple);
  const auto& sol = geo.curvatures();
  const double period = sol.period();

  double lightlike = 0.0;
  for (double s = -period; s <= 2.0 * period; s += 0.01) {
    const Vec p = geo.e0(s);
    lightlike = std::max(lightlike, std::fabs(inner(p, p)) / p.squaredNorm());
  }
  out.push_back(detail::make_result("geodesic.lightlike_residual", lightlike, 1e-9));

  ReduceOptions opt;
  opt.grid = detail::linspace(0.0, 2.0 * period, 301);
  const auto data = reduce_frames(geo.curve(-0.5, 2.0 * period + 0.5), opt);
  double rms = 0.0;
  for (std::size_t i = 0; i < opt.grid.size(); ++i) {
    const double s = opt.grid[i];
    const double d1 = data.mus[0][i] - sol.mu1(s);
    const double d2 = data.mus[1][i] - sol.mu2(s);
    const double d3 = data.mus[2][i] - sol.mu3(s);
    rms += d1 * d1 + d2 * d2 + d3 * d3;
  }
  rms = std::sqrt(rms / (3.0 * static_cast<double>(opt.grid.size())));
  out.push_back(detail::make_result("geodesic.curvature_recovery_rms", rms, 1e-5));
}

// Criterion: conserved quantities (energy, first integrals, Lax matrix).
inline void check_conserved_quantities(const VerifyConfig&, std::vector<CheckResult>& out) {
  const auto triple = triple_from_roots(-1.0, 1.0, 2.0);
  const auto sol = solve_curvatures(triple);
  const double period = sol.period();

  double energy = 0.0;
  for (double s = 0.0; s <= 2.0 * period; s += 0.01)
    energy = std::max(energy, std::fabs(sol.energy_residual(s)));
  out.push_back(detail::make_result("conserved.energy_residual", energy, 1e-9));

  const auto geo = build_geodesic(triple);
  ReduceOptions opt;
  opt.grid = detail::linspace(0.0, 2.0 * period, 201);
  const auto data = reduce_frames(geo.curve(-0.5, 2.0 * period + 0.5), opt);
  double f1lo = 1e300, f1hi = -1e300, f2lo = 1e300, f2hi = -1e300;
  for (std::size_t i = 0; i < opt.grid.size(); ++i) {
    const double f1 = data.mus[0][i] + 1.5 * data.mus[1][i] * data.mus[1][i];
    const double f2 = data.mus[1][i] * data.mus[1][i] * data.mus[2][i];
    f1lo = std::min(f1lo, f1); f1hi = std::max(f1hi, f1);
    f2lo = std::min(f2lo, f2); f2hi = std::max(f2hi, f2);
  }
  out.push_back(detail::make_result("conserved.first_integral_mu1_drift", f1hi - f1lo, 1e-7));
  out.push_back(detail::make_result("conserved.first_integral_mu3_drift", f2hi - f2lo, 1e-7));

  const auto rf = integrate_frenet(4, 0.0, 2.0 * period,
                                   [&](const Jet& s) { return sol.mu_jets(s); });
  const Mat e0 = rf.frame_at(0.0);
  const Mat omega = e0 * lax_matrix(sol, 0.0) * moebius_inverse(e0);
  double drift = 0.0;
  for (double s = 0.0; s <= 2.0 * period; s += 0.05) {
    const Mat e = rf.frame_at(s);
    drift = std::max(drift,
                     (e * lax_matrix(sol, s) * moebius_inverse(e) - omega).cwiseAbs().maxCoeff());
  }
  out.push_back(detail::make_result("conserved.lax_conjugation_drift", drift, 1e-7));
}

// Criterion: spectral identities (characteristic polynomial, interlacing,
// block diagonalization).
inline void check_spectral_identities(const VerifyConfig& cfg, std::vector<CheckResult>& out) {
  const auto triple = triple_from_roots(-1.0, 1.0, 2.0);
  const auto sol = solve_curvatures(triple);
  double coeff_dev = 0.0;
  for (double s : {0.2, 0.9, 1.6}) {
    const auto cp = char_poly_coeffs6(lax_matrix(sol, s));
    coeff_dev = std::max({coeff_dev, std::fabs(cp[4] - 2.0 * triple.C1),
                          std::fabs(cp[2] + (1.0 + triple.C3)),
                          std::fabs(cp[0] + triple.C2 * triple.C2), std::fabs(cp[5]),
                          std::fabs(cp[3]), std::fabs(cp[1])});
  }
  out.push_back(detail::make_result("spectral.char_poly_coefficients", coeff_dev, 1e-12));

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  double interlace_margin = 1.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double xm = -u(rng);
    const double x1 = u(rng);
    const double x2 = x1 + u(rng);
    const auto t = triple_from_roots(xm, x1, x2);
    const auto cp = lax_char_poly(t);
    const CubicRoots r = solve_cubic(cp[1], cp[2], cp[3]);
    if (r.n_real != 3) {
      interlace_margin = -1.0;
      break;
    }
    const double worst = std::min({-t.xi2 - r.real[0], -t.xi1 - (-t.xi2), r.real[1] - (-t.xi1),
                                   0.0 - r.real[1], -t.xi_minus, r.real[2] - (-t.xi_minus)});
    interlace_margin = std::min(interlace_margin, worst);
  }
  out.push_back(detail::make_result("spectral.root_interlacing_margin",
                                    interlace_margin > 0.0 ? 0.0 : 1.0, 0.5,
                                    "min gap " + std::to_string(interlace_margin)));

  double round_trip = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const double xm = -u(rng);
    const double x1 = u(rng);
    const double x2 = x1 + u(rng);
    const auto t = triple_from_roots(xm, x1, x2);
    const auto s2 = solve_curvatures(t);
    const Mat th = lax_matrix(s2, 0.3);
    const auto g = random_moebius(cfg.seed + 7000 + static_cast<std::uint64_t>(trial), 4);
    const Mat om = g.matrix() * th * moebius_inverse(g.matrix());
    const auto sp = spectral_split(om);
    const Mat rt = moebius_inverse(sp.diagonalizer) * sp.block_form * sp.diagonalizer;
    round_trip = std::max(round_trip,
                          (rt - om).cwiseAbs().maxCoeff() / (1.0 + om.cwiseAbs().maxCoeff()));
  }
  out.push_back(detail::make_result("spectral.block_diagonal_round_trip", round_trip, 1e-8));
}

// Criterion: Euler-Lagrange characterization (geodesics pass, generic
// curves fail, optional injected perturbation).
inline void check_euler_lagrange(const VerifyConfig& cfg, std::vector<CheckResult>& out) {
  const auto triple = triple_from_roots(-1.0, 1.0, 2.0);
  const auto geo = build_geodesic(triple);
  const double period = geo.curvatures().period();
  ReduceOptions opt;
  opt.grid = detail::linspace(0.0, 2.0 * period, 301);
  auto data = reduce_frames(geo.curve(-0.5, 2.0 * period + 0.5), opt);
  if (cfg.perturb != 0.0) {
    for (std::size_t i = 0; i < data.ts.size(); ++i)
      data.mus[1][i] *= 1.0 + cfg.perturb * std::sin(3.0 * data.s[i]);
  }
  const auto rep = el_residual(data);
  out.push_back(detail::make_result("euler_lagrange.geodesic_residual",
                                    std::max(rep.max_first, rep.max_second), 1e-5,
                                    cfg.perturb != 0.0 ? "perturbed" : ""));

  double weakest = 1e300;
  for (int trial = 0; trial < 20; ++trial) {
    const Curve c = detail::seeded_quartic_r4(cfg.seed + 100 + static_cast<std::uint64_t>(trial));
    ReduceOptions qopt;
    qopt.grid = detail::linspace(-0.6, 0.6, 151);
    const auto qdata = reduce_frames(lift_to_lightcone(c), qopt);
    const auto qrep = el_residual(qdata);
    weakest = std::min(weakest, std::max(qrep.max_first, qrep.max_second));
  }
  out.push_back(detail::make_result("euler_lagrange.generic_curves_rejected",
                                    weakest >= 1e-2 ? 0.0 : 1.0, 0.5,
                                    "weakest residual " + std::to_string(weakest)));
}

// Criterion: codimension reduction of a Q4 geodesic pushed into Q6.
inline void check_codimension_reduction(const VerifyConfig& cfg, std::vector<CheckResult>& out) {
  const auto geo = build_geodesic(triple_from_roots(-1.0, 1.0, 2.0));
  const double period = geo.curvatures().period();
  const Curve q6(
      -0.5, 2.0 * period + 0.5, Ambient::LightCone, 6,
      [geo](double t, int coeffs) {
        const JetVec e = geo.e0_jets(Jet::variable(t, coeffs));
        JetVec padded(8, Jet(0.0, coeffs));
        for (int i = 0; i < 5; ++i) padded[static_cast<std::size_t>(i)] = e[static_cast<std::size_t>(i)];
        padded[7] = e[5];
        return padded;
      },
      false, Jet::kMaxCoeffs);
  const Curve moved = act_on_curve(random_moebius(cfg.seed + 500, 6), q6);
  ReduceOptions opt;
  opt.grid = detail::linspace(0.0, 2.0 * period, 201);
  const auto data = reduce_frames(moved, opt);
  const auto rep = verify_codimension_reduction(data);
  out.push_back(detail::make_result("codim.rank_is_six",
                                    (rep.rank_min == 6 && rep.rank_max == 6) ? 0.0 : 1.0, 0.5));
  out.push_back(detail::make_result("codim.sigma_gap",
                                    rep.stacked_sigma6 >= 1e3 * rep.stacked_sigma7 ? 0.0 : 1.0,
                                    0.5,
                                    "sigma6/sigma7 = " +
                                        std::to_string(rep.stacked_sigma6 /
                                                       std::max(rep.stacked_sigma7, 1e-300))));
  out.push_back(detail::make_result("codim.span_drift", rep.span_drift, 1e-6));
  out.push_back(detail::make_result("codim.linear_system_residual", rep.linear_residual, 1e-6));
}

// Criterion: conformal invariance of ds and the mu_j under Moebius motions.
inline void check_conformal_invariance(const VerifyConfig& cfg, std::vector<CheckResult>& out) {
  const Curve c = lift_to_lightcone(detail::seeded_quartic_r4(cfg.seed + 3));
  ReduceOptions opt;
  opt.grid = detail::linspace(-0.6, 0.6, 121);
  const auto base = reduce_frames(c, opt);
  double dev = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_moebius(cfg.seed + 1000 + static_cast<std::uint64_t>(trial), 4);
    const auto moved = reduce_frames(act_on_curve(g, c), opt);
    for (std::size_t i = 0; i < opt.grid.size(); ++i) {
      dev = std::max(dev, std::fabs(moved.density[i] - base.density[i]));
      for (int j = 0; j < 3; ++j)
        dev = std::max(dev, std::fabs(moved.mus[static_cast<std::size_t>(j)][i] -
                                      base.mus[static_cast<std::size_t>(j)][i]));
    }
  }
  out.push_back(detail::make_result("invariance.moebius_50_motions", dev, 1e-6));
}

// Criterion: Euclidean bridge on the helix and the trace invariants.
inline void check_euclidean_bridge(const VerifyConfig&, std::vector<CheckResult>& out) {
  const double a = 1.2, b = 0.5;
  const Curve helix = Curve::analytic(-2.0, 2.0, Ambient::Euclidean, 3, [a, b](const Jet& t) {
    return JetVec{a * cos(t), a * sin(t), b * t};
  });
  const double k = a / (a * a + b * b), tau = b / (a * a + b * b);
  const auto grid = detail::linspace(-1.5, 1.5, 61);
  const auto ed = euclidean_frenet(helix, grid);
  const auto dens = conformal_density(ed);
  double dens_dev = 0.0;
  for (double v : dens) dens_dev = std::max(dens_dev, std::fabs(v - std::sqrt(k * tau)));
  out.push_back(detail::make_result("bridge.helix_density", dens_dev, 1e-8));

  double mu1_formula_dev = 0.0;
  for (double v : mu1_from_euclidean(ed))
    mu1_formula_dev = std::max(mu1_formula_dev, std::fabs(v + k / (2.0 * tau)));
  out.push_back(detail::make_result("bridge.helix_mu1_formula", mu1_formula_dev, 1e-6));

  ReduceOptions opt;
  opt.grid = detail::linspace(-1.5, 1.5, 61);
  const auto cd = reduce_frames(lift_to_lightcone(helix), opt);
  double mu1_reduction_dev = 0.0, trace_dev = 0.0;
  for (std::size_t i = 0; i < opt.grid.size(); ++i)
    mu1_reduction_dev = std::max(mu1_reduction_dev, std::fabs(cd.mus[0][i] + k / (2.0 * tau)));
  out.push_back(detail::make_result("bridge.helix_mu1_reduction", mu1_reduction_dev, 1e-6));

  const auto k2 = trace_invariant(cd, 2);
  for (std::size_t i = 3; i + 3 < opt.grid.size(); ++i)
    trace_dev = std::max(trace_dev, std::fabs(k2[i] - std::fabs(cd.mus[1][i])) /
                                        std::fabs(cd.mus[1][i]));
  out.push_back(detail::make_result("bridge.trace_invariant_vs_mu", trace_dev, 1e-4));
}

// Criterion: total twist integrality and invariance.
inline void check_total_twist(const VerifyConfig& cfg, std::vector<CheckResult>& out) {
  const Curve sph = Curve::analytic(0.0, 2.0 * M_PI, Ambient::Euclidean, 3, [](const Jet& t) {
    Jet ct, st;
    sincos(t, st, ct);
    Jet c2, s2;
    sincos(2.0 * t, s2, c2);
    const Jet z = 0.4 * s2;
    const Jet r = sqrt(1.0 - z * z);
    return JetVec{r * ct, r * st, z};
  }, true);
  const double tw = total_twist(sph);
  out.push_back(detail::make_result("twist.spherical_integer", mod1_distance_to_integer(tw), 1e-6));

  // invariance under chart-projected Moebius motions
  double dev = 0.0;
  int done = 0;
  std::uint64_t seed = cfg.seed + 4000;
  const Curve lifted = lift_to_lightcone(sph);
  while (done < 20) {
    const auto g = random_moebius(seed++, 3, 0.2);
    const Curve moved = act_on_curve(g, lifted);
    // reject motions that carry the curve too close to chart infinity
    double margin = 1e300;
    for (double t = 0.0; t <= 2.0 * M_PI; t += 0.05) {
      const Vec p = moved.point(t);
      margin = std::min(margin, std::fabs(p(0)) / p.norm());
    }
    if (margin < 0.05) continue;
    const Curve chart = Curve(
        0.0, 2.0 * M_PI, Ambient::Euclidean, 3,
        [moved](double t, int coeffs) {
          const JetVec v = moved.jets(t, coeffs);
          return JetVec{v[1] / v[0], v[2] / v[0], v[3] / v[0]};
        },
        true, lifted.max_coeffs());
    const double tw2 = total_twist(chart);
    const double diff = std::fabs(tw2 - tw);
    dev = std::max(dev, std::min(diff, 1.0 - diff));
    ++done;
  }
  out.push_back(detail::make_result("twist.moebius_invariance", dev, 1e-6));
}

// Criterion: elliptic layer identities.
inline void check_elliptic_layer(const VerifyConfig&, std::vector<CheckResult>& out) {
  double ident = 0.0;
  for (double k = 0.0; k <= 1.0 + 1e-12; k += 0.1) {
    const EllipticModulus m(std::min(k, 1.0));
    for (double u = -50.0; u <= 50.0; u += 0.73) {
      const auto j = jacobi_sn_cn_dn(u, m);
      ident = std::max(ident, std::fabs(j.sn * j.sn + j.cn * j.cn - 1.0));
      ident = std::max(ident, std::fabs(j.dn * j.dn + m.k * m.k * j.sn * j.sn - 1.0));
    }
  }
  out.push_back(detail::make_result("elliptic.jacobi_identities", ident, 1e-12));

  double lawden = 0.0;
  for (int ia = 1; ia <= 10; ++ia)
    for (int ib = 1; ib <= 10; ++ib) {
      const double a = 0.3 * ia, b = 0.25 * ib, x = 0.7 * b;
      const double th = std::asin(x / b);
      const double quad = integrate(
          [&](double u) { return 1.0 / std::sqrt(a * a + b * b * std::sin(u) * std::sin(u)); },
          0.0, th, 1e-13);
      lawden = std::max(lawden, std::fabs(incomplete_first_kind(x, a, b) - quad));
    }
  out.push_back(detail::make_result("elliptic.lawden_formula_vs_quadrature", lawden, 1e-10));

  const EllipticModulus m(1.0 / std::sqrt(2.0));
  const double k_quad = integrate(
      [&](double phi) { return 1.0 / std::sqrt(1.0 - 0.5 * std::sin(phi) * std::sin(phi)); },
      0.0, M_PI / 2.0, 1e-14);
  out.push_back(detail::make_result("elliptic.agm_complete_integral",
                                    std::fabs(complete_first_kind(m) - k_quad), 1e-12));
}

// Criterion: degenerate branches (constant mu_1, C2 -> 0 continuity).
inline void check_degenerate_branches(const VerifyConfig&, std::vector<CheckResult>& out) {
  const std::size_t npts = 201;
  std::vector<double> s = detail::linspace(0.0, 2.0, npts);
  std::vector<std::vector<double>> mus(3, std::vector<double>(npts, 0.0));
  for (auto& v : mus[0]) v = 0.7;
  const Curve c = reconstruct_from_invariants(s, mus, 4);
  ReduceOptions opt;
  opt.grid = detail::linspace(0.2, 1.8, 101);
  const auto data = reduce_frames(c, opt);
  const auto rep = el_residual(data);
  out.push_back(detail::make_result("degenerate.constant_mu1_is_geodesic",
                                    std::max(rep.max_first, rep.max_second), 1e-6));

  const auto base = degenerate_q3_curvatures(1.0, 1.2, 0.0, 3.0, 1e-4, 0.0);
  const auto small = degenerate_q3_curvatures(1.0, 1.2, 0.0, 3.0, 1e-4, 1e-6);
  double dev = 0.0;
  for (std::size_t i = 0; i < base.s.size(); ++i)
    dev = std::max(dev, std::fabs(small.mu2[i] - base.mu2[i]));
  out.push_back(detail::make_result("degenerate.c2_continuity", dev, 1e-9));
  out.push_back(detail::make_result("degenerate.q3_energy_drift",
                                    degenerate_q3_curvatures(1.0, 1.3, 0.2, 10.0).energy_drift,
                                    1e-8));
}

inline std::vector<CheckResult> run_verification(const VerifyConfig& cfg) {
  std::vector<CheckResult> out;
  check_geodesic_end_to_end(cfg, out);
  check_conserved_quantities(cfg, out);
  check_spectral_identities(cfg, out);
  check_euler_lagrange(cfg, out);
  check_codimension_reduction(cfg, out);
  check_conformal_invariance(cfg, out);
  check_euclidean_bridge(cfg, out);
  check_total_twist(cfg, out);
  check_elliptic_layer(cfg, out);
  check_degenerate_branches(cfg, out);
  std::sort(out.begin(), out.end(),
            [](const CheckResult& a, const CheckResult& b) { return a.name < b.name; });
  return out;
}

}  // namespace moebius
