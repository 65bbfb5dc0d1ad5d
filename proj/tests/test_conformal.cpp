#include <gtest/gtest.h>

#include <moebius/conformal.hpp>
#include <moebius/euclidean.hpp>
#include <moebius/lorentz.hpp>

#include "test_curves.hpp"

using namespace moebius;

namespace {

JetVec smooth_mus4(const Jet& s) {
  return JetVec{0.3 * sin(s), 1.0 + 0.2 * cos(s), 0.8 + 0.1 * sin(2.0 * s)};
}

ReduceOptions grid_options(double a, double b, std::size_t n) {
  ReduceOptions opt;
  opt.grid = curves::uniform_grid(a, b, n);
  return opt;
}

}  // namespace

TEST(ReduceFrames, RoundTripWithReconstruction) {
  const auto rf = integrate_frenet(4, -1.2, 1.2, smooth_mus4);
  const Curve c = reconstructed_curve(rf);
  const auto data = reduce_frames(c, grid_options(-1.0, 1.0, 161));
  double rms = 0.0;
  for (std::size_t i = 0; i < data.ts.size(); ++i) {
    const JetVec mu = smooth_mus4(Jet(data.ts[i], 1));
    EXPECT_NEAR(data.density[i], 1.0, 1e-10);
    for (int j = 0; j < 3; ++j) {
      const double diff = data.mus[static_cast<std::size_t>(j)][i] - mu[static_cast<std::size_t>(j)].value();
      rms += diff * diff;
    }
  }
  rms = std::sqrt(rms / (3.0 * static_cast<double>(data.ts.size())));
  EXPECT_LE(rms, 1e-6);
}

TEST(ReduceFrames, FramesAreMoebiusAndSatisfyFrenet) {
  const auto rf = integrate_frenet(4, -1.0, 1.0, smooth_mus4);
  const Curve c = reconstructed_curve(rf);
  const auto data = reduce_frames(c, grid_options(-0.9, 0.9, 81));
  const Mat sm = metric_matrix(4);
  for (std::size_t i = 0; i < data.ts.size(); ++i) {
    EXPECT_LE((data.frames[i].transpose() * sm * data.frames[i] - sm).cwiseAbs().maxCoeff(),
              1e-8);
    std::vector<double> mu{data.mus[0][i], data.mus[1][i], data.mus[2][i]};
    const Mat pred = data.density[i] * data.frames[i] * frenet_matrix(4, mu);
    EXPECT_LE((data.frame_dots[i] - pred).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(ReduceFrames, MoebiusInvariance) {
  const auto rf = integrate_frenet(4, -1.0, 1.0, smooth_mus4);
  const Curve c = reconstructed_curve(rf);
  const auto opt = grid_options(-0.8, 0.8, 101);
  const auto base = reduce_frames(c, opt);
  for (std::uint64_t seed : {3u, 17u, 99u}) {
    const auto g = random_moebius(seed, 4);
    const auto moved = reduce_frames(act_on_curve(g, c), opt);
    for (std::size_t i = 0; i < opt.grid.size(); ++i) {
      EXPECT_NEAR(moved.density[i], base.density[i], 1e-6);
      for (int j = 0; j < 3; ++j)
        EXPECT_NEAR(moved.mus[static_cast<std::size_t>(j)][i],
                    base.mus[static_cast<std::size_t>(j)][i], 1e-6);
    }
  }
}

TEST(ReduceFrames, GaugeCovarianceOfDensity) {
  // two different initial sections give the same arclength density
  const Curve c = lift_to_lightcone(curves::generic_quartic_r4());
  auto opt = grid_options(-0.7, 0.7, 51);
  const auto base = reduce_frames(c, opt);
  // a constant isotropy element of [eta_0]: r, x, A block form
  Mat k0 = Mat::Zero(6, 6);
  const double r = 1.4;
  Vec x(4);
  x << 0.3, -0.2, 0.1, 0.4;
  Mat a = Mat::Identity(4, 4);
  const double th = 0.8;
  a(0, 0) = std::cos(th); a(0, 1) = -std::sin(th);
  a(1, 0) = std::sin(th); a(1, 1) = std::cos(th);
  k0(0, 0) = 1.0 / r;
  k0.block(0, 1, 1, 4) = x.transpose() * a;
  k0(0, 5) = 0.5 * r * x.squaredNorm();
  k0.block(1, 1, 4, 4) = a;
  k0.block(1, 5, 4, 1) = r * x;
  k0(5, 5) = r;
  ASSERT_TRUE(is_moebius(k0, 1e-12));
  opt.initial_gauge = k0;
  const auto gauged = reduce_frames(c, opt);
  for (std::size_t i = 0; i < opt.grid.size(); ++i) {
    EXPECT_NEAR(gauged.density[i], base.density[i], 1e-9 * (1.0 + base.density[i]));
    EXPECT_NEAR(gauged.mus[0][i], base.mus[0][i], 1e-8);
  }
}

TEST(ReduceFrames, CircleIsTotallyOneDegenerate) {
  const Curve c = curves::circle_r3(1.0);
  auto opt = grid_options(0.3, 5.8, 61);
  opt.require_1generic = false;
  const auto data = reduce_frames(c, opt);
  for (std::size_t i = 0; i < data.ts.size(); ++i) {
    EXPECT_LE(data.obstruction[0][i], 1e-7);
    EXPECT_EQ(data.genericity_order[i], 0);
  }
  const auto rep = classify_degeneracy(data, 1e-6);
  ASSERT_FALSE(rep.intervals.empty());
  const auto& iv = rep.intervals.front();
  EXPECT_EQ(iv.order, 1);
  EXPECT_FALSE(iv.isolated);
  EXPECT_LE(iv.witness_drift, 1e-6);  // constant 3-dim Lorentz witness subspace
  // vertex error surfaces in strict mode
  auto strict = grid_options(0.3, 5.8, 21);
  EXPECT_THROW(reduce_frames(c, strict), std::domain_error);
}

TEST(ReduceFrames, SphericalCurveIsTotallyTwoDegenerate) {
  // a closed curve on the unit 2-sphere inside Q_3 has mu_2 identically 0
  const Curve c = curves::spherical_closed();
  auto opt = grid_options(0.2, 6.0, 81);
  const auto data = reduce_frames(c, opt);
  for (std::size_t i = 0; i < data.ts.size(); ++i) {
    EXPECT_GE(data.genericity_order[i], 1);
    EXPECT_LE(std::fabs(data.mus[1][i]), 1e-7);
  }
  const auto rep = classify_degeneracy(data, 1e-6);
  bool found = false;
  for (const auto& iv : rep.intervals)
    if (iv.order == 2 && !iv.isolated) {
      found = true;
      EXPECT_LE(iv.witness_drift, 1e-6);
    }
  EXPECT_TRUE(found);
}

TEST(ReduceFrames, PaddedQ3CurveIsTotallyThreeDegenerateInQ5) {
  // generic curve in R^3 embedded in R^5 by zero padding
  const Curve c = Curve::analytic(-1.0, 1.0, Ambient::Euclidean, 5, [](const Jet& t) {
    const Jet t2 = t * t, t3 = t2 * t;
    const Jet zero(0.0, t.coeffs());
    return JetVec{t + 0.2 * t3, t2 - 0.1 * t3, 0.7 * t3 + 0.3 * t2, zero, zero};
  });
  auto opt = grid_options(-0.7, 0.7, 61);
  const auto data = reduce_frames(c, opt);
  for (std::size_t i = 0; i < data.ts.size(); ++i) {
    EXPECT_GE(data.genericity_order[i], 2);
    EXPECT_LE(data.obstruction[2][i], 1e-7);  // |X_(3)| vanishes
  }
  const auto rep = classify_degeneracy(data, 1e-6);
  bool found = false;
  for (const auto& iv : rep.intervals)
    if (iv.order == 3 && !iv.isolated) found = true;
  EXPECT_TRUE(found);
}

TEST(Reconstruct, ZeroInvariantsN2RoundTrip) {
  const std::size_t npts = 41;
  std::vector<double> s_grid = curves::uniform_grid(0.0, 2.0, npts);
  std::vector<std::vector<double>> mus{std::vector<double>(npts, 0.0)};
  const Curve c = reconstruct_from_invariants(s_grid, mus, 2);
  const auto data = reduce_frames(c, grid_options(0.2, 1.8, 41));
  for (std::size_t i = 0; i < data.ts.size(); ++i) {
    EXPECT_NEAR(data.mus[0][i], 0.0, 1e-7);
    EXPECT_NEAR(data.density[i], 1.0, 1e-7);
  }
}

TEST(Reconstruct, GriddedInvariantsRoundTrip) {
  const std::size_t npts = 401;
  std::vector<double> s_grid = curves::uniform_grid(-1.0, 1.0, npts);
  std::vector<std::vector<double>> mus(3, std::vector<double>(npts));
  for (std::size_t i = 0; i < npts; ++i) {
    const JetVec m = smooth_mus4(Jet(s_grid[i], 1));
    for (int j = 0; j < 3; ++j) mus[static_cast<std::size_t>(j)][i] = m[static_cast<std::size_t>(j)].value();
  }
  const Curve c = reconstruct_from_invariants(s_grid, mus, 4);
  const auto data = reduce_frames(c, grid_options(-0.9, 0.9, 101));
  double rms = 0.0;
  for (std::size_t i = 0; i < data.ts.size(); ++i) {
    const JetVec mu = smooth_mus4(Jet(data.ts[i], 1));
    for (int j = 0; j < 3; ++j) {
      const double diff = data.mus[static_cast<std::size_t>(j)][i] - mu[static_cast<std::size_t>(j)].value();
      rms += diff * diff;
    }
  }
  rms = std::sqrt(rms / (3.0 * static_cast<double>(data.ts.size())));
  EXPECT_LE(rms, 1e-6);
  EXPECT_THROW(reconstruct_from_invariants(s_grid, {mus[0], std::vector<double>(npts, -1.0), mus[2]}, 4),
               std::invalid_argument);
}

TEST(Reconstruct, FlowProperty) {
  const auto rf_full = integrate_frenet(4, 0.0, 1.0, smooth_mus4);
  const auto rf_a = integrate_frenet(4, 0.0, 0.5, smooth_mus4);
  const auto rf_b = integrate_frenet(4, 0.5, 1.0, smooth_mus4);
  const Mat whole = rf_full.frame_at(1.0);
  const Mat glued = rf_a.frame_at(0.5) * rf_b.frame_at(1.0);
  EXPECT_LE((whole - glued).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Reconstruct, GroupPreservationLongRange) {
  // |s| <= 20 with bounded invariants: ^t e S e stays within 1e-7
  // frame entries grow like exp(s), so the metric identity is verified at
  // the scale |e|^2 at which it is computed
  const auto rf = integrate_frenet(4, -20.0, 20.0, smooth_mus4);
  const Mat sm = metric_matrix(4);
  for (double s : {-20.0, -11.3, 0.0, 7.7, 20.0}) {
    const Mat e = rf.frame_at(s);
    const double scale = 1.0 + std::pow(e.cwiseAbs().maxCoeff(), 2.0);
    EXPECT_LE((e.transpose() * sm * e - sm).cwiseAbs().maxCoeff() / scale, 1e-7);
  }
  EXPECT_LE(rf.max_projection_correction, 1e-9);
}

TEST(OsculatingSphere, FullSpanAtTopOrder) {
  const Curve c = lift_to_lightcone(curves::generic_quartic_r4());
  const auto data = reduce_frames(c, grid_options(-0.6, 0.6, 41));
  const auto os = osculating_sphere(data, 20, 4);
  Eigen::JacobiSVD<Mat> svd(os.basis);
  EXPECT_EQ(os.basis.cols(), 6);
  EXPECT_GE(svd.singularValues()(5), 1e-6);  // spans all of R^6
}

TEST(OsculatingSphere, DerivativeSpanEquality) {
  const Curve c = lift_to_lightcone(curves::generic_quartic_r4());
  const auto data = reduce_frames(c, grid_options(-0.6, 0.6, 41));
  for (int k = 1; k <= 3; ++k) {
    for (std::size_t i : {10u, 20u, 30u}) {
      const auto os = osculating_sphere(data, i, k);
      // derivative span <F, F', ..., F^{(k+1)}> from exact jets
      const JetVec f = c.jets(data.ts[i], k + 2);
      Mat dspan(6, k + 2);
      for (int m = 0; m <= k + 1; ++m)
        for (int q = 0; q < 6; ++q)
          dspan(q, m) = f[static_cast<std::size_t>(q)].derivative(m);
      const auto angles = principal_angles(os.basis, dspan);
      EXPECT_LE(angles.back(), 1e-6) << "k=" << k << " i=" << i;
    }
  }
}

TEST(OsculatingSphere, DegenerateCurveHasConstantSphere) {
  // the order-2 osculating sphere of a curve on the unit sphere is that
  // sphere at every point: radius 1, span constant
  const Curve c = curves::spherical_closed();
  const auto data = reduce_frames(c, grid_options(0.3, 5.9, 41));
  const auto first = osculating_sphere(data, 5, 2);
  EXPECT_NEAR(first.radius, 1.0, 1e-6);
  for (std::size_t i : {15u, 25u, 35u}) {
    const auto os = osculating_sphere(data, i, 2);
    EXPECT_NEAR(os.radius, 1.0, 1e-6);
    const auto angles = principal_angles(first.basis, os.basis);
    EXPECT_LE(angles.back(), 1e-6);
  }
}

TEST(TraceInvariant, ValueAndFirstDerivativeAtZero) {
  const Curve c = lift_to_lightcone(curves::generic_quartic_r4());
  const auto data = reduce_frames(c, grid_options(-0.6, 0.6, 81));
  for (int j = 2; j <= 3; ++j) {
    EXPECT_NEAR(trace_of_pair(data, 40, 40, j), j + 2, 1e-10);
    // first derivative in h vanishes at h = 0: the symmetric difference
    // quotient must decay quadratically under grid refinement
    const double h1 = data.s[41] - data.s[40];
    const double h2 = data.s[42] - data.s[40];
    const double d1 = (trace_of_pair(data, 41, 40, j) - trace_of_pair(data, 39, 40, j)) / (2 * h1);
    const double d2 = (trace_of_pair(data, 42, 40, j) - trace_of_pair(data, 38, 40, j)) / (2 * h2);
    EXPECT_LE(std::fabs(d1), 0.35 * std::fabs(d2) + 1e-9);
  }
}

TEST(TraceInvariant, MatchesMuOnGenericQuartic) {
  const Curve c = lift_to_lightcone(curves::generic_quartic_r4());
  const auto data = reduce_frames(c, grid_options(-0.6, 0.6, 201));
  for (int j = 2; j <= 3; ++j) {
    const auto kj = trace_invariant(data, j);
    for (std::size_t i = 5; i + 5 < data.ts.size(); i += 12) {
      const double mu = std::fabs(data.mus[static_cast<std::size_t>(j - 1)][i]);
      // relative agreement away from sign-change zeros of mu_j
      EXPECT_LE(std::fabs(kj[i] - mu), 1e-4 * (0.1 + mu)) << "j=" << j << " i=" << i;
    }
  }
}

TEST(ChartGuard, CurveThroughPoleStillReduces) {
  // great-circle-ish curve passing near the north pole of the chart
  const Curve c = Curve::analytic(-0.5, 0.5, Ambient::Sphere, 3, [](const Jet& t) {
    Jet ct, st;
    sincos(t, st, ct);
    Jet c3, s3;
    sincos(3.0 * t, s3, c3);
    const Jet z = 0.2 * s3;
    const Jet r = sqrt(1.0 - z * z);
    return JetVec{r * ct, r * st, z, Jet(0.0, t.coeffs())};
  });
  // t = 0 maps to the north pole (1,0,0,0), the chart singularity
  const auto data = reduce_frames(c, grid_options(-0.4, 0.4, 41));
  for (std::size_t i = 0; i < data.ts.size(); ++i) {
    EXPECT_TRUE(std::isfinite(data.density[i]));
    EXPECT_TRUE(std::isfinite(data.mus[0][i]));
  }
  // the frames still project onto the curve: [e_0] = [F]
  const Curve lc = lift_to_lightcone(c);
  for (std::size_t i : {5u, 20u, 35u}) {
    const Vec e0 = data.frames[i].col(0);
    const Vec f = lc.point(data.ts[i]);
    const Vec diff = e0 / (e0(0) + e0(4)) - f / (f(0) + f(4));
    EXPECT_LE(diff.norm(), 1e-9);
  }
}
