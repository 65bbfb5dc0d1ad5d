#include <gtest/gtest.h>

#include <random>

#include <moebius/models.hpp>

#include "test_curves.hpp"

using namespace moebius;

TEST(Stereographic, SouthPoleAndEquator) {
  Vec south(4);
  south << -1.0, 0.0, 0.0, 0.0;
  EXPECT_LE(stereographic(south).norm(), 1e-15);
  Vec eq(4);
  eq << 0.0, 1.0, 0.0, 0.0;
  Vec img = stereographic(eq);
  EXPECT_NEAR(img(0), 1.0, 1e-15);
  EXPECT_LE(img.tail(2).norm(), 1e-15);
}

TEST(Stereographic, RoundTrip) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 50; ++trial) {
    Vec x(3);
    for (int i = 0; i < 3; ++i) x(i) = dist(rng);
    EXPECT_LE((stereographic(stereographic_inverse(x)) - x).norm(), 1e-12 * (1.0 + x.norm()));
  }
}

TEST(Stereographic, PoleRejected) {
  Vec north(4);
  north << 1.0, 0.0, 0.0, 0.0;
  EXPECT_THROW(stereographic(north), std::invalid_argument);
}

TEST(Stereographic, ConformalityWitness) {
  // pulled-back Euclidean metric is a point-dependent multiple of the sphere
  // metric: ratio independent of the tangent direction
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 20; ++trial) {
    Vec p(4);
    for (int i = 0; i < 4; ++i) p(i) = dist(rng);
    p /= p.norm();
    if (p(0) > 0.9) continue;
    // two random tangent vectors at p
    auto tangent = [&]() {
      Vec t(4);
      for (int i = 0; i < 4; ++i) t(i) = dist(rng);
      t -= t.dot(p) * p;
      return Vec(t / t.norm());
    };
    const Vec t1 = tangent(), t2 = tangent();
    const double h = 1e-6;
    auto pushforward = [&](const Vec& t) {
      const Vec pp = Vec((p + h * t) / (p + h * t).norm());
      const Vec pm = Vec((p - h * t) / (p - h * t).norm());
      return Vec((stereographic(pp) - stereographic(pm)) / (2.0 * h));
    };
    const double r1 = pushforward(t1).squaredNorm();
    const double r2 = pushforward(t2).squaredNorm();
    EXPECT_NEAR(r1, r2, 1e-6 * std::max(r1, r2));
  }
}

TEST(DiracWeyl, BaseAndQuadric) {
  const LightRay at_zero = dirac_weyl(Vec::Zero(3));
  EXPECT_LE((at_zero.rep() - basis_vector(3, 0)).norm(), 1e-15);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 50; ++trial) {
    Vec x(3);
    for (int i = 0; i < 3; ++i) x(i) = 3.0 * dist(rng);
    const Vec v = dirac_weyl(x).rep();
    const double residual = std::fabs(inner(v, v));
    const double bound = 4.0 * std::numeric_limits<double>::epsilon() *
                         (1.0 + std::pow(x.norm(), 4));
    EXPECT_LE(residual, bound);
  }
}

TEST(DiracWeyl, NorthPoleExtension) {
  // chi(sigma(N)) = (0 : 0 : 1): the lift of the sphere curve through N
  Vec north(4);
  north << 1.0, 0.0, 0.0, 0.0;
  Curve c = Curve::analytic(-0.5, 0.5, Ambient::Sphere, 3, [](const Jet& t) {
    Jet ct, st;
    sincos(t, st, ct);
    return JetVec{ct, st, Jet(0.0, t.coeffs()), Jet(0.0, t.coeffs())};
  });
  const Curve lifted = lift_to_lightcone(c);
  const Vec at_pole = lifted.point(0.0);  // the curve passes through N at t=0
  Vec expected = Vec::Zero(5);
  expected(4) = 1.0;
  EXPECT_LE((at_pole / at_pole.norm() - expected).norm(), 1e-12);
}

TEST(EuclideanEmbed, IdentityAndHomomorphism) {
  EXPECT_LE((euclidean_embed(Vec::Zero(3), Mat::Identity(3, 3)).matrix() -
             Mat::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-15);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> dist;
  Vec x(3), y(3);
  for (int i = 0; i < 3; ++i) {
    x(i) = dist(rng);
    y(i) = dist(rng);
  }
  const Mat lhs = (euclidean_embed(x, Mat::Identity(3, 3)) *
                   euclidean_embed(y, Mat::Identity(3, 3))).matrix();
  const Mat rhs = euclidean_embed(x + y, Mat::Identity(3, 3)).matrix();
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EuclideanEmbed, ActionIsAffineMap) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 10; ++trial) {
    Vec x(3), y(3), axis(3);
    for (int i = 0; i < 3; ++i) {
      x(i) = dist(rng);
      y(i) = dist(rng);
      axis(i) = dist(rng);
    }
    axis /= axis.norm();
    const double theta = dist(rng);
    // Rodrigues rotation as a direct oracle
    Mat k = Mat::Zero(3, 3);
    k(0, 1) = -axis(2); k(0, 2) = axis(1);
    k(1, 0) = axis(2); k(1, 2) = -axis(0);
    k(2, 0) = -axis(1); k(2, 1) = axis(0);
    const Mat a = Mat::Identity(3, 3) + std::sin(theta) * k + (1 - std::cos(theta)) * k * k;
    const auto g = euclidean_embed(x, a);
    const LightRay img = act(g, dirac_weyl(y));
    EXPECT_TRUE(img.approx_equal(dirac_weyl(a * y + x), 1e-10));
  }
}

TEST(EuclideanEmbed, RejectsNonRotations) {
  Mat flip = Mat::Identity(3, 3);
  flip(2, 2) = -1.0;
  EXPECT_THROW(euclidean_embed(Vec::Zero(3), flip), std::invalid_argument);
}

TEST(SampledCurve, CircleSecondDerivative) {
  SampledCurve sc;
  sc.ambient = Ambient::Euclidean;
  sc.sphere_dim = 2;
  const std::size_t n = 201;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    sc.ts.push_back(t);
    Vec p(2);
    p << std::cos(t), std::sin(t);
    sc.points.push_back(p);
  }
  const Curve c = derivatives_from_samples(sc, 4);
  for (double t : {-0.8, -0.1, 0.33, 0.9}) {
    const Vec d2 = c.derivative(t, 2);
    const Vec pos = c.point(t);
    EXPECT_LE((d2 + pos).norm(), 1e-7) << "t=" << t;  // x'' = -x, h^4 accuracy
  }
}

TEST(SampledCurve, LinearHasZeroHigherDerivatives) {
  SampledCurve sc;
  sc.ambient = Ambient::Euclidean;
  sc.sphere_dim = 2;
  for (int i = 0; i < 30; ++i) {
    sc.ts.push_back(0.1 * i);
    Vec p(2);
    p << 2.0 * 0.1 * i + 1.0, -0.5 * 0.1 * i;
    sc.points.push_back(p);
  }
  const Curve c = derivatives_from_samples(sc, 4);
  EXPECT_LE(c.derivative(1.5, 2).norm(), 1e-10);
  EXPECT_LE(c.derivative(1.5, 3).norm(), 1e-10);
}

TEST(SampledCurve, Validation) {
  SampledCurve sc;
  sc.ambient = Ambient::Euclidean;
  sc.sphere_dim = 2;
  for (int i = 0; i < 5; ++i) {
    sc.ts.push_back(i);
    sc.points.push_back(Vec::Zero(2));
  }
  EXPECT_THROW(derivatives_from_samples(sc, 2), std::invalid_argument);  // too few
  EXPECT_THROW(derivatives_from_samples(sc, 7), std::invalid_argument);  // order cap
}

TEST(LiftToLightcone, EuclideanQuadricResidual) {
  const Curve h = curves::helix(1.0, 0.4);
  const Curve lifted = lift_to_lightcone(h);
  for (double t : {-1.5, 0.0, 0.7}) {
    const Vec v = lifted.point(t);
    EXPECT_LE(std::fabs(inner(v, v)), 1e-13 * v.squaredNorm());
  }
}

TEST(ActOnCurve, MovesPointsConsistently) {
  const Curve h = curves::helix(1.0, 0.4);
  const auto g = random_moebius(21, 3);
  const Curve moved = act_on_curve(g, h);
  const Curve lifted = lift_to_lightcone(h);
  for (double t : {-1.0, 0.3}) {
    const LightRay expect = act(g, LightRay(lifted.point(t), 1e-9));
    EXPECT_TRUE(LightRay(moved.point(t), 1e-7).approx_equal(expect, 1e-9));
  }
}
