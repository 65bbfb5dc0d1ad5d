#pragma once

// Curve representations and the charts between R^n, S^n and the projective
// light cone Q_n: stereographic projection, Dirac-Weyl embedding, and the
// rigid-motion embedding into the Moebius group. Curves carry a jet oracle;
// analytic curves provide exact derivatives, sampled curves go through
// Fornberg finite-difference stencils.

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "moebius/jet.hpp"
#include "moebius/lorentz.hpp"
#include "moebius/numerics.hpp"

namespace moebius {

enum class Ambient { Euclidean, Sphere, LightCone };

class Curve {
 public:
  using JetFn = std::function<JetVec(double, int)>;

  Curve(double t0, double t1, Ambient ambient, int sphere_dim, JetFn jets, bool closed = false,
        int max_coeffs = Jet::kMaxCoeffs)
      : t0_(t0), t1_(t1), ambient_(ambient), n_(sphere_dim), jets_(std::move(jets)),
        closed_(closed), max_coeffs_(max_coeffs) {
    detail::require(t1_ > t0_, "curve: empty parameter interval");
    detail::require(n_ >= 2, "curve: sphere dimension must be >= 2");
  }

  double t_min() const { return t0_; }
  double t_max() const { return t1_; }
  bool closed() const { return closed_; }
  Ambient ambient() const { return ambient_; }
  int sphere_dim() const { return n_; }
  int max_coeffs() const { return max_coeffs_; }
  int coord_dim() const {
    switch (ambient_) {
      case Ambient::Euclidean: return n_;
      case Ambient::Sphere: return n_ + 1;
      default: return n_ + 2;
    }
  }

  JetVec jets(double t, int coeffs) const {
    detail::require(coeffs <= max_coeffs_, "curve: jet order beyond the derivative oracle");
    return jets_(t, coeffs);
  }

  Vec point(double t) const {
    const JetVec j = jets_(t, 1);
    Vec p(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) p(static_cast<Eigen::Index>(i)) = j[i].value();
    return p;
  }

  Vec derivative(double t, int order) const {
    const JetVec j = jets(t, order + 1);
    Vec p(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
      p(static_cast<Eigen::Index>(i)) = j[i].derivative(order);
    return p;
  }

  // Analytic curve from a jet-valued lambda.
  static Curve analytic(double t0, double t1, Ambient ambient, int sphere_dim,
                        std::function<JetVec(const Jet&)> f, bool closed = false) {
    return Curve(t0, t1, ambient, sphere_dim,
                 [f = std::move(f)](double t, int coeffs) { return f(Jet::variable(t, coeffs)); },
                 closed);
  }

 private:
  double t0_, t1_;
  Ambient ambient_;
  int n_;
  JetFn jets_;
  bool closed_;
  int max_coeffs_;
};

// ---------------------------------------------------------------------------
// Charts.

// Stereographic projection from the north pole N = (1, 0, ..., 0).
inline Vec stereographic(const Vec& p) {
  detail::require(p.size() >= 3, "stereographic: need a point of S^n, n >= 2");
  detail::require(std::fabs(p.norm() - 1.0) <= 1e-9, "stereographic: point not on the sphere");
  detail::require(std::fabs(1.0 - p(0)) > 1e-12, "stereographic: pole");
  return p.tail(p.size() - 1) / (1.0 - p(0));
}

inline Vec stereographic_inverse(const Vec& x) {
  const double q = x.squaredNorm();
  Vec p(x.size() + 1);
  p(0) = (q - 1.0) / (q + 1.0);
  p.tail(x.size()) = 2.0 * x / (q + 1.0);
  return p;
}

// Dirac-Weyl embedding x -> (1 : x : |x|^2/2); satisfies the Darboux quadric
// identically in exact arithmetic.
inline LightRay dirac_weyl(const Vec& x) {
  Vec v(x.size() + 2);
  v(0) = 1.0;
  v.segment(1, x.size()) = x;
  v(x.size() + 1) = 0.5 * x.squaredNorm();
  return LightRay(v, 1e-12);
}

// Chart inverse: homogeneous light-cone point -> R^n (requires v^0 != 0).
inline Vec dirac_weyl_inverse(const Vec& v) {
  detail::require(std::fabs(v(0)) > 1e-14 * v.norm(), "chart: point at infinity");
  return v.segment(1, v.size() - 2) / v(0);
}

// Rigid motion (x, A) as a Moebius matrix.
inline MoebiusElement euclidean_embed(const Vec& x, const Mat& a) {
  const int n = static_cast<int>(x.size());
  detail::require(a.rows() == n && a.cols() == n, "euclidean_embed: shape mismatch");
  detail::require((a.transpose() * a - Mat::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10 &&
                      a.determinant() > 0.0,
                  "euclidean_embed: A must be special orthogonal");
  Mat j = Mat::Identity(n + 2, n + 2);
  j.block(1, 0, n, 1) = x;
  j(n + 1, 0) = 0.5 * x.squaredNorm();
  j.block(1, 1, n, n) = a;
  j.block(n + 1, 1, 1, n) = (x.transpose() * a);
  return MoebiusElement(j, 1e-9);
}

// ---------------------------------------------------------------------------
// Lifts and group actions on curves.

// Lift any curve to its homogeneous light-cone representative. Sphere points
// lift through (1 - p^0 : phat : (1 + p^0)/2), which is smooth through the
// pole; Euclidean points through the Dirac-Weyl chart.
inline Curve lift_to_lightcone(const Curve& c) {
  if (c.ambient() == Ambient::LightCone) return c;
  const int n = c.sphere_dim();
  if (c.ambient() == Ambient::Euclidean) {
    return Curve(
        c.t_min(), c.t_max(), Ambient::LightCone, n,
        [c, n](double t, int coeffs) {
          const JetVec x = c.jets(t, coeffs);
          JetVec v(static_cast<std::size_t>(n) + 2, Jet(0.0, coeffs));
          v[0] = Jet(1.0, coeffs);
          Jet q(0.0, coeffs);
          for (int i = 0; i < n; ++i) {
            v[static_cast<std::size_t>(i) + 1] = x[static_cast<std::size_t>(i)];
            q += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
          }
          v[static_cast<std::size_t>(n) + 1] = 0.5 * q;
          return v;
        },
        c.closed(), c.max_coeffs());
  }
  return Curve(
      c.t_min(), c.t_max(), Ambient::LightCone, n,
      [c, n](double t, int coeffs) {
        const JetVec p = c.jets(t, coeffs);
        JetVec v(static_cast<std::size_t>(n) + 2, Jet(0.0, coeffs));
        v[0] = 1.0 - p[0];
        for (int i = 1; i <= n; ++i) v[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)];
        v[static_cast<std::size_t>(n) + 1] = (1.0 + p[0]) * 0.5;
        return v;
      },
      c.closed(), c.max_coeffs());
}

// Push a curve through a Moebius motion (in homogeneous coordinates).
inline Curve act_on_curve(const MoebiusElement& g, const Curve& curve) {
  const Curve lc = lift_to_lightcone(curve);
  detail::require(g.sphere_dim() == lc.sphere_dim(), "act_on_curve: dimension mismatch");
  const Mat m = g.matrix();
  const int d = static_cast<int>(m.rows());
  return Curve(
      lc.t_min(), lc.t_max(), Ambient::LightCone, lc.sphere_dim(),
      [lc, m, d](double t, int coeffs) {
        const JetVec v = lc.jets(t, coeffs);
        JetVec w(static_cast<std::size_t>(d), Jet(0.0, coeffs));
        for (int i = 0; i < d; ++i) {
          Jet s = m(i, 0) * v[0];
          for (int j = 1; j < d; ++j) s += m(i, j) * v[static_cast<std::size_t>(j)];
          w[static_cast<std::size_t>(i)] = s;
        }
        return w;
      },
      lc.closed(), lc.max_coeffs());
}

// ---------------------------------------------------------------------------
// Sampled curves.

struct SampledCurve {
  std::vector<double> ts;
  std::vector<Vec> points;
  Ambient ambient = Ambient::Euclidean;
  int sphere_dim = 0;
  bool closed = false;
};

// Curve whose jets come from Fornberg stencils over the samples. Stencils
// have consistency order >= 4, one-sided at the ends (wrapped when closed).
inline Curve derivatives_from_samples(const SampledCurve& sc, int order) {
  detail::require(order <= 6, "derivatives_from_samples: order must be <= 6");
  const std::size_t nsamp = sc.ts.size();
  detail::require(nsamp >= 9 && nsamp == sc.points.size(),
                  "derivatives_from_samples: need at least 9 samples");
  double hmin = 1e300, hmax = 0.0;
  for (std::size_t i = 1; i < nsamp; ++i) {
    const double h = sc.ts[i] - sc.ts[i - 1];
    detail::require(h > 0.0, "derivatives_from_samples: grid must be strictly increasing");
    hmin = std::min(hmin, h);
    hmax = std::max(hmax, h);
  }
  detail::require(hmax / hmin <= 1.5, "derivatives_from_samples: grid not quasi-uniform");

  const int coord_dim = static_cast<int>(sc.points[0].size());
  const int width = std::min(static_cast<int>(nsamp), order + 5);
  detail::require(static_cast<int>(nsamp) >= width,
                  "derivatives_from_samples: too few samples for requested order");
  const double period = sc.ts.back() - sc.ts.front();

  auto jets_fn = [sc, width, coord_dim, period, nsamp](double t, int coeffs) {
    // locate the window of `width` samples around t
    auto it = std::lower_bound(sc.ts.begin(), sc.ts.end(), t);
    long center = it - sc.ts.begin();
    std::vector<double> xs(static_cast<std::size_t>(width));
    std::vector<long> idx(static_cast<std::size_t>(width));
    if (sc.closed) {
      for (int j = 0; j < width; ++j) {
        long i = center - width / 2 + j;
        double shift = 0.0;
        long wrapped = i;
        while (wrapped < 0) { wrapped += static_cast<long>(nsamp) - 1; shift -= period; }
        while (wrapped >= static_cast<long>(nsamp)) { wrapped -= static_cast<long>(nsamp) - 1; shift += period; }
        idx[static_cast<std::size_t>(j)] = wrapped;
        xs[static_cast<std::size_t>(j)] = sc.ts[static_cast<std::size_t>(wrapped)] + shift;
      }
    } else {
      long lo = std::clamp<long>(center - width / 2, 0, static_cast<long>(nsamp) - width);
      for (int j = 0; j < width; ++j) {
        idx[static_cast<std::size_t>(j)] = lo + j;
        xs[static_cast<std::size_t>(j)] = sc.ts[static_cast<std::size_t>(lo + j)];
      }
    }
    JetVec out(static_cast<std::size_t>(coord_dim), Jet(0.0, coeffs));
    double factorial = 1.0;
    for (int m = 0; m < coeffs; ++m) {
      if (m > 0) factorial *= m;
      const auto w = fornberg_weights(t, xs, m);
      for (int c = 0; c < coord_dim; ++c) {
        double s = 0.0;
        for (int j = 0; j < width; ++j)
          s += w[static_cast<std::size_t>(j)] *
               sc.points[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])](c);
        out[static_cast<std::size_t>(c)].raw(m) = s / factorial;
      }
    }
    return out;
  };

  return Curve(sc.ts.front(), sc.ts.back(), sc.ambient, sc.sphere_dim, jets_fn, sc.closed,
               order + 1);
}

}  // namespace moebius
