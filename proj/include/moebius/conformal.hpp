#pragma once

// Conformal Frenet theory on Q_n: the frame reduction producing the conformal
// arclength and invariants mu_1..mu_{n-1}, the Cartan-Darboux reconstruction,
// osculating spheres, degeneracy classification and trace invariants.
//
// The reduction is explicit gauge fixing: starting from a chart-based zeroth
// order frame, each stage multiplies by an isotropy-subgroup element chosen
// so that the next set of connection components vanishes. All gauge data are
// jets, so no finite differencing enters anywhere in the pipeline.

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "moebius/jet.hpp"
#include "moebius/lorentz.hpp"
#include "moebius/models.hpp"
#include "moebius/numerics.hpp"

namespace moebius {

struct ConformalFrenetData {
  int n = 0;
  std::vector<double> ts;          // input parameter grid
  std::vector<double> s;           // conformal arclength along the grid
  std::vector<double> density;     // ds/dt samples
  std::vector<Jet> density_jets;   // density with derivatives (grid integration)
  std::vector<Mat> frames;         // Frenet frames e(t)
  std::vector<Mat> frame_dots;     // d e / dt, from the jets
  // mus[j-1][i] = mu_j at grid point i; NaN where genericity fails
  std::vector<std::vector<double>> mus;
  // obstruction[k-1][i] = |p| (k=1), |X_(k)| (k>=2); the reduction blockers
  std::vector<std::vector<double>> obstruction;
  std::vector<int> genericity_order;  // per point, in 0..n-1

  double mu(int j, std::size_t i) const { return mus[static_cast<std::size_t>(j - 1)][i]; }
};

struct ReduceOptions {
  std::vector<double> grid;        // evaluation grid (required)
  double degeneracy_tol = 1e-8;
  bool require_1generic = true;    // throw on a vertex inside the range
  int max_stage_order = -1;        // cap the reduction (-1: full); used by tests
  std::optional<Mat> initial_gauge;  // extra constant first-order rotation (gauge tests)
};

namespace detail {

// Rotation with R e1 = vhat, smooth in the jet inputs, identity when aligned:
//   R = I - (e1 + w)(e1 + w)^T / (1 + w_1) + 2 w e1^T.
inline std::vector<JetVec> rotation_to_first_axis(const JetVec& w) {
  const std::size_t m = w.size();
  const int nc = w[0].coeffs();
  std::vector<JetVec> r(m, JetVec(m, Jet(0.0, nc)));
  Jet denom = 1.0 + w[0];
  if (denom.value() <= 1e-9)
    throw std::runtime_error("frame reduction: alignment step near antipodal; refine the grid");
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      Jet uij = (w[i] + ((i == 0) ? Jet(1.0, nc) : Jet(0.0, nc))) *
                (w[j] + ((j == 0) ? Jet(1.0, nc) : Jet(0.0, nc)));
      r[i][j] = Jet((i == j) ? 1.0 : 0.0, nc) - uij / denom;
      if (j == 0) r[i][j] += 2.0 * w[i];
    }
  }
  return r;
}

// Continuity chain for the aligning rotations: the rotation at each grid
// point is the previous one composed with the small residual rotation.
class Aligner {
 public:
  explicit Aligner(int dim) : dim_(dim) {}

  // vhat: unit jet vector; returns R with R(value) * e1 = vhat(value) and
  // the full jet of a smooth local gauge realizing it.
  std::vector<JetVec> operator()(const JetVec& vhat) {
    const int nc = vhat[0].coeffs();
    if (!prev_) prev_ = Mat::Identity(dim_, dim_);
    // w = prev^T vhat, renormalized
    auto residual = [&]() {
      JetVec w(static_cast<std::size_t>(dim_), Jet(0.0, nc));
      for (int i = 0; i < dim_; ++i) {
        Jet s(0.0, nc);
        for (int j = 0; j < dim_; ++j) s += (*prev_)(j, i) * vhat[static_cast<std::size_t>(j)];
        w[static_cast<std::size_t>(i)] = s;
      }
      Jet nrm = sqrt(squared_norm(w));
      for (auto& wi : w) wi = wi / nrm;
      return w;
    };
    JetVec w = residual();
    if (w[0].value() < -0.5) {
      // the direction swung past the antipode (near-degeneracy or first
      // point); recover by composing with a half-turn. The frame may jump
      // here, which only affects sign conventions at such points.
      Mat flip = Mat::Identity(dim_, dim_);
      flip(0, 0) = -1.0;
      flip(dim_ - 1, dim_ - 1) = -1.0;
      *prev_ = *prev_ * flip;
      w = residual();
    }
    auto rloc = rotation_to_first_axis(w);
    // full rotation = prev * rloc
    std::vector<JetVec> r(static_cast<std::size_t>(dim_),
                          JetVec(static_cast<std::size_t>(dim_), Jet(0.0, nc)));
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) {
        Jet s(0.0, nc);
        for (int k = 0; k < dim_; ++k)
          s += (*prev_)(i, k) * rloc[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
        r[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s;
      }
    Mat rv(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        rv(i, j) = r[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].value();
    prev_ = rv;
    return r;
  }

 private:
  int dim_;
  std::optional<Mat> prev_;
};

inline JetMat jet_matrix_from(const Mat& m, int nc) {
  JetMat out(static_cast<int>(m.rows()), static_cast<int>(m.cols()), nc);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) = Jet(m(i, j), nc);
  return out;
}

inline Mat value_of(const JetMat& m) {
  Mat out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) = m(i, j).value();
  return out;
}

inline Mat derivative_of(const JetMat& m) {
  Mat out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) = m(i, j).derivative(1);
  return out;
}

// phi = e^{-1} de/dt with e^{-1} = S e^T S; one jet coefficient is consumed.
inline JetMat connection_of(const JetMat& e, const Mat& s) {
  const int d = e.rows();
  const int nc = e(0, 0).coeffs();
  JetMat edot(d, d, nc - 1);
  JetMat etrunc(d, d, nc - 1);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      edot(i, j) = e(i, j).derivative_jet();
      etrunc(i, j) = e(i, j).truncated(nc - 1);
    }
  const JetMat sj = jet_matrix_from(s, nc - 1);
  return sj * etrunc.transpose() * sj * edot;
}

}  // namespace detail

// The Frenet-Serret coefficient matrix phi(d/ds) for given invariants.
inline Mat frenet_matrix(int n, const std::vector<double>& mu) {
  detail::require(static_cast<int>(mu.size()) == n - 1, "frenet_matrix: need n-1 invariants");
  const int d = n + 2;
  Mat f = Mat::Zero(d, d);
  f(1, 0) = 1.0;                    // e0' = e1
  f(0, 1) = mu[0];                  // e1' = mu1 e0 + e_{n+1}
  f(d - 1, 1) = 1.0;
  f(0, 2) = 1.0;                    // e2' = e0 + mu2 e3
  if (n >= 3) f(3, 2) = mu[1];
  for (int k = 3; k <= n - 1; ++k) {  // ek' = -mu_{k-1} e_{k-1} + mu_k e_{k+1}
    f(k - 1, k) = -mu[static_cast<std::size_t>(k - 2)];
    f(k + 1, k) = mu[static_cast<std::size_t>(k - 1)];
  }
  if (n >= 3) f(n - 1, n) = -mu[static_cast<std::size_t>(n - 2)];  // en' = -mu_{n-1} e_{n-1}
  f(1, d - 1) = mu[0];              // e_{n+1}' = mu1 e1 + e2
  f(2, d - 1) = 1.0;
  return f;
}

// ---------------------------------------------------------------------------
// reduce_frames

inline ConformalFrenetData reduce_frames(const Curve& curve, const ReduceOptions& opt) {
  detail::require(!opt.grid.empty(), "reduce_frames: empty grid");
  Curve lc = lift_to_lightcone(curve);
  const int n = lc.sphere_dim();
  const int d = n + 2;
  const int want_coeffs = std::max(n + 3, 6);
  detail::require(lc.max_coeffs() >= want_coeffs,
                  "reduce_frames: derivative oracle too shallow for this dimension");
  const Mat s_metric = metric_matrix(n);

  // chart guard: keep F^0 away from zero, conjugate the frames back afterwards
  Mat guard_inverse;
  bool guarded = false;
  {
    auto chart_margin = [&](const Curve& c) {
      double worst = 1e300;
      for (double t : opt.grid) {
        const Vec f = c.point(t);
        worst = std::min(worst, f(0) / f.norm());
      }
      return worst;
    };
    if (chart_margin(lc) < 0.05) {
      bool ok = false;
      for (int trial = 0; trial < 32 && !ok; ++trial) {
        const MoebiusElement g =
            sphere_rotation(n, trial % n, 0.5 + 2.399963229728653 * trial);
        Curve moved = act_on_curve(g, lc);
        if (chart_margin(moved) >= 0.05) {
          guard_inverse = moebius_inverse(g.matrix());
          lc = std::move(moved);
          guarded = true;
          ok = true;
        }
      }
      detail::require(ok, "reduce_frames: could not move the curve off the chart pole");
    }
  }

  const std::size_t npts = opt.grid.size();
  ConformalFrenetData out;
  out.n = n;
  out.ts = opt.grid;
  out.density.resize(npts);
  out.density_jets.resize(npts);
  out.frames.resize(npts);
  out.frame_dots.resize(npts);
  out.mus.assign(static_cast<std::size_t>(n - 1),
                 std::vector<double>(npts, std::numeric_limits<double>::quiet_NaN()));
  out.obstruction.assign(static_cast<std::size_t>(n - 1), std::vector<double>(npts, 0.0));
  out.genericity_order.assign(npts, 0);

  detail::Aligner align_first(n);
  detail::Aligner align_p(n - 1);
  std::vector<detail::Aligner> align_x;
  for (int k = 3; k <= n - 1; ++k) align_x.emplace_back(n - k + 1);

  const int max_stage = (opt.max_stage_order < 0) ? n : opt.max_stage_order;

  for (std::size_t ip = 0; ip < npts; ++ip) {
    const double t = opt.grid[ip];
    const JetVec f = lc.jets(t, want_coeffs);
    const int nc = want_coeffs;

    // zeroth order frame through the Dirac-Weyl chart: e = J(F^A / F^0)
    JetVec x(static_cast<std::size_t>(n), Jet(0.0, nc));
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i) + 1] / f[0];
    JetMat e = JetMat::identity(d, nc);
    {
      Jet q(0.0, nc);
      for (int i = 0; i < n; ++i) {
        e(i + 1, 0) = x[static_cast<std::size_t>(i)];
        e(d - 1, i + 1) = x[static_cast<std::size_t>(i)];
        q += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
      }
      e(d - 1, 0) = 0.5 * q;
    }
    if (opt.initial_gauge) {
      e = e * detail::jet_matrix_from(*opt.initial_gauge, nc);
    }

    JetMat phi = detail::connection_of(e, s_metric);

    // --- first order: rotate (phi^A_0) onto the first axis
    {
      JetVec v(static_cast<std::size_t>(n), Jet(0.0, 1));
      for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = phi(i + 1, 0);
      Jet nrm = sqrt(squared_norm(v));
      detail::require(nrm.value() > 1e-13, "reduce_frames: not an immersion");
      for (auto& vi : v) vi = vi / nrm;
      auto rot = align_first(v);
      JetMat k = JetMat::identity(d, v[0].coeffs());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k(i + 1, j + 1) = rot[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      e = e * k;
      phi = detail::connection_of(e, s_metric);
    }

    // --- second order: kill h^alpha = phi^alpha_1 / phi^1_0
    {
      const Jet p10 = phi(1, 0);
      JetVec h(static_cast<std::size_t>(n - 1), Jet(0.0, 1));
      for (int i = 0; i < n - 1; ++i) h[static_cast<std::size_t>(i)] = phi(i + 2, 1) / p10;
      JetMat k = JetMat::identity(d, h[0].coeffs());
      Jet hh(0.0, h[0].coeffs());
      for (int i = 0; i < n - 1; ++i) {
        k(0, i + 2) = h[static_cast<std::size_t>(i)];
        k(i + 2, d - 1) = h[static_cast<std::size_t>(i)];
        hh += h[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)];
      }
      k(0, d - 1) = 0.5 * hh;
      e = e * k;
      phi = detail::connection_of(e, s_metric);
    }

    // --- third order: normalize the p-vector (vertexes stop here)
    bool generic = true;
    {
      const Jet p10 = phi(1, 0);
      JetVec p(static_cast<std::size_t>(n - 1), Jet(0.0, 1));
      for (int i = 0; i < n - 1; ++i) p[static_cast<std::size_t>(i)] = phi(0, i + 2) / p10;
      Jet pn2 = squared_norm(p);
      const double pmag = std::sqrt(pn2.value());
      out.obstruction[0][ip] = pmag;
      if (pmag < opt.degeneracy_tol) {
        if (opt.require_1generic)
          throw std::domain_error("reduce_frames: vertex (1-degenerate point) in range");
        generic = false;
        out.density[ip] = 0.0;
        out.density_jets[ip] = Jet(0.0, 2);
      } else {
        Jet pn = sqrt(pn2);
        Jet r = 1.0 / sqrt(pn);
        JetMat k = JetMat::identity(d, r.coeffs());
        k(0, 0) = 1.0 / r;
        k(d - 1, d - 1) = r;
        if (n >= 3) {
          JetVec ph(static_cast<std::size_t>(n - 1), Jet(0.0, pn.coeffs()));
          for (int i = 0; i < n - 1; ++i) ph[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)] / pn;
          auto rot = align_p(ph);
          for (int i = 0; i < n - 1; ++i)
            for (int j = 0; j < n - 1; ++j)
              k(i + 2, j + 2) = rot[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        } else if (p[0].value() < 0.0) {
          // n = 2: SO(1) cannot flip the sign; track the branch through r
          // and leave phi^0_2 = -phi^1_0 on the negative branch.
        }
        e = e * k;
        phi = detail::connection_of(e, s_metric);
      }
    }

    if (generic) {
      // conformal arclength density referred to the input parameter
      out.density_jets[ip] = phi(1, 0);
      out.density[ip] = phi(1, 0).value();

      // --- special third order: kill q^2 = phi^0_0 / phi^1_0
      {
        const Jet q2 = phi(0, 0) / phi(1, 0);
        JetMat k = JetMat::identity(d, q2.coeffs());
        k(0, 1) = q2;
        k(1, d - 1) = q2;
        k(0, d - 1) = 0.5 * q2 * q2;
        e = e * k;
        phi = detail::connection_of(e, s_metric);
      }

      // --- polarization stages: align X_(k-1) with e_k, k = 3..n-1
      for (int k = 3; k <= std::min(n - 1, max_stage); ++k) {
        const Jet p10 = phi(1, 0);
        const int m = n - k + 1;
        JetVec xk(static_cast<std::size_t>(m), Jet(0.0, 1));
        for (int i = 0; i < m; ++i) xk[static_cast<std::size_t>(i)] = phi(k + i, k - 1) / p10;
        Jet xn2 = squared_norm(xk);
        const double xmag = std::sqrt(xn2.value());
        out.obstruction[static_cast<std::size_t>(k - 2)][ip] = xmag;
        if (xmag < opt.degeneracy_tol) break;
        Jet xn = sqrt(xn2);
        for (auto& c : xk) c = c / xn;
        auto rot = align_x[static_cast<std::size_t>(k - 3)](xk);
        JetMat kk = JetMat::identity(d, xk[0].coeffs());
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j)
            kk(k + i, k + j) = rot[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        e = e * kk;
        phi = detail::connection_of(e, s_metric);
      }

      // --- read off the invariants (validity is tracked by genericity_order)
      const Jet p10 = phi(1, 0);
      out.mus[0][ip] = (phi(0, 1) / p10).value();
      for (int j = 2; j <= n - 1; ++j) {
        const double v = (phi(j + 1, j) / p10).value();
        if (j == n - 1) out.obstruction[static_cast<std::size_t>(n - 2)][ip] = std::fabs(v);
        out.mus[static_cast<std::size_t>(j - 1)][ip] = v;
      }
    }

    // genericity order: longest prefix of nonzero obstructions
    int g = 0;
    for (int k = 1; k <= n - 1; ++k) {
      if (out.obstruction[static_cast<std::size_t>(k - 1)][ip] >= opt.degeneracy_tol) g = k;
      else break;
    }
    out.genericity_order[ip] = g;

    out.frames[ip] = detail::value_of(e);
    out.frame_dots[ip] = detail::derivative_of(e);
    if (guarded) {
      out.frames[ip] = guard_inverse * out.frames[ip];
      out.frame_dots[ip] = guard_inverse * out.frame_dots[ip];
    }
  }

  // conformal arclength: quintic Hermite integration of the density jets
  out.s.assign(npts, 0.0);
  for (std::size_t i = 1; i < npts; ++i) {
    const double h = out.ts[i] - out.ts[i - 1];
    const Jet& f0 = out.density_jets[i - 1];
    const Jet& f1 = out.density_jets[i];
    const double d0 = f0.coeffs() > 1 ? f0.derivative(1) : 0.0;
    const double d1 = f1.coeffs() > 1 ? f1.derivative(1) : 0.0;
    const double c0 = f0.coeffs() > 2 ? f0.derivative(2) : 0.0;
    const double c1 = f1.coeffs() > 2 ? f1.derivative(2) : 0.0;
    out.s[i] = out.s[i - 1] + 0.5 * h * (f0.value() + f1.value()) + h * h / 10.0 * (d0 - d1) +
               h * h * h / 120.0 * (c0 + c1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cartan-Darboux reconstruction: integrate de = e phi(s) with RK4 and
// periodic metric re-projection.

struct ReconstructedFrames {
  int n = 0;
  double s0 = 0.0, s1 = 0.0, step = 0.0;
  std::vector<Mat> nodes;          // frames at s0 + i*node_stride*step
  int node_stride = 16;
  std::function<JetVec(const Jet&)> mu_jets;  // invariants as jets of s
  double max_projection_correction = 0.0;

  Mat frame_at(double s) const;
};

namespace detail {
inline Mat frenet_from_jets(const JetVec& mu, int n, double* out_unused = nullptr) {
  (void)out_unused;
  std::vector<double> v(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) v[i] = mu[i].value();
  return frenet_matrix(n, v);
}
}  // namespace detail

inline Mat ReconstructedFrames::frame_at(double s) const {
  detail::require(s >= s0 - 1e-12 && s <= s1 + 1e-12, "frame_at: s outside range");
  const double node_h = step * node_stride;
  auto node_index = static_cast<std::size_t>(
      std::clamp<long>(static_cast<long>((s - s0) / node_h), 0,
                       static_cast<long>(nodes.size()) - 1));
  double cur = s0 + static_cast<double>(node_index) * node_h;
  Mat e = nodes[node_index];
  // fixed-step RK4 from the stored node to s, same step as the main pass
  double remaining = s - cur;
  const int nsub = static_cast<int>(std::ceil(std::fabs(remaining) / step - 1e-12));
  const double h = (nsub > 0) ? remaining / nsub : 0.0;
  auto rhs = [&](double sv, const Mat& m) {
    const JetVec mu = mu_jets(Jet::variable(sv, 1));
    return Mat(m * detail::frenet_from_jets(mu, n));
  };
  for (int i = 0; i < nsub; ++i) {
    const Mat k1 = rhs(cur, e);
    const Mat k2 = rhs(cur + h / 2, e + h / 2 * k1);
    const Mat k3 = rhs(cur + h / 2, e + h / 2 * k2);
    const Mat k4 = rhs(cur + h, e + h * k3);
    e += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    cur += h;
  }
  return e;
}

// mu_jets(s) must return the n-1 invariants as jets. The returned frames can
// be turned into the light-ray curve with reconstructed_curve().
inline ReconstructedFrames integrate_frenet(int n, double s0, double s1,
                                            std::function<JetVec(const Jet&)> mu_jets,
                                            double step = 2.5e-4) {
  detail::require(s1 > s0, "integrate_frenet: empty range");
  ReconstructedFrames rf;
  rf.n = n;
  rf.s0 = s0;
  rf.s1 = s1;
  rf.step = step;
  rf.mu_jets = std::move(mu_jets);
  const Mat s_metric = metric_matrix(n);

  auto rhs = [&](double sv, const Mat& m) {
    const JetVec mu = rf.mu_jets(Jet::variable(sv, 1));
    return Mat(m * detail::frenet_from_jets(mu, n));
  };

  Mat e = Mat::Identity(n + 2, n + 2);
  double s = s0;
  long istep = 0;
  rf.nodes.push_back(e);
  while (s < s1 - 1e-15) {
    const double h = std::min(step, s1 - s);
    const Mat k1 = rhs(s, e);
    const Mat k2 = rhs(s + h / 2, e + h / 2 * k1);
    const Mat k3 = rhs(s + h / 2, e + h / 2 * k2);
    const Mat k4 = rhs(s + h, e + h * k3);
    e += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    s += h;
    ++istep;
    if (istep % 100 == 0) {
      // the Newton projection inverts e, whose condition number is |e|^2;
      // beyond ~1e6 the correction exceeds the 1e-9 drift contract, so leave
      // the RK4 frame untouched there
      const double mag = e.cwiseAbs().maxCoeff();
      if (mag < 1e3) {
        const Mat proj = reorthonormalize(e, 1e-15, 2);
        rf.max_projection_correction =
            std::max(rf.max_projection_correction,
                     (proj - e).cwiseAbs().maxCoeff() / (1.0 + mag));
        e = proj;
      }
    }
    if (istep % rf.node_stride == 0) rf.nodes.push_back(e);
  }
  return rf;
}

// Light-ray curve [e_0(s)] of an integrated frame field. Jets come from the
// Frenet recursion e0^(m) = e * (columns of D_m), D_{m+1} = D_m F + D_m'.
inline Curve reconstructed_curve(const ReconstructedFrames& rf) {
  const int n = rf.n;
  const int d = n + 2;
  auto jets_fn = [rf, n, d](double t, int coeffs) {
    const Mat e = rf.frame_at(t);
    const JetVec mu = rf.mu_jets(Jet::variable(t, coeffs));
    JetMat fm(d, d, coeffs);
    {
      // assemble the Frenet matrix with jet entries
      std::vector<Jet> mv(mu.begin(), mu.end());
      fm(1, 0) = Jet(1.0, coeffs);
      fm(0, 1) = mv[0];
      fm(d - 1, 1) = Jet(1.0, coeffs);
      fm(0, 2) = Jet(1.0, coeffs);
      if (n >= 3) fm(3, 2) = mv[1];
      for (int k = 3; k <= n - 1; ++k) {
        fm(k - 1, k) = -mv[static_cast<std::size_t>(k - 2)];
        fm(k + 1, k) = mv[static_cast<std::size_t>(k - 1)];
      }
      if (n >= 3) fm(n - 1, n) = -mv[static_cast<std::size_t>(n - 2)];
      fm(1, d - 1) = mv[0];
      fm(2, d - 1) = Jet(1.0, coeffs);
    }
    // D_0 = I; D_{m+1} = D_m * F + dD_m/ds. Taylor coefficients of e(s)e_0:
    // column c_m = (e * D_m) e_0 / m!
    JetVec out(static_cast<std::size_t>(d), Jet(0.0, coeffs));
    JetMat dm = JetMat::identity(d, coeffs);
    double factorial = 1.0;
    for (int m = 0; m < coeffs; ++m) {
      if (m > 0) factorial *= m;
      // column 0 of e * D_m evaluated at the base point
      for (int i = 0; i < d; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += e(i, j) * dm(j, 0).value();
        out[static_cast<std::size_t>(i)].raw(m) = s / factorial;
      }
      if (m + 1 < coeffs) {
        JetMat next(d, d, coeffs - 1);
        JetMat prod = fm * dm;    // D_{m+1} = F D_m + D_m'
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            Jet der = (dm(i, j).coeffs() > 1) ? dm(i, j).derivative_jet()
                                              : Jet(0.0, Jet::kMaxCoeffs);
            next(i, j) = prod(i, j) + der;
          }
        dm = next;
      }
    }
    return out;
  };
  return Curve(rf.s0, rf.s1, Ambient::LightCone, n, jets_fn, false, Jet::kMaxCoeffs);
}

// Gridded-invariants entry point (local degree-9 polynomial interpolation).
inline Curve reconstruct_from_invariants(const std::vector<double>& s_grid,
                                         const std::vector<std::vector<double>>& mus, int n) {
  detail::require(static_cast<int>(mus.size()) == n - 1,
                  "reconstruct_from_invariants: need n-1 invariant arrays");
  // mu_k > 0 for 2 <= k <= n-2 (the rigidity hypothesis); an identically
  // zero column is accepted and produces the degenerate branch
  for (int k = 2; k <= n - 2; ++k) {
    const auto& col = mus[static_cast<std::size_t>(k - 1)];
    bool all_zero = true;
    for (double v : col)
      if (std::fabs(v) > 1e-14) all_zero = false;
    if (all_zero) continue;
    for (double v : col)
      detail::require(v > 0.0, "reconstruct_from_invariants: mu_k must be positive for 2<=k<=n-2");
  }
  const std::size_t width = std::min<std::size_t>(s_grid.size(), 10);
  auto mu_jets = [s_grid, mus, width](const Jet& s) {
    JetVec out;
    const int nc = s.coeffs();
    auto it = std::lower_bound(s_grid.begin(), s_grid.end(), s.value());
    long lo = std::clamp<long>((it - s_grid.begin()) - static_cast<long>(width) / 2, 0,
                               static_cast<long>(s_grid.size() - width));
    std::vector<double> xs(s_grid.begin() + lo, s_grid.begin() + lo + static_cast<long>(width));
    for (const auto& column : mus) {
      Jet j(0.0, nc);
      double factorial = 1.0;
      for (int m = 0; m < nc && m < static_cast<int>(width); ++m) {
        if (m > 0) factorial *= m;
        const auto w = fornberg_weights(s.value(), xs, m);
        double acc = 0.0;
        for (std::size_t q = 0; q < width; ++q)
          acc += w[q] * column[static_cast<std::size_t>(lo) + q];
        j.raw(m) = acc / factorial;
      }
      out.push_back(j);
    }
    return out;
  };
  const auto rf = integrate_frenet(n, s_grid.front(), s_grid.back(), mu_jets);
  return reconstructed_curve(rf);
}

// ---------------------------------------------------------------------------
// Osculating spheres.

struct OsculatingSphere {
  int order = 0;
  Mat basis;        // (n+2) x (order+2), columns e_0..e_k, e_{n+1}
  double radius = 0.0;  // Euclidean radius in the Dirac-Weyl chart
};

namespace detail {
// Circumradius of points constrained to their affine hull.
inline double circumradius(const std::vector<Vec>& pts) {
  const std::size_t m = pts.size();
  Vec centroid = Vec::Zero(pts[0].size());
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(m);
  Mat shifted(pts[0].size(), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) shifted.col(static_cast<Eigen::Index>(i)) = pts[i] - centroid;
  Eigen::JacobiSVD<Mat> svd(shifted, Eigen::ComputeFullU);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-10 * svd.singularValues()(0)) ++rank;
  Mat hull = svd.matrixU().leftCols(rank);
  // |y_i|^2 - 2 y_i . c = const in hull coordinates
  Mat a(static_cast<Eigen::Index>(m), rank + 1);
  Vec b(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const Vec y = hull.transpose() * (pts[i] - centroid);
    a.block(static_cast<Eigen::Index>(i), 0, 1, rank) = -2.0 * y.transpose();
    a(static_cast<Eigen::Index>(i), rank) = 1.0;
    b(static_cast<Eigen::Index>(i)) = -y.squaredNorm();
  }
  const Vec sol = a.colPivHouseholderQr().solve(b);
  const Vec c = sol.head(rank);
  const double r2 = c.squaredNorm() - sol(rank);
  detail::require(r2 > 0.0, "circumradius: degenerate point set");
  return std::sqrt(r2);
}
}  // namespace detail

inline OsculatingSphere osculating_sphere(const ConformalFrenetData& data, std::size_t i, int k) {
  detail::require(k >= 1 && k <= data.n, "osculating_sphere: order out of range");
  // the k-th order frame, hence V_k, needs (k-1)-genericity
  detail::require(data.genericity_order[i] >= std::min(k - 1, data.n - 1),
                  "osculating_sphere: insufficient genericity at this point");
  const int d = data.n + 2;
  OsculatingSphere out;
  out.order = k;
  out.basis = Mat(d, k + 2);
  for (int c = 0; c <= k; ++c) out.basis.col(c) = data.frames[i].col(c);
  out.basis.col(k + 1) = data.frames[i].col(d - 1);

  // sample light rays w0 +- wi of the span, project to the chart
  const Vec e0 = data.frames[i].col(0);
  const Vec elast = data.frames[i].col(d - 1);
  const Vec w0 = (e0 + elast) / std::sqrt(2.0);
  const Vec wlast = (e0 - elast) / std::sqrt(2.0);
  std::vector<Vec> rays;
  for (int c = 1; c <= k + 1; ++c) {
    const Vec wi = (c <= k) ? Vec(data.frames[i].col(c)) : wlast;
    rays.push_back(w0 + wi);
    rays.push_back(w0 - wi);
    // diagonal combinations guard against chart-infinity alignments
    const Vec wj = (c <= k) ? ((c < k) ? Vec(data.frames[i].col(c + 1)) : wlast) : Vec(data.frames[i].col(1));
    rays.push_back(w0 + M_SQRT1_2 * (wi + wj));
  }
  std::vector<Vec> pts;
  for (const auto& r : rays)
    if (std::fabs(r(0)) > 1e-6 * r.norm()) pts.push_back(dirac_weyl_inverse(r));
  detail::require(pts.size() >= static_cast<std::size_t>(k + 2),
                  "osculating_sphere: too many samples at chart infinity");
  out.radius = detail::circumradius(pts);
  return out;
}

// ---------------------------------------------------------------------------
// Degeneracy classification.

struct DegeneracyInterval {
  int order = 0;                  // k: totally k-degenerate
  std::size_t first = 0, last = 0;  // inclusive grid index range
  bool isolated = false;          // shorter than 5 grid steps
  double witness_drift = 0.0;     // principal-angle drift of the witness span
};

struct DegeneracyReport {
  std::vector<DegeneracyInterval> intervals;
};

inline DegeneracyReport classify_degeneracy(const ConformalFrenetData& data, double tol) {
  DegeneracyReport rep;
  const int d = data.n + 2;
  for (int k = 1; k <= data.n - 1; ++k) {
    const auto& obs = data.obstruction[static_cast<std::size_t>(k - 1)];
    std::size_t i = 0;
    while (i < obs.size()) {
      if (obs[i] < tol && (k == 1 || data.genericity_order[i] >= k - 1)) {
        std::size_t j = i;
        while (j + 1 < obs.size() && obs[j + 1] < tol) ++j;
        DegeneracyInterval iv;
        iv.order = k;
        iv.first = i;
        iv.last = j;
        iv.isolated = (j - i) < 5;
        if (!iv.isolated) {
          Mat w0(d, k + 2);
          for (int c = 0; c <= k; ++c) w0.col(c) = data.frames[i].col(c);
          w0.col(k + 1) = data.frames[i].col(d - 1);
          for (std::size_t q = i + 1; q <= j; ++q) {
            Mat wq(d, k + 2);
            for (int c = 0; c <= k; ++c) wq.col(c) = data.frames[q].col(c);
            wq.col(k + 1) = data.frames[q].col(d - 1);
            const auto angles = principal_angles(w0, wq);
            iv.witness_drift = std::max(iv.witness_drift, angles.back());
          }
        }
        rep.intervals.push_back(iv);
        i = j + 1;
      } else {
        ++i;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Trace invariants of pairs of osculating spheres.

// T_j for the pair (V_j(s_a), V_j(s_b)) from orthonormalized frame bases.
inline double trace_of_pair(const ConformalFrenetData& data, std::size_t ia, std::size_t ib, int j) {
  const int d = data.n + 2;
  auto basis = [&](std::size_t i) {
    Mat w(d, j + 2);
    const Vec e0 = data.frames[i].col(0);
    const Vec elast = data.frames[i].col(d - 1);
    w.col(0) = (e0 + elast) / std::sqrt(2.0);      // time-like, <w0,w0> = -1
    for (int c = 1; c <= j; ++c) w.col(c) = data.frames[i].col(c);
    w.col(j + 1) = (e0 - elast) / std::sqrt(2.0);  // space-like
    return w;
  };
  const Mat wa = basis(ia), wb = basis(ib);
  auto ip = [&](const Vec& u, const Vec& v) { return inner(u, v); };
  double t = ip(wa.col(0), wb.col(0)) * ip(wa.col(0), wb.col(0));
  for (int i = 1; i <= j + 1; ++i) {
    t -= ip(wa.col(0), wb.col(i)) * ip(wa.col(0), wb.col(i));
    t -= ip(wb.col(0), wa.col(i)) * ip(wb.col(0), wa.col(i));
    for (int q = 1; q <= j + 1; ++q)
      t += ip(wa.col(i), wb.col(q)) * ip(wa.col(i), wb.col(q));
  }
  return t;
}

// k_j(s) = sqrt(-T''(0)/2) via a five-point second-derivative stencil on the
// arclength grid; must reproduce mu_j up to differencing noise.
inline std::vector<double> trace_invariant(const ConformalFrenetData& data, int j) {
  detail::require(j >= 2 && j <= data.n - 1, "trace_invariant: order out of range");
  const std::size_t npts = data.ts.size();
  detail::require(npts >= 5, "trace_invariant: need at least 5 grid points");
  std::vector<double> out(npts, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 2; i + 2 < npts; ++i) {
    std::vector<double> xs(5), tv(5);
    for (int q = -2; q <= 2; ++q) {
      xs[static_cast<std::size_t>(q + 2)] = data.s[i + static_cast<std::size_t>(q)];
      tv[static_cast<std::size_t>(q + 2)] =
          trace_of_pair(data, i + static_cast<std::size_t>(q), i, j);
    }
    const double h = xs[3] - xs[2];
    detail::require(h > std::pow(std::numeric_limits<double>::epsilon(), 0.75),
                    "trace_invariant: grid step too small for stable differencing");
    const auto w = fornberg_weights(xs[2], xs, 2);
    double t2 = 0.0;
    for (int q = 0; q < 5; ++q) t2 += w[static_cast<std::size_t>(q)] * tv[static_cast<std::size_t>(q)];
    const double val = -0.5 * t2;
    out[i] = (val > 0.0) ? std::sqrt(val) : 0.0;
  }
  return out;
}

}  // namespace moebius
