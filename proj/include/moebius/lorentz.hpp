#pragma once

// Minkowski linear algebra on R^{n+2} with the light-cone metric
//
//         ( 0   0  -1 )
//     S = ( 0  I_n  0 ),
//         (-1   0   0 )
//
// the Moebius group as its orthochronous unit-determinant isometries, and
// the spectral splitting of conserved Lie-algebra elements used by the
// conformal geodesic construction.

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "moebius/jet.hpp"
#include "moebius/numerics.hpp"

namespace moebius {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat metric_matrix(int n) {
  Mat s = Mat::Zero(n + 2, n + 2);
  for (int i = 1; i <= n; ++i) s(i, i) = 1.0;
  s(0, n + 1) = s(n + 1, 0) = -1.0;
  return s;
}

// <u,v> = sum_A u^A v^A - u^0 v^{n+1} - u^{n+1} v^0
inline double inner(const Vec& u, const Vec& v) {
  detail::require(u.size() == v.size() && u.size() >= 4, "inner: dimension mismatch");
  const Eigen::Index last = u.size() - 1;
  double s = -u(0) * v(last) - u(last) * v(0);
  for (Eigen::Index i = 1; i < last; ++i) s += u(i) * v(i);
  return s;
}

inline Jet inner(const JetVec& u, const JetVec& v) {
  detail::require(u.size() == v.size() && u.size() >= 4, "inner: dimension mismatch");
  const std::size_t last = u.size() - 1;
  Jet s = -(u[0] * v[last]) - u[last] * v[0];
  for (std::size_t i = 1; i < last; ++i) s += u[i] * v[i];
  return s;
}

inline Vec basis_vector(int n, int i) {
  Vec v = Vec::Zero(n + 2);
  v(i) = 1.0;
  return v;
}

inline bool is_moebius(const Mat& g, double tol = 1e-9) {
  if (g.rows() != g.cols() || g.rows() < 4) return false;
  const int n = static_cast<int>(g.rows()) - 2;
  const Mat s = metric_matrix(n);
  if (((g.transpose() * s * g - s).cwiseAbs().maxCoeff()) > tol) return false;
  if (g.determinant() <= 0.0) return false;
  return g(0, 0) + g(n + 1, 0) > 0.0;  // image of eta_0 stays in L+
}

// Inverse through the metric; exact on group elements, no factorization.
inline Mat moebius_inverse(const Mat& g) {
  const int n = static_cast<int>(g.rows()) - 2;
  const Mat s = metric_matrix(n);
  return s * g.transpose() * s;
}

// A point of Q_n as a positive light ray.
class LightRay {
 public:
  LightRay(Vec rep, double tol = 1e-9) : v_(std::move(rep)) {
    detail::require(v_.size() >= 4, "light ray: dimension too small");
    const double plus = v_(0) + v_(v_.size() - 1);
    detail::require(plus > 0.0, "light ray: not in the positive cone");
    const double q = inner(v_, v_);
    detail::require(std::fabs(q) <= tol * std::max(1.0, v_.squaredNorm()),
                    "light ray: representative is not light-like");
  }

  int sphere_dim() const { return static_cast<int>(v_.size()) - 2; }
  const Vec& rep() const { return v_; }

  // Scale so that v^0 + v^{n+1} = 1 (affine chart covering all of Q_n).
  LightRay normalized() const {
    return LightRay(v_ / (v_(0) + v_(v_.size() - 1)));
  }

  // Same projective point, up to tol on the normalized representatives.
  bool approx_equal(const LightRay& o, double tol = 1e-9) const {
    return (normalized().rep() - o.normalized().rep()).norm() <= tol;
  }

 private:
  Vec v_;
};

class MoebiusElement {
 public:
  explicit MoebiusElement(Mat m, double tol = 1e-9) : g_(std::move(m)) {
    detail::require(g_.rows() == g_.cols() && g_.rows() >= 4, "moebius element: bad shape");
    detail::require(is_moebius(g_, tol), "moebius element: matrix fails the group conditions");
  }

  int sphere_dim() const { return static_cast<int>(g_.rows()) - 2; }
  const Mat& matrix() const { return g_; }
  MoebiusElement inverse() const { return MoebiusElement(moebius_inverse(g_)); }
  friend MoebiusElement operator*(const MoebiusElement& a, const MoebiusElement& b) {
    return MoebiusElement(a.g_ * b.g_, 1e-8);
  }

 private:
  Mat g_;
};

inline LightRay act(const MoebiusElement& g, const LightRay& p) {
  detail::require(g.sphere_dim() == p.sphere_dim(), "act: dimension mismatch");
  Vec w = g.matrix() * p.rep();
  if (w(0) + w(w.size() - 1) <= 0.0)
    throw std::domain_error("act: image left the positive cone (non-orthochronous input)");
  return LightRay(w, 1e-7).normalized();
}

// Lie algebra element of moeb(n): ^tX S + S X = 0. Parametrized by a scalar,
// two vectors and a skew block, matching the Maurer-Cartan symmetries.
inline Mat moebius_algebra_element(int n, double a, const Vec& b, const Vec& c, const Mat& w) {
  Mat x = Mat::Zero(n + 2, n + 2);
  x(0, 0) = a;
  x(n + 1, n + 1) = -a;
  x.block(0, 1, 1, n) = b.transpose();
  x.block(1, n + 1, n, 1) = b;
  x.block(1, 0, n, 1) = c;
  x.block(n + 1, 1, 1, n) = c.transpose();
  x.block(1, 1, n, n) = 0.5 * (w - w.transpose());
  return x;
}

// Scaling-and-squaring matrix exponential (series to machine precision).
inline Mat matrix_exp(Mat x) {
  int squarings = 0;
  double nrm = x.cwiseAbs().rowwise().sum().maxCoeff();
  while (nrm > 0.5) {
    x *= 0.5;
    nrm *= 0.5;
    ++squarings;
  }
  Mat term = Mat::Identity(x.rows(), x.cols());
  Mat sum = term;
  for (int k = 1; k <= 24; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

// Newton projection onto the S-orthogonal matrices: G <- (G + S G^{-T} S)/2.
// The residual is measured relative to |G|^2: the metric identity is computed
// through products of that size, so this is the achievable scale.
inline Mat reorthonormalize(Mat g, double tol = 1e-12, int max_iter = 12) {
  const int n = static_cast<int>(g.rows()) - 2;
  const Mat s = metric_matrix(n);
  const double scale = 1.0 + g.cwiseAbs().maxCoeff() * g.cwiseAbs().maxCoeff();
  for (int it = 0; it < max_iter; ++it) {
    const double res = (g.transpose() * s * g - s).cwiseAbs().maxCoeff();
    if (res <= tol * scale) break;
    g = 0.5 * (g + s * g.transpose().inverse() * s);
  }
  return g;
}

// Deterministic pseudo-random group element: product of two exponentials of
// algebra elements, re-orthonormalized. `spread` controls how far it moves.
inline MoebiusElement random_moebius(std::uint64_t seed, int n, double spread = 0.35) {
  detail::require(n >= 2, "random_moebius: need n >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, spread);
  auto draw = [&]() {
    const double a = dist(rng);
    Vec b(n), c(n);
    for (int i = 0; i < n; ++i) b(i) = dist(rng);
    for (int i = 0; i < n; ++i) c(i) = dist(rng);
    Mat w(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) w(i, j) = dist(rng);
    return moebius_algebra_element(n, a, b, c, w);
  };
  Mat g = matrix_exp(draw()) * matrix_exp(draw());
  return MoebiusElement(reorthonormalize(g), 1e-9);
}

// Rotation of the underlying n-sphere in the plane of sphere axes (j, n),
// as a Moebius matrix. Used to steer curves away from the chart pole.
inline MoebiusElement sphere_rotation(int n, int axis_j, double theta) {
  detail::require(axis_j >= 0 && axis_j < n, "sphere_rotation: bad axis");
  // basis change to diag(-1, 1, ..., 1): u0=(eta_0+eta_{n+1})/sqrt2,
  // u_i = eta_i, u_{n+1}=(eta_0-eta_{n+1})/sqrt2
  const int d = n + 2;
  Mat u = Mat::Zero(d, d);
  const double r2 = 1.0 / std::sqrt(2.0);
  u(0, 0) = r2; u(d - 1, 0) = r2;
  u(0, d - 1) = r2; u(d - 1, d - 1) = -r2;
  for (int i = 1; i <= n; ++i) u(i, i) = 1.0;
  Mat rot = Mat::Identity(d, d);
  // sphere coordinates are (u_1, ..., u_{n+1}); rotate axes (1+axis_j, n+1)
  const int i1 = 1 + axis_j, i2 = d - 1;
  rot(i1, i1) = std::cos(theta); rot(i1, i2) = -std::sin(theta);
  rot(i2, i1) = std::sin(theta); rot(i2, i2) = std::cos(theta);
  return MoebiusElement(reorthonormalize(u * rot * u.inverse()), 1e-10);
}

// ---------------------------------------------------------------------------
// Spectral splitting of omega in moeb(4).

struct SpectralSplit {
  double lambda = 0.0;       // positive real eigenvalue
  double tau1 = 0.0, tau2 = 0.0;  // 0 < tau1 < tau2, imaginary pairs
  Mat diagonalizer;          // A with A omega A^{-1} = block_form
  Mat block_form;            // achieved normal form
  Vec eigvec_plus, eigvec_minus;  // light-like eigenvectors for +-lambda
  bool paper_block_signs = true;  // false when the tau2 block is transposed
};

namespace detail {
inline Vec null_vector(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  return svd.matrixV().col(m.cols() - 1);
}

inline void largest_component_positive(Vec& v) {
  int imax = 0;
  for (int i = 1; i < v.size(); ++i)
    if (std::fabs(v(i)) > std::fabs(v(imax))) imax = i;
  if (v(imax) < 0.0) v = -v;
}
}  // namespace detail

// Characteristic polynomial coefficients of a 6x6 via Faddeev-LeVerrier:
// t^6 + c[5] t^5 + ... + c[0].
inline std::array<double, 6> char_poly_coeffs6(const Mat& m) {
  detail::require(m.rows() == 6 && m.cols() == 6, "char_poly_coeffs6: need 6x6");
  std::array<double, 6> c{};
  Mat mk = Mat::Zero(6, 6);
  double ck = 1.0;
  for (int k = 1; k <= 6; ++k) {
    mk = m * mk + ck * Mat::Identity(6, 6);
    ck = -(m * mk).trace() / k;
    c[static_cast<std::size_t>(6 - k)] = ck;
  }
  return c;
}

// Splits omega in moeb(4) with spectrum {+-lambda, +-i tau1, +-i tau2} into
// light-like eigenlines and the space-like rotation planes. The cubic in
// u = t^2 is solved in closed form; repeated or wrongly-signed roots reject
// the input as non-generic.
inline SpectralSplit spectral_split(const Mat& omega, double tol = 1e-9) {
  detail::require(omega.rows() == 6 && omega.cols() == 6, "spectral_split: need moeb(4), 6x6");
  const Mat s = metric_matrix(4);
  detail::require((omega.transpose() * s + s * omega).cwiseAbs().maxCoeff() <=
                      tol * std::max(1.0, omega.cwiseAbs().maxCoeff()),
                  "spectral_split: input not in moeb(4)");

  const auto cp = char_poly_coeffs6(omega);
  const double scale = 1.0 + omega.cwiseAbs().maxCoeff();
  detail::require(std::fabs(cp[1]) + std::fabs(cp[3]) + std::fabs(cp[5]) <=
                      1e-8 * std::pow(scale, 5),
                  "spectral_split: characteristic polynomial not even");

  // chi(t) = u^3 + cp[4] u^2 + cp[2] u + cp[0], u = t^2
  const CubicRoots roots = solve_cubic(cp[4], cp[2], cp[0]);
  const double rtol = 1e-10 * (1.0 + std::fabs(cp[4]) + std::fabs(cp[2]) + std::fabs(cp[0]));
  if (roots.n_real != 3) throw std::domain_error("spectral_split: non-generic spectrum");
  const double u1 = roots.real[0], u2 = roots.real[1], u3 = roots.real[2];
  if (!(u1 < -rtol && u2 < -rtol && u3 > rtol) || std::fabs(u1 - u2) <= rtol)
    throw std::domain_error("spectral_split: non-generic spectrum");

  SpectralSplit out;
  out.lambda = std::sqrt(u3);
  out.tau1 = std::sqrt(-u2);
  out.tau2 = std::sqrt(-u1);

  // light-like eigenvectors for +-lambda
  Vec wp = detail::null_vector(omega - out.lambda * Mat::Identity(6, 6));
  Vec wm = detail::null_vector(omega + out.lambda * Mat::Identity(6, 6));
  if (wp(0) + wp(5) < 0.0) wp = -wp;
  const double pair = inner(wp, wm);
  detail::require(std::fabs(pair) > 1e-12, "spectral_split: degenerate light-like pairing");
  wm = -wm / pair;  // <wp, wm> = -1

  // space-like complement F
  Mat constraints(2, 6);
  constraints.row(0) = (s * wp).transpose();
  constraints.row(1) = (s * wm).transpose();
  Eigen::JacobiSVD<Mat> svd(constraints, Eigen::ComputeFullV);
  Mat f = svd.matrixV().rightCols(4);
  // S-Gram-Schmidt; the Gram matrix must be positive definite
  for (int i = 0; i < 4; ++i) {
    Vec v = f.col(i);
    for (int j = 0; j < i; ++j) v -= inner(v, f.col(j)) * f.col(j);
    const double g = inner(v, v);
    detail::require(g > 1e-12, "spectral_split: complement not space-like");
    f.col(i) = v / std::sqrt(g);
  }

  // omega restricted to F is skew in the orthonormal basis
  Mat k(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) k(i, j) = inner(f.col(i), omega * f.col(j));
  Eigen::SelfAdjointEigenSolver<Mat> es(k * k);
  // eigenvalues ascending: {-tau2^2, -tau2^2, -tau1^2, -tau1^2}
  Mat p2 = es.eigenvectors().leftCols(2);   // tau2 plane
  Mat p1 = es.eigenvectors().rightCols(2);  // tau1 plane
  auto span_pair = [&](const Mat& plane, double tau) {
    Vec u = plane.col(0);
    detail::largest_component_positive(u);
    Vec v = k * u / tau;
    return std::make_pair(Vec(f * u), Vec(f * v));
  };
  auto [u1v, v1v] = span_pair(p1, out.tau1);
  auto [u2v, v2v] = span_pair(p2, out.tau2);

  Mat basis(6, 6);
  basis.col(0) = wp;
  basis.col(1) = u1v; basis.col(2) = v1v;
  basis.col(3) = u2v; basis.col(4) = v2v;
  basis.col(5) = wm;
  double det = basis.determinant();
  out.paper_block_signs = det > 0.0;
  if (det < 0.0) {
    basis.col(4) = -v2v;  // transpose the tau2 block to stay in the group
  }

  out.block_form = Mat::Zero(6, 6);
  out.block_form(0, 0) = out.lambda;
  out.block_form(5, 5) = -out.lambda;
  out.block_form(1, 2) = -out.tau1; out.block_form(2, 1) = out.tau1;
  const double sgn2 = out.paper_block_signs ? 1.0 : -1.0;
  out.block_form(3, 4) = -sgn2 * out.tau2; out.block_form(4, 3) = sgn2 * out.tau2;

  out.diagonalizer = reorthonormalize(moebius_inverse(basis));
  // returned eigenvectors follow the last-component normalization when usable
  auto norm_last = [](Vec v) {
    if (std::fabs(v(5)) > 1e-8 * v.norm()) v /= v(5);
    else detail::largest_component_positive(v);
    return v;
  };
  out.eigvec_plus = norm_last(wp);
  out.eigvec_minus = norm_last(wm);
  return out;
}

}  // namespace moebius
