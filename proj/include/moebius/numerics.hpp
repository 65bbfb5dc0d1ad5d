#pragma once

// Shared numerical kernels: cubic root solver, Fornberg finite-difference
// weights, adaptive Gauss-Kronrod quadrature, and grid integration.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace moebius {

namespace detail {
inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}
}  // namespace detail

struct CubicRoots {
  int n_real = 0;                 // 1 or 3 (counted with multiplicity when 3)
  std::array<double, 3> real{};   // ascending when n_real == 3
  double complex_re = 0.0, complex_im = 0.0;  // conjugate pair when n_real == 1
};

// Roots of x^3 + a x^2 + b x + c. Three-real branch uses the trigonometric
// form; one Newton polish per root tightens clustered cases.
inline CubicRoots solve_cubic(double a, double b, double c) {
  CubicRoots out;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double shift = -a / 3.0;
  const double disc = -4.0 * p * p * p - 27.0 * q * q;

  auto polish = [&](double x) {
    for (int it = 0; it < 3; ++it) {
      const double f = ((x + a) * x + b) * x + c;
      const double df = (3.0 * x + 2.0 * a) * x + b;
      if (df == 0.0) break;
      const double step = f / df;
      x -= step;
      if (std::fabs(step) <= 1e-16 * std::max(1.0, std::fabs(x))) break;
    }
    return x;
  };

  if (disc >= 0.0 && p < 0.0) {
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double t = std::acos(arg) / 3.0;
    out.n_real = 3;
    for (int k = 0; k < 3; ++k)
      out.real[static_cast<std::size_t>(k)] = polish(m * std::cos(t - 2.0 * M_PI * k / 3.0) + shift);
    std::sort(out.real.begin(), out.real.end());
    return out;
  }
  if (p == 0.0 && q == 0.0) {
    out.n_real = 3;
    out.real = {shift, shift, shift};
    return out;
  }
  const double r = std::sqrt(std::max(0.0, q * q / 4.0 + p * p * p / 27.0));
  const double u = std::cbrt(-q / 2.0 + r);
  const double v = (u != 0.0) ? -p / (3.0 * u) : std::cbrt(-q / 2.0 - r);
  out.n_real = 1;
  out.real[0] = polish(u + v + shift);
  out.complex_re = -(u + v) / 2.0 + shift;
  out.complex_im = std::fabs(u - v) * std::sqrt(3.0) / 2.0;
  return out;
}

// Fornberg weights: given nodes x[] and a point x0, returns w such that
// f^(m)(x0) ~= sum_i w[i] f(x[i]). Exact for polynomials of degree < len(x).
inline std::vector<double> fornberg_weights(double x0, const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size()) - 1;
  detail::require(n >= m, "fornberg: not enough nodes for derivative order");
  std::vector<std::vector<double>> c(static_cast<std::size_t>(n + 1),
                                     std::vector<double>(static_cast<std::size_t>(m + 1), 0.0));
  double c1 = 1.0, c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[static_cast<std::size_t>(i)] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
              c1 * (k * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k - 1)] -
                    c5 * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)]) / c2;
        c[static_cast<std::size_t>(i)][0] = -c1 * c5 * c[static_cast<std::size_t>(i - 1)][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
            (c4 * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] -
             k * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k - 1)]) / c3;
      c[static_cast<std::size_t>(j)][0] *= c4 / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i)
    w[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
  return w;
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod (G7,K15) quadrature.

namespace detail {
// K15 nodes/weights on [-1,1] (symmetric halves) and embedded G7 weights.
inline constexpr double kK15Nodes[8] = {
    0.000000000000000000, 0.207784955007898468, 0.405845151377397167, 0.586087235467691130,
    0.741531185599394440, 0.864864423359769073, 0.949107912342758525, 0.991455371120812639};
inline constexpr double kK15Weights[8] = {
    0.209482141084727828, 0.204432940075298892, 0.190350578064785410, 0.169004726639267903,
    0.140653259715525919, 0.104790010322250184, 0.063092092629978553, 0.022935322010529225};
inline constexpr double kG7Weights[4] = {
    0.417959183673469388, 0.381830050505118945, 0.279705391489276668, 0.129484966168869693};

struct PanelResult {
  double integral;
  double error;
};

template <typename F>
PanelResult gk15(const F& f, double a, double b) {
  const double h = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double fk[15];
  fk[7] = f(mid);
  for (int i = 1; i < 8; ++i) {
    const double dx = h * kK15Nodes[i];
    fk[7 - i] = f(mid - dx);
    fk[7 + i] = f(mid + dx);
  }
  double kron = kK15Weights[0] * fk[7];
  for (int i = 1; i < 8; ++i) kron += kK15Weights[i] * (fk[7 - i] + fk[7 + i]);
  kron *= h;
  double gauss = kG7Weights[0] * fk[7];
  for (int i = 1; i < 4; ++i) gauss += kG7Weights[i] * (fk[7 - 2 * i] + fk[7 + 2 * i]);
  gauss *= h;
  const double diff = std::fabs(kron - gauss);
  return {kron, std::pow(200.0 * diff, 1.5)};
}
}  // namespace detail

// Integrate f over [a,b] to absolute tolerance tol (bisection refinement).
template <typename F>
double integrate(const F& f, double a, double b, double tol = 1e-12, int max_depth = 40) {
  if (a == b) return 0.0;
  struct Frame { double a, b; int depth; };
  double total = 0.0;
  std::vector<Frame> stack{{a, b, 0}};
  while (!stack.empty()) {
    const Frame fr = stack.back();
    stack.pop_back();
    const auto r = detail::gk15(f, fr.a, fr.b);
    const double local_tol = tol * std::fabs(fr.b - fr.a) / std::fabs(b - a);
    if (r.error <= std::max(local_tol, 1e-16 * std::fabs(r.integral)) || fr.depth >= max_depth) {
      total += r.integral;
    } else {
      const double m = 0.5 * (fr.a + fr.b);
      stack.push_back({fr.a, m, fr.depth + 1});
      stack.push_back({m, fr.b, fr.depth + 1});
    }
  }
  return total;
}

// Cumulative integral of f at the given grid nodes (one GK panel per gap,
// refined adaptively), returned with value 0 at the first node.
template <typename F>
std::vector<double> cumulative_integral(const F& f, const std::vector<double>& ts,
                                        double tol = 1e-12) {
  std::vector<double> out(ts.size(), 0.0);
  for (std::size_t i = 1; i < ts.size(); ++i)
    out[i] = out[i - 1] + integrate(f, ts[i - 1], ts[i], tol);
  return out;
}

// Periodic trapezoid rule with doubling; spectral accuracy for closed curves.
template <typename F>
double integrate_periodic(const F& f, double a, double b, double tol = 1e-10) {
  int n = 64;
  auto run = [&](int m) {
    const double h = (b - a) / m;
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += f(a + i * h);
    return s * h;
  };
  double prev = run(n);
  for (int it = 0; it < 10; ++it) {
    n *= 2;
    const double cur = run(n);
    if (std::fabs(cur - prev) <= tol * std::max(1.0, std::fabs(cur))) return cur;
    prev = cur;
  }
  return prev;
}

// Principal angles between the column spans of A and B (radians, ascending).
inline std::vector<double> principal_angles(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qa(A), qb(B);
  Eigen::MatrixXd Qa = qa.householderQ() * Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::MatrixXd Qb = qb.householderQ() * Eigen::MatrixXd::Identity(B.rows(), B.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Qa.transpose() * Qb);
  std::vector<double> out;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    out.push_back(std::acos(std::clamp(svd.singularValues()(i), -1.0, 1.0)));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace moebius
