#pragma once

// Truncated Taylor arithmetic in one variable. A Jet holds the Taylor
// coefficients f(t0), f'(t0), f''(t0)/2!, ... of a scalar function at a
// point; arithmetic propagates them through algebraic expressions, so
// curve pipelines get exact derivatives instead of finite differences.
//
// Mixing jets of different lengths truncates to the shorter one. Plain
// doubles act as exact constants and never truncate.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace moebius {

class Jet {
 public:
  static constexpr int kMaxCoeffs = 16;

  Jet() : size_(1) { c_.fill(0.0); }

  // Constant with `coeffs` Taylor coefficients (value, rest zero).
  Jet(double value, int coeffs) : size_(coeffs) {
    assert(coeffs >= 1 && coeffs <= kMaxCoeffs);
    c_.fill(0.0);
    c_[0] = value;
  }

  // The identity function t at t0, carrying `coeffs` coefficients.
  static Jet variable(double t0, int coeffs) {
    Jet j(t0, coeffs);
    if (coeffs > 1) j.c_[1] = 1.0;
    return j;
  }

  int coeffs() const { return size_; }
  double value() const { return c_[0]; }
  double operator[](int i) const { return i < size_ ? c_[i] : 0.0; }
  double& raw(int i) { return c_[i]; }

  // m-th derivative value (m! times the Taylor coefficient).
  double derivative(int m) const {
    if (m >= size_) throw std::out_of_range("jet: derivative order exceeds coefficients");
    double f = 1.0;
    for (int i = 2; i <= m; ++i) f *= i;
    return c_[m] * f;
  }

  // Jet of f' with one fewer coefficient.
  Jet derivative_jet() const {
    if (size_ < 2) throw std::out_of_range("jet: no derivative information left");
    Jet r(0.0, size_ - 1);
    for (int i = 0; i + 1 < size_; ++i) r.c_[i] = (i + 1) * c_[i + 1];
    return r;
  }

  Jet truncated(int coeffs) const {
    Jet r(0.0, std::min(coeffs, size_));
    for (int i = 0; i < r.size_; ++i) r.c_[i] = c_[i];
    return r;
  }

  Jet operator-() const {
    Jet r = *this;
    for (int i = 0; i < size_; ++i) r.c_[i] = -r.c_[i];
    return r;
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    Jet r(0.0, std::min(a.size_, b.size_));
    for (int i = 0; i < r.size_; ++i) r.c_[i] = a.c_[i] + b.c_[i];
    return r;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    Jet r(0.0, std::min(a.size_, b.size_));
    for (int i = 0; i < r.size_; ++i) r.c_[i] = a.c_[i] - b.c_[i];
    return r;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r(0.0, std::min(a.size_, b.size_));
    for (int i = 0; i < r.size_; ++i) {
      double s = 0.0;
      for (int j = 0; j <= i; ++j) s += a.c_[j] * b.c_[i - j];
      r.c_[i] = s;
    }
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) {
    if (b.c_[0] == 0.0) throw std::domain_error("jet: division by zero value");
    Jet r(0.0, std::min(a.size_, b.size_));
    for (int i = 0; i < r.size_; ++i) {
      double s = a.c_[i];
      for (int j = 0; j < i; ++j) s -= r.c_[j] * b.c_[i - j];
      r.c_[i] = s / b.c_[0];
    }
    return r;
  }

  friend Jet operator+(const Jet& a, double b) { Jet r = a; r.c_[0] += b; return r; }
  friend Jet operator+(double a, const Jet& b) { return b + a; }
  friend Jet operator-(const Jet& a, double b) { Jet r = a; r.c_[0] -= b; return r; }
  friend Jet operator-(double a, const Jet& b) { return -b + a; }
  friend Jet operator*(const Jet& a, double b) {
    Jet r = a;
    for (int i = 0; i < r.size_; ++i) r.c_[i] *= b;
    return r;
  }
  friend Jet operator*(double a, const Jet& b) { return b * a; }
  friend Jet operator/(const Jet& a, double b) { return a * (1.0 / b); }
  friend Jet operator/(double a, const Jet& b) { return Jet(a, b.size_) / b; }

  Jet& operator+=(const Jet& o) { *this = *this + o; return *this; }
  Jet& operator-=(const Jet& o) { *this = *this - o; return *this; }
  Jet& operator*=(const Jet& o) { *this = *this * o; return *this; }
  Jet& operator+=(double o) { c_[0] += o; return *this; }
  Jet& operator-=(double o) { c_[0] -= o; return *this; }
  Jet& operator*=(double o) { *this = *this * o; return *this; }

  friend Jet sqrt(const Jet& a) {
    if (a.c_[0] <= 0.0) throw std::domain_error("jet: sqrt of non-positive value");
    Jet r(0.0, a.size_);
    r.c_[0] = std::sqrt(a.c_[0]);
    for (int i = 1; i < r.size_; ++i) {
      double s = a.c_[i];
      for (int j = 1; j < i; ++j) s -= r.c_[j] * r.c_[i - j];
      r.c_[i] = s / (2.0 * r.c_[0]);
    }
    return r;
  }

  friend Jet exp(const Jet& a) {
    Jet r(0.0, a.size_);
    r.c_[0] = std::exp(a.c_[0]);
    for (int k = 1; k < r.size_; ++k) {
      double s = 0.0;
      for (int j = 1; j <= k; ++j) s += j * a.c_[j] * r.c_[k - j];
      r.c_[k] = s / k;
    }
    return r;
  }

  friend void sincos(const Jet& a, Jet& s, Jet& c) {
    s = Jet(0.0, a.size_);
    c = Jet(0.0, a.size_);
    s.c_[0] = std::sin(a.c_[0]);
    c.c_[0] = std::cos(a.c_[0]);
    for (int k = 1; k < a.size_; ++k) {
      double ss = 0.0, cc = 0.0;
      for (int j = 1; j <= k; ++j) {
        ss += j * a.c_[j] * c.c_[k - j];
        cc += j * a.c_[j] * s.c_[k - j];
      }
      s.c_[k] = ss / k;
      c.c_[k] = -cc / k;
    }
  }
  friend Jet sin(const Jet& a) { Jet s, c; sincos(a, s, c); return s; }
  friend Jet cos(const Jet& a) { Jet s, c; sincos(a, s, c); return c; }

 private:
  std::array<double, kMaxCoeffs> c_;
  int size_;
};

using JetVec = std::vector<Jet>;

inline Jet dot(const JetVec& a, const JetVec& b) {
  assert(a.size() == b.size() && !a.empty());
  Jet s = a[0] * b[0];
  for (std::size_t i = 1; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Jet squared_norm(const JetVec& a) { return dot(a, a); }

// Dense matrix of jets, just large enough for (n+2)-frame work.
class JetMat {
 public:
  JetMat() : rows_(0), cols_(0) {}
  JetMat(int rows, int cols, int coeffs)
      : rows_(rows), cols_(cols), d_(static_cast<std::size_t>(rows * cols), Jet(0.0, coeffs)) {}

  static JetMat identity(int n, int coeffs) {
    JetMat m(n, n, coeffs);
    for (int i = 0; i < n; ++i) m(i, i) = Jet(1.0, coeffs);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Jet& operator()(int i, int j) { return d_[static_cast<std::size_t>(i * cols_ + j)]; }
  const Jet& operator()(int i, int j) const { return d_[static_cast<std::size_t>(i * cols_ + j)]; }

  JetMat transpose() const {
    JetMat r(cols_, rows_, 1);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }

  friend JetMat operator*(const JetMat& a, const JetMat& b) {
    assert(a.cols_ == b.rows_);
    JetMat r(a.rows_, b.cols_, 1);
    for (int i = 0; i < a.rows_; ++i)
      for (int j = 0; j < b.cols_; ++j) {
        Jet s = a(i, 0) * b(0, j);
        for (int k = 1; k < a.cols_; ++k) s += a(i, k) * b(k, j);
        r(i, j) = s;
      }
    return r;
  }

  JetVec col(int j) const {
    JetVec v;
    v.reserve(static_cast<std::size_t>(rows_));
    for (int i = 0; i < rows_; ++i) v.push_back((*this)(i, j));
    return v;
  }

 private:
  int rows_, cols_;
  std::vector<Jet> d_;
};

}  // namespace moebius
