#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "error.hpp"

namespace ufb {

//! Point or vector in R^n, n <= 3. Unused trailing components are zero.
using Vec = std::array<double, 3>;

inline double dot(const Vec &a, const Vec &b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    s += a[i] * b[i];
  return s;
}

inline double norm(const Vec &a, int n) { return std::sqrt(dot(a, a, n)); }

inline double distance(const Vec &a, const Vec &b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/*!
  Symmetric n x n matrix, n in {2, 3}. Each unordered index pair is stored
  once (packed upper triangle), so symmetry holds by construction.
*/
class SymMatrix {
public:
  SymMatrix() = default;
  explicit SymMatrix(int n) : n_(n) {
    if (n != 2 && n != 3)
      throw InvalidInput("SymMatrix: dimension must be 2 or 3");
  }

  static SymMatrix identity(int n) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
      m(i, i) = 1.0;
    return m;
  }

  static SymMatrix diag(std::span<const double> d) {
    SymMatrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.n_; ++i)
      m(i, i) = d[i];
    return m;
  }
  static SymMatrix diag(std::initializer_list<double> d) {
    return diag(std::span<const double>(d.begin(), d.size()));
  }

  //! v v^T
  static SymMatrix outer(const Vec &v, int n) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        m(i, j) = v[i] * v[j];
    return m;
  }

  //! Builds from a row-major n x n array; the lower triangle must mirror the
  //! upper one to 1e-12 (relative), otherwise InvalidInput.
  static SymMatrix from_rows(std::span<const double> rows, int n) {
    if (static_cast<int>(rows.size()) != n * n)
      throw InvalidInput("SymMatrix: expected n*n entries");
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double a = rows[i * n + j], b = rows[j * n + i];
        if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}))
          throw InvalidInput("SymMatrix: matrix is not symmetric");
        m(i, j) = a;
      }
    return m;
  }

  int dim() const { return n_; }

  double &operator()(int i, int j) { return a_[slot(i, j)]; }
  double operator()(int i, int j) const { return a_[slot(i, j)]; }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < n_; ++i)
      t += (*this)(i, i);
    return t;
  }

  //! Frobenius inner product tr(A B).
  double contract(const SymMatrix &b) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        s += (*this)(i, j) * b(i, j);
    return s;
  }

  bool all_finite() const {
    return std::all_of(a_.begin(), a_.end(),
                       [](double x) { return std::isfinite(x); });
  }

  double max_abs_entry() const {
    double m = 0.0;
    for (double x : a_)
      m = std::max(m, std::abs(x));
    return m;
  }

  //! x^T A x
  double quadratic(const Vec &x) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        s += (*this)(i, j) * x[i] * x[j];
    return s;
  }

  Vec apply(const Vec &x) const {
    Vec y{};
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        y[i] += (*this)(i, j) * x[j];
    return y;
  }

  std::vector<double> row_major() const {
    std::vector<double> r(n_ * n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        r[i * n_ + j] = (*this)(i, j);
    return r;
  }

  SymMatrix &operator+=(const SymMatrix &b) {
    for (std::size_t k = 0; k < a_.size(); ++k)
      a_[k] += b.a_[k];
    return *this;
  }
  SymMatrix &operator-=(const SymMatrix &b) {
    for (std::size_t k = 0; k < a_.size(); ++k)
      a_[k] -= b.a_[k];
    return *this;
  }
  SymMatrix &operator*=(double t) {
    for (double &x : a_)
      x *= t;
    return *this;
  }
  friend SymMatrix operator+(SymMatrix a, const SymMatrix &b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix &b) { return a -= b; }
  friend SymMatrix operator*(double t, SymMatrix a) { return a *= t; }
  friend SymMatrix operator*(SymMatrix a, double t) { return a *= t; }
  friend SymMatrix operator-(SymMatrix a) { return a *= -1.0; }
  friend bool operator==(const SymMatrix &, const SymMatrix &) = default;

private:
  static int slot(int i, int j) {
    if (i > j)
      std::swap(i, j);
    // packed upper triangle of a 3x3: (0,0)(0,1)(0,2)(1,1)(1,2)(2,2)
    static constexpr int base[3] = {0, 3, 5};
    return base[i] + (j - i);
  }

  int n_ = 2;
  std::array<double, 6> a_{};
};

//! Eigenvalues in ascending order, closed form for n = 2 and the
//! trigonometric formula for symmetric 3x3 matrices.
inline std::vector<double> eigenvalues(const SymMatrix &m) {
  const int n = m.dim();
  if (n == 2) {
    const double a = m(0, 0), b = m(0, 1), d = m(1, 1);
    const double mean = 0.5 * (a + d);
    const double rad = std::hypot(0.5 * (a - d), b);
    return {mean - rad, mean + rad};
  }
  const double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
  std::vector<double> e(3);
  if (p1 == 0.0) {
    e = {m(0, 0), m(1, 1), m(2, 2)};
    std::sort(e.begin(), e.end());
    return e;
  }
  const double q = m.trace() / 3.0;
  const double d0 = m(0, 0) - q, d1 = m(1, 1) - q, d2 = m(2, 2) - q;
  const double p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  // det((A - qI) / p) / 2
  const double b00 = d0 / p, b11 = d1 / p, b22 = d2 / p;
  const double b01 = m(0, 1) / p, b02 = m(0, 2) / p, b12 = m(1, 2) / p;
  const double det = b00 * (b11 * b22 - b12 * b12) -
                     b01 * (b01 * b22 - b12 * b02) +
                     b02 * (b01 * b12 - b11 * b02);
  const double r = std::clamp(det / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double hi = q + 2.0 * p * std::cos(phi);
  const double lo = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  e = {lo, 3.0 * q - hi - lo, hi};
  std::sort(e.begin(), e.end());
  return e;
}

struct EigenSystem {
  std::vector<double> values; // ascending
  std::vector<Vec> vectors;   // orthonormal, vectors[i] pairs with values[i]
};

//! Eigenvalues and orthonormal eigenvectors (cyclic Jacobi for n = 3).
inline EigenSystem eigen_decomposition(const SymMatrix &m) {
  const int n = m.dim();
  EigenSystem es;
  if (n == 2) {
    const double a = m(0, 0), b = m(0, 1), d = m(1, 1);
    const double angle = 0.5 * std::atan2(2.0 * b, a - d);
    const Vec v_hi{std::cos(angle), std::sin(angle), 0.0};
    const Vec v_lo{-std::sin(angle), std::cos(angle), 0.0};
    const double e_hi = m.quadratic(v_hi), e_lo = m.quadratic(v_lo);
    if (e_lo <= e_hi) {
      es.values = {e_lo, e_hi};
      es.vectors = {v_lo, v_hi};
    } else {
      es.values = {e_hi, e_lo};
      es.vectors = {v_hi, v_lo};
    }
    return es;
  }
  double a[3][3], v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      a[i][j] = m(i, j);
  for (int sweep = 0; sweep < 50; ++sweep) {
    const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if (off < 1e-30 * (1.0 + m.max_abs_entry() * m.max_abs_entry()))
      break;
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0)
          continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a[i][i] < a[j][j]; });
  for (int k : order) {
    es.values.push_back(a[k][k]);
    es.vectors.push_back(Vec{v[0][k], v[1][k], v[2][k]});
  }
  return es;
}

//! Rotation of a 2x2 matrix into the frame (e_r, e_theta) at angle phi:
//! returns Q^T A Q with Q = [(cos, sin), (-sin, cos)].
inline SymMatrix rotate_to_frame(const SymMatrix &a, double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  const Vec er{c, s, 0.0}, et{-s, c, 0.0};
  SymMatrix r(2);
  r(0, 0) = a.quadratic(er);
  r(1, 1) = a.quadratic(et);
  r(0, 1) = dot(er, a.apply(et), 2);
  return r;
}

} // namespace ufb
