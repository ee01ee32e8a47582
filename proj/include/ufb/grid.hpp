#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "sym_matrix.hpp"

namespace ufb {

using Index = std::array<int, 3>;

/*!
  Uniform tensor grid on a box in R^n, n in {2, 3}. Node values are stored
  row-major: axis 0 varies slowest.
*/
struct Grid {
  int dim = 2;
  std::array<double, 3> lo{};
  std::array<double, 3> hi{};
  std::array<int, 3> count{1, 1, 1};

  //! Cube [lo, hi]^n with `nodes` points per axis.
  static Grid cube(int n, double lo, double hi, int nodes) {
    Grid g;
    g.dim = n;
    for (int a = 0; a < n; ++a) {
      g.lo[a] = lo;
      g.hi[a] = hi;
      g.count[a] = nodes;
    }
    g.validate();
    return g;
  }

  //! Cube [-half, half]^n with spacing h (2 half / h + 1 nodes per axis).
  static Grid centered(int n, double half, double h) {
    const int nodes = static_cast<int>(std::lround(2.0 * half / h)) + 1;
    return cube(n, -half, half, nodes);
  }

  void validate() const {
    if (dim != 2 && dim != 3)
      throw ConfigError("grid dimension must be 2 or 3");
    for (int a = 0; a < dim; ++a) {
      if (count[a] < 9 || count[a] % 2 == 0)
        throw ConfigError("grid resolution must be odd and >= 9 on every axis");
      if (!(hi[a] > lo[a]) || !std::isfinite(lo[a]) || !std::isfinite(hi[a]))
        throw ConfigError("grid box must satisfy lo < hi");
    }
  }

  double spacing(int axis) const {
    return (hi[axis] - lo[axis]) / (count[axis] - 1);
  }
  double min_spacing() const {
    double h = spacing(0);
    for (int a = 1; a < dim; ++a)
      h = std::min(h, spacing(a));
    return h;
  }

  std::size_t size() const {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a)
      s *= static_cast<std::size_t>(count[a]);
    return s;
  }

  std::size_t index(const Index &ijk) const {
    std::size_t k = 0;
    for (int a = 0; a < dim; ++a)
      k = k * count[a] + ijk[a];
    return k;
  }

  Index coords(std::size_t k) const {
    Index ijk{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      ijk[a] = static_cast<int>(k % count[a]);
      k /= count[a];
    }
    return ijk;
  }

  bool contains(const Index &ijk) const {
    for (int a = 0; a < dim; ++a)
      if (ijk[a] < 0 || ijk[a] >= count[a])
        return false;
    return true;
  }

  Vec point(const Index &ijk) const {
    Vec x{};
    for (int a = 0; a < dim; ++a)
      x[a] = lo[a] + ijk[a] * spacing(a);
    return x;
  }
  Vec point(std::size_t k) const { return point(coords(k)); }

  bool on_box_boundary(const Index &ijk) const {
    for (int a = 0; a < dim; ++a)
      if (ijk[a] == 0 || ijk[a] == count[a] - 1)
        return true;
    return false;
  }

  //! Whether x lies in the closed box.
  bool inside_box(const Vec &x, double slack = 0.0) const {
    for (int a = 0; a < dim; ++a)
      if (x[a] < lo[a] - slack || x[a] > hi[a] + slack)
        return false;
    return true;
  }

  friend bool operator==(const Grid &, const Grid &) = default;
};

//! Computational domain: the whole box, or a ball masked out of it.
struct Domain {
  enum class Kind { box, ball };
  Kind kind = Kind::box;
  Vec center{};
  double radius = 1.0;

  static Domain box() { return {}; }
  static Domain ball(const Vec &c, double r) {
    if (!(r > 0.0))
      throw ConfigError("ball domain radius must be positive");
    return {Kind::ball, c, r};
  }

  //! Negative inside, zero on the boundary.
  double level(const Vec &x, int n) const {
    if (kind == Kind::box)
      return -1.0;
    return distance(x, center, n) - radius;
  }

  /*!
    Fraction t in (0, 1] along the segment from inside point x to outside
    point y at which the domain boundary is crossed.
  */
  double crossing(const Vec &x, const Vec &y, int n) const {
    // |x - c + t (y - x)| = R
    double a = 0.0, b = 0.0, c = -radius * radius;
    for (int i = 0; i < n; ++i) {
      const double d = y[i] - x[i], p = x[i] - center[i];
      a += d * d;
      b += 2.0 * p * d;
      c += p * p;
    }
    const double disc = std::max(0.0, b * b - 4.0 * a * c);
    const double t = (-b + std::sqrt(disc)) / (2.0 * a);
    return std::clamp(t, 0.0, 1.0);
  }
};

/*!
  Dirichlet data g. Closed forms can be evaluated anywhere (needed where a
  stencil is cut by a curved boundary); a node table only on grid nodes.
*/
struct BoundaryData {
  enum class Kind { constant, quadratic, radial, table };
  Kind kind = Kind::constant;
  double c = 0.0;     //!< constant term
  SymMatrix a{2};     //!< quadratic part x^T A x (quadratic)
  Vec center{};       //!< radial
  double radius = 1.0;
  double lambda = 1.0;
  int n = 2;
  std::vector<double> table; //!< one value per grid node

  static BoundaryData constant(double value) {
    BoundaryData g;
    g.c = value;
    return g;
  }
  //! g(x) = x^T A x + c
  static BoundaryData quadratic(const SymMatrix &a, double c = 0.0) {
    BoundaryData g;
    g.kind = Kind::quadratic;
    g.a = a;
    g.c = c;
    g.n = a.dim();
    return g;
  }
  /*!
    (R^2 - |x - x_c|^2) / (2 n lambda) inside B_R(x_c), continued outside by
    the radial harmonic function with matching value and slope; the result is
    C^1 across |x - x_c| = R.
  */
  static BoundaryData radial(int n, double lambda, double r, const Vec &center = {}) {
    BoundaryData g;
    g.kind = Kind::radial;
    g.n = n;
    g.lambda = lambda;
    g.radius = r;
    g.center = center;
    return g;
  }
  static BoundaryData from_table(std::vector<double> values) {
    BoundaryData g;
    g.kind = Kind::table;
    g.table = std::move(values);
    return g;
  }

  bool closed_form() const { return kind != Kind::table; }

  double operator()(const Vec &x, int dim) const {
    switch (kind) {
    case Kind::constant:
      return c;
    case Kind::quadratic:
      return a.quadratic(x) + c;
    case Kind::radial: {
      const double r = distance(x, center, dim);
      const double R = radius;
      if (r <= R)
        return (R * R - r * r) / (2.0 * n * lambda);
      if (n == 2)
        return -(R * R / (2.0 * lambda)) * std::log(r / R);
      return (R * R * R / (n * lambda * (n - 2))) *
             (std::pow(r, 2.0 - n) - std::pow(R, 2.0 - n));
    }
    case Kind::table:
      break;
    }
    throw InvalidInput("BoundaryData: node table cannot be evaluated off-grid");
  }

  double at_node(const Grid &grid, std::size_t k) const {
    if (kind == Kind::table) {
      if (table.size() != grid.size())
        throw ConfigError("BoundaryData: table size does not match the grid");
      if (!std::isfinite(table[k]))
        throw ConfigError("BoundaryData: non-finite table value");
      return table[k];
    }
    return (*this)(grid.point(k), grid.dim);
  }
};

struct FieldMeta {
  std::string tag;                 //!< e.g. "penalized", "maximal-approximation"
  std::string operator_fingerprint;
  double eps = std::numeric_limits<double>::quiet_NaN();
  int outer_iterations = 0;
  int policy_iterations = 0;
  long linear_sweeps = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
};

//! Scalar samples on a Grid.
struct GridField {
  Grid grid;
  std::vector<double> values;
  FieldMeta meta;

  GridField() = default;
  explicit GridField(const Grid &g, double fill = 0.0)
      : grid(g), values(g.size(), fill) {}

  template <class F> static GridField sample(const Grid &g, F &&f) {
    GridField u(g);
    for (std::size_t k = 0; k < g.size(); ++k)
      u.values[k] = f(g.point(k));
    return u;
  }

  double &operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }
  double at(const Index &ijk) const { return values[grid.index(ijk)]; }

  double max_abs_diff(const GridField &o) const {
    double m = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k)
      m = std::max(m, std::abs(values[k] - o.values[k]));
    return m;
  }
};

//! (R^2 - |x|^2) / (2 n lambda) inside B_R, zero outside.
inline GridField exact_radial_solution(double lambda, int n, double R,
                                       const Grid &grid) {
  if (!(lambda > 0.0) || !(R > 0.0) || n != grid.dim)
    throw InvalidInput("exact_radial_solution: invalid parameters");
  auto f = GridField::sample(grid, [&](const Vec &x) {
    const double r2 = dot(x, x, n);
    return r2 < R * R ? (R * R - r2) / (2.0 * n * lambda) : 0.0;
  });
  f.meta.tag = "exact-radial";
  return f;
}

} // namespace ufb
