#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "error.hpp"
#include "grid.hpp"

namespace ufb {

namespace detail {
//! Lagrange weights on nodes -1, 0, 1 at offset t (in cells).
inline std::array<double, 3> quad_weights(double t) {
  return {0.5 * t * (t - 1.0), (1.0 - t) * (1.0 + t), 0.5 * t * (t + 1.0)};
}

//! Per axis: centre node of a 3-point stencil inside the grid and offset.
inline void locate3(const Grid &g, const Vec &x, Index &c, Vec &t) {
  for (int a = 0; a < g.dim; ++a) {
    const double f = (x[a] - g.lo[a]) / g.spacing(a);
    int i = static_cast<int>(std::lround(f));
    i = std::clamp(i, 1, g.count[a] - 2);
    c[a] = i;
    t[a] = f - i;
  }
}

inline void require_inside(const Grid &g, const Vec &x, const char *who) {
  if (!g.inside_box(x, 1e-12 * g.min_spacing()))
    throw InvalidInput(std::string(who) + ": point outside the grid box");
}
} // namespace detail

/*!
  Tensor quadratic interpolation on the 3^n nodes around the nearest node.
  Reproduces quadratic polynomials exactly.
*/
inline double interpolate(const GridField &u, const Vec &x) {
  const Grid &g = u.grid;
  detail::require_inside(g, x, "interpolate");
  Index c{0, 0, 0};
  Vec t{};
  detail::locate3(g, x, c, t);
  std::array<std::array<double, 3>, 3> w{};
  for (int a = 0; a < g.dim; ++a)
    w[a] = detail::quad_weights(t[a]);
  double s = 0.0;
  if (g.dim == 2) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        s += w[0][i] * w[1][j] * u.at({c[0] + i - 1, c[1] + j - 1, 0});
  } else {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          s += w[0][i] * w[1][j] * w[2][k] *
               u.at({c[0] + i - 1, c[1] + j - 1, c[2] + k - 1});
  }
  return s;
}

//! Gradient at a node: central differences, second-order one-sided at the box.
inline Vec node_gradient(const GridField &u, const Index &node) {
  const Grid &g = u.grid;
  Vec d{};
  for (int a = 0; a < g.dim; ++a) {
    const double h = g.spacing(a);
    Index p = node, m = node;
    if (node[a] == 0) {
      Index p2 = node;
      p[a] += 1;
      p2[a] += 2;
      d[a] = (-3.0 * u.at(node) + 4.0 * u.at(p) - u.at(p2)) / (2.0 * h);
    } else if (node[a] == g.count[a] - 1) {
      Index m2 = node;
      m[a] -= 1;
      m2[a] -= 2;
      d[a] = (3.0 * u.at(node) - 4.0 * u.at(m) + u.at(m2)) / (2.0 * h);
    } else {
      p[a] += 1;
      m[a] -= 1;
      d[a] = (u.at(p) - u.at(m)) / (2.0 * h);
    }
  }
  return d;
}

//! Multilinear interpolation of the nodal central-difference gradients.
inline Vec gradient(const GridField &u, const Vec &x) {
  const Grid &g = u.grid;
  detail::require_inside(g, x, "gradient");
  Index base{0, 0, 0};
  Vec t{};
  for (int a = 0; a < g.dim; ++a) {
    const double f = (x[a] - g.lo[a]) / g.spacing(a);
    int i = std::clamp(static_cast<int>(std::floor(f)), 0, g.count[a] - 2);
    base[a] = i;
    t[a] = std::clamp(f - i, 0.0, 1.0);
  }
  Vec out{};
  const int corners = 1 << g.dim;
  for (int c = 0; c < corners; ++c) {
    Index node = base;
    double w = 1.0;
    for (int a = 0; a < g.dim; ++a) {
      const int bit = (c >> a) & 1;
      node[a] += bit;
      w *= bit ? t[a] : 1.0 - t[a];
    }
    if (w == 0.0)
      continue;
    const Vec d = node_gradient(u, node);
    for (int a = 0; a < g.dim; ++a)
      out[a] += w * d[a];
  }
  return out;
}

} // namespace ufb
