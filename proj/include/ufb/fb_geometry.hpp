#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "interp.hpp"
#include "nelder_mead.hpp"
#include "operator.hpp"
#include "sym_matrix.hpp"

namespace ufb {

struct PointSet {
  int dim = 2;
  std::vector<Vec> points;
  std::string tag; //!< free-boundary, cone-sample, synthetic, ...

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

//! Drops points closer than `tol` to an earlier point (input order kept).
inline PointSet deduplicate(const PointSet &s, double tol) {
  PointSet out{s.dim, {}, s.tag};
  if (!(tol > 0.0)) {
    out.points = s.points;
    return out;
  }
  auto key = [&](const std::array<std::int64_t, 3> &c) {
    return static_cast<std::uint64_t>(c[0]) * 73856093u ^
           static_cast<std::uint64_t>(c[1]) * 19349663u ^
           static_cast<std::uint64_t>(c[2]) * 83492791u;
  };
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells;
  for (const Vec &p : s.points) {
    std::array<std::int64_t, 3> c{0, 0, 0};
    for (int a = 0; a < s.dim; ++a)
      c[a] = static_cast<std::int64_t>(std::floor(p[a] / tol));
    bool dup = false;
    const int span = s.dim == 3 ? 1 : 0;
    for (int i = -1; i <= 1 && !dup; ++i)
      for (int j = -1; j <= 1 && !dup; ++j)
        for (int k = -span; k <= span && !dup; ++k) {
          auto it = cells.find(key({c[0] + i, c[1] + j, c[2] + k}));
          if (it == cells.end())
            continue;
          for (std::size_t q : it->second)
            if (distance(out.points[q], p, s.dim) < tol) {
              dup = true;
              break;
            }
        }
    if (!dup) {
      cells[key(c)].push_back(out.points.size());
      out.points.push_back(p);
    }
  }
  return out;
}

inline PointSet within_ball(const PointSet &s, const Vec &x0, double r) {
  PointSet out{s.dim, {}, s.tag};
  for (const Vec &p : s.points)
    if (distance(p, x0, s.dim) <= r * (1.0 + 1e-12))
      out.points.push_back(p);
  return out;
}

namespace detail {
struct Crossing {
  Vec x;
  std::size_t positive; //!< node on the {u > 0} side of the edge
};

/*!
  Zero of u on the edge from node `lo` to its neighbour along `ax`, as a
  fraction of the edge: root of the quadratic through the two endpoints and
  the next node beyond the endpoint nearer the linear estimate. The endpoint
  values have opposite signs, so the root is unique in [0, 1].
*/
inline double edge_zero(const GridField &u, const Index &lo, int ax) {
  const Grid &g = u.grid;
  Index hi = lo;
  ++hi[ax];
  const double a = u.at(lo), b = u.at(hi);
  const double lin = a / (a - b);
  Index far = lo;
  double s = -1.0; // position of the third node in edge units
  if ((lin >= 0.5 && hi[ax] + 1 < g.count[ax]) || lo[ax] == 0) {
    far = hi;
    s = 2.0;
  }
  far[ax] += s > 0.0 ? 1 : -1;
  if (!g.contains(far))
    return lin;
  const double c = u.at(far);
  // p(t) = a + beta t + gamma t (t - 1), p(1) = b, p(s) = c
  const double beta = b - a;
  const double gamma = (c - a - beta * s) / (s * (s - 1.0));
  if (std::abs(gamma) <= 1e-14 * (std::abs(a) + std::abs(b)))
    return lin;
  // gamma t^2 + (beta - gamma) t + a = 0
  const double B = beta - gamma;
  const double disc = std::max(0.0, B * B - 4.0 * gamma * a);
  const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
  double best = lin, dist = std::numeric_limits<double>::infinity();
  for (double t : {q / gamma, q != 0.0 ? a / q : lin})
    if (t >= 0.0 && t <= 1.0 && std::abs(t - lin) < dist) {
      best = t;
      dist = std::abs(t - lin);
    }
  return best;
}

inline std::vector<Crossing> crossings(const GridField &u) {
  const Grid &g = u.grid;
  std::vector<Crossing> out;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Index ijk = g.coords(k);
    const double a = u.values[k];
    for (int ax = 0; ax < g.dim; ++ax) {
      if (ijk[ax] + 1 >= g.count[ax])
        continue;
      Index nb = ijk;
      ++nb[ax];
      const double b = u.at(nb);
      if ((a > 0.0) == (b > 0.0))
        continue;
      const double t = edge_zero(u, ijk, ax);
      Vec x = g.point(ijk);
      x[ax] += t * g.spacing(ax);
      out.push_back({x, a > 0.0 ? k : g.index(nb)});
    }
  }
  return out;
}
} // namespace detail

/*!
  Crossings of the boundary of {u > 0} with grid edges: every edge with one
  endpoint > 0 and the other <= 0 contributes one zero (see edge_zero).
*/
inline PointSet extract_free_boundary(const GridField &u) {
  PointSet out{u.grid.dim, {}, "free-boundary"};
  for (const auto &c : detail::crossings(u))
    out.points.push_back(c.x);
  return deduplicate(out, 0.25 * u.grid.min_spacing());
}

namespace detail {
/*!
  Angles where u changes sign of positivity along the circle |x - x0| = r,
  from m samples of the interpolant. Samples outside the grid box break the
  circle.
*/
inline std::vector<double> circle_crossings(const GridField &u, const Vec &x0, double r, int m) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> vals(m);
  for (int j = 0; j < m; ++j) {
    const double t = 2.0 * std::numbers::pi * j / m;
    const Vec x{x0[0] + r * std::cos(t), x0[1] + r * std::sin(t), 0.0};
    vals[j] = u.grid.inside_box(x, 1e-12 * u.grid.min_spacing()) ? interpolate(u, x) : nan;
  }
  std::vector<double> out;
  for (int j = 0; j < m; ++j) {
    const double a = vals[j], b = vals[(j + 1) % m];
    if (std::isnan(a) || std::isnan(b) || (a > 0.0) == (b > 0.0))
      continue;
    const double f = a / (a - b);
    out.push_back(2.0 * std::numbers::pi * (j + f) / m);
  }
  return out;
}

//! Interior points of the marching-squares segments of cells meeting B_r(x0)
//! that have exactly two edge crossings, `sub` - 1 per segment.
inline void segment_samples(const GridField &u, const Vec &x0, double r, int sub,
                            std::vector<Vec> &out) {
  const Grid &g = u.grid;
  const double hx = g.spacing(0), hy = g.spacing(1);
  const auto lo_i = static_cast<int>(std::max(0.0, std::floor((x0[0] - r - g.lo[0]) / hx)));
  const auto lo_j = static_cast<int>(std::max(0.0, std::floor((x0[1] - r - g.lo[1]) / hy)));
  const int hi_i = std::min(g.count[0] - 2, static_cast<int>(std::ceil((x0[0] + r - g.lo[0]) / hx)));
  const int hi_j = std::min(g.count[1] - 2, static_cast<int>(std::ceil((x0[1] + r - g.lo[1]) / hy)));
  for (int i = lo_i; i <= hi_i; ++i)
    for (int j = lo_j; j <= hi_j; ++j) {
      const Index c[4] = {{i, j, 0}, {i + 1, j, 0}, {i + 1, j + 1, 0}, {i, j + 1, 0}};
      Vec hit[4];
      int n = 0;
      for (int e = 0; e < 4; ++e) {
        const double a = u.at(c[e]), b = u.at(c[(e + 1) % 4]);
        if ((a > 0.0) == (b > 0.0))
          continue;
        // edges 0, 1 run up their axis, edges 2, 3 down
        const Index &from = e < 2 ? c[e] : c[(e + 1) % 4];
        const double t = edge_zero(u, from, e % 2);
        Vec x = g.point(from);
        x[e % 2] += t * g.spacing(e % 2);
        bool dup = false;
        for (int k = 0; k < n; ++k)
          dup = dup || distance(hit[k], x, 2) <= 1e-12 * hx;
        if (!dup && n < 4)
          hit[n++] = x;
      }
      if (n != 2)
        continue;
      for (int k = 1; k < sub; ++k) {
        const double t = static_cast<double>(k) / sub;
        const Vec x{hit[0][0] + t * (hit[1][0] - hit[0][0]), hit[0][1] + t * (hit[1][1] - hit[0][1]),
                    0.0};
        if (distance(x, x0, 2) <= r)
          out.push_back(x);
      }
    }
}
} // namespace detail

/*!
  Free-boundary points in the closed ball B_r(x0). In 2D the edge crossings
  are densified along their marching-squares segments and closed up with the
  crossings on the bounding circle, so the sample pitch is a fraction of h and
  arcs reach the circle instead of stopping at the last grid edge.
*/
inline PointSet free_boundary_in_ball(const GridField &u, const PointSet &fb, const Vec &x0,
                                      double r) {
  PointSet out = within_ball(fb, x0, r);
  if (u.grid.dim != 2 || out.empty())
    return out;
  detail::segment_samples(u, x0, r, 6, out.points);
  const int m = std::max(256, static_cast<int>(std::ceil(8.0 * std::numbers::pi * r /
                                                         u.grid.min_spacing())));
  for (double t : detail::circle_crossings(u, x0, r, m))
    out.points.push_back({x0[0] + r * std::cos(t), x0[1] + r * std::sin(t), 0.0});
  return out;
}

struct SingularOptions {
  double tol_u = std::numeric_limits<double>::quiet_NaN(); //!< default 5 h^2
  double tol_g = std::numeric_limits<double>::quiet_NaN(); //!< default 5 h
  double merge = std::numeric_limits<double>::quiet_NaN(); //!< default 3 h

  SingularOptions resolved(const Grid &g) const {
    const double h = g.min_spacing();
    SingularOptions o = *this;
    if (std::isnan(o.tol_u))
      o.tol_u = 5.0 * h * h;
    if (std::isnan(o.tol_g))
      o.tol_g = 5.0 * h;
    if (std::isnan(o.merge))
      o.merge = 3.0 * h;
    return o;
  }
};

/*!
  Free-boundary points where both |u| and |grad u| are small, merged into
  clusters (single linkage at distance `merge`). Each cluster is represented
  by its member with the smallest gradient. The gradient is the larger of the
  interpolated one and the one at the positive endpoint of the crossing edge,
  so a field that drops to zero with a kink is not read as singular.
*/
inline PointSet singular_points(const GridField &u, SingularOptions opt = {}) {
  const Grid &g = u.grid;
  opt = opt.resolved(g);
  if (!(opt.tol_u > 0.0) || !(opt.tol_g > 0.0))
    throw InvalidInput("singular_points: tolerances must be positive");
  std::vector<Vec> cand;
  std::vector<double> grad;
  for (const auto &[x, pos] : detail::crossings(u)) {
    if (std::abs(interpolate(u, x)) > opt.tol_u)
      continue;
    const double gn = std::max(norm(gradient(u, x), g.dim),
                               norm(node_gradient(u, g.coords(pos)), g.dim));
    if (gn <= opt.tol_g) {
      cand.push_back(x);
      grad.push_back(gn);
    }
  }
  std::vector<std::size_t> parent(cand.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i)
      i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < cand.size(); ++i)
    for (std::size_t j = i + 1; j < cand.size(); ++j)
      if (distance(cand[i], cand[j], g.dim) <= opt.merge) {
        const auto a = find(i), b = find(j);
        parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<std::size_t> best(cand.size(), cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) {
    const auto root = find(i);
    if (best[root] == cand.size() || grad[i] < grad[best[root]])
      best[root] = i;
  }
  PointSet out{g.dim, {}, "singular"};
  for (std::size_t i = 0; i < cand.size(); ++i)
    if (find(i) == i)
      out.points.push_back(cand[best[i]]);
  std::sort(out.points.begin(), out.points.end());
  return out;
}

//! sup over a in A of dist(a, B).
inline double directed_hausdorff(const PointSet &a, const PointSet &b) {
  const int n = a.dim;
  double worst = 0.0;
  for (const Vec &p : a.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec &q : b.points) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        s += (p[i] - q[i]) * (p[i] - q[i]);
      if (s < best) {
        best = s;
        if (best <= worst)
          break; // cannot raise the running max
      }
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

inline double hausdorff(const PointSet &a, const PointSet &b) {
  if (a.empty() || b.empty())
    throw InvalidInput("hausdorff: empty point set");
  if (a.dim != b.dim)
    throw InvalidInput("hausdorff: dimension mismatch");
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

/*!
  Homogeneous quadratic p(x) = (x - x0)^T A (x - x0), normalised so that
  sup_{B_1} |p| = max |eigenvalue of A| = 1.
*/
struct QuadraticForm {
  SymMatrix a{2};
  Vec center{};

  static QuadraticForm normalized(const SymMatrix &m, const Vec &x0 = {}) {
    const auto e = eigenvalues(m);
    const double s = std::max(std::abs(e.front()), std::abs(e.back()));
    if (!(s > 0.0) || !std::isfinite(s))
      throw InvalidInput("QuadraticForm: matrix must be nonzero and finite");
    return {(1.0 / s) * m, x0};
  }

  int dim() const { return a.dim(); }
  double operator()(const Vec &x) const {
    Vec d{};
    for (int i = 0; i < dim(); ++i)
      d[i] = x[i] - center[i];
    return a.quadratic(d);
  }
  QuadraticForm negated() const { return {-a, center}; }
};

struct ConeSample {
  PointSet points;
  bool degenerate = false; //!< zero set is the single point x0
};

namespace detail {
//! Unit directions spanning the zero lines of a nonzero 2x2 form.
inline std::vector<Vec> zero_lines_2d(const SymMatrix &a) {
  const auto es = eigen_decomposition(a);
  const double e0 = es.values[0], e1 = es.values[1];
  const double tiny = 1e-12 * std::max(std::abs(e0), std::abs(e1));
  const Vec &v0 = es.vectors[0], &v1 = es.vectors[1];
  if (e0 > tiny || e1 < -tiny)
    return {};
  if (std::abs(e0) <= tiny)
    return {v0};
  if (std::abs(e1) <= tiny)
    return {v1};
  std::vector<Vec> out;
  for (double sgn : {1.0, -1.0}) {
    Vec d{};
    for (int i = 0; i < 2; ++i)
      d[i] = std::sqrt(e1) * v0[i] + sgn * std::sqrt(-e0) * v1[i];
    const double l = norm(d, 2);
    for (int i = 0; i < 2; ++i)
      d[i] /= l;
    out.push_back(d);
  }
  return out;
}

inline Vec normalize(Vec v, int n) {
  const double l = norm(v, n);
  for (int i = 0; i < n; ++i)
    v[i] /= l;
  return v;
}
} // namespace detail

/*!
  Samples of the zero set of p inside the closed ball B_r(x0), x0 = p.center.
  In 2D each zero line carries `count` evenly spaced points on [-r, r]. In 3D
  cone directions are found by bisecting, for each direction of a golden-angle
  spiral, along the arc towards an eigenvector of opposite sign, and each
  direction is sampled radially.
*/
inline ConeSample sample_cone(const QuadraticForm &p, double r, int count) {
  const int n = p.dim();
  if (!(r > 0.0) || count < 2)
    throw InvalidInput("sample_cone: need r > 0 and count >= 2");
  if (p.a.max_abs_entry() == 0.0)
    throw InvalidInput("sample_cone: zero form");
  // p and -p must give identical samples
  SymMatrix a = p.a;
  for (int i = 0, done = 0; i < n && !done; ++i)
    for (int j = i; j < n && !done; ++j)
      if (a(i, j) != 0.0) {
        if (a(i, j) < 0.0)
          a = -a;
        done = 1;
      }
  ConeSample cs;
  cs.points.dim = n;
  cs.points.tag = "cone-sample";
  auto emit_line = [&](const Vec &d, int m) {
    for (int j = 0; j < m; ++j) {
      const double t = -r + 2.0 * r * j / (m - 1);
      Vec x = p.center;
      for (int i = 0; i < n; ++i)
        x[i] += t * d[i];
      cs.points.points.push_back(x);
    }
  };
  if (n == 2) {
    const auto lines = detail::zero_lines_2d(a);
    if (lines.empty()) {
      cs.degenerate = true;
      cs.points.points.push_back(p.center);
      return cs;
    }
    for (const Vec &d : lines)
      emit_line(d, count);
    return cs;
  }

  const auto es = eigen_decomposition(a);
  const double scale = std::max(std::abs(es.values.front()), std::abs(es.values.back()));
  const double tiny = 1e-12 * scale;
  int pos = 0, neg = 0;
  std::vector<Vec> null;
  for (int k = 0; k < 3; ++k) {
    if (es.values[k] > tiny)
      ++pos;
    else if (es.values[k] < -tiny)
      ++neg;
    else
      null.push_back(es.vectors[k]);
  }
  const int radial = 8;
  if (pos == 0 || neg == 0) {
    if (null.empty()) {
      cs.degenerate = true;
      cs.points.points.push_back(p.center);
      return cs;
    }
    if (null.size() == 1) {
      emit_line(null[0], count);
      return cs;
    }
    // plane spanned by two null vectors
    const int dirs = std::max(8, count / radial);
    cs.points.points.push_back(p.center);
    for (int k = 0; k < dirs; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / dirs;
      Vec d{};
      for (int i = 0; i < 3; ++i)
        d[i] = std::cos(phi) * null[0][i] + std::sin(phi) * null[1][i];
      for (int j = 1; j <= radial; ++j) {
        Vec x = p.center;
        for (int i = 0; i < 3; ++i)
          x[i] += r * j / radial * d[i];
        cs.points.points.push_back(x);
      }
    }
    return cs;
  }
  const Vec &vneg = es.vectors.front(), &vpos = es.vectors.back();
  const int dirs = std::max(64, count / radial);
  cs.points.points.push_back(p.center);
  for (const Vec &d : OperatorSpec::fibonacci_sphere(dirs)) {
    const double qd = a.quadratic(d);
    Vec target = qd > 0.0 ? vneg : vpos;
    Vec lo = d, hi = target;
    if (qd == 0.0) {
      hi = d;
    } else {
      for (int it = 0; it < 60; ++it) {
        Vec mid{};
        for (int i = 0; i < 3; ++i)
          mid[i] = 0.5 * (lo[i] + hi[i]);
        mid = detail::normalize(mid, 3);
        if ((a.quadratic(mid) > 0.0) == (qd > 0.0))
          lo = mid;
        else
          hi = mid;
      }
    }
    const Vec root = detail::normalize(hi, 3);
    for (int j = 1; j <= radial; ++j) {
      Vec x = p.center;
      for (int i = 0; i < 3; ++i)
        x[i] += r * j / radial * root[i];
      cs.points.points.push_back(x);
    }
  }
  return cs;
}

//! Cone sample count tied to the grid: max(256, 8 r / h).
inline int cone_sample_count(double r, double h) {
  return std::max(256, static_cast<int>(std::ceil(8.0 * r / h)));
}

//! Hausdorff distance between fb ∩ B_r(x0) and the zero set of p in B_r(x0);
//! +infinity when the free boundary misses the ball.
inline double h_min(const PointSet &fb, double r, const QuadraticForm &p, int count) {
  const PointSet local = within_ball(fb, p.center, r);
  if (local.empty())
    return std::numeric_limits<double>::infinity();
  return hausdorff(local, sample_cone(p, r, count).points);
}

inline double h_min(const GridField &u, double r, const QuadraticForm &p) {
  const PointSet fb = free_boundary_in_ball(u, extract_free_boundary(u), p.center, r);
  return h_min(fb, r, p, cone_sample_count(r, u.grid.min_spacing()));
}

struct FlatnessOptions {
  double pitch = std::numbers::pi / 720.0; //!< line-angle grid spacing (2D)
  int simplex_steps = 40;
  int starts_3d = 12;
};

struct FlatnessResult {
  double h = std::numeric_limits<double>::infinity();
  QuadraticForm form;
  double r = 0.0;
  Vec x0{};
  bool empty = true;          //!< free boundary misses the ball
  bool degenerate = false;    //!< minimiser is a definite form (cone = {x0})
  bool rank_one = false;      //!< minimiser is a double line / plane
  double theta1 = std::numeric_limits<double>::quiet_NaN(); //!< 2D line angles in [0, pi)
  double theta2 = std::numeric_limits<double>::quiet_NaN();
  //! tan of the half-opening of the cone where the oriented form is positive
  double slope = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> eigenvalues;
  long candidates = 0;
  int simplex_steps = 0;
  std::size_t fb_points = 0;
};

namespace detail {
//! Sign +-1 making the form agree with u on the nodes of B_r(x0).
inline double orientation(const GridField &u, const QuadraticForm &p, double r) {
  const Grid &g = u.grid;
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec x = g.point(k);
    if (distance(x, p.center, g.dim) <= r)
      s += u.values[k] * p(x);
  }
  return s < 0.0 ? -1.0 : 1.0;
}

inline SymMatrix line_pair_matrix(double t1, double t2) {
  const Vec n1{-std::sin(t1), std::cos(t1), 0.0}, n2{-std::sin(t2), std::cos(t2), 0.0};
  SymMatrix a(2);
  a(0, 0) = n1[0] * n2[0];
  a(1, 1) = n1[1] * n2[1];
  a(0, 1) = 0.5 * (n1[0] * n2[1] + n1[1] * n2[0]);
  return a;
}

inline double wrap_pi(double t) {
  t = std::fmod(t, std::numbers::pi);
  return t < 0.0 ? t + std::numbers::pi : t;
}

inline void finish_form(FlatnessResult &res, const GridField &u) {
  const double s = orientation(u, res.form, res.r);
  if (s < 0.0)
    res.form = res.form.negated();
  res.eigenvalues = eigenvalues(res.form.a);
  if (res.form.dim() == 2 && !res.degenerate && !res.rank_one) {
    double t1 = std::min(res.theta1, res.theta2), t2 = std::max(res.theta1, res.theta2);
    const double open = t2 - t1;
    const double mid = 0.5 * (t1 + t2);
    const Vec b{std::cos(mid), std::sin(mid), 0.0};
    const double half = res.form.a.quadratic(b) > 0.0 ? 0.5 * open
                                                      : 0.5 * (std::numbers::pi - open);
    res.slope = std::tan(half);
  }
}
} // namespace detail

/*!
  h(r, x0) = inf over normalised quadratics p of h_min(r, x0, p). In 2D the
  zero set of p is parametrised by its two line angles: exhaustive search on
  a grid of angle pairs (including coincident lines), plus the definite
  candidate whose cone is {x0}, then simplex refinement of the best pair. In
  3D a multi-start simplex search over the matrix entries.
*/
inline FlatnessResult flatness(const GridField &u, double r, const Vec &x0,
                               const FlatnessOptions &opt = {}) {
  const Grid &g = u.grid;
  const int n = g.dim;
  FlatnessResult res;
  res.r = r;
  res.x0 = x0;
  const PointSet fb = free_boundary_in_ball(u, extract_free_boundary(u), x0, r);
  res.fb_points = fb.size();
  if (fb.empty())
    return res;
  res.empty = false;
  const int count = cone_sample_count(r, g.min_spacing());

  // definite candidate: cone = {x0}
  double def_h = 0.0;
  for (const Vec &a : fb.points)
    def_h = std::max(def_h, distance(a, x0, n));

  if (n == 3) {
    auto objective = [&](const std::vector<double> &c) {
      SymMatrix m(3);
      m(0, 0) = c[0], m(1, 1) = c[1], m(2, 2) = c[2];
      m(0, 1) = c[3], m(0, 2) = c[4], m(1, 2) = c[5];
      if (m.max_abs_entry() < 1e-9)
        return std::numeric_limits<double>::infinity();
      return h_min(fb, r, QuadraticForm::normalized(m, x0), count);
    };
    std::vector<std::vector<double>> starts;
    const double sig[][3] = {{1, -1, 0}, {1, 1, -1}, {1, -1, -1}, {1, 0, 0}};
    for (const auto &s : sig)
      for (int rot = 0; rot < 3; ++rot)
        starts.push_back({s[rot % 3], s[(rot + 1) % 3], s[(rot + 2) % 3], 0, 0, 0});
    starts.resize(std::min<std::size_t>(starts.size(), opt.starts_3d));
    res.h = def_h;
    res.degenerate = true;
    res.form = QuadraticForm::normalized(SymMatrix::identity(3), x0);
    for (const auto &s0 : starts) {
      auto sr = nelder_mead(objective, s0, std::vector<double>(6, 0.25), opt.simplex_steps);
      res.candidates += sr.evaluations;
      res.simplex_steps += sr.steps;
      if (sr.value < res.h) {
        const auto &c = sr.x;
        SymMatrix m(3);
        m(0, 0) = c[0], m(1, 1) = c[1], m(2, 2) = c[2];
        m(0, 1) = c[3], m(0, 2) = c[4], m(1, 2) = c[5];
        res.h = sr.value;
        res.form = QuadraticForm::normalized(m, x0);
        const auto cs = sample_cone(res.form, r, 16);
        res.degenerate = cs.degenerate;
      }
    }
    const auto e = eigenvalues(res.form.a);
    int small = 0;
    for (double v : e)
      small += std::abs(v) <= 1e-6;
    res.rank_one = small == 2;
    detail::finish_form(res, u);
    return res;
  }

  // line samples on each grid angle: d_line[k] = directed distance to fb
  auto line_to_fb = [&](double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    double worst = 0.0;
    for (int j = 0; j < count; ++j) {
      const double t = -r + 2.0 * r * j / (count - 1);
      const double px = x0[0] + t * c, py = x0[1] + t * s;
      double best = std::numeric_limits<double>::infinity();
      for (const Vec &a : fb.points) {
        const double d = (a[0] - px) * (a[0] - px) + (a[1] - py) * (a[1] - py);
        if (d < best) {
          best = d;
          if (best <= worst)
            break;
        }
      }
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  auto fb_to_lines = [&](double t1, double t2, double cutoff) {
    const double c1 = std::cos(t1), s1 = std::sin(t1), c2 = std::cos(t2), s2 = std::sin(t2);
    double worst = 0.0;
    for (const Vec &a : fb.points) {
      const double dx = a[0] - x0[0], dy = a[1] - x0[1];
      const double d = std::min(std::abs(dx * s1 - dy * c1), std::abs(dx * s2 - dy * c2));
      worst = std::max(worst, d);
      if (worst >= cutoff)
        break;
    }
    return worst;
  };

  const int steps = static_cast<int>(std::lround(std::numbers::pi / opt.pitch));
  std::vector<double> dline(steps);
  for (int k = 0; k < steps; ++k)
    dline[k] = line_to_fb(k * opt.pitch);

  double best = def_h;
  int b1 = -1, b2 = -1;
  for (int k1 = 0; k1 < steps; ++k1)
    for (int k2 = k1; k2 < steps; ++k2) {
      ++res.candidates;
      const double lower = std::max(dline[k1], dline[k2]);
      if (lower >= best)
        continue;
      const double v = std::max(lower, fb_to_lines(k1 * opt.pitch, k2 * opt.pitch, best));
      if (v < best) {
        best = v;
        b1 = k1;
        b2 = k2;
      }
    }

  if (b1 < 0) {
    res.h = def_h;
    res.degenerate = true;
    res.form = QuadraticForm::normalized(SymMatrix::identity(2), x0);
    detail::finish_form(res, u);
    return res;
  }
  double t1 = b1 * opt.pitch, t2 = b2 * opt.pitch;
  auto objective = [&](const std::vector<double> &t) {
    const double a1 = detail::wrap_pi(t[0]), a2 = detail::wrap_pi(t[1]);
    return std::max({line_to_fb(a1), line_to_fb(a2),
                     fb_to_lines(a1, a2, std::numeric_limits<double>::infinity())});
  };
  if (opt.simplex_steps > 0) {
    auto sr = nelder_mead(objective, {t1, t2}, {opt.pitch, opt.pitch}, opt.simplex_steps);
    res.simplex_steps = sr.steps;
    res.candidates += sr.evaluations;
    if (sr.value < best) {
      best = sr.value;
      t1 = detail::wrap_pi(sr.x[0]);
      t2 = detail::wrap_pi(sr.x[1]);
    }
  }
  res.h = best;
  res.theta1 = std::min(t1, t2);
  res.theta2 = std::max(t1, t2);
  res.rank_one = std::abs(t1 - t2) < 1e-15;
  res.form = QuadraticForm::normalized(detail::line_pair_matrix(t1, t2), x0);
  detail::finish_form(res, u);
  return res;
}

} // namespace ufb
