#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"
#include "fb_geometry.hpp"
#include "grid.hpp"
#include "interp.hpp"

namespace ufb {

namespace detail {
inline void require_ball_in_box(const Grid &g, const Vec &x0, double r, const char *who) {
  for (int a = 0; a < g.dim; ++a)
    if (x0[a] - r < g.lo[a] - 1e-12 || x0[a] + r > g.hi[a] + 1e-12)
      throw InvalidInput(std::string(who) + ": ball exits the grid domain");
}
} // namespace detail

/*!
  sup over the closed ball B_r(x0) of |u|: grid nodes in the ball, dense
  samples of the bounding sphere (quadratic interpolation), and a local
  parabolic refinement around the maximising node when it is interior.
*/
inline double ball_sup(const GridField &u, const Vec &x0, double r) {
  const Grid &g = u.grid;
  const int n = g.dim;
  detail::require_ball_in_box(g, x0, r, "ball_sup");
  double best = 0.0;
  std::size_t arg = g.size();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec x = g.point(k);
    if (distance(x, x0, n) <= r && std::abs(u.values[k]) > best) {
      best = std::abs(u.values[k]);
      arg = k;
    }
  }
  const double h = g.min_spacing();
  if (n == 2) {
    const int m = std::max(256, static_cast<int>(std::ceil(16.0 * std::numbers::pi * r / h)));
    for (int j = 0; j < m; ++j) {
      const double t = 2.0 * std::numbers::pi * j / m;
      best = std::max(best, std::abs(interpolate(u, {x0[0] + r * std::cos(t),
                                                     x0[1] + r * std::sin(t), 0.0})));
    }
  } else {
    const int m = std::max(512, static_cast<int>(std::ceil(64.0 * r * r / (h * h))));
    for (const Vec &d : OperatorSpec::fibonacci_sphere(m))
      best = std::max(best, std::abs(interpolate(
                                u, {x0[0] + r * d[0], x0[1] + r * d[1], x0[2] + r * d[2]})));
  }
  if (arg < g.size()) {
    const Index c = g.coords(arg);
    const double s = u.values[arg] < 0.0 ? -1.0 : 1.0;
    double refined = s * u.values[arg];
    bool interior = true;
    Vec shift{};
    for (int a = 0; a < n && interior; ++a) {
      Index p = c, m = c;
      ++p[a];
      --m[a];
      if (!g.contains(p) || !g.contains(m)) {
        interior = false;
        break;
      }
      const double fp = s * u.at(p), f0 = s * u.at(c), fm = s * u.at(m);
      const double curv = 0.5 * (fp - 2.0 * f0 + fm), slope = 0.5 * (fp - fm);
      if (curv < 0.0) {
        const double off = std::clamp(-slope / (2.0 * curv), -1.0, 1.0);
        refined += slope * off + curv * off * off;
        shift[a] = off * g.spacing(a);
      }
    }
    if (interior) {
      Vec y = g.point(c);
      for (int a = 0; a < n; ++a)
        y[a] += shift[a];
      if (distance(y, x0, n) <= r)
        best = std::max(best, refined);
    }
  }
  return best;
}

struct GrowthProfile {
  Vec x0{};
  int k_min = 0, k_max = 0;
  std::vector<double> radii; //!< r_k = 2^-k
  std::vector<double> sup;   //!< M(r_k, x0)
  std::vector<double> flat;  //!< h(r_k, x0), +inf when the free boundary misses the ball
  std::vector<double> inf;   //!< min of u over B_{r_k}(x0) (nodes)
};

inline GrowthProfile growth_profile(const GridField &u, const Vec &x0, int k_min, int k_max,
                                    bool with_flatness = true,
                                    const FlatnessOptions &fopt = {}) {
  if (k_max < k_min)
    throw InvalidInput("growth_profile: k_max < k_min");
  const Grid &g = u.grid;
  detail::require_ball_in_box(g, x0, std::ldexp(1.0, -k_min), "growth_profile");
  GrowthProfile p;
  p.x0 = x0;
  p.k_min = k_min;
  p.k_max = k_max;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    const double r = std::ldexp(1.0, -k);
    p.radii.push_back(r);
    // nested balls: keep the sequence monotone despite refinement noise
    prev = std::min(prev, ball_sup(u, x0, r));
    p.sup.push_back(prev);
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < g.size(); ++q)
      if (distance(g.point(q), x0, g.dim) <= r)
        lo = std::min(lo, u.values[q]);
    p.inf.push_back(lo);
    p.flat.push_back(with_flatness ? flatness(u, r, x0, fopt).h
                                   : std::numeric_limits<double>::quiet_NaN());
  }
  return p;
}

struct DichotomyResult {
  std::vector<int> levels;   //!< k of each tested step k -> k + 1
  std::vector<bool> checked; //!< not delta-flat at r_k (or forced)
  std::vector<bool> passed;
  double fitted_C = 0.0;     //!< smallest C making every checked level pass
  bool all_pass = true;
};

/*!
  For each level k with h(r_k) > delta r_k tests
    M(r_{k+1}) <= max(C r_k^2, M(r_k) / 4, ..., M(r_{k_min}) / 4^{k - k_min + 1}).
  `force` tests every level regardless of flatness.
*/
inline DichotomyResult dichotomy_check(const GrowthProfile &p, double delta, double C,
                                       bool force = false) {
  if (!(delta > 0.0) || !(C >= 0.0))
    throw InvalidInput("dichotomy_check: need delta > 0 and C >= 0");
  DichotomyResult d;
  const std::size_t L = p.sup.size();
  for (std::size_t i = 0; i + 1 < L; ++i) {
    const double r = p.radii[i];
    const bool check = force || !(p.flat[i] < delta * r);
    double tail = 0.0;
    for (std::size_t j = 0; j <= i; ++j)
      tail = std::max(tail, p.sup[i - j] / std::pow(4.0, static_cast<double>(j + 1)));
    const double next = p.sup[i + 1];
    const double slack = 1e-12 * std::max(next, tail);
    const bool ok = next <= std::max(C * r * r, tail) + slack;
    d.levels.push_back(p.k_min + static_cast<int>(i));
    d.checked.push_back(check);
    d.passed.push_back(!check || ok);
    if (check) {
      d.all_pass = d.all_pass && ok;
      if (next > tail + slack)
        d.fitted_C = std::max(d.fitted_C, next / (r * r));
    }
  }
  return d;
}

enum class PointClass { regular, quadratic_growth, rank2_flat, degenerate, inconclusive };

inline std::string to_string(PointClass c) {
  switch (c) {
  case PointClass::regular:
    return "regular";
  case PointClass::quadratic_growth:
    return "quadratic-growth";
  case PointClass::rank2_flat:
    return "rank-2-flat";
  case PointClass::degenerate:
    return "degenerate";
  case PointClass::inconclusive:
    return "inconclusive";
  }
  return "inconclusive";
}

struct ClassifyOptions {
  double delta = 0.05;
  SingularOptions singular;
  int k_min = -1; //!< -1: smallest k whose ball fits in the grid box
  int k_max = -1; //!< -1: largest k with r_k >= 4 h
  double C_bound = 100.0;
  //! Non-degeneracy constant; NaN disables the proxy flag.
  double c_nondeg = std::numeric_limits<double>::quiet_NaN();
  FlatnessOptions flat;
};

struct PointClassification {
  Vec x0{};
  PointClass cls = PointClass::inconclusive;
  double grad_norm = 0.0;
  GrowthProfile profile;
  DichotomyResult dichotomy;
  //! inf_{B_r} u <= -c r^2 at every level (necessary for a non-degenerate
  //! free-boundary point); only meaningful when c_nondeg is set
  bool nondegenerate_proxy = false;
  bool proxy_evaluated = false;
  std::string note;
};

inline PointClassification classify_point(const GridField &u, const Vec &x0,
                                          const ClassifyOptions &opt) {
  const Grid &g = u.grid;
  const auto sopt = opt.singular.resolved(g);
  PointClassification pc;
  pc.x0 = x0;
  pc.grad_norm = norm(gradient(u, x0), g.dim);
  if (pc.grad_norm > sopt.tol_g) {
    pc.cls = PointClass::regular;
    return pc;
  }
  int kmin = opt.k_min, kmax = opt.k_max;
  if (kmin < 0) {
    kmin = 0;
    for (;; ++kmin) {
      const double r = std::ldexp(1.0, -kmin);
      bool fits = true;
      for (int a = 0; a < g.dim; ++a)
        fits = fits && x0[a] - r >= g.lo[a] - 1e-12 && x0[a] + r <= g.hi[a] + 1e-12;
      if (fits)
        break;
      if (r < g.min_spacing()) {
        pc.note = "point too close to the grid boundary";
        return pc;
      }
    }
  }
  if (kmax < 0)
    kmax = static_cast<int>(std::floor(std::log2(1.0 / (4.0 * g.min_spacing()))));
  if (kmax < kmin + 2) {
    pc.note = "fewer than three resolved dyadic levels";
    return pc;
  }
  pc.profile = growth_profile(u, x0, kmin, kmax, true, opt.flat);
  pc.dichotomy = dichotomy_check(pc.profile, opt.delta, opt.C_bound);
  const auto &P = pc.profile;
  if (!std::isnan(opt.c_nondeg)) {
    pc.proxy_evaluated = true;
    pc.nondegenerate_proxy = true;
    for (std::size_t i = 0; i < P.radii.size(); ++i)
      pc.nondegenerate_proxy = pc.nondegenerate_proxy &&
                               P.inf[i] <= -opt.c_nondeg * P.radii[i] * P.radii[i];
  }

  double peak = 0.0;
  for (std::size_t i = 0; i < P.radii.size(); ++i)
    peak = std::max(peak, P.sup[i] / (P.radii[i] * P.radii[i]));
  bool degenerate = peak == 0.0;
  if (!degenerate) {
    degenerate = true;
    for (std::size_t i = P.radii.size() - 3; i < P.radii.size(); ++i)
      degenerate = degenerate && P.sup[i] / (P.radii[i] * P.radii[i]) < 0.01 * peak;
  }
  if (degenerate) {
    pc.cls = PointClass::degenerate;
    return pc;
  }
  bool all_flat = true;
  for (std::size_t i = 0; i < P.radii.size(); ++i)
    all_flat = all_flat && P.flat[i] < opt.delta * P.radii[i];
  if (all_flat) {
    pc.cls = PointClass::rank2_flat;
    return pc;
  }
  if (pc.dichotomy.all_pass && pc.dichotomy.fitted_C <= opt.C_bound) {
    pc.cls = PointClass::quadratic_growth;
    return pc;
  }
  pc.cls = PointClass::inconclusive;
  return pc;
}

//! Classifies every candidate from singular_points, ordered by coordinates.
inline std::vector<PointClassification> classify_singular_points(const GridField &u,
                                                                 const ClassifyOptions &opt = {}) {
  if (!(opt.delta > 0.0 && opt.delta < 1.0))
    throw InvalidInput("classify: delta must lie in (0, 1)");
  std::vector<PointClassification> out;
  for (const Vec &x : singular_points(u, opt.singular).points)
    out.push_back(classify_point(u, x, opt));
  return out;
}

// Monotonicity probe ----------------------------------------------------------

struct MonotonicityReport {
  bool pass = false;
  double min_value = std::numeric_limits<double>::infinity();
  Vec argmin{};
  long samples = 0;
  std::vector<Vec> violations; //!< first 100 sample points below -tol
  double tol = 0.0;
};

/*!
  Samples x in (B_{r0} \ B_{delta0 r0})(x0) intersected with the cone
  {x_2 - x0_2 >= M |x_1 - x0_1|} and t in [delta0, 2], and evaluates the
  discrete d_2 u at x + t r0 e_2.
*/
inline MonotonicityReport monotonicity_probe(const GridField &u, const Vec &x0, double delta0,
                                             double r0, double slope,
                                             double tol = std::numeric_limits<double>::quiet_NaN(),
                                             int radial = 12, int angular = 12, int shifts = 12) {
  const Grid &g = u.grid;
  if (g.dim != 2)
    throw InvalidInput("monotonicity_probe: 2D fields only");
  if (!(delta0 > 0.0 && delta0 < 1.0) || !(r0 > 0.0) || !(slope > 0.0))
    throw InvalidInput("monotonicity_probe: need delta0 in (0,1), r0 > 0, M > 0");
  MonotonicityReport rep;
  rep.tol = std::isnan(tol) ? 5.0 * g.min_spacing() : tol;
  const double half = std::atan(1.0 / slope); // half-opening about e_2
  const double mid = 0.5 * std::numbers::pi;
  for (int i = 0; i < radial; ++i) {
    const double rho = r0 * (delta0 + (1.0 - delta0) * (i + 0.5) / radial);
    for (int j = 0; j < angular; ++j) {
      const double phi = mid - half + 2.0 * half * (j + 0.5) / angular;
      for (int k = 0; k < shifts; ++k) {
        const double t = delta0 + (2.0 - delta0) * k / (shifts - 1);
        const Vec y{x0[0] + rho * std::cos(phi), x0[1] + rho * std::sin(phi) + t * r0, 0.0};
        if (!g.inside_box(y))
          throw InvalidInput("monotonicity_probe: probe region exits the grid domain");
        const double d2 = gradient(u, y)[1];
        ++rep.samples;
        if (d2 < rep.min_value) {
          rep.min_value = d2;
          rep.argmin = y;
        }
        if (d2 < -rep.tol && rep.violations.size() < 100)
          rep.violations.push_back(y);
      }
    }
  }
  rep.pass = rep.min_value >= -rep.tol;
  return rep;
}

struct ThresholdScan {
  std::vector<double> r0;
  std::vector<bool> pass;
  std::vector<double> min_value;
  double threshold = 0.0; //!< largest r0 such that it and every smaller r0 pass
};

inline ThresholdScan monotonicity_threshold(const GridField &u, const Vec &x0, double delta0,
                                            double slope, std::vector<double> r0_list,
                                            double tol = std::numeric_limits<double>::quiet_NaN()) {
  std::sort(r0_list.begin(), r0_list.end());
  ThresholdScan s;
  bool ok = true;
  for (double r0 : r0_list) {
    const auto rep = monotonicity_probe(u, x0, delta0, r0, slope, tol);
    s.r0.push_back(r0);
    s.pass.push_back(rep.pass);
    s.min_value.push_back(rep.min_value);
    ok = ok && rep.pass;
    if (ok)
      s.threshold = r0;
  }
  return s;
}

// Junction arcs ---------------------------------------------------------------

struct JunctionOptions {
  double cluster_gap = 20.0 * std::numbers::pi / 180.0;
  int min_samples = 1440; //!< angular samples per circle (at least)
  FlatnessOptions flat;
};

struct JunctionResult {
  Vec x0{};
  double slope = 0.0;                    //!< M of the fitted line pair
  std::vector<double> ray_angles;        //!< four tangent ray angles, ccw
  std::vector<double> radii;
  std::vector<std::vector<double>> arcs; //!< arcs[i][a]: angle of arc a at radii[i]
  std::vector<std::vector<double>> deviation;
  std::vector<double> max_deviation;     //!< per radius
  double angular_pitch = 0.0;            //!< largest sampling pitch used
  FlatnessResult fit;
};

namespace detail {
inline double wrap_2pi(double t) {
  t = std::fmod(t, 2.0 * std::numbers::pi);
  return t < 0.0 ? t + 2.0 * std::numbers::pi : t;
}
inline double circ_dist(double a, double b) {
  const double d = std::abs(wrap_2pi(a - b));
  return std::min(d, 2.0 * std::numbers::pi - d);
}

//! Gap-based circular clustering; returns cluster mean angles, ascending.
inline std::vector<double> cluster_angles(std::vector<double> a, double gap) {
  if (a.empty())
    return {};
  for (double &t : a)
    t = wrap_2pi(t);
  std::sort(a.begin(), a.end());
  const std::size_t n = a.size();
  // start after the widest gap so no cluster straddles the cut
  std::size_t start = 0;
  double widest = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = i + 1 < n ? a[i + 1] - a[i] : a[0] + 2.0 * std::numbers::pi - a[i];
    if (g > widest) {
      widest = g;
      start = (i + 1) % n;
    }
  }
  std::vector<double> means;
  if (widest <= gap) {
    double mx = 0.0, my = 0.0;
    for (double t : a)
      mx += std::cos(t), my += std::sin(t);
    return {wrap_2pi(std::atan2(my, mx))};
  }
  double sx = 0.0, sy = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t i = (start + c) % n;
    if (c > 0) {
      const std::size_t p = (start + c - 1) % n;
      if (wrap_2pi(a[i] - a[p]) > gap) {
        means.push_back(wrap_2pi(std::atan2(sy, sx)));
        sx = sy = 0.0;
      }
    }
    sx += std::cos(a[i]);
    sy += std::sin(a[i]);
  }
  means.push_back(wrap_2pi(std::atan2(sy, sx)));
  std::sort(means.begin(), means.end());
  return means;
}
} // namespace detail

/*!
  Four-arc structure of the free boundary around x0: crossing angles of
  {u > 0} with each circle |x - x0| = r are clustered; every circle must give
  exactly four clusters. The tangent line pair comes from the flatness
  minimiser at the smallest radius.
*/
inline JunctionResult junction_arcs(const GridField &u, const Vec &x0, std::vector<double> r_list,
                                    const JunctionOptions &opt = {}) {
  const Grid &g = u.grid;
  if (g.dim != 2)
    throw InvalidInput("junction_arcs: 2D fields only");
  if (r_list.empty())
    throw InvalidInput("junction_arcs: empty radius list");
  std::sort(r_list.begin(), r_list.end(), std::greater<>());
  JunctionResult res;
  res.x0 = x0;
  std::vector<int> counts;
  std::vector<std::vector<double>> clusters;
  bool bad = false;
  for (double r : r_list) {
    detail::require_ball_in_box(g, x0, r, "junction_arcs");
    const int m = std::max(opt.min_samples,
                           static_cast<int>(std::ceil(8.0 * std::numbers::pi * r / g.min_spacing())));
    res.angular_pitch = std::max(res.angular_pitch, 2.0 * std::numbers::pi / m);
    auto c = detail::cluster_angles(detail::circle_crossings(u, x0, r, m), opt.cluster_gap);
    counts.push_back(static_cast<int>(c.size()));
    bad = bad || c.size() != 4;
    clusters.push_back(std::move(c));
  }
  if (bad) {
    std::string msg = "junction_arcs: expected 4 free-boundary arcs, found";
    for (int c : counts)
      msg += " " + std::to_string(c);
    throw StructureError(msg, counts);
  }

  res.fit = flatness(u, r_list.back(), x0, opt.flat);
  if (res.fit.empty || res.fit.degenerate || res.fit.rank_one)
    throw StructureError("junction_arcs: no crossing line pair at the smallest radius", counts);
  res.slope = res.fit.slope;
  for (double t : {res.fit.theta1, res.fit.theta2})
    for (double s : {0.0, std::numbers::pi})
      res.ray_angles.push_back(detail::wrap_2pi(t + s));
  std::sort(res.ray_angles.begin(), res.ray_angles.end());

  // order arcs at the smallest radius, then follow them outwards
  const std::size_t L = r_list.size();
  std::vector<std::vector<double>> arcs(L, std::vector<double>(4));
  arcs[L - 1] = clusters[L - 1];
  for (std::size_t i = L - 1; i-- > 0;) {
    int best_shift = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 4; ++s) {
      double cost = 0.0;
      for (int a = 0; a < 4; ++a)
        cost += detail::circ_dist(clusters[i][(a + s) % 4], arcs[i + 1][a]);
      if (cost < best_cost) {
        best_cost = cost;
        best_shift = s;
      }
    }
    for (int a = 0; a < 4; ++a)
      arcs[i][a] = clusters[i][(a + best_shift) % 4];
  }
  std::vector<double> ray(4);
  for (int a = 0; a < 4; ++a) {
    double best = std::numeric_limits<double>::infinity();
    for (double t : res.ray_angles)
      if (detail::circ_dist(arcs[L - 1][a], t) < best) {
        best = detail::circ_dist(arcs[L - 1][a], t);
        ray[a] = t;
      }
  }
  // report from the largest radius down
  for (std::size_t i = 0; i < L; ++i) {
    res.radii.push_back(r_list[i]);
    res.arcs.push_back(arcs[i]);
    std::vector<double> dev(4);
    double mx = 0.0;
    for (int a = 0; a < 4; ++a) {
      dev[a] = detail::circ_dist(arcs[i][a], ray[a]);
      mx = std::max(mx, dev[a]);
    }
    res.deviation.push_back(dev);
    res.max_deviation.push_back(mx);
  }
  return res;
}

} // namespace ufb
