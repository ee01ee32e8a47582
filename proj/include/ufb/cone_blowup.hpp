#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "operator.hpp"
#include "parallel.hpp"
#include "sym_matrix.hpp"

namespace ufb {

//! Planar sector {r (cos t, sin t) : 0 < r < 1, orientation < t < orientation + aperture}.
struct SectorSpec {
  double aperture = std::numbers::pi / 2.0;
  double orientation = 0.0;

  void validate() const {
    if (!(aperture > 0.0 && aperture < 2.0 * std::numbers::pi))
      throw ConfigError("sector aperture must lie in (0, 2 pi)");
    if (!std::isfinite(orientation))
      throw ConfigError("sector orientation must be finite");
  }
};

/*!
  Tensor grid in (s, theta), s = log r, on [log r_min, 0] x [0, aperture].
  Radial nodes are geometric with ratio 2^(1 / per_octave), so dyadic
  rescalings map nodes to nodes.
*/
struct PolarGridSpec {
  int octaves = 10;     //!< r_min = 2^-octaves
  int per_octave = 14;  //!< radial ratio 2^(1/14) ~ 1.0508
};

struct PolarField {
  SectorSpec sector;
  double s0 = 0.0;      //!< log r_min
  double ds = 0.0;
  double dtheta = 0.0;
  int per_octave = 14;
  int nr = 0, nt = 0;   //!< node counts
  std::vector<double> values; //!< index i * nt + j
  //! v(r_min) / v(r_min e^ds); continues the field homogeneously below r_min
  double vertex_ratio = std::numeric_limits<double>::quiet_NaN();
  double trusted_min_r = 0.0; //!< values below this radius are extrapolated
  double residual = std::numeric_limits<double>::quiet_NaN();
  int policy_iterations = 0;
  int outer_iterations = 0;
  long sweeps = 0;

  double r(int i) const { return std::exp(s0 + i * ds); }
  double theta(int j) const { return j * dtheta; }
  double r_min() const { return std::exp(s0); }
  double &at(int i, int j) { return values[static_cast<std::size_t>(i) * nt + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * nt + j]; }

  /*!
    Value at log-radius s on ray j: cubic Lagrange in s between nodes, and
    homogeneous continuation v(s0 - m ds) = q^m v(s0) below the first node.
  */
  double at_s(double s, int j) const {
    const double f = (s - s0) / ds;
    if (f < 0.0) {
      const double q = std::isnan(vertex_ratio) ? 1.0 : vertex_ratio;
      return at(0, j) * std::pow(q, -f);
    }
    if (f > nr - 1 + 1e-9)
      throw InvalidInput("PolarField: radius outside the sector");
    const double fr = std::round(f);
    if (std::abs(f - fr) < 1e-9)
      return at(static_cast<int>(fr), j);
    int i0 = static_cast<int>(std::floor(f)) - 1;
    i0 = std::clamp(i0, 0, nr - 4);
    const double t = f - i0;
    double s_val = 0.0;
    for (int a = 0; a < 4; ++a) {
      double w = 1.0;
      for (int b = 0; b < 4; ++b)
        if (b != a)
          w *= (t - b) / (a - b);
      s_val += w * at(i0 + a, j);
    }
    return s_val;
  }
  double at_r(double radius, int j) const { return at_s(std::log(radius), j); }

  PolarField blank() const {
    PolarField p = *this;
    std::fill(p.values.begin(), p.values.end(), 0.0);
    return p;
  }
};

using SectorData = std::function<double(double r, double theta)>;

//! 16 (|x| - 3/4)^2 for |x| > 3/4, zero otherwise.
inline double lemma_v0(double radius) {
  return radius <= 0.75 ? 0.0 : 16.0 * (radius - 0.75) * (radius - 0.75);
}
inline double lemma_v0(const Vec &x) { return lemma_v0(std::hypot(x[0], x[1])); }
inline SectorData lemma_v0_data() {
  return [](double r, double) { return lemma_v0(r); };
}

inline PolarField make_polar_field(const SectorSpec &sector, const PolarGridSpec &gs) {
  sector.validate();
  if (gs.octaves < 1 || gs.per_octave < 2)
    throw ConfigError("polar grid needs octaves >= 1 and per_octave >= 2");
  PolarField f;
  f.sector = sector;
  f.per_octave = gs.per_octave;
  f.ds = std::log(2.0) / gs.per_octave;
  f.nr = gs.octaves * gs.per_octave + 1;
  f.s0 = -(f.nr - 1) * f.ds;
  const int intervals = std::max(8, static_cast<int>(std::lround(sector.aperture / f.ds)));
  f.nt = intervals + 1;
  f.dtheta = sector.aperture / intervals;
  f.values.assign(static_cast<std::size_t>(f.nr) * f.nt, 0.0);
  f.trusted_min_r = f.r_min();
  return f;
}

struct PolarOptions {
  PolarGridSpec grid;
  double linear_tol = 1e-13;      //!< max |residual / diagonal|
  double fixed_point_tol = 1e-12; //!< vertex-ratio and field updates
  long max_sweeps = 2000000;
  int max_policy = 100;
  int max_outer = 200;
  int pucci_directions = 720;
  int threads = default_threads();
};

/*!
  F(D^2 v) = 0 in the sector with v = data on the lateral rays and the outer
  arc. In (s, theta) the equation r^2 tr(A D^2 v) = 0 reads
    a (v_ss - v_s) + 2 b (v_st - v_t) + c (v_tt + v_s) = 0
  with (a, b; b, c) the control in the (e_r, e_theta) frame. Second
  derivatives are central (the mixed term on the two diagonal neighbours
  picked by the sign of b) and first derivatives upwinded. At r_min the
  field is closed by v(s0) = q v(s0 + ds), with q = max v(s1) / max v(s2)
  taken from the current iterate.
*/
class SectorSolver {
public:
  SectorSolver(const OperatorSpec &op, const SectorSpec &sector, SectorData data,
               const PolarOptions &opt = {})
      : op_(op), opt_(opt), data_(std::move(data)),
        pool_(std::make_unique<WorkerPool>(opt.threads)) {
    if (op.dim() != 2)
      throw ConfigError("sector solver needs a 2D operator");
    field_ = make_polar_field(sector, opt.grid);
    controls_ = op.solver_controls(opt.pucci_directions);
    const int nr = field_.nr, nt = field_.nt;
    ni_ = nr - 2; // i = 1 .. nr - 2
    nj_ = nt - 2; // j = 1 .. nt - 2
    if (ni_ < 3 || nj_ < 3)
      throw ConfigError("polar grid too coarse");
    const double ds = field_.ds, dt = field_.dtheta;

    // boundary values
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nt; ++j)
        if (j == 0 || j == nt - 1 || i == nr - 1)
          field_.at(i, j) = value_at(field_.r(i), field_.theta(j));

    // per node, per control: 8 neighbour weights
    weights_.resize(static_cast<std::size_t>(ni_) * nj_ * controls_.size() * 8);
    for (int i = 1; i <= ni_; ++i)
      for (int j = 1; j <= nj_; ++j) {
        const double phi = sector.orientation + field_.theta(j);
        for (std::size_t t = 0; t < controls_.size(); ++t) {
          const SymMatrix at = rotate_to_frame(controls_[t], phi);
          const double a = at(0, 0), b = at(0, 1), c = at(1, 1);
          const double mix = std::abs(b) / (ds * dt);
          double *w = &weights_[slot(i, j, t)];
          w[0] = a / (ds * ds) - mix; // s+
          w[1] = a / (ds * ds) - mix; // s-
          w[2] = c / (dt * dt) - mix; // t+
          w[3] = c / (dt * dt) - mix; // t-
          const double tol = -1e-12 * std::max(a / (ds * ds), c / (dt * dt));
          if (w[0] < tol || w[2] < tol)
            throw ConfigError("control " + std::to_string(t) +
                              " is too anisotropic for the polar stencil at theta = " +
                              std::to_string(field_.theta(j)));
          for (int k = 0; k < 4; ++k)
            w[k] = std::max(0.0, w[k]);
          const double drift_s = c - a, drift_t = -2.0 * b;
          w[drift_s > 0.0 ? 0 : 1] += std::abs(drift_s) / ds;
          w[drift_t > 0.0 ? 2 : 3] += std::abs(drift_t) / dt;
          // diagonals: (+,+), (-,-), (+,-), (-,+)
          w[4] = w[5] = b > 0.0 ? mix : 0.0;
          w[6] = w[7] = b < 0.0 ? mix : 0.0;
        }
      }
    const int longest = std::max(ni_, nj_) + 1;
    omega_ = 2.0 / (1.0 + std::sin(std::numbers::pi / longest));
  }

  //! Runs the vertex-ratio / policy-iteration loop and returns the field.
  PolarField solve() {
    PolarField &f = field_;
    double q = std::exp(-f.ds * std::numbers::pi / f.sector.aperture);
    std::vector<double> u(static_cast<std::size_t>(ni_) * nj_, 0.0);
    for (int outer = 0;; ++outer) {
      if (outer >= opt_.max_outer)
        throw IterationLimit("sector solver: vertex closure did not settle", q, outer);
      const double q_prev = q;
      solve_nonlinear(q, u);
      f.outer_iterations = outer + 1;
      const double qn = vertex_estimate(u, q);
      if (std::abs(qn - q_prev) <= opt_.fixed_point_tol && std::abs(qn - q) <= opt_.fixed_point_tol) {
        q = qn;
        break;
      }
      q = qn;
    }
    for (int i = 1; i <= ni_; ++i)
      for (int j = 1; j <= nj_; ++j)
        f.at(i, j) = u[idx(i, j)];
    for (int j = 1; j <= nj_; ++j)
      f.at(0, j) = q * f.at(1, j);
    for (int j : {0, f.nt - 1})
      f.at(0, j) = value_at(f.r(0), f.theta(j));
    f.vertex_ratio = q;
    f.residual = residual(q, u);
    return f;
  }

private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i - 1) * nj_ + (j - 1); }
  std::size_t slot(int i, int j, std::size_t t) const {
    return (idx(i, j) * controls_.size() + t) * 8;
  }
  double value_at(double r, double theta) const {
    const double v = data_(r, theta);
    if (!std::isfinite(v))
      throw ConfigError("sector boundary data is not finite");
    return v;
  }

  static constexpr int di[8] = {1, -1, 0, 0, 1, -1, 1, -1};
  static constexpr int dj[8] = {0, 0, 1, -1, 1, -1, -1, 1};

  //! Neighbour value: unknown, vertex closure, or boundary data.
  double neighbour(const std::vector<double> &u, double q, int i, int j) const {
    if (j == 0 || j == field_.nt - 1 || i == field_.nr - 1)
      return field_.at(i, j);
    if (i == 0)
      return q * u[idx(1, j)];
    return u[idx(i, j)];
  }

  //! L_t v at node (i, j) for control t.
  double apply(std::size_t t, int i, int j, const std::vector<double> &u, double q) const {
    const double *w = &weights_[slot(i, j, t)];
    const double c = u[idx(i, j)];
    double s = 0.0;
    for (int k = 0; k < 8; ++k)
      if (w[k] != 0.0)
        s += w[k] * (neighbour(u, q, i + di[k], j + dj[k]) - c);
    return s;
  }

  std::pair<double, int> evaluate(int i, int j, const std::vector<double> &u, double q) const {
    const bool maximize = op_.maximizes();
    double best = maximize ? -std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::infinity();
    std::vector<double> vals(controls_.size());
    for (std::size_t t = 0; t < controls_.size(); ++t) {
      vals[t] = apply(t, i, j, u, q);
      best = maximize ? std::max(best, vals[t]) : std::min(best, vals[t]);
    }
    const double tie = 1e-11 * (1.0 + std::abs(best));
    for (std::size_t t = 0; t < controls_.size(); ++t)
      if (std::abs(vals[t] - best) <= tie)
        return {best, static_cast<int>(t)};
    return {best, 0};
  }

  double diagonal(std::size_t t, int i, int j) const {
    const double *w = &weights_[slot(i, j, t)];
    double d = 0.0;
    for (int k = 0; k < 8; ++k)
      d += w[k];
    return d;
  }

  double residual(double q, const std::vector<double> &u) const {
    double r = 0.0;
    for (int i = 1; i <= ni_; ++i)
      for (int j = 1; j <= nj_; ++j) {
        const auto [v, t] = evaluate(i, j, u, q);
        r = std::max(r, std::abs(v) / diagonal(t, i, j));
      }
    return r;
  }

  std::vector<int> select_policy(const std::vector<double> &u, double q) const {
    std::vector<int> pol(u.size());
    pool_->for_chunks(static_cast<std::size_t>(ni_), [&](std::size_t b, std::size_t e) {
      for (std::size_t ii = b; ii < e; ++ii)
        for (int j = 1; j <= nj_; ++j) {
          const int i = static_cast<int>(ii) + 1;
          pol[idx(i, j)] = evaluate(i, j, u, q).second;
        }
    });
    return pol;
  }

  //! Current estimate of the vertex ratio max v(s1) / max v(s2).
  double vertex_estimate(const std::vector<double> &u, double fallback) const {
    double m1 = 0.0, m2 = 0.0;
    for (int j = 1; j <= nj_; ++j) {
      m1 = std::max(m1, u[idx(1, j)]);
      m2 = std::max(m2, u[idx(2, j)]);
    }
    return m2 > 0.0 ? std::clamp(m1 / m2, 1e-12, 1.0) : fallback;
  }

  /*!
    Multicolour SOR for the fixed policy. The vertex ratio q is refreshed
    from the iterate at every residual check, so the closure and the linear
    solve converge together.
  */
  void solve_linear(const std::vector<int> &pol, double &q, std::vector<double> &u) {
    const int nt = field_.nt, nr = field_.nr;
    const std::size_t N = u.size();
    std::vector<double> cst(N, 0.0), full(N, 0.0), self(N, 0.0), den(N, 0.0);
    for (int i = 1; i <= ni_; ++i)
      for (int j = 1; j <= nj_; ++j) {
        const std::size_t a = idx(i, j);
        const double *w = &weights_[slot(i, j, pol[a])];
        double d = 0.0, c = 0.0, sc = 0.0;
        for (int k = 0; k < 8; ++k) {
          d += w[k];
          const int ii = i + di[k], jj = j + dj[k];
          if (jj == 0 || jj == nt - 1 || ii == nr - 1)
            c += w[k] * field_.at(ii, jj);
          else if (ii == 0 && jj == j)
            sc += w[k];
        }
        cst[a] = c;
        full[a] = d;
        self[a] = sc;
      }
    auto set_q = [&](double qn) {
      q = qn;
      for (std::size_t a = 0; a < N; ++a)
        den[a] = full[a] - self[a] * q;
    };
    set_q(q);
    auto relax_row = [&](int i, int j, bool update) {
      const std::size_t a = idx(i, j);
      const double *w = &weights_[slot(i, j, pol[a])];
      double s = cst[a];
      for (int k = 0; k < 8; ++k) {
        const int ii = i + di[k], jj = j + dj[k];
        if (jj == 0 || jj == nt - 1 || ii == nr - 1)
          continue;
        if (ii == 0) {
          if (jj != j)
            s += w[k] * q * u[idx(1, jj)];
          continue;
        }
        s += w[k] * u[idx(ii, jj)];
      }
      const double corr = s / den[a] - u[a];
      if (update)
        u[a] += omega_ * corr;
      return std::abs(corr);
    };
    const double omega0 = omega_;
    double last = std::numeric_limits<double>::infinity();
    for (long sweep = 0;; sweep += 10) {
      double res = 0.0;
      for (int i = 1; i <= ni_; ++i)
        for (int j = 1; j <= nj_; ++j)
          res = std::max(res, relax_row(i, j, false));
      if (!std::isfinite(res))
        throw IterationLimit("sector solver: relaxation diverged", res, static_cast<int>(sweep));
      const double qn = vertex_estimate(u, q);
      const double dq = std::abs(qn - q);
      if (res <= opt_.linear_tol && dq <= opt_.fixed_point_tol)
        break;
      if (sweep >= opt_.max_sweeps)
        throw IterationLimit("sector solver: relaxation did not converge", res,
                             static_cast<int>(sweep));
      if (res > last && omega_ > 1.0)
        omega_ = 1.0 + 0.5 * (omega_ - 1.0);
      last = res;
      if (dq > 0.0)
        set_q(qn);
      for (int rep = 0; rep < 10; ++rep)
        for (int color = 0; color < 4; ++color) {
          const int pi = color & 1, pj = color >> 1;
          pool_->for_chunks(static_cast<std::size_t>(ni_), [&](std::size_t b, std::size_t e) {
            for (std::size_t ii = b; ii < e; ++ii) {
              const int i = static_cast<int>(ii) + 1;
              if ((i & 1) != pi)
                continue;
              for (int j = 1 + ((1 + pj) & 1); j <= nj_; j += 2)
                relax_row(i, j, true);
            }
          });
        }
      field_.sweeps += 10;
    }
    omega_ = omega0;
  }

  void solve_nonlinear(double &q, std::vector<double> &u) {
    auto pol = select_policy(u, q);
    for (int it = 0;; ++it) {
      if (it >= opt_.max_policy)
        throw IterationLimit("sector solver: policy iteration did not settle", 0.0, it);
      solve_linear(pol, q, u);
      ++field_.policy_iterations;
      auto next = select_policy(u, q);
      if (next == pol)
        return;
      pol = std::move(next);
    }
  }

  OperatorSpec op_;
  PolarOptions opt_;
  SectorData data_;
  std::unique_ptr<WorkerPool> pool_;
  PolarField field_;
  std::vector<SymMatrix> controls_;
  std::vector<double> weights_;
  int ni_ = 0, nj_ = 0;
  double omega_ = 1.0;
};

inline PolarField solve_cone_dirichlet(const OperatorSpec &op, const SectorSpec &sector,
                                       const SectorData &data, const PolarOptions &opt = {}) {
  SectorSolver solver(op, sector, data, opt);
  return solver.solve();
}

// Doubling barrier ------------------------------------------------------------

struct DoublingBarrierReport {
  double alpha = 0.0;          //!< 2 Lambda / lambda
  double eps = 0.0;            //!< e^-alpha / alpha
  int samples = 0;
  double max_F = -std::numeric_limits<double>::infinity(); //!< sup F(D^2 b) on the ring
  bool pass = false;
  //! 2 (1 + (n - 1) Lambda / lambda): makes F(D^2 b) <= 0 on the whole ring
  double alpha_sufficient = 0.0;
  double eps_sufficient = 0.0;
  double max_F_sufficient = -std::numeric_limits<double>::infinity();
  bool pass_sufficient = false;
};

namespace detail {
inline double doubling_barrier_max(const OperatorSpec &op, double alpha, int samples,
                                   std::uint64_t seed) {
  const int n = op.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rad(0.5, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    Vec d{};
    double l = 0.0;
    do {
      for (int i = 0; i < n; ++i)
        d[i] = gauss(rng);
      l = norm(d, n);
    } while (l < 1e-12);
    // include both ends of the ring exactly
    const double r = k == 0 ? 0.5 : k == 1 ? 1.0 : rad(rng);
    Vec x{};
    for (int i = 0; i < n; ++i)
      x[i] = r * d[i] / l;
    // D^2 b = (2 / alpha) e^{-alpha |x|^2} (I - 2 alpha x x^T)
    const double c = 2.0 / alpha * std::exp(-alpha * r * r);
    const SymMatrix hess = c * (SymMatrix::identity(n) - 2.0 * alpha * SymMatrix::outer(x, n));
    worst = std::max(worst, op(hess));
  }
  return worst;
}
} // namespace detail

/*!
  b(x) = 1 + (e^-alpha - e^{-alpha |x|^2}) / alpha^2 on the ring
  1/2 <= |x| <= 1 with alpha = 2 Lambda / lambda; checks F(D^2 b) <= 1e-10.
  The same check is repeated with alpha = 2 (1 + (n - 1) Lambda / lambda).
*/
inline DoublingBarrierReport verify_doubling_barrier(const OperatorSpec &op, int samples = 10000,
                                                     std::uint64_t seed = 1) {
  if (samples < 2)
    throw InvalidInput("verify_doubling_barrier: need at least 2 samples");
  DoublingBarrierReport r;
  const double ratio = op.Lambda() / op.lambda();
  r.samples = samples;
  r.alpha = 2.0 * ratio;
  r.eps = std::exp(-r.alpha) / r.alpha;
  r.max_F = detail::doubling_barrier_max(op, r.alpha, samples, seed);
  r.pass = r.max_F <= 1e-10;
  r.alpha_sufficient = 2.0 * (1.0 + (op.dim() - 1) * ratio);
  r.eps_sufficient = std::exp(-r.alpha_sufficient) / r.alpha_sufficient;
  r.max_F_sufficient = detail::doubling_barrier_max(op, r.alpha_sufficient, samples, seed);
  r.pass_sufficient = r.max_F_sufficient <= 1e-10;
  return r;
}

// Doubling inequality ---------------------------------------------------------

struct DoublingCheck {
  std::vector<double> R;
  std::vector<double> worst_margin; //!< min of ((1 - eps (1 - R)) v(x) - v(Rx)) / v(x)
  std::vector<long> nodes;
  double worst = std::numeric_limits<double>::infinity();
  double eps = 0.0;
  bool pass = false;
};

//! v(Rx) <= (1 - eps (1 - R)) v(x) at nodes with v(x) > 10 tol and Rx >= r_min.
inline DoublingCheck check_doubling(const PolarField &v, double eps, const std::vector<double> &Rs,
                                    double tol = 1e-10, double margin_tol = 1e-6) {
  DoublingCheck c;
  c.eps = eps;
  for (double R : Rs) {
    if (!(R >= 0.5 && R <= 1.0))
      throw InvalidInput("check_doubling: R must lie in [1/2, 1]");
    const double shift = std::log(R);
    double worst = std::numeric_limits<double>::infinity();
    long count = 0;
    for (int i = 0; i < v.nr; ++i) {
      const double s = v.s0 + i * v.ds + shift;
      if (s < v.s0 - 1e-12)
        continue;
      for (int j = 0; j < v.nt; ++j) {
        const double vx = v.at(i, j);
        if (!(vx > 10.0 * tol))
          continue;
        const double vr = v.at_s(std::max(s, v.s0), j);
        worst = std::min(worst, ((1.0 - eps * (1.0 - R)) * vx - vr) / vx);
        ++count;
      }
    }
    c.R.push_back(R);
    c.worst_margin.push_back(worst);
    c.nodes.push_back(count);
    c.worst = std::min(c.worst, worst);
  }
  c.pass = c.worst >= -margin_tol;
  return c;
}

// Blow-up ----------------------------------------------------------------------

//! sup over K_R (nodes with r <= R, plus the arc r = R when inside the grid).
inline double sector_sup(const PolarField &v, double R) {
  double m = 0.0;
  for (int i = 0; i < v.nr; ++i) {
    if (v.r(i) > R * (1.0 + 1e-12))
      break;
    for (int j = 0; j < v.nt; ++j)
      m = std::max(m, v.at(i, j));
  }
  if (R >= v.r_min() && R <= 1.0)
    for (int j = 0; j < v.nt; ++j)
      m = std::max(m, v.at_r(R, j));
  return m;
}

struct DoublingQuotient {
  double R = 0.0;
  double sup = 0.0;
  double ratio_min = 0.0; //!< min v(x/2) / v(x) over R/2 < |x| <= R
  double ratio_max = 0.0;
  double k = 0.0;         //!< min(ratio_min, 1 / ratio_max)
};

struct BlowupSequence {
  std::vector<double> R;
  std::vector<double> sup;          //!< sup_{K_{R_k}} v
  std::vector<PolarField> w;        //!< w_k(x) = v(R_k x) / sup_{K_{R_k}} v
  std::vector<double> differences;  //!< |w_{k+1} - w_k| on trusted K_{1/2}
  std::vector<DoublingQuotient> quotients;
};

inline BlowupSequence blowup_sequence(const PolarField &v, std::vector<double> Rs) {
  if (Rs.empty())
    throw InvalidInput("blowup_sequence: empty R list");
  for (std::size_t k = 0; k < Rs.size(); ++k)
    if (!(Rs[k] > 0.0 && Rs[k] < 1.0) || (k > 0 && !(Rs[k] < Rs[k - 1])))
      throw InvalidInput("blowup_sequence: R list must decrease inside (0, 1)");
  BlowupSequence bs;
  for (double R : Rs) {
    const double S = sector_sup(v, R);
    if (!(S > 0.0))
      throw InvalidInput("blowup_sequence: vanishing supremum (degenerate field)");
    PolarField w = v.blank();
    const double shift = std::log(R);
    for (int i = 0; i < v.nr; ++i)
      for (int j = 0; j < v.nt; ++j)
        w.at(i, j) = v.at_s(v.s0 + i * v.ds + shift, j) / S;
    w.trusted_min_r = std::max(v.trusted_min_r / R, v.r_min());
    bs.R.push_back(R);
    bs.sup.push_back(S);
    bs.w.push_back(std::move(w));

    DoublingQuotient dq{R, S, std::numeric_limits<double>::infinity(), 0.0, 0.0};
    const double half = std::log(0.5);
    for (int i = 0; i < v.nr; ++i) {
      const double r = v.r(i);
      if (r > R * (1.0 + 1e-12) || r <= 0.5 * R * (1.0 + 1e-12))
        continue;
      if (v.s0 + i * v.ds + half < v.s0 - 1e-12)
        continue;
      for (int j = 1; j + 1 < v.nt; ++j) {
        const double vx = v.at(i, j);
        if (!(vx > 1e-12 * S))
          continue;
        const double ratio = v.at_s(v.s0 + i * v.ds + half, j) / vx;
        dq.ratio_min = std::min(dq.ratio_min, ratio);
        dq.ratio_max = std::max(dq.ratio_max, ratio);
      }
    }
    if (dq.ratio_max > 0.0)
      dq.k = std::min(dq.ratio_min, 1.0 / dq.ratio_max);
    bs.quotients.push_back(dq);
  }
  for (std::size_t k = 0; k + 1 < bs.w.size(); ++k) {
    const auto &a = bs.w[k], &b = bs.w[k + 1];
    const double lo = std::max(a.trusted_min_r, b.trusted_min_r);
    double d = 0.0;
    for (int i = 0; i < a.nr; ++i) {
      const double r = a.r(i);
      if (r < lo * (1.0 - 1e-12) || r > 0.5 * (1.0 + 1e-12))
        continue;
      for (int j = 0; j < a.nt; ++j)
        d = std::max(d, std::abs(a.at(i, j) - b.at(i, j)));
    }
    bs.differences.push_back(d);
  }
  return bs;
}

struct BlowupResult {
  double kappa = 0.0;
  std::vector<double> theta;
  std::vector<double> phi;            //!< angular profile, sup 1
  std::vector<double> fit_R;
  std::vector<double> fit_sup;
  double fit_lo = 0.0, fit_hi = 0.0;
  double profile_residual = 0.0;      //!< max relative deviation from phi over the fit range
  std::vector<double> C_R_R;          //!< R of the C_R table
  std::vector<double> C_R;            //!< min of w(Rx) / w(x) on the trusted region
  std::vector<double> residuals;      //!< blow-up differences, when known
  double eps = std::numeric_limits<double>::quiet_NaN();
};

/*!
  kappa from the least-squares slope of log sup_{K_R} w against log R over
  dyadic R in [lo, hi]; phi is the angular profile at r = sqrt(lo hi).
*/
inline BlowupResult homogeneity_exponent(const PolarField &w, double lo = 1.0 / 64.0,
                                         double hi = 0.25) {
  if (!(lo > 0.0 && hi > lo && hi <= 1.0))
    throw InvalidInput("homogeneity_exponent: need 0 < lo < hi <= 1");
  if (lo < w.trusted_min_r * (1.0 - 1e-9))
    throw InvalidInput("homogeneity_exponent: fit range reaches the extrapolated region");
  BlowupResult b;
  b.fit_lo = lo;
  b.fit_hi = hi;
  for (double R = hi; R >= lo * (1.0 - 1e-12); R *= 0.5) {
    const double S = sector_sup(w, R);
    if (!(S > 0.0))
      throw InvalidInput("homogeneity_exponent: nonpositive supremum in the fit range");
    b.fit_R.push_back(R);
    b.fit_sup.push_back(S);
  }
  if (b.fit_R.size() < 2)
    throw InvalidInput("homogeneity_exponent: fit range holds fewer than two dyadic radii");
  double mx = 0.0, my = 0.0;
  const double m = static_cast<double>(b.fit_R.size());
  for (std::size_t k = 0; k < b.fit_R.size(); ++k) {
    mx += std::log(b.fit_R[k]) / m;
    my += std::log(b.fit_sup[k]) / m;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < b.fit_R.size(); ++k) {
    const double dx = std::log(b.fit_R[k]) - mx;
    sxy += dx * (std::log(b.fit_sup[k]) - my);
    sxx += dx * dx;
  }
  b.kappa = sxy / sxx;

  const double s_mid = 0.5 * (std::log(lo) + std::log(hi));
  double pmax = 0.0;
  for (int j = 0; j < w.nt; ++j) {
    b.theta.push_back(w.theta(j));
    b.phi.push_back(w.at_s(s_mid, j));
    pmax = std::max(pmax, b.phi.back());
  }
  if (!(pmax > 0.0))
    throw InvalidInput("homogeneity_exponent: vanishing angular profile");
  for (double &p : b.phi)
    p /= pmax;
  for (int i = 0; i < w.nr; ++i) {
    const double r = w.r(i);
    if (r < lo * (1.0 - 1e-12) || r > hi * (1.0 + 1e-12))
      continue;
    double rowmax = 0.0;
    for (int j = 0; j < w.nt; ++j)
      rowmax = std::max(rowmax, w.at(i, j));
    if (!(rowmax > 0.0))
      continue;
    for (int j = 0; j < w.nt; ++j)
      b.profile_residual = std::max(b.profile_residual, std::abs(w.at(i, j) / rowmax - b.phi[j]));
  }

  for (double R : {0.5, 0.25, 0.125}) {
    double cmin = std::numeric_limits<double>::infinity();
    const double shift = std::log(R);
    for (int i = 0; i < w.nr; ++i) {
      const double r = w.r(i);
      if (r > hi * (1.0 + 1e-12) || R * r < w.trusted_min_r * (1.0 - 1e-12))
        continue;
      for (int j = 1; j + 1 < w.nt; ++j) {
        const double wx = w.at(i, j);
        if (!(wx > 1e-12))
          continue;
        cmin = std::min(cmin, w.at_s(w.s0 + i * w.ds + shift, j) / wx);
      }
    }
    if (std::isfinite(cmin)) {
      b.C_R_R.push_back(R);
      b.C_R.push_back(cmin);
    }
  }
  return b;
}

/*!
  Runs blowup_sequence and fits the exponent on the deepest rescaling whose
  trusted region still covers the fit range.
*/
inline BlowupResult blowup(const PolarField &v, const std::vector<double> &Rs, double lo = 1.0 / 64.0,
                           double hi = 0.25) {
  const auto seq = blowup_sequence(v, Rs);
  std::size_t pick = seq.w.size();
  for (std::size_t k = 0; k < seq.w.size(); ++k)
    if (seq.w[k].trusted_min_r <= lo * (1.0 + 1e-9))
      pick = k;
  if (pick == seq.w.size())
    throw InvalidInput("blowup: no rescaling covers the fit range");
  BlowupResult b = homogeneity_exponent(seq.w[pick], lo, hi);
  b.residuals = seq.differences;
  return b;
}

struct TwoSidedBound {
  double ratio_min = 0.0, ratio_max = 0.0;
  long nodes = 0;
  bool pass = false;
};

/*!
  inf and sup of u / b over K_{1/2} outside B_{r_excl}; both fields must
  vanish on the lateral rays there and b must be positive inside.
*/
inline TwoSidedBound check_two_sided_bound(const PolarField &u, const PolarField &b, double r_excl,
                                           double tol = 1e-10) {
  if (u.nr != b.nr || u.nt != b.nt)
    throw InvalidInput("check_two_sided_bound: grids differ");
  TwoSidedBound t{std::numeric_limits<double>::infinity(), 0.0, 0, false};
  for (int i = 0; i < u.nr; ++i) {
    const double r = u.r(i);
    if (r < r_excl || r > 0.5 * (1.0 + 1e-12))
      continue;
    for (int j = 0; j < u.nt; ++j) {
      if (j == 0 || j == u.nt - 1) {
        if (std::abs(u.at(i, j)) > tol || std::abs(b.at(i, j)) > tol)
          throw InvalidInput("check_two_sided_bound: trusted-region violation (field does not "
                             "vanish on a lateral ray)");
        continue;
      }
      if (!(b.at(i, j) > tol))
        throw InvalidInput("check_two_sided_bound: trusted-region violation (b not positive)");
      const double q = u.at(i, j) / b.at(i, j);
      t.ratio_min = std::min(t.ratio_min, q);
      t.ratio_max = std::max(t.ratio_max, q);
      ++t.nodes;
    }
  }
  t.pass = t.nodes > 0 && t.ratio_min > 0.0 && std::isfinite(t.ratio_max);
  return t;
}

//! min over lateral-adjacent nodes of v / (r dtheta) for r in [r_lo, r_hi]:
//! a one-sided normal derivative bound on the lateral rays.
inline double lateral_slope_min(const PolarField &v, double r_lo, double r_hi) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < v.nr; ++i) {
    const double r = v.r(i);
    if (r < r_lo || r > r_hi)
      continue;
    m = std::min(m, (v.at(i, 1) - v.at(i, 0)) / (r * v.dtheta));
    m = std::min(m, (v.at(i, v.nt - 2) - v.at(i, v.nt - 1)) / (r * v.dtheta));
  }
  return m;
}

} // namespace ufb
