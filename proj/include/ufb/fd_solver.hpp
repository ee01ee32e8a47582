#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "operator.hpp"
#include "parallel.hpp"
#include "penalty.hpp"
#include "sym_matrix.hpp"

namespace ufb {

//! Central-difference Hessian at an interior node (four-point cross for the
//! mixed entries). Exact for quadratics.
inline SymMatrix discretize_hessian(const GridField &u, const Index &node) {
  const Grid &g = u.grid;
  for (int a = 0; a < g.dim; ++a)
    if (node[a] < 1 || node[a] > g.count[a] - 2)
      throw IndexError("discretize_hessian: node is not strictly interior");
  SymMatrix hess(g.dim);
  const double c = u.at(node);
  for (int a = 0; a < g.dim; ++a) {
    Index p = node, m = node;
    ++p[a];
    --m[a];
    const double h = g.spacing(a);
    hess(a, a) = (u.at(p) - 2.0 * c + u.at(m)) / (h * h);
    for (int b = a + 1; b < g.dim; ++b) {
      Index pp = node, pm = node, mp = node, mm = node;
      ++pp[a], ++pp[b];
      ++pm[a], --pm[b];
      --mp[a], ++mp[b];
      --mm[a], --mm[b];
      hess(a, b) = (u.at(pp) - u.at(pm) - u.at(mp) + u.at(mm)) /
                   (4.0 * h * g.spacing(b));
    }
  }
  return hess;
}

struct Problem {
  OperatorSpec op;
  Grid grid;
  Domain domain;
  BoundaryData g;
};

struct SolverOptions {
  double linear_tol = 1e-10;   //!< relaxation residual (max norm)
  long max_sweeps = 400000;    //!< per linear solve
  double fixed_point_tol = 1e-8;
  int max_outer = 200;
  int max_policy = 100;
  int threads = default_threads();
  int pucci_directions = 720;
};

/*!
  Monotone finite-difference stencil of u -> tr(A D^2 u) on a uniform grid:
  standard second differences on the axes and, for each mixed entry, the
  two diagonal neighbours selected by the sign of A_ij. Slot layout: axis
  neighbours +e_0, -e_0, +e_1, ...; then per pair (i < j) the offsets
  +i+j, -i-j, +i-j, -i+j.
*/
struct StencilLayout {
  int dim = 2;
  std::vector<std::array<int, 3>> offsets;

  explicit StencilLayout(int n) : dim(n) {
    for (int a = 0; a < n; ++a) {
      std::array<int, 3> p{0, 0, 0}, m{0, 0, 0};
      p[a] = 1;
      m[a] = -1;
      offsets.push_back(p);
      offsets.push_back(m);
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        std::array<int, 3> pp{0, 0, 0}, mm{0, 0, 0}, pm{0, 0, 0}, mp{0, 0, 0};
        pp[i] = pp[j] = 1;
        mm[i] = mm[j] = -1;
        pm[i] = 1, pm[j] = -1;
        mp[i] = -1, mp[j] = 1;
        offsets.insert(offsets.end(), {pp, mm, pm, mp});
      }
  }
  int slots() const { return static_cast<int>(offsets.size()); }
};

/*!
  Neighbour weights of the monotone stencil for control `a`; throws
  ConfigError when some weight is negative, i.e. the control is not
  diagonally dominant relative to the grid spacings.
*/
inline std::vector<double> monotone_weights(const SymMatrix &a,
                                            const std::array<double, 3> &h,
                                            int n) {
  const StencilLayout layout(n);
  std::vector<double> w(layout.slots(), 0.0);
  for (int i = 0; i < n; ++i) {
    double axis = a(i, i) / (h[i] * h[i]);
    for (int j = 0; j < n; ++j)
      if (j != i)
        axis -= std::abs(a(i, j)) / (h[i] * h[j]);
    if (axis < -1e-12 * a(i, i) / (h[i] * h[i]))
      throw ConfigError("control is not diagonally dominant on this grid; the "
                        "monotone stencil would have negative weights");
    w[2 * i] = w[2 * i + 1] = std::max(0.0, axis);
  }
  int slot = 2 * n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, slot += 4) {
      const double c = std::abs(a(i, j)) / (h[i] * h[j]);
      if (a(i, j) > 0)
        w[slot] = w[slot + 1] = c;
      else if (a(i, j) < 0)
        w[slot + 2] = w[slot + 3] = c;
    }
  return w;
}

struct LinearStats {
  long sweeps = 0;
  double residual = 0.0;
};

/*!
  Discrete Dirichlet problem for F(D^2 u) = rhs on a (possibly masked) box.
  Active nodes are the box-interior nodes strictly inside the domain. When a
  stencil arm leaves a curved domain, the outside value is replaced by the
  linear extrapolation through the boundary crossing, which turns that arm
  into a weight w / t on the boundary value g(x_b).
*/
class Discretization {
public:
  Discretization(const Problem &p, const SolverOptions &opt)
      : problem_(p), opt_(opt), layout_(p.grid.dim),
        pool_(std::make_unique<WorkerPool>(opt.threads)) {
    const Grid &g = p.grid;
    g.validate();
    if (p.op.dim() != g.dim)
      throw ConfigError("operator and grid dimensions differ");
    if (p.domain.kind != Domain::Kind::box && !p.g.closed_form())
      throw ConfigError("curved domains need closed-form boundary data");
    std::array<double, 3> h{};
    for (int a = 0; a < g.dim; ++a)
      h[a] = g.spacing(a);
    controls_ = p.op.solver_controls(opt.pucci_directions);
    for (std::size_t t = 0; t < controls_.size(); ++t) {
      try {
        weights_.push_back(monotone_weights(controls_[t], h, g.dim));
      } catch (const ConfigError &e) {
        throw ConfigError("control " + std::to_string(t) + ": " + e.what());
      }
      double d = 0.0;
      for (double w : weights_.back())
        d += w;
      ref_diag_.push_back(d);
    }

    // active nodes
    const std::size_t n = g.size();
    active_of_.assign(n, -1);
    boundary_ = GridField(g);
    for (std::size_t k = 0; k < n; ++k) {
      const Index ijk = g.coords(k);
      const Vec x = g.point(ijk);
      if (!g.on_box_boundary(ijk) && p.domain.level(x, g.dim) < 0.0) {
        active_of_[k] = static_cast<std::int64_t>(active_.size());
        active_.push_back(k);
      } else {
        boundary_.values[k] = p.g.at_node(g, k);
      }
    }
    if (active_.empty())
      throw ConfigError("domain contains no interior grid node");

    const int S = layout_.slots();
    arms_.resize(active_.size() * S);
    for (std::size_t a = 0; a < active_.size(); ++a) {
      const Index ijk = g.coords(active_[a]);
      const Vec x = g.point(ijk);
      for (int s = 0; s < S; ++s) {
        Index nb = ijk;
        for (int d = 0; d < g.dim; ++d)
          nb[d] += layout_.offsets[s][d];
        const std::size_t kn = g.index(nb);
        Arm &arm = arms_[a * S + s];
        if (active_of_[kn] >= 0) {
          arm.active = active_of_[kn];
          continue;
        }
        const Vec y = g.point(nb);
        if (p.domain.level(y, g.dim) >= 0.0) {
          const double t = std::max(1e-8, p.domain.crossing(x, y, g.dim));
          Vec xb{};
          for (int d = 0; d < g.dim; ++d)
            xb[d] = x[d] + t * (y[d] - x[d]);
          arm.value = p.g(xb, g.dim);
          arm.mult = 1.0 / t;
        } else {
          arm.value = boundary_.values[kn];
        }
      }
    }

    // colour classes by coordinate parity: no stencil arm joins two nodes of
    // the same class
    colors_.assign(std::size_t{1} << g.dim, {});
    for (std::size_t a = 0; a < active_.size(); ++a) {
      const Index ijk = g.coords(active_[a]);
      int c = 0;
      for (int d = 0; d < g.dim; ++d)
        c |= (ijk[d] & 1) << d;
      colors_[c].push_back(a);
    }
    int longest = 0;
    for (int d = 0; d < g.dim; ++d)
      longest = std::max(longest, g.count[d]);
    omega_ = 2.0 / (1.0 + std::sin(std::numbers::pi / (longest - 1)));
  }

  const Problem &problem() const { return problem_; }
  const SolverOptions &options() const { return opt_; }
  std::size_t active_count() const { return active_.size(); }
  std::size_t grid_index(std::size_t a) const { return active_[a]; }
  std::int64_t active_index(std::size_t k) const { return active_of_[k]; }
  std::size_t control_count() const { return controls_.size(); }
  const std::vector<SymMatrix> &controls() const { return controls_; }

  //! Boundary values in place; active entries are zero.
  const GridField &boundary_field() const { return boundary_; }

  std::vector<double> gather(const GridField &u) const {
    std::vector<double> v(active_.size());
    for (std::size_t a = 0; a < active_.size(); ++a)
      v[a] = u.values[active_[a]];
    return v;
  }
  GridField scatter(const std::vector<double> &v) const {
    GridField u = boundary_;
    for (std::size_t a = 0; a < active_.size(); ++a)
      u.values[active_[a]] = v[a];
    return u;
  }

  //! tr(A_t D^2 u) at active node a, scaled so an uncut stencil is unchanged.
  double apply(std::size_t t, std::size_t a, const std::vector<double> &u) const {
    const int S = layout_.slots();
    const auto &w = weights_[t];
    double s = 0.0;
    for (int o = 0; o < S; ++o) {
      if (w[o] == 0.0)
        continue;
      const Arm &arm = arms_[a * S + o];
      const double v = arm.active >= 0 ? u[arm.active] : arm.value;
      s += w[o] * arm.mult * (v - u[a]);
    }
    return s;
  }

  //! Discrete F at active node a together with the optimal control index
  //! (lowest index among near-ties).
  std::pair<double, int> evaluate(std::size_t a, const std::vector<double> &u) const {
    const bool maximize = problem_.op.maximizes();
    std::vector<double> vals(controls_.size());
    double best = maximize ? -std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < controls_.size(); ++t) {
      vals[t] = apply(t, a, u);
      best = maximize ? std::max(best, vals[t]) : std::min(best, vals[t]);
    }
    const double tie = 1e-11 * (1.0 + std::abs(best));
    for (std::size_t t = 0; t < controls_.size(); ++t)
      if (std::abs(vals[t] - best) <= tie)
        return {best, static_cast<int>(t)};
    return {best, 0};
  }

  std::vector<int> select_policy(const std::vector<double> &u) const {
    std::vector<int> policy(active_.size());
    pool_->for_chunks(active_.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t a = b; a < e; ++a)
        policy[a] = evaluate(a, u).second;
    });
    return policy;
  }

  /*!
    Max over active nodes of |F_h(u) - rhs|, each node's equation scaled by
    (uncut diagonal / actual diagonal) so that cut stencils near a curved
    boundary are measured on the same footing as interior ones.
  */
  double operator_residual(const std::vector<double> &u,
                           const std::vector<double> &rhs) const {
    double r = 0.0;
    for (std::size_t a = 0; a < active_.size(); ++a) {
      const auto [f, t] = evaluate(a, u);
      r = std::max(r, std::abs(f - rhs[a]) * scale(t, a));
    }
    return r;
  }

  /*!
    Solves tr(A_{policy} D^2 u) = rhs at the active nodes by multicolour SOR,
    starting from u. The relaxation factor is backed off toward 1 whenever
    the residual climbs well above the best value seen so far (plain growth
    between two checks is normal for SOR and is not penalised).
  */
  LinearStats solve_linear(const std::vector<int> &policy,
                           const std::vector<double> &rhs,
                           std::vector<double> &u) const {
    const int S = layout_.slots();
    const std::size_t N = active_.size();
    // assemble
    std::vector<double> w(N * S), cst(N), den(N), scl(N);
    std::vector<std::int64_t> nb(N * S);
    for (std::size_t a = 0; a < N; ++a) {
      const int t = policy[a];
      double d = 0.0, c = 0.0;
      for (int o = 0; o < S; ++o) {
        const Arm &arm = arms_[a * S + o];
        const double wo = weights_[t][o] * arm.mult;
        d += wo;
        if (arm.active >= 0) {
          w[a * S + o] = wo;
          nb[a * S + o] = arm.active;
        } else {
          w[a * S + o] = 0.0;
          nb[a * S + o] = 0;
          c += wo * arm.value;
        }
      }
      den[a] = d;
      cst[a] = c;
      scl[a] = ref_diag_[t] / d;
    }
    auto residual = [&] {
      double r = 0.0;
      for (std::size_t a = 0; a < N; ++a) {
        double s = cst[a] - den[a] * u[a] - rhs[a];
        for (int o = 0; o < S; ++o)
          s += w[a * S + o] * u[nb[a * S + o]];
        r = std::max(r, std::abs(s) * scl[a]);
      }
      return r;
    };

    LinearStats st;
    double omega = omega_;
    double best = residual();
    st.residual = best;
    if (best <= opt_.linear_tol)
      return st;
    constexpr int check_every = 10;
    while (st.sweeps < opt_.max_sweeps) {
      for (int rep = 0; rep < check_every; ++rep) {
        for (const auto &cls : colors_) {
          pool_->for_chunks(cls.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
              const std::size_t a = cls[i];
              double s = cst[a] - rhs[a];
              for (int o = 0; o < S; ++o)
                s += w[a * S + o] * u[nb[a * S + o]];
              u[a] += omega * (s / den[a] - u[a]);
            }
          });
        }
      }
      st.sweeps += check_every;
      const double r = residual();
      st.residual = r;
      if (!std::isfinite(r))
        throw IterationLimit("linear relaxation diverged", r, static_cast<int>(st.sweeps));
      if (r <= opt_.linear_tol)
        return st;
      if (r > 10.0 * best && omega > 1.0) {
        omega = 1.0 + 0.5 * (omega - 1.0);
        best = r;
      }
      best = std::min(best, r);
    }
    throw IterationLimit("linear relaxation did not reach tolerance", st.residual,
                         static_cast<int>(st.sweeps));
  }

  struct PolicyStats {
    int iterations = 0;
    long sweeps = 0;
  };

  //! Howard policy iteration for F_h(u) = rhs, warm-started from u.
  PolicyStats solve_nonlinear(const std::vector<double> &rhs,
                              std::vector<double> &u) const {
    PolicyStats st;
    std::vector<int> policy = select_policy(u);
    for (;;) {
      std::vector<double> prev = u;
      const auto ls = solve_linear(policy, rhs, u);
      st.sweeps += ls.sweeps;
      ++st.iterations;
      auto next = select_policy(u);
      double change = 0.0;
      for (std::size_t a = 0; a < u.size(); ++a)
        change = std::max(change, std::abs(u[a] - prev[a]));
      if (next == policy || change <= 1e-3 * opt_.fixed_point_tol)
        return st;
      if (st.iterations >= opt_.max_policy)
        throw IterationLimit("policy iteration did not settle", change, st.iterations);
      policy = std::move(next);
    }
  }

private:
  struct Arm {
    std::int64_t active = -1; //!< active neighbour, or -1 for a fixed value
    double value = 0.0;
    double mult = 1.0;
  };

  double scale(int t, std::size_t a) const {
    const int S = layout_.slots();
    double d = 0.0;
    for (int o = 0; o < S; ++o)
      d += weights_[t][o] * arms_[a * S + o].mult;
    return ref_diag_[t] / d;
  }

  Problem problem_;
  SolverOptions opt_;
  StencilLayout layout_;
  std::unique_ptr<WorkerPool> pool_;
  std::vector<SymMatrix> controls_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> ref_diag_;
  std::vector<std::size_t> active_;
  std::vector<std::int64_t> active_of_;
  std::vector<Arm> arms_;
  std::vector<std::vector<std::size_t>> colors_;
  GridField boundary_;
  double omega_ = 1.0;
};

/*!
  Linear solve for a fixed per-node control choice; `policy` holds one
  control index per grid node (entries at boundary nodes are ignored).
*/
inline GridField solve_linear_policy(const Problem &p, const std::vector<int> &policy,
                                     const GridField &rhs,
                                     const SolverOptions &opt = {}) {
  Discretization disc(p, opt);
  if (policy.size() != p.grid.size() || rhs.values.size() != p.grid.size())
    throw InvalidInput("solve_linear_policy: policy/rhs size must match the grid");
  std::vector<int> pol(disc.active_count());
  for (std::size_t a = 0; a < pol.size(); ++a) {
    pol[a] = policy[disc.grid_index(a)];
    if (pol[a] < 0 || static_cast<std::size_t>(pol[a]) >= disc.control_count())
      throw InvalidInput("solve_linear_policy: control index out of range");
  }
  auto f = disc.gather(rhs);
  std::vector<double> u(disc.active_count(), 0.0);
  const auto st = disc.solve_linear(pol, f, u);
  GridField out = disc.scatter(u);
  out.meta.tag = "linear";
  out.meta.operator_fingerprint = p.op.fingerprint();
  out.meta.linear_sweeps = st.sweeps;
  out.meta.residual = st.residual;
  return out;
}

//! Solution of F(D^2 u) = -1 with the problem's Dirichlet data; it
//! dominates every penalized solution.
inline GridField solve_supersolution(const Discretization &disc) {
  std::vector<double> u(disc.active_count(), 0.0);
  std::vector<double> rhs(disc.active_count(), -1.0);
  const auto st = disc.solve_nonlinear(rhs, u);
  GridField out = disc.scatter(u);
  out.meta.tag = "supersolution";
  out.meta.operator_fingerprint = disc.problem().op.fingerprint();
  out.meta.policy_iterations = st.iterations;
  out.meta.linear_sweeps = st.sweeps;
  out.meta.residual = disc.operator_residual(u, rhs);
  return out;
}

/*!
  F(D^2 u) = -beta_eps(u) by monotone iteration: the penalty is frozen at
  the previous iterate and the resulting Bellman problem solved by policy
  iteration. Started from a supersolution the iterates decrease to the
  largest discrete solution below the start. Without `start` the solution of
  F(D^2 u) = -1 is used.
*/
inline GridField solve_penalized(const Discretization &disc, double eps,
                                 std::optional<GridField> start = std::nullopt) {
  if (!(eps > 0.0))
    throw InvalidInput("solve_penalized: eps must be positive");
  const auto &opt = disc.options();
  std::vector<double> u =
      start ? disc.gather(*start) : disc.gather(solve_supersolution(disc));
  std::vector<double> rhs(u.size());
  int outer = 0, policy_its = 0;
  long sweeps = 0;
  // stop once both the iterate and the lagged penalty have settled
  double change = std::numeric_limits<double>::infinity();
  double lag = change;
  while (change > opt.fixed_point_tol || lag > opt.fixed_point_tol) {
    if (outer >= opt.max_outer)
      throw IterationLimit("penalized fixed point did not converge", change, outer);
    for (std::size_t a = 0; a < u.size(); ++a)
      rhs[a] = -beta_eps(u[a], eps);
    std::vector<double> next = u;
    const auto st = disc.solve_nonlinear(rhs, next);
    policy_its += st.iterations;
    sweeps += st.sweeps;
    change = lag = 0.0;
    for (std::size_t a = 0; a < u.size(); ++a) {
      change = std::max(change, std::abs(next[a] - u[a]));
      lag = std::max(lag, std::abs(beta_eps(next[a], eps) + rhs[a]));
    }
    u = std::move(next);
    ++outer;
  }
  for (std::size_t a = 0; a < u.size(); ++a)
    rhs[a] = -beta_eps(u[a], eps);
  GridField out = disc.scatter(u);
  out.meta.tag = "penalized";
  out.meta.operator_fingerprint = disc.problem().op.fingerprint();
  out.meta.eps = eps;
  out.meta.outer_iterations = outer;
  out.meta.policy_iterations = policy_its;
  out.meta.linear_sweeps = sweeps;
  out.meta.residual = disc.operator_residual(u, rhs);
  return out;
}

inline GridField solve_penalized(const Problem &p, double eps,
                                 const SolverOptions &opt = {}) {
  Discretization disc(p, opt);
  return solve_penalized(disc, eps);
}

struct MaximalResult {
  GridField field;                 //!< last stage, tagged maximal-approximation
  GridField initial;               //!< solution of F(D^2 u) = -1
  std::vector<double> eps;         //!< penalty level per stage
  std::vector<double> violations;  //!< max(0, u_j - u_{j-1}) per stage
  std::vector<double> residuals;   //!< |F(D^2 u_j) + beta(u_j)|_inf per stage
  std::vector<GridField> stages;   //!< filled when keep_stages
};

/*!
  Approximates the maximal solution: start from the solution of
  F(D^2 u) = -1 and descend through the decreasing penalty levels,
  warm-starting each level from the previous one.
*/
inline MaximalResult solve_maximal(const Problem &p, const PenaltySchedule &schedule,
                                   SolverOptions opt = {}, bool keep_stages = false) {
  const auto levels = schedule.levels();
  opt.fixed_point_tol = schedule.tol;
  opt.max_outer = schedule.max_outer;
  Discretization disc(p, opt);
  MaximalResult res;
  res.initial = solve_supersolution(disc);
  GridField prev = res.initial;
  for (double eps : levels) {
    GridField cur = solve_penalized(disc, eps, prev);
    double viol = 0.0;
    for (std::size_t k = 0; k < cur.values.size(); ++k)
      viol = std::max(viol, cur.values[k] - prev.values[k]);
    res.eps.push_back(eps);
    res.violations.push_back(viol);
    res.residuals.push_back(cur.meta.residual);
    if (keep_stages)
      res.stages.push_back(cur);
    prev = std::move(cur);
  }
  res.field = std::move(prev);
  res.field.meta.tag = "maximal-approximation";
  return res;
}

// Non-degeneracy barrier ------------------------------------------------------

struct NondegeneracyReport {
  int n = 2;
  double lambda = 1.0, Lambda = 1.0;
  double gamma = 0.0;
  double c1_matching = 0.5;       //!< C with b in C^1 across |x| = 1
  double c_gamma = 0.0;           //!< (1 - 2^-gamma) / (4 gamma), ln 2 / 4 at 0
  //! (1 - 2^-(n-2)) / (4 gamma); equals c_gamma only when lambda = Lambda.
  //! NaN when gamma = 0.
  double c_alternative = std::numeric_limits<double>::quiet_NaN();
  int samples = 0;
  double min_pucci_plus = std::numeric_limits<double>::infinity();
  double min_pucci_minus = std::numeric_limits<double>::infinity();
  //! max |M+(I - (gamma + 2) x x^T / |x|^2)| over samples
  double max_abs_profile_pucci = 0.0;
  double inside_value = 0.0;      //!< F(D^2 b_hat) for |x| < 1
  bool pass = false;
};

/*!
  Radial barrier b = C (1 - |x|^2) inside the unit ball and phi(|x|) - phi(1)
  outside, phi = -log r when gamma = 0 and r^-gamma / gamma otherwise, with
  gamma = Lambda (n - 1) / lambda - 1. Checks that b_hat = b / (2 C F(I))
  (F = Pucci maximal operator) is a subsolution on 1 < |x| < 4; the test is
  made against the Pucci minimal operator as well, which covers every
  operator with these constants.
*/
inline NondegeneracyReport verify_nondegeneracy_barrier(int n, double lambda,
                                                        double Lambda, int samples,
                                                        std::uint64_t seed = 1) {
  if ((n != 2 && n != 3) || !(lambda > 0.0) || !(Lambda >= lambda) || samples < 1)
    throw InvalidInput("verify_nondegeneracy_barrier: invalid constants");
  NondegeneracyReport r;
  r.n = n;
  r.lambda = lambda;
  r.Lambda = Lambda;
  r.samples = samples;
  r.gamma = Lambda * (n - 1) / lambda - 1.0;
  const double g = r.gamma;
  // b'(1) from outside is phi'(1) = -1 in both branches; inside it is -2C
  r.c1_matching = 0.5;
  const double C = r.c1_matching;
  r.c_gamma = g == 0.0 ? std::log(2.0) / 4.0 : (1.0 - std::pow(2.0, -g)) / (4.0 * g);
  if (g != 0.0)
    r.c_alternative = (1.0 - std::pow(2.0, -(n - 2.0))) / (4.0 * g);
  const double f_id = pucci_plus(SymMatrix::identity(n), lambda, Lambda);
  const double scale = 1.0 / (2.0 * C * f_id);
  r.inside_value = pucci_plus(-2.0 * C * scale * SymMatrix::identity(n), lambda, Lambda);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rad(1.0, 4.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < samples; ++s) {
    Vec dir{};
    double len = 0.0;
    do {
      for (int i = 0; i < n; ++i)
        dir[i] = gauss(rng);
      len = norm(dir, n);
    } while (len < 1e-12);
    for (int i = 0; i < n; ++i)
      dir[i] /= len;
    double rr = rad(rng);
    if (rr <= 1.0)
      rr = std::nextafter(1.0, 2.0);
    // D^2 phi = -r^-(gamma+2) (I - (gamma + 2) x x^T / r^2)
    SymMatrix profile = SymMatrix::identity(n) - (g + 2.0) * SymMatrix::outer(dir, n);
    const SymMatrix hess = (-std::pow(rr, -(g + 2.0)) * scale) * profile;
    r.min_pucci_plus = std::min(r.min_pucci_plus, pucci_plus(hess, lambda, Lambda));
    r.min_pucci_minus = std::min(r.min_pucci_minus, pucci_minus(hess, lambda, Lambda));
    r.max_abs_profile_pucci = std::max(
        r.max_abs_profile_pucci, std::abs(pucci_plus(profile, lambda, Lambda)));
  }
  r.pass = r.min_pucci_plus >= -1e-10 && r.min_pucci_minus >= -1e-10 &&
           r.max_abs_profile_pucci <= 1e-10;
  return r;
}

} // namespace ufb
