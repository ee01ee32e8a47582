#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cone_blowup.hpp"
#include "error.hpp"
#include "fb_geometry.hpp"
#include "fd_solver.hpp"
#include "grid.hpp"
#include "operator.hpp"
#include "stratify.hpp"

namespace ufb {

using json = nlohmann::json;

namespace detail {
inline json vec_json(const Vec &v, int n) {
  json a = json::array();
  for (int i = 0; i < n; ++i)
    a.push_back(v[i]);
  return a;
}
//! NaN and infinities become null.
inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
inline json nums(const std::vector<double> &xs) {
  json a = json::array();
  for (double x : xs)
    a.push_back(num(x));
  return a;
}
} // namespace detail

inline json to_json(const SymMatrix &m) { return m.row_major(); }

//! Accepts a flat row-major list or a list of rows.
inline SymMatrix sym_matrix_from_json(const json &j, const std::string &where) {
  if (!j.is_array() || j.empty())
    throw ConfigError(where + ": expected a matrix");
  std::vector<double> flat;
  for (const auto &e : j) {
    if (e.is_array()) {
      for (const auto &x : e) {
        if (!x.is_number())
          throw ConfigError(where + ": matrix entries must be numbers");
        flat.push_back(x.get<double>());
      }
    } else if (e.is_number()) {
      flat.push_back(e.get<double>());
    } else {
      throw ConfigError(where + ": matrix entries must be numbers");
    }
  }
  int n = 0;
  if (flat.size() == 4)
    n = 2;
  else if (flat.size() == 9)
    n = 3;
  else
    throw ConfigError(where + ": matrix must be 2x2 or 3x3");
  try {
    return SymMatrix::from_rows(flat, n);
  } catch (const Error &e) {
    throw ConfigError(where + ": " + e.what());
  }
}

inline json to_json(const OperatorSpec &op) {
  json j{{"mode", to_string(op.mode())},
         {"dim", op.dim()},
         {"lambda", op.lambda()},
         {"Lambda", op.Lambda()}};
  json c = json::array();
  for (const auto &a : op.controls())
    c.push_back(to_json(a));
  j["controls"] = c;
  return j;
}

inline OperatorSpec operator_from_json(const json &j, const std::string &where = "operator") {
  if (!j.is_object())
    throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "mode" && it.key() != "dim" && it.key() != "lambda" &&
        it.key() != "Lambda" && it.key() != "controls")
      throw ConfigError(where + "." + it.key() + ": unknown key");
  auto number = [&](const char *key, double fallback) {
    if (!j.contains(key))
      return fallback;
    if (!j[key].is_number())
      throw ConfigError(where + "." + key + ": expected a number");
    return j[key].get<double>();
  };
  const std::string mode = j.value("mode", std::string("bellman-sup"));
  const OperatorMode m = mode_from_string(mode);
  std::vector<SymMatrix> controls;
  if (j.contains("controls")) {
    if (!j["controls"].is_array())
      throw ConfigError(where + ".controls: expected a list of matrices");
    for (std::size_t k = 0; k < j["controls"].size(); ++k)
      controls.push_back(
          sym_matrix_from_json(j["controls"][k], where + ".controls[" + std::to_string(k) + "]"));
  }
  int dim = controls.empty() ? 2 : controls.front().dim();
  if (j.contains("dim")) {
    if (!j["dim"].is_number_integer())
      throw ConfigError(where + ".dim: expected an integer");
    dim = j["dim"].get<int>();
  }
  try {
    switch (m) {
    case OperatorMode::laplacian:
      if (number("lambda", 1.0) != 1.0 || number("Lambda", 1.0) != 1.0)
        throw ConfigError("laplacian mode requires lambda = Lambda = 1");
      return OperatorSpec::laplacian(dim);
    case OperatorMode::pucci_plus:
    case OperatorMode::pucci_minus:
      return OperatorSpec::pucci(m, dim, number("lambda", 1.0), number("Lambda", 1.0));
    case OperatorMode::bellman_sup:
      if (controls.empty())
        throw ConfigError("bellman-sup operator needs at least one control");
      for (const auto &c : controls)
        if (c.dim() != dim)
          throw ConfigError("controls do not match dim");
      return OperatorSpec::bellman(number("lambda", 1.0), number("Lambda", 1.0), controls);
    }
  } catch (const ConfigError &e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": unknown mode");
}

inline json to_json(const Grid &g) {
  json lo = json::array(), hi = json::array(), count = json::array();
  for (int a = 0; a < g.dim; ++a) {
    lo.push_back(g.lo[a]);
    hi.push_back(g.hi[a]);
    count.push_back(g.count[a]);
  }
  return {{"dim", g.dim}, {"lo", lo}, {"hi", hi}, {"count", count}};
}

inline json to_json(const FieldMeta &m) {
  return {{"tag", m.tag},
          {"operator_fingerprint", m.operator_fingerprint},
          {"eps", detail::num(m.eps)},
          {"outer_iterations", m.outer_iterations},
          {"policy_iterations", m.policy_iterations},
          {"linear_sweeps", m.linear_sweeps},
          {"residual", detail::num(m.residual)}};
}

inline json to_json(const PenaltySchedule &s) {
  return {{"eps0", s.eps0},
          {"factor", s.factor},
          {"min_eps", s.min_eps},
          {"tol", s.tol},
          {"max_outer", s.max_outer}};
}

inline json to_json(const PointSet &p) {
  json pts = json::array();
  for (const Vec &x : p.points)
    pts.push_back(detail::vec_json(x, p.dim));
  return {{"tag", p.tag}, {"dim", p.dim}, {"points", pts}};
}

inline json to_json(const QuadraticForm &q) {
  return {{"matrix", to_json(q.a)},
          {"center", detail::vec_json(q.center, q.dim())},
          {"eigenvalues", eigenvalues(q.a)}};
}

inline json to_json(const FlatnessResult &f) {
  const int n = f.form.dim();
  return {{"h", detail::num(f.h)},
          {"r", f.r},
          {"x0", detail::vec_json(f.x0, n)},
          {"empty", f.empty},
          {"degenerate", f.degenerate},
          {"rank_one", f.rank_one},
          {"theta1", detail::num(f.theta1)},
          {"theta2", detail::num(f.theta2)},
          {"slope", detail::num(f.slope)},
          {"form", to_json(f.form)},
          {"eigenvalues", detail::nums(f.eigenvalues)},
          {"candidates", f.candidates},
          {"simplex_steps", f.simplex_steps},
          {"fb_points", f.fb_points}};
}

inline json to_json(const GrowthProfile &p, int n) {
  json levels = json::array();
  for (std::size_t i = 0; i < p.radii.size(); ++i)
    levels.push_back({{"k", p.k_min + static_cast<int>(i)},
                      {"r", p.radii[i]},
                      {"M", p.sup[i]},
                      {"h", detail::num(p.flat[i])},
                      {"inf_u", detail::num(p.inf[i])}});
  return {{"x0", detail::vec_json(p.x0, n)}, {"levels", levels}};
}

inline json to_json(const DichotomyResult &d) {
  json levels = json::array();
  for (std::size_t i = 0; i < d.levels.size(); ++i)
    levels.push_back({{"k", d.levels[i]},
                      {"checked", static_cast<bool>(d.checked[i])},
                      {"passed", static_cast<bool>(d.passed[i])}});
  return {{"levels", levels}, {"fitted_C", d.fitted_C}, {"all_pass", d.all_pass}};
}

inline json to_json(const PointClassification &c, int n) {
  json j{{"coords", detail::vec_json(c.x0, n)},
         {"class", to_string(c.cls)},
         {"grad_norm", c.grad_norm},
         {"note", c.note}};
  if (!c.profile.radii.empty()) {
    j["profile"] = to_json(c.profile, n);
    j["dichotomy"] = to_json(c.dichotomy);
    j["fitted_C"] = c.dichotomy.fitted_C;
  }
  if (c.proxy_evaluated)
    j["nondegenerate_proxy"] = c.nondegenerate_proxy;
  return j;
}

inline json to_json(const JunctionResult &r) {
  return {{"x0", detail::vec_json(r.x0, 2)},
          {"slope", r.slope},
          {"ray_angles", r.ray_angles},
          {"radii", r.radii},
          {"arcs", r.arcs},
          {"deviation", r.deviation},
          {"max_deviation", r.max_deviation},
          {"angular_pitch", r.angular_pitch}};
}

inline json to_json(const MonotonicityReport &m) {
  return {{"pass", m.pass},
          {"min_value", detail::num(m.min_value)},
          {"argmin", detail::vec_json(m.argmin, 2)},
          {"samples", m.samples},
          {"violations", m.violations.size()},
          {"tol", m.tol}};
}

inline json to_json(const BlowupResult &b) {
  json table = json::array();
  for (std::size_t k = 0; k < b.C_R.size(); ++k)
    table.push_back({{"R", b.C_R_R[k]},
                     {"C_R", b.C_R[k]},
                     {"R_pow_kappa", std::pow(b.C_R_R[k], b.kappa)}});
  json fit = json::array();
  for (std::size_t k = 0; k < b.fit_R.size(); ++k)
    fit.push_back({{"R", b.fit_R[k]}, {"sup", b.fit_sup[k]}});
  return {{"kappa", b.kappa},
          {"theta", b.theta},
          {"phi", b.phi},
          {"fit_range", {b.fit_lo, b.fit_hi}},
          {"fit", fit},
          {"profile_residual", b.profile_residual},
          {"C_R", table},
          {"residuals", b.residuals},
          {"eps", detail::num(b.eps)}};
}

inline json to_json(const EllipticityReport &r) {
  return {{"pass", r.pass},
          {"samples", r.samples},
          {"failures", r.failures},
          {"worst_lower_margin", detail::num(r.worst_lower_margin)},
          {"worst_upper_margin", detail::num(r.worst_upper_margin)}};
}

inline json to_json(const HomogeneityReport &r) {
  return {{"pass", r.pass},
          {"samples", r.samples},
          {"failures", r.failures},
          {"worst_relative_error", r.worst_relative_error},
          {"zero_exact", r.zero_exact},
          {"odd_symmetric", r.odd_symmetric}};
}

inline json to_json(const NondegeneracyReport &r) {
  return {{"pass", r.pass},
          {"n", r.n},
          {"lambda", r.lambda},
          {"Lambda", r.Lambda},
          {"gamma", r.gamma},
          {"C", r.c1_matching},
          {"c", r.c_gamma},
          {"c_alternative", detail::num(r.c_alternative)},
          {"samples", r.samples},
          {"min_pucci_plus", r.min_pucci_plus},
          {"min_pucci_minus", r.min_pucci_minus},
          {"max_abs_profile_pucci", r.max_abs_profile_pucci},
          {"inside_value", r.inside_value}};
}

inline json to_json(const DoublingBarrierReport &r) {
  return {{"pass", r.pass},
          {"alpha", r.alpha},
          {"eps", r.eps},
          {"samples", r.samples},
          {"max_F", r.max_F},
          {"alpha_sufficient", r.alpha_sufficient},
          {"eps_sufficient", r.eps_sufficient},
          {"max_F_sufficient", r.max_F_sufficient},
          {"pass_sufficient", r.pass_sufficient}};
}

inline json to_json(const DoublingCheck &c) {
  json rows = json::array();
  for (std::size_t k = 0; k < c.R.size(); ++k)
    rows.push_back({{"R", c.R[k]}, {"worst_margin", detail::num(c.worst_margin[k])},
                    {"nodes", c.nodes[k]}});
  return {{"eps", c.eps}, {"pass", c.pass}, {"worst", detail::num(c.worst)}, {"levels", rows}};
}

} // namespace ufb
