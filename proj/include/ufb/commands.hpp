#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json_io.hpp"
#include "ufbg_io.hpp"

namespace ufb {

inline constexpr const char *version_string = "ufb 1.0.0";

/*!
  Reads one JSON object and remembers which keys were consumed, so that
  anything left over can be rejected with its full path.
*/
class Section {
public:
  Section(const json *j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object())
      throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string &key) const { return j_ && j_->contains(key); }
  std::string path(const std::string &key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json *raw(const std::string &key) {
    used_.insert(key);
    if (!has(key))
      return nullptr;
    return &(*j_)[key];
  }

  double number(const std::string &key, double fallback) {
    const json *v = raw(key);
    if (!v)
      return fallback;
    if (v->is_null())
      return std::numeric_limits<double>::quiet_NaN();
    if (!v->is_number())
      throw ConfigError(path(key) + ": expected a number");
    return v->get<double>();
  }
  long integer(const std::string &key, long fallback) {
    const json *v = raw(key);
    if (!v)
      return fallback;
    if (!v->is_number_integer())
      throw ConfigError(path(key) + ": expected an integer");
    return v->get<long>();
  }
  bool boolean(const std::string &key, bool fallback) {
    const json *v = raw(key);
    if (!v)
      return fallback;
    if (!v->is_boolean())
      throw ConfigError(path(key) + ": expected true or false");
    return v->get<bool>();
  }
  std::string string(const std::string &key, const std::string &fallback) {
    const json *v = raw(key);
    if (!v)
      return fallback;
    if (!v->is_string())
      throw ConfigError(path(key) + ": expected a string");
    return v->get<std::string>();
  }
  Vec vec(const std::string &key, const Vec &fallback, int n) {
    const json *v = raw(key);
    if (!v)
      return fallback;
    if (!v->is_array() || static_cast<int>(v->size()) != n)
      throw ConfigError(path(key) + ": expected " + std::to_string(n) + " coordinates");
    Vec out{};
    for (int i = 0; i < n; ++i) {
      if (!(*v)[i].is_number())
        throw ConfigError(path(key) + ": coordinates must be numbers");
      out[i] = (*v)[i].get<double>();
    }
    return out;
  }
  std::vector<double> numbers(const std::string &key, const std::vector<double> &fallback);
  Section sub(const std::string &key) { return Section(raw(key), path(key)); }

  //! Throws on the first key that nothing asked for.
  void finish() const {
    if (!j_)
      return;
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!used_.count(it.key()))
        throw ConfigError(path(it.key()) + ": unknown key");
  }

private:
  const json *j_;
  std::string path_;
  std::set<std::string> used_;
};

/*!
  Dyadic lists: "2^-2..2^-8" expands to 2^-2, 2^-3, ..., 2^-8. A JSON array
  of numbers is taken as is.
*/
inline std::vector<double> parse_radius_list(const json &v, const std::string &where) {
  std::vector<double> out;
  if (v.is_array()) {
    for (const auto &x : v) {
      if (!x.is_number())
        throw ConfigError(where + ": list entries must be numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  if (!v.is_string())
    throw ConfigError(where + ": expected a list or a range like \"2^-2..2^-8\"");
  static const std::regex re(R"(\s*2\^(-?\d+)\s*\.\.\s*2\^(-?\d+)\s*)");
  std::smatch m;
  const std::string s = v.get<std::string>();
  if (!std::regex_match(s, m, re))
    throw ConfigError(where + ": cannot parse range '" + s + "'");
  const int a = std::stoi(m[1]), b = std::stoi(m[2]);
  const int step = b >= a ? 1 : -1;
  for (int e = a;; e += step) {
    out.push_back(std::ldexp(1.0, e));
    if (e == b)
      break;
  }
  return out;
}

inline std::vector<double> Section::numbers(const std::string &key,
                                            const std::vector<double> &fallback) {
  const json *v = raw(key);
  if (!v)
    return fallback;
  return parse_radius_list(*v, path(key));
}

struct GridConfig {
  int dim = 2;
  double half = 1.25;     //!< box [-half, half]^n
  double h = 1.0 / 32.0;
};

struct DomainConfig {
  std::string kind = "ball"; //!< ball or box
  Vec center{};
  double radius = 1.0;
};

struct BoundaryConfig {
  std::string kind = "constant"; //!< constant, quadratic, radial, table
  double value = 0.0;
  SymMatrix matrix{2};
  double radius = 1.0;
  double lambda = 1.0;
  Vec center{};
  std::string table; //!< UFBG file on the same grid
};

struct AnalysisConfig {
  double delta = 0.05;
  double delta0 = 0.25;
  int k_min = -1;
  int k_max = -1;
  double C_bound = 100.0;
  double c_nondeg = std::numeric_limits<double>::quiet_NaN();
  double tol_u = std::numeric_limits<double>::quiet_NaN();
  double tol_g = std::numeric_limits<double>::quiet_NaN();
  double merge = std::numeric_limits<double>::quiet_NaN();
  double pitch = std::numbers::pi / 720.0;
  Vec x0{};
  std::vector<double> radii{0.25, 0.125, 0.0625};
  bool junction = false;
  bool require_junction = false;
};

struct BlowupConfig {
  double aperture = std::numbers::pi / 2.0;
  double orientation = 0.0;
  int octaves = 10;
  int per_octave = 14;
  std::vector<double> R{0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625};
  double fit_lo = 1.0 / 64.0;
  double fit_hi = 0.25;
  std::vector<double> doubling_R{0.5, 0.625, 0.75, 0.875};
};

struct VerifyConfig {
  int samples = 10000;
  int n = 2;
};

struct RunConfig {
  OperatorSpec op = OperatorSpec::laplacian(2);
  GridConfig grid;
  DomainConfig domain;
  BoundaryConfig boundary;
  PenaltySchedule schedule;
  SolverOptions solver;
  AnalysisConfig analysis;
  BlowupConfig blowup;
  VerifyConfig verify;
  std::uint64_t seed = 1;
  std::string name = "run";
  std::string field; //!< input dump for classify / flatness
};

namespace detail {
inline std::string line_column(const std::string &text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}
} // namespace detail

//! Parses JSON text; syntax errors carry the line and column.
inline json parse_json_text(const std::string &text, const std::string &source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError(source + ": " + detail::line_column(text, e.byte) + ": malformed JSON");
  }
}

inline RunConfig config_from_json(const json &j) {
  RunConfig c;
  Section root(&j, "");
  if (const json *op = root.raw("operator"))
    c.op = operator_from_json(*op, "operator");
  {
    Section s = root.sub("grid");
    c.grid.dim = static_cast<int>(s.integer("dim", c.op.dim()));
    c.grid.half = s.number("half", c.grid.half);
    c.grid.h = s.number("h", c.grid.h);
    s.finish();
    if (c.grid.dim != c.op.dim())
      throw ConfigError("grid.dim: does not match the operator dimension");
    if (!(c.grid.h > 0.0) || !(c.grid.half > 0.0))
      throw ConfigError("grid: half and h must be positive");
  }
  const int n = c.grid.dim;
  {
    Section s = root.sub("domain");
    c.domain.kind = s.string("kind", c.domain.kind);
    c.domain.center = s.vec("center", c.domain.center, n);
    c.domain.radius = s.number("radius", c.domain.radius);
    s.finish();
    if (c.domain.kind != "ball" && c.domain.kind != "box")
      throw ConfigError("domain.kind: expected 'ball' or 'box'");
  }
  {
    Section s = root.sub("boundary");
    auto &b = c.boundary;
    b.kind = s.string("kind", b.kind);
    b.value = s.number("value", b.value);
    b.matrix = SymMatrix(n);
    if (const json *m = s.raw("matrix"))
      b.matrix = sym_matrix_from_json(*m, "boundary.matrix");
    b.radius = s.number("radius", b.radius);
    b.lambda = s.number("lambda", c.op.lambda());
    b.center = s.vec("center", b.center, n);
    b.table = s.string("table", b.table);
    s.finish();
    if (b.kind != "constant" && b.kind != "quadratic" && b.kind != "radial" && b.kind != "table")
      throw ConfigError("boundary.kind: expected constant, quadratic, radial or table");
    if (b.matrix.dim() != n)
      throw ConfigError("boundary.matrix: dimension does not match the grid");
    if (b.kind == "table" && b.table.empty())
      throw ConfigError("boundary.table: path required for table data");
  }
  {
    Section s = root.sub("schedule");
    auto &p = c.schedule;
    p.eps0 = s.number("eps0", p.eps0);
    p.factor = s.number("factor", p.factor);
    p.min_eps = s.number("min_eps", p.min_eps);
    p.tol = s.number("tol", p.tol);
    p.max_outer = static_cast<int>(s.integer("max_outer", p.max_outer));
    s.finish();
    try {
      p.validate();
    } catch (const Error &e) {
      throw ConfigError(std::string("schedule: ") + e.what());
    }
  }
  {
    Section s = root.sub("solver");
    auto &o = c.solver;
    o.linear_tol = s.number("linear_tol", o.linear_tol);
    o.max_sweeps = s.integer("max_sweeps", o.max_sweeps);
    o.max_policy = static_cast<int>(s.integer("max_policy", o.max_policy));
    o.pucci_directions = static_cast<int>(s.integer("pucci_directions", o.pucci_directions));
    s.finish();
    if (!(o.linear_tol > 0.0) || o.max_sweeps < 1 || o.max_policy < 1 || o.pucci_directions < 4)
      throw ConfigError("solver: tolerances and limits must be positive");
  }
  {
    Section s = root.sub("analysis");
    auto &a = c.analysis;
    a.delta = s.number("delta", a.delta);
    a.delta0 = s.number("delta0", a.delta0);
    a.k_min = static_cast<int>(s.integer("k_min", a.k_min));
    a.k_max = static_cast<int>(s.integer("k_max", a.k_max));
    a.C_bound = s.number("C_bound", a.C_bound);
    a.c_nondeg = s.number("c_nondeg", a.c_nondeg);
    a.tol_u = s.number("tol_u", a.tol_u);
    a.tol_g = s.number("tol_g", a.tol_g);
    a.merge = s.number("merge", a.merge);
    a.pitch = s.number("pitch", a.pitch);
    a.x0 = s.vec("x0", a.x0, n);
    a.radii = s.numbers("radii", a.radii);
    a.junction = s.boolean("junction", a.junction);
    a.require_junction = s.boolean("require_junction", a.require_junction);
    s.finish();
    if (!(a.delta > 0.0 && a.delta < 1.0) || !(a.delta0 > 0.0 && a.delta0 < 1.0))
      throw ConfigError("analysis: delta and delta0 must lie in (0, 1)");
    if (!(a.pitch > 0.0))
      throw ConfigError("analysis.pitch: must be positive");
    if (a.radii.empty())
      throw ConfigError("analysis.radii: must not be empty");
    for (double r : a.radii)
      if (!(r > 0.0))
        throw ConfigError("analysis.radii: radii must be positive");
    if (a.require_junction)
      a.junction = true;
  }
  {
    Section s = root.sub("blowup");
    auto &b = c.blowup;
    b.aperture = s.number("aperture", b.aperture);
    b.orientation = s.number("orientation", b.orientation);
    b.octaves = static_cast<int>(s.integer("octaves", b.octaves));
    b.per_octave = static_cast<int>(s.integer("per_octave", b.per_octave));
    b.R = s.numbers("R", b.R);
    b.fit_lo = s.number("fit_lo", b.fit_lo);
    b.fit_hi = s.number("fit_hi", b.fit_hi);
    b.doubling_R = s.numbers("doubling_R", b.doubling_R);
    s.finish();
    try {
      SectorSpec{b.aperture, b.orientation}.validate();
    } catch (const ConfigError &e) {
      throw ConfigError(std::string("blowup.aperture: ") + e.what());
    }
    if (b.octaves < 1 || b.per_octave < 2)
      throw ConfigError("blowup: octaves >= 1 and per_octave >= 2 required");
    if (!(b.fit_lo > 0.0 && b.fit_hi > b.fit_lo && b.fit_hi <= 1.0))
      throw ConfigError("blowup: need 0 < fit_lo < fit_hi <= 1");
  }
  {
    Section s = root.sub("verify");
    c.verify.samples = static_cast<int>(s.integer("samples", c.verify.samples));
    c.verify.n = static_cast<int>(s.integer("n", n));
    s.finish();
    if (c.verify.samples < 2)
      throw ConfigError("verify.samples: need at least 2");
    if (c.verify.n != 2 && c.verify.n != 3)
      throw ConfigError("verify.n: must be 2 or 3");
  }
  const long seed = root.integer("seed", static_cast<long>(c.seed));
  if (seed < 0)
    throw ConfigError("seed: must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.name = root.string("name", c.name);
  c.field = root.string("field", c.field);
  root.finish();
  if (c.name.empty() || c.name.find('/') != std::string::npos)
    throw ConfigError("name: must be a plain file stem");
  return c;
}

inline RunConfig config_from_text(const std::string &text, const std::string &source = "config") {
  return config_from_json(parse_json_text(text, source));
}

inline RunConfig load_config(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError(path + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str(), path);
}

//! Every field, defaults included; feeding it back yields the same RunConfig.
inline json to_json(const RunConfig &c) {
  const int n = c.grid.dim;
  const auto &a = c.analysis;
  const auto &b = c.blowup;
  json j;
  j["operator"] = to_json(c.op);
  j["grid"] = {{"dim", n}, {"half", c.grid.half}, {"h", c.grid.h}};
  j["domain"] = {{"kind", c.domain.kind},
                 {"center", detail::vec_json(c.domain.center, n)},
                 {"radius", c.domain.radius}};
  j["boundary"] = {{"kind", c.boundary.kind},
                   {"value", c.boundary.value},
                   {"matrix", to_json(c.boundary.matrix)},
                   {"radius", c.boundary.radius},
                   {"lambda", c.boundary.lambda},
                   {"center", detail::vec_json(c.boundary.center, n)},
                   {"table", c.boundary.table}};
  j["schedule"] = to_json(c.schedule);
  j["solver"] = {{"linear_tol", c.solver.linear_tol},
                 {"max_sweeps", c.solver.max_sweeps},
                 {"max_policy", c.solver.max_policy},
                 {"pucci_directions", c.solver.pucci_directions}};
  j["analysis"] = {{"delta", a.delta},
                   {"delta0", a.delta0},
                   {"k_min", a.k_min},
                   {"k_max", a.k_max},
                   {"C_bound", a.C_bound},
                   {"c_nondeg", detail::num(a.c_nondeg)},
                   {"tol_u", detail::num(a.tol_u)},
                   {"tol_g", detail::num(a.tol_g)},
                   {"merge", detail::num(a.merge)},
                   {"pitch", a.pitch},
                   {"x0", detail::vec_json(a.x0, n)},
                   {"radii", a.radii},
                   {"junction", a.junction},
                   {"require_junction", a.require_junction}};
  j["blowup"] = {{"aperture", b.aperture},
                 {"orientation", b.orientation},
                 {"octaves", b.octaves},
                 {"per_octave", b.per_octave},
                 {"R", b.R},
                 {"fit_lo", b.fit_lo},
                 {"fit_hi", b.fit_hi},
                 {"doubling_R", b.doubling_R}};
  j["verify"] = {{"samples", c.verify.samples}, {"n", c.verify.n}};
  j["seed"] = c.seed;
  j["name"] = c.name;
  j["field"] = c.field;
  return j;
}

inline Problem make_problem(const RunConfig &c) {
  const int n = c.grid.dim;
  Problem p{c.op, Grid::centered(n, c.grid.half, c.grid.h),
            c.domain.kind == "ball" ? Domain::ball(c.domain.center, c.domain.radius)
                                    : Domain::box(),
            BoundaryData::constant(c.boundary.value)};
  const auto &b = c.boundary;
  if (b.kind == "quadratic")
    p.g = BoundaryData::quadratic(b.matrix, b.value);
  else if (b.kind == "radial")
    p.g = BoundaryData::radial(n, b.lambda, b.radius, b.center);
  else if (b.kind == "table") {
    GridField t = read_ufbg(b.table);
    if (!(t.grid == p.grid))
      throw ConfigError("boundary.table: dump grid does not match the configured grid");
    p.g = BoundaryData::from_table(std::move(t.values));
  }
  return p;
}

struct BlowupOverrides {
  std::optional<double> aperture;
  std::optional<double> lambda;
  std::optional<double> Lambda;
  std::string controls; //!< JSON file holding a list of matrices
  std::string rk;       //!< e.g. "2^-2..2^-8"
};

/*!
  Command-line overrides for blow-up runs. Supplying controls switches the
  operator to bellman-sup; the result is validated like a config file.
*/
inline void apply_blowup_overrides(RunConfig &c, const BlowupOverrides &o) {
  if (o.aperture) {
    SectorSpec{*o.aperture, c.blowup.orientation}.validate();
    c.blowup.aperture = *o.aperture;
  }
  if (!o.rk.empty())
    c.blowup.R = parse_radius_list(json(o.rk), "--rk");
  if (!o.lambda && !o.Lambda && o.controls.empty())
    return;
  json op = to_json(c.op);
  if (o.lambda)
    op["lambda"] = *o.lambda;
  if (o.Lambda)
    op["Lambda"] = *o.Lambda;
  if (!o.controls.empty()) {
    std::ifstream in(o.controls, std::ios::binary);
    if (!in)
      throw ConfigError(o.controls + ": cannot open controls file");
    std::stringstream ss;
    ss << in.rdbuf();
    op["controls"] = parse_json_text(ss.str(), o.controls);
    op["mode"] = "bellman-sup";
  }
  op.erase("dim");
  c.op = operator_from_json(op, "operator");
}

//! Report envelope shared by every command.
inline json report_header(const RunConfig &c, const std::string &command) {
  return {{"version", version_string}, {"command", command}, {"config", to_json(c)}};
}

namespace detail {
class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline std::filesystem::path output_path(const std::string &dir, const std::string &name) {
  std::filesystem::create_directories(dir);
  return std::filesystem::path(dir) / name;
}

inline void write_text(const std::filesystem::path &p, const std::string &text) {
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw Error("cannot write " + p.string());
  out << text;
  if (!out)
    throw Error("write failed: " + p.string());
}

inline std::string fmt(double x) {
  if (!std::isfinite(x))
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline GridField load_field(const RunConfig &c, const std::string &override_path) {
  const std::string path = override_path.empty() ? c.field : override_path;
  if (path.empty())
    throw ConfigError("field: no input dump given");
  return read_ufbg(path);
}
} // namespace detail

/*!
  Maximal-solution approximation. Writes <name>.ufbg and <name>.json into
  `out_dir` and returns the report.
*/
inline json cmd_solve(const RunConfig &c, const std::string &out_dir) {
  detail::Stopwatch clock;
  const Problem p = make_problem(c);
  const auto res = solve_maximal(p, c.schedule, c.solver);
  json r = report_header(c, "solve");
  r["grid"] = to_json(p.grid);
  r["meta"] = to_json(res.field.meta);
  r["residual"] = res.field.meta.residual;
  r["stages"] = json::array();
  for (std::size_t k = 0; k < res.eps.size(); ++k)
    r["stages"].push_back({{"eps", res.eps[k]},
                           {"violation", res.violations[k]},
                           {"residual", res.residuals[k]}});
  const auto dump = detail::output_path(out_dir, c.name + ".ufbg");
  write_ufbg(dump.string(), res.field);
  r["dump"] = dump.filename().string();
  r["timings"] = {{"total_s", clock.seconds()}};
  detail::write_text(detail::output_path(out_dir, c.name + ".json"), r.dump(2) + "\n");
  return r;
}

/*!
  Singular-point classification of a dump. Writes <name>.classify.json and a
  <name>.classify.csv growth table (point, k, r_k, M, h).
*/
inline json cmd_classify(const RunConfig &c, const std::string &out_dir,
                         const std::string &field_path = "") {
  detail::Stopwatch clock;
  const GridField u = detail::load_field(c, field_path);
  const int n = u.grid.dim;
  const auto &a = c.analysis;
  ClassifyOptions opt;
  opt.delta = a.delta;
  opt.k_min = a.k_min;
  opt.k_max = a.k_max;
  opt.C_bound = a.C_bound;
  opt.c_nondeg = a.c_nondeg;
  opt.singular = {a.tol_u, a.tol_g, a.merge};
  opt.flat.pitch = a.pitch;
  const auto classes = classify_singular_points(u, opt);

  json r = report_header(c, "classify");
  r["grid"] = to_json(u.grid);
  r["constants"] = {{"ell0", std::sqrt(c.op.Lambda() / c.op.lambda())}};
  r["points"] = json::array();
  std::ostringstream csv;
  csv << "point,k,r_k,M,h\n";
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto &pc = classes[i];
    json pj = to_json(pc, n);
    if (a.junction && n == 2 && pc.cls == PointClass::rank2_flat) {
      JunctionOptions jopt;
      jopt.flat.pitch = a.pitch;
      try {
        pj["junction"] = to_json(junction_arcs(u, pc.x0, a.radii, jopt));
      } catch (const StructureError &e) {
        if (a.require_junction)
          throw;
        pj["junction"] = {{"error", e.what()}};
      }
    }
    r["points"].push_back(pj);
    const auto &p = pc.profile;
    for (std::size_t l = 0; l < p.radii.size(); ++l)
      csv << i << ',' << p.k_min + static_cast<int>(l) << ',' << detail::fmt(p.radii[l]) << ','
          << detail::fmt(p.sup[l]) << ',' << detail::fmt(p.flat[l]) << '\n';
  }
  if (a.require_junction && n == 2) {
    bool any = false;
    for (const auto &pc : classes)
      any = any || pc.cls == PointClass::rank2_flat;
    if (!any)
      throw StructureError("no rank-2-flat point to carry a junction", {0});
  }
  r["timings"] = {{"total_s", clock.seconds()}};
  detail::write_text(detail::output_path(out_dir, c.name + ".classify.json"), r.dump(2) + "\n");
  detail::write_text(detail::output_path(out_dir, c.name + ".classify.csv"), csv.str());
  return r;
}

/*!
  Flatness curve h(r, x0) over analysis.radii. Writes <name>.flatness.json
  and <name>.flatness.csv (r, h, h_over_r, slope).
*/
inline json cmd_flatness(const RunConfig &c, const std::string &out_dir,
                         const std::string &field_path = "") {
  detail::Stopwatch clock;
  const GridField u = detail::load_field(c, field_path);
  FlatnessOptions opt;
  opt.pitch = c.analysis.pitch;
  json r = report_header(c, "flatness");
  r["grid"] = to_json(u.grid);
  r["curve"] = json::array();
  std::ostringstream csv;
  csv << "r,h,h_over_r,slope\n";
  for (double rad : c.analysis.radii) {
    const auto f = flatness(u, rad, c.analysis.x0, opt);
    r["curve"].push_back(to_json(f));
    csv << detail::fmt(rad) << ',' << detail::fmt(f.h) << ',' << detail::fmt(f.h / rad) << ','
        << detail::fmt(f.slope) << '\n';
  }
  r["timings"] = {{"total_s", clock.seconds()}};
  detail::write_text(detail::output_path(out_dir, c.name + ".flatness.json"), r.dump(2) + "\n");
  detail::write_text(detail::output_path(out_dir, c.name + ".flatness.csv"), csv.str());
  return r;
}

/*!
  Cone Dirichlet problem with the standard ring data, its doubling check and
  the blow-up exponent. Writes <name>.blowup.json, <name>.blowup.csv
  (R, sup over K_R, C_R, R^kappa) and <name>.profile.csv (theta, phi).
*/
inline json cmd_blowup(const RunConfig &c, const std::string &out_dir) {
  detail::Stopwatch clock;
  if (c.op.dim() != 2)
    throw ConfigError("operator: blow-up runs need a 2D operator");
  const auto &b = c.blowup;
  PolarOptions opt;
  opt.grid = {b.octaves, b.per_octave};
  opt.pucci_directions = c.solver.pucci_directions;
  opt.max_policy = c.solver.max_policy;
  const SectorSpec sector{b.aperture, b.orientation};
  const PolarField v = solve_cone_dirichlet(c.op, sector, lemma_v0_data(), opt);
  const double solve_s = clock.seconds();

  const auto barrier = verify_doubling_barrier(c.op, c.verify.samples, c.seed);
  const auto doubling = check_doubling(v, barrier.eps, b.doubling_R);
  BlowupResult res = blowup(v, b.R, b.fit_lo, b.fit_hi);
  res.eps = barrier.eps;

  json r = report_header(c, "blowup");
  r["sector"] = {{"aperture", b.aperture},
                 {"orientation", b.orientation},
                 {"kappa_harmonic", std::numbers::pi / b.aperture}};
  r["polar"] = {{"nr", v.nr},
                {"nt", v.nt},
                {"r_min", v.r(0)},
                {"ratio", std::exp(v.ds)},
                {"vertex_ratio", v.vertex_ratio},
                {"residual", v.residual},
                {"sweeps", v.sweeps},
                {"outer_iterations", v.outer_iterations},
                {"policy_iterations", v.policy_iterations}};
  r["barrier"] = to_json(barrier);
  r["doubling"] = to_json(doubling);
  r["blowup"] = to_json(res);
  r["timings"] = {{"solve_s", solve_s}, {"total_s", clock.seconds()}};

  std::ostringstream csv, prof;
  csv << "R,sup_K_R,C_R,R_pow_kappa\n";
  for (std::size_t k = 0; k < res.C_R.size(); ++k)
    csv << detail::fmt(res.C_R_R[k]) << ',' << detail::fmt(sector_sup(v, res.C_R_R[k])) << ','
        << detail::fmt(res.C_R[k]) << ',' << detail::fmt(std::pow(res.C_R_R[k], res.kappa))
        << '\n';
  prof << "theta,phi\n";
  for (std::size_t k = 0; k < res.theta.size(); ++k)
    prof << detail::fmt(res.theta[k]) << ',' << detail::fmt(res.phi[k]) << '\n';
  detail::write_text(detail::output_path(out_dir, c.name + ".blowup.json"), r.dump(2) + "\n");
  detail::write_text(detail::output_path(out_dir, c.name + ".blowup.csv"), csv.str());
  detail::write_text(detail::output_path(out_dir, c.name + ".profile.csv"), prof.str());
  return r;
}

inline const std::vector<std::string> &verifier_names() {
  static const std::vector<std::string> names{"ellipticity", "homogeneity", "barrier-nondeg",
                                              "barrier-doubling"};
  return names;
}

//! Writes <name>.verify-<which>.json.
inline json cmd_verify(const RunConfig &c, const std::string &which, const std::string &out_dir) {
  detail::Stopwatch clock;
  json r = report_header(c, "verify");
  r["verifier"] = which;
  const int samples = c.verify.samples;
  if (which == "ellipticity")
    r["result"] = to_json(check_ellipticity(c.op, samples, c.seed));
  else if (which == "homogeneity")
    r["result"] = to_json(check_homogeneity(c.op, samples, c.seed));
  else if (which == "barrier-nondeg")
    r["result"] = to_json(verify_nondegeneracy_barrier(c.verify.n, c.op.lambda(), c.op.Lambda(),
                                                       samples, c.seed));
  else if (which == "barrier-doubling")
    r["result"] = to_json(verify_doubling_barrier(c.op, samples, c.seed));
  else
    throw ConfigError("unknown verifier '" + which +
                      "' (ellipticity, homogeneity, barrier-nondeg, barrier-doubling)");
  r["pass"] = r["result"]["pass"];
  r["timings"] = {{"total_s", clock.seconds()}};
  detail::write_text(detail::output_path(out_dir, c.name + ".verify-" + which + ".json"),
                     r.dump(2) + "\n");
  return r;
}

} // namespace ufb
