#include <catch_amalgamated.hpp>

#include <cmath>

#include <ufb/fd_solver.hpp>

#include "oracles.hpp"

using namespace ufb;
using Catch::Approx;

namespace {
SymMatrix diag2(double a, double b) { return SymMatrix::diag({a, b}); }

double max_over(const GridField &u) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : u.values)
    m = std::max(m, v);
  return m;
}
} // namespace

TEST_CASE("penalty profile") {
  CHECK(beta_eps(1.0, 0.3) == 1.0);
  CHECK(beta_eps(0.0, 0.3) == 1.0);
  CHECK(beta_eps(-0.25, 0.25) == Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(beta_eps(-1.0, 1e-3) < 1e-6);
  for (double t : {-0.3, -0.1, -0.01})
    for (double e : {0.2, 0.1, 0.05}) {
      CHECK(beta_eps(t, e / 2) <= beta_eps(t, e));
      CHECK(beta_eps(t, e) >= 0.0);
    }
  CHECK(beta_eps(-0.1, 1e-4) == 0.0);
  CHECK_THROWS_AS(beta_eps(0.1, 0.0), InvalidInput);
}

TEST_CASE("penalty schedule levels") {
  const auto eps = PenaltySchedule{}.levels();
  REQUIRE(eps.size() == 7);
  for (int j = 0; j < 7; ++j)
    CHECK(eps[j] == Approx(0.2 * std::pow(2.0, -j)));
  PenaltySchedule bad;
  bad.factor = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.min_eps = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("central hessian is exact on quadratics") {
  const Grid g = Grid::cube(2, -1, 1, 17);
  const auto sq = GridField::sample(g, [](const Vec &x) { return x[0] * x[0]; });
  const auto h1 = discretize_hessian(sq, {5, 9, 0});
  CHECK(h1(0, 0) == Approx(2.0).margin(1e-11));
  CHECK(h1(1, 1) == Approx(0.0).margin(1e-11));
  CHECK(h1(0, 1) == Approx(0.0).margin(1e-11));
  const auto xy = GridField::sample(g, [](const Vec &x) { return x[0] * x[1]; });
  const auto h2 = discretize_hessian(xy, {3, 12, 0});
  CHECK(h2(0, 1) == Approx(1.0).margin(1e-11));
  CHECK(h2(0, 0) == Approx(0.0).margin(1e-11));

  const auto s = GridField::sample(g, [](const Vec &x) { return std::sin(x[0]); });
  const double h = g.spacing(0);
  const Index node{11, 4, 0};
  const double x = g.point(node)[0];
  CHECK(std::abs(discretize_hessian(s, node)(0, 0) + std::sin(x)) <= h * h / 12.0);
  CHECK_THROWS_AS(discretize_hessian(s, {0, 4, 0}), IndexError);
  CHECK_THROWS_AS(discretize_hessian(s, {4, 16, 0}), IndexError);

  const Grid g3 = Grid::cube(3, -1, 1, 9);
  const auto q3 = GridField::sample(g3, [](const Vec &x) { return x[0] * x[2] + 2 * x[1] * x[1]; });
  const auto h3 = discretize_hessian(q3, {4, 4, 4});
  CHECK(h3(0, 2) == Approx(1.0).margin(1e-11));
  CHECK(h3(1, 1) == Approx(4.0).margin(1e-11));
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid::cube(2, -1, 1, 8), ConfigError);
  CHECK_THROWS_AS(Grid::cube(2, -1, 1, 7), ConfigError);
  CHECK_THROWS_AS(Grid::cube(4, -1, 1, 9), ConfigError);
  CHECK_THROWS_AS(Grid::cube(2, 1, -1, 9), ConfigError);
  const Grid g = Grid::centered(2, 1.0, 0.125);
  CHECK(g.count[0] == 17);
  CHECK(g.point(g.index({8, 8, 0}))[0] == 0.0);
}

TEST_CASE("exact radial solution values") {
  const Grid g2 = Grid::cube(2, -1, 1, 9);
  const auto u2 = exact_radial_solution(1.0, 2, 1.0, g2);
  CHECK(u2.at({4, 4, 0}) == Approx(0.25));
  CHECK(u2.at({8, 4, 0}) == 0.0);
  const Grid g3 = Grid::cube(3, -1, 1, 9);
  CHECK(exact_radial_solution(2.0, 3, 1.0, g3).at({4, 4, 4}) == Approx(1.0 / 12.0));
}

TEST_CASE("linear policy solves") {
  const Problem p{OperatorSpec::laplacian(2), Grid::cube(2, -1, 1, 17), Domain::box(),
                  BoundaryData::quadratic(diag2(1, -1))};
  const std::vector<int> policy(p.grid.size(), 0);
  const auto u = solve_linear_policy(p, policy, GridField(p.grid));
  for (std::size_t k = 0; k < p.grid.size(); ++k) {
    const Vec x = p.grid.point(k);
    CHECK(u.values[k] == Approx(x[0] * x[0] - x[1] * x[1]).margin(1e-10));
  }

  const Problem zero{OperatorSpec::laplacian(2), Grid::cube(2, -1, 1, 17), Domain::box(),
                     BoundaryData::constant(0.0)};
  const auto z = solve_linear_policy(zero, policy, GridField(zero.grid));
  for (double v : z.values)
    CHECK(v == 0.0);

  CHECK_THROWS_AS(solve_linear_policy(zero, std::vector<int>(3, 0), GridField(zero.grid)),
                  InvalidInput);
  CHECK_THROWS_AS(solve_linear_policy(zero, std::vector<int>(zero.grid.size(), 4), GridField(zero.grid)),
                  InvalidInput);
}

TEST_CASE("masked disc with unit source matches radial profile to second order") {
  double prev = 0.0;
  for (int level : {0, 1}) {
    const double h = 1.0 / (16 << level);
    const Problem p{OperatorSpec::laplacian(2), Grid::centered(2, 1.25, h),
                    Domain::ball({}, 1.0), BoundaryData::constant(0.0)};
    const std::vector<int> policy(p.grid.size(), 0);
    const auto u = solve_linear_policy(p, policy, GridField(p.grid, -1.0));
    double err = 0.0;
    for (std::size_t k = 0; k < p.grid.size(); ++k) {
      const Vec x = p.grid.point(k);
      err = std::max(err, std::abs(u.values[k] - oracle::radial_bump(norm(x, 2), 2, 1.0, 1.0)));
    }
    CHECK(err <= 2.0 * h * h);
    if (level == 1)
      CHECK(prev / err > 3.0);
    prev = err;
  }
}

TEST_CASE("monotone stencil rejects strong anisotropy") {
  const SymMatrix a = SymMatrix::from_rows(std::vector<double>{1.0, 1.5, 1.5, 3.0}, 2);
  const std::array<double, 3> h{0.1, 0.1, 0.1};
  CHECK_THROWS_AS(monotone_weights(a, h, 2), ConfigError);
  const auto spec = OperatorSpec::bellman(0.1, 4.0, {a});
  const Problem p{spec, Grid::cube(2, -1, 1, 9), Domain::box(), BoundaryData::constant(0.0)};
  CHECK_THROWS_AS(Discretization(p, SolverOptions{}), ConfigError);

  const SymMatrix ok = SymMatrix::from_rows(std::vector<double>{2.0, 0.5, 0.5, 1.0}, 2);
  const auto w = monotone_weights(ok, h, 2);
  for (double x : w)
    CHECK(x >= 0.0);
  // weights reproduce tr(A D^2 q) for q = x^T B x: sum of w * (q(x+d) - q(x))
  double sum = 0.0;
  const StencilLayout lay(2);
  for (int o = 0; o < lay.slots(); ++o) {
    const auto &d = lay.offsets[o];
    const double dx = d[0] * h[0], dy = d[1] * h[1];
    sum += w[o] * (dx * dx + 2 * 0.3 * dx * dy - dy * dy);
  }
  CHECK(sum == Approx(2.0 * (2.0 * 1 + 2 * 0.5 * 0.3 - 1.0)).margin(1e-10));
}

TEST_CASE("penalized solve with negative data stays negative near the boundary") {
  const Problem p{OperatorSpec::laplacian(2), Grid::cube(2, -0.5, 0.5, 17), Domain::box(),
                  BoundaryData::constant(-1.0)};
  const auto u = solve_penalized(p, 0.1);
  CHECK(u.meta.tag == "penalized");
  CHECK(u.meta.residual <= 1e-7);
  for (std::size_t k = 0; k < p.grid.size(); ++k) {
    const Index ijk = p.grid.coords(k);
    if (ijk[0] <= 1 || ijk[0] >= 15 || ijk[1] <= 1 || ijk[1] >= 15)
      CHECK(u.values[k] < 0.0);
  }
}

TEST_CASE("penalized solutions decrease with eps and respect comparison") {
  SolverOptions opt;
  const Problem p{OperatorSpec::isotropic(2, 1, 2, {1.0, 2.0}), Grid::centered(2, 1.25, 1.0 / 16),
                  Domain::box(), BoundaryData::radial(2, 1.0, 1.0)};
  const auto a = solve_penalized(p, 0.1, opt);
  const auto b = solve_penalized(p, 0.05, opt);
  for (std::size_t k = 0; k < a.values.size(); ++k)
    CHECK(b.values[k] <= a.values[k] + 2 * opt.fixed_point_tol);

  Problem lower = p;
  lower.g = BoundaryData::constant(-0.5);
  Problem upper = p;
  upper.g = BoundaryData::constant(-0.2);
  const auto u1 = solve_penalized(lower, 0.1, opt);
  const auto u2 = solve_penalized(upper, 0.1, opt);
  for (std::size_t k = 0; k < u1.values.size(); ++k)
    CHECK(u1.values[k] <= u2.values[k] + 2 * opt.fixed_point_tol);
}

TEST_CASE("maximal solution on the disc") {
  const Problem p{OperatorSpec::laplacian(2), Grid::centered(2, 1.25, 1.0 / 16),
                  Domain::ball({}, 1.0), BoundaryData::constant(0.0)};
  const auto res = solve_maximal(p, PenaltySchedule{}, SolverOptions{}, true);
  CHECK(res.field.meta.tag == "maximal-approximation");
  CHECK(res.stages.size() == 7);
  for (double v : res.violations)
    CHECK(v <= 2e-8);
  const auto exact = exact_radial_solution(1.0, 2, 1.0, p.grid);
  CHECK(res.field.max_abs_diff(exact) <= 5.0 / 256.0);
  CHECK(res.field.meta.residual <= 1e-7);
  CHECK(max_over(res.initial) >= max_over(res.field) - 1e-12);
}

TEST_CASE("maximal solution with negative data solves the homogeneous equation") {
  const SymMatrix minus_id = -1.0 * SymMatrix::identity(2);
  const Problem p{OperatorSpec::laplacian(2), Grid::cube(2, -1, 1, 17), Domain::box(),
                  BoundaryData::quadratic(minus_id, -1.0)};
  const auto res = solve_maximal(p, PenaltySchedule{});
  CHECK(max_over(res.field) < 0.0);
  Discretization disc(p, SolverOptions{});
  const auto u = disc.gather(res.field);
  CHECK(disc.operator_residual(u, std::vector<double>(u.size(), 0.0)) <= 1e-7);
}

TEST_CASE("pucci maximal operator solve in three dimensions") {
  const Problem p{OperatorSpec::pucci(OperatorMode::pucci_plus, 3, 1, 2), Grid::cube(3, -1, 1, 9),
                  Domain::box(), BoundaryData::quadratic(SymMatrix::diag({1.0, 1.0, -1.0}))};
  SolverOptions opt;
  opt.pucci_directions = 64;
  Discretization disc(p, opt);
  const auto u = solve_supersolution(disc);
  CHECK(u.meta.residual <= 1e-9);
  // sup over the sampled family is at most M+, so u lies above the M+ solution's profile
  for (double v : u.values)
    CHECK(std::isfinite(v));
}

TEST_CASE("nondegeneracy barrier") {
  const auto r22 = verify_nondegeneracy_barrier(2, 1, 1, 10000, 1);
  CHECK(r22.pass);
  CHECK(r22.gamma == 0.0);
  CHECK(r22.c_gamma == Approx(std::log(2.0) / 4.0).epsilon(1e-14));
  CHECK(std::isnan(r22.c_alternative));
  const auto r3 = verify_nondegeneracy_barrier(3, 1, 1, 10000, 1);
  CHECK(r3.pass);
  CHECK(r3.gamma == 1.0);
  CHECK(r3.c_gamma == Approx(0.125).epsilon(1e-14));
  CHECK(r3.c_alternative == Approx(0.125).epsilon(1e-14));
  const auto r312 = verify_nondegeneracy_barrier(3, 1, 2, 10000, 1);
  CHECK(r312.pass);
  CHECK(r312.gamma == 3.0);
  CHECK(r312.c_alternative != Approx(r312.c_gamma));
  CHECK(r312.max_abs_profile_pucci <= 1e-10);
  CHECK(verify_nondegeneracy_barrier(2, 1, 2, 10000, 1).pass);
  CHECK_THROWS_AS(verify_nondegeneracy_barrier(4, 1, 1, 10, 1), InvalidInput);
  CHECK_THROWS_AS(verify_nondegeneracy_barrier(2, 2, 1, 10, 1), InvalidInput);
}
