#include <catch_amalgamated.hpp>

#include <cmath>

#include <ufb/cone_blowup.hpp>

#include "oracles.hpp"

using namespace ufb;
using Catch::Approx;

namespace {
constexpr double pi = std::numbers::pi;

PolarOptions coarse(int per_octave, int octaves = 6) {
  PolarOptions o;
  o.grid.per_octave = per_octave;
  o.grid.octaves = octaves;
  return o;
}

SectorSpec sector(double aperture) {
  SectorSpec s;
  s.aperture = aperture;
  return s;
}

double max_error(const PolarField &v, double k) {
  double e = 0.0;
  for (int i = 0; i < v.nr; ++i)
    for (int j = 0; j < v.nt; ++j)
      e = std::max(e, std::abs(v.at(i, j) - oracle::sector_harmonic(v.r(i), v.theta(j), k)));
  return e;
}

// r^k sin(k theta) written straight onto the polar grid
PolarField homogeneous(double k, int octaves = 8) {
  PolarField f = make_polar_field(sector(pi / k), {octaves, 14});
  for (int i = 0; i < f.nr; ++i)
    for (int j = 0; j < f.nt; ++j)
      f.at(i, j) = oracle::sector_harmonic(f.r(i), f.theta(j), k);
  f.vertex_ratio = std::exp(-k * f.ds);
  return f;
}
} // namespace

TEST_CASE("lemma boundary data") {
  CHECK(lemma_v0(0.75) == 0.0);
  CHECK(lemma_v0(0.5) == 0.0);
  CHECK(lemma_v0(1.0) == 1.0);
  CHECK(lemma_v0(0.875) == Approx(0.25).epsilon(1e-15));
  CHECK(lemma_v0(Vec{0.6, 0.8, 0.0}) == Approx(1.0).epsilon(1e-15));
  CHECK(lemma_v0_data()(0.875, 1.0) == lemma_v0(0.875));
}

TEST_CASE("sector grid layout") {
  const auto f = make_polar_field(sector(pi / 2), {10, 14});
  CHECK(f.nr == 141);
  CHECK(f.r(f.nr - 1) == Approx(1.0).epsilon(1e-14));
  CHECK(f.r_min() == Approx(std::ldexp(1.0, -10)).epsilon(1e-12));
  CHECK(f.theta(f.nt - 1) == Approx(pi / 2).epsilon(1e-14));
  CHECK_THROWS_AS(make_polar_field(sector(0.0), {}), ConfigError);
  CHECK_THROWS_AS(make_polar_field(sector(2 * pi), {}), ConfigError);
  CHECK_THROWS_AS(make_polar_field(sector(1.0), {0, 14}), ConfigError);
}

TEST_CASE("harmonic data is recovered to second order") {
  for (double k : {1.0, 2.0}) {
    const SectorData data = [k](double r, double t) { return oracle::sector_harmonic(r, t, k); };
    const auto a = solve_cone_dirichlet(OperatorSpec::laplacian(2), sector(pi / k), data, coarse(7));
    const auto b = solve_cone_dirichlet(OperatorSpec::laplacian(2), sector(pi / k), data, coarse(14));
    const double ea = max_error(a, k), eb = max_error(b, k);
    CHECK(eb <= 0.05 * k * k * b.ds * b.ds);
    CHECK(ea / eb >= 3.0);
    CHECK(ea / eb <= 5.0);
    CHECK(b.vertex_ratio == Approx(std::exp(-k * b.ds)).epsilon(1e-4));
    CHECK(b.residual <= 1e-10);
  }
}

TEST_CASE("lemma data gives a positive solution below one") {
  for (const auto &op : {OperatorSpec::laplacian(2), OperatorSpec::isotropic(2, 1, 2, {1.0, 2.0})}) {
    const auto v = solve_cone_dirichlet(op, sector(pi / 2), lemma_v0_data(), coarse(14));
    for (int i = 0; i < v.nr; ++i)
      for (int j = 0; j < v.nt; ++j) {
        CHECK(v.at(i, j) >= 0.0);
        CHECK(v.at(i, j) <= 1.0 + 1e-12);
        if (j == 0 || j == v.nt - 1)
          CHECK(v.at(i, j) == Approx(lemma_v0(v.r(i))).margin(1e-14));
        else if (i < v.nr - 1)
          CHECK(v.at(i, j) > 0.0);
      }
    CHECK(lateral_slope_min(v, 0.05, 0.5) > 0.0);
  }
}

TEST_CASE("doubling barrier constants") {
  const auto one = verify_doubling_barrier(OperatorSpec::laplacian(2));
  CHECK(one.alpha == 2.0);
  CHECK(one.eps == Approx(std::exp(-2.0) / 2.0).epsilon(1e-14));
  CHECK(one.eps == Approx(0.067668).margin(1e-6));
  CHECK(one.samples == 10000);
  CHECK(one.pass == (one.max_F <= 1e-10));
  CHECK(one.pass_sufficient);
  CHECK(one.max_F_sufficient <= 1e-10);

  const auto two = verify_doubling_barrier(OperatorSpec::isotropic(2, 1, 2, {1.0, 2.0}));
  CHECK(two.alpha == 4.0);
  CHECK(two.eps == Approx(0.004579).margin(1e-6));
  CHECK(two.pass_sufficient);

  // the Laplacian of the barrier at |x| = 1/2 is e^{-alpha/4} (2 / alpha) (n - alpha / 2)
  const double lap_half = std::exp(-0.5) * (2.0 - 1.0);
  CHECK(one.max_F == Approx(lap_half).epsilon(1e-12));
  CHECK_THROWS_AS(verify_doubling_barrier(OperatorSpec::laplacian(2), 1), InvalidInput);
}

TEST_CASE("doubling inequality on the quarter-plane solution") {
  const auto v = solve_cone_dirichlet(OperatorSpec::laplacian(2), sector(pi / 2), lemma_v0_data(), coarse(14));
  const double eps = std::exp(-2.0) / 2.0;
  const auto unit = check_doubling(v, eps, {1.0});
  CHECK(unit.pass);
  CHECK(unit.worst == Approx(0.0).margin(1e-14));
  const auto half = check_doubling(v, eps, {0.5, 0.625, 0.75, 0.875});
  CHECK(half.pass);
  CHECK(half.worst >= -1e-6);

  // each margin is affine in eps with slope -(1 - R), so the largest
  // admissible eps follows from the margins at any one eps
  double critical = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < half.R.size(); ++k)
    critical = std::min(critical, eps + half.worst_margin[k] / (1.0 - half.R[k]));
  CHECK(critical > eps);
  CHECK(check_doubling(v, 0.99 * critical, half.R).pass);
  CHECK_FALSE(check_doubling(v, 1.01 * critical, half.R).pass);
}

TEST_CASE("homogeneous fields are fixed by the blow-up") {
  const auto f = homogeneous(2.0);
  const auto seq = blowup_sequence(f, {0.5, 0.25, 0.125});
  REQUIRE(seq.w.size() == 3);
  for (const auto &w : seq.w)
    for (std::size_t q = 0; q < w.values.size(); ++q)
      CHECK(w.values[q] == Approx(f.values[q]).margin(1e-10));
  for (double d : seq.differences)
    CHECK(d <= 1e-10);
  for (const auto &dq : seq.quotients)
    CHECK(dq.k == Approx(0.25).epsilon(1e-9));

  const auto b = homogeneity_exponent(f);
  CHECK(b.kappa == Approx(2.0).margin(1e-6));
  CHECK(b.profile_residual <= 1e-9);
  for (std::size_t j = 0; j < b.phi.size(); ++j)
    CHECK(b.phi[j] == Approx(std::sin(2 * b.theta[j])).margin(1e-9));
  for (std::size_t k = 0; k < b.C_R.size(); ++k)
    CHECK(b.C_R[k] == Approx(std::pow(b.C_R_R[k], 2.0)).epsilon(1e-9));
}

TEST_CASE("half-plane blow-up converges to the linear profile") {
  const auto v = solve_cone_dirichlet(OperatorSpec::laplacian(2), sector(pi), lemma_v0_data(), coarse(14, 8));
  const auto seq = blowup_sequence(v, {0.25, 0.125, 0.0625});
  REQUIRE(seq.differences.size() == 2);
  CHECK(seq.differences[1] < seq.differences[0]);
  const auto &w = seq.w.back();
  double err = 0.0;
  for (int i = 0; i < w.nr; ++i) {
    if (w.r(i) < w.trusted_min_r)
      continue;
    for (int j = 0; j < w.nt; ++j)
      err = std::max(err, std::abs(w.at(i, j) - oracle::sector_harmonic(w.r(i), w.theta(j), 1.0)));
  }
  CHECK(err <= 0.02);
  const auto b = blowup(v, {0.25, 0.125, 0.0625}, 1.0 / 32, 0.25);
  CHECK(b.kappa == Approx(1.0).epsilon(0.03));
}

TEST_CASE("blow-up input validation") {
  const auto f = homogeneous(2.0);
  CHECK_THROWS_AS(blowup_sequence(f, {}), InvalidInput);
  CHECK_THROWS_AS(blowup_sequence(f, {0.25, 0.5}), InvalidInput);
  CHECK_THROWS_AS(blowup_sequence(f, {1.0}), InvalidInput);
  CHECK_THROWS_AS(blowup_sequence(f.blank(), {0.5}), InvalidInput);
  CHECK_THROWS_AS(homogeneity_exponent(f, 0.5, 0.25), InvalidInput);
  CHECK_THROWS_AS(homogeneity_exponent(f, 1e-4, 0.25), InvalidInput);
}

TEST_CASE("two-sided comparability") {
  const auto b = homogeneous(2.0);
  PolarField u = b;
  for (double &x : u.values)
    x *= 2.0;
  const auto same = check_two_sided_bound(u, b, 0.01);
  CHECK(same.pass);
  CHECK(same.ratio_min == Approx(2.0).epsilon(1e-14));
  CHECK(same.ratio_max == Approx(2.0).epsilon(1e-14));

  const auto lap = OperatorSpec::laplacian(2);
  const auto h2 = solve_cone_dirichlet(lap, sector(pi / 2), [](double r, double t) {
    return oracle::sector_harmonic(r, t, 2.0);
  }, coarse(14));
  const auto lv = solve_cone_dirichlet(lap, sector(pi / 2), lemma_v0_data(), coarse(14));
  const auto band = check_two_sided_bound(lv, h2, 0.01);
  CHECK(band.pass);
  CHECK(band.ratio_min > 0.0);
  CHECK(band.ratio_max < 10.0);

  PolarField bad = h2;
  for (int i = 0; i < bad.nr; ++i)
    bad.at(i, 0) = 0.1;
  CHECK_THROWS_AS(check_two_sided_bound(bad, h2, 0.01), InvalidInput);
}

TEST_CASE("strongly anisotropic controls are rejected on the polar grid") {
  const auto a = SymMatrix::from_rows(std::vector<double>{1.0, 0.0, 0.0, 10.0}, 2);
  const auto op = OperatorSpec::bellman(1.0, 10.0, {a});
  CHECK_THROWS_AS(solve_cone_dirichlet(op, sector(pi / 2), lemma_v0_data(), coarse(7)), ConfigError);
}
