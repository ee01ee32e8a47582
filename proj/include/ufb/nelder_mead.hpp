#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace ufb {

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int steps = 0;
  int evaluations = 0;
};

/*!
  Derivative-free simplex minimisation (standard reflection / expansion /
  contraction / shrink coefficients). Runs exactly `steps` iterations unless
  the simplex collapses below `xtol`.
*/
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double> &)> &f,
                                 std::vector<double> x0, const std::vector<double> &step,
                                 int steps, double xtol = 1e-12) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i)
    pts[i + 1][i] += step[i];
  std::vector<double> val(n + 1);
  SimplexResult res;
  for (std::size_t i = 0; i <= n; ++i)
    val[i] = f(pts[i]);
  res.evaluations = static_cast<int>(n + 1);

  std::vector<std::size_t> order(n + 1);
  auto sort = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
  };
  auto blend = [&](const std::vector<double> &c, const std::vector<double> &p, double t) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = c[i] + t * (p[i] - c[i]);
    return out;
  };

  for (; res.steps < steps; ++res.steps) {
    sort();
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    double size = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        size = std::max(size, std::abs(pts[i][k] - pts[best][k]));
    if (size < xtol)
      break;
    std::vector<double> c(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t k = 0; k < n; ++k)
          c[k] += pts[i][k] / n;
    auto xr = blend(c, pts[worst], -1.0);
    const double fr = f(xr);
    ++res.evaluations;
    if (fr < val[best]) {
      auto xe = blend(c, pts[worst], -2.0);
      const double fe = f(xe);
      ++res.evaluations;
      if (fe < fr)
        pts[worst] = std::move(xe), val[worst] = fe;
      else
        pts[worst] = std::move(xr), val[worst] = fr;
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = std::move(xr), val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    auto xc = blend(c, outside ? xr : pts[worst], 0.5);
    const double fc = f(xc);
    ++res.evaluations;
    if (fc < (outside ? fr : val[worst])) {
      pts[worst] = std::move(xc), val[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best)
        continue;
      pts[i] = blend(pts[best], pts[i], 0.5);
      val[i] = f(pts[i]);
      ++res.evaluations;
    }
  }
  sort();
  res.x = pts[order.front()];
  res.value = val[order.front()];
  return res;
}

} // namespace ufb
