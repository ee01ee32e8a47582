#pragma once

#include <cmath>
#include <vector>

#include "error.hpp"

namespace ufb {

/*!
  Smooth majorant of the indicator of {t > 0}: 1 for t >= 0 and
  exp(-(|t| / eps)^3) for t < 0. Decreasing in eps for every t, and tends to
  the indicator as eps -> 0 for t != 0.
*/
inline double beta_eps(double t, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw InvalidInput("beta_eps: eps must be positive");
  if (t >= 0.0)
    return 1.0;
  const double s = -t / eps;
  return std::exp(-s * s * s);
}

//! Decreasing penalty levels eps0, eps0 * factor, ... down to min_eps.
struct PenaltySchedule {
  double eps0 = 0.2;
  double factor = 0.5;
  double min_eps = 0.2 / 64.0;
  double tol = 1e-8;    //!< fixed-point tolerance (max norm)
  int max_outer = 200;  //!< outer iterations per level

  void validate() const {
    if (!(eps0 > 0.0) || !std::isfinite(eps0))
      throw ConfigError("schedule: eps0 must be positive");
    if (!(factor > 0.0 && factor < 1.0))
      throw ConfigError("schedule: factor must lie in (0, 1)");
    if (!(min_eps > 0.0) || min_eps > eps0)
      throw ConfigError("schedule: need 0 < min_eps <= eps0");
    if (!(tol > 0.0))
      throw ConfigError("schedule: tol must be positive");
    if (max_outer < 1)
      throw ConfigError("schedule: max_outer must be >= 1");
  }

  std::vector<double> levels() const {
    validate();
    std::vector<double> eps;
    for (double e = eps0; e >= min_eps * (1.0 - 1e-12); e *= factor)
      eps.push_back(e);
    return eps;
  }
};

} // namespace ufb
