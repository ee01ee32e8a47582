#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "sym_matrix.hpp"

namespace ufb {

enum class OperatorMode { bellman_sup, pucci_plus, pucci_minus, laplacian };

inline std::string to_string(OperatorMode m) {
  switch (m) {
  case OperatorMode::bellman_sup:
    return "bellman-sup";
  case OperatorMode::pucci_plus:
    return "pucci-plus";
  case OperatorMode::pucci_minus:
    return "pucci-minus";
  case OperatorMode::laplacian:
    return "laplacian";
  }
  return "?";
}

inline OperatorMode mode_from_string(const std::string &s) {
  if (s == "bellman-sup")
    return OperatorMode::bellman_sup;
  if (s == "pucci-plus")
    return OperatorMode::pucci_plus;
  if (s == "pucci-minus")
    return OperatorMode::pucci_minus;
  if (s == "laplacian")
    return OperatorMode::laplacian;
  throw ConfigError("unknown operator mode '" + s + "'");
}

inline void require_finite(const SymMatrix &m, const char *who) {
  if (!m.all_finite())
    throw InvalidInput(std::string(who) + ": non-finite matrix entry");
}

//! Lambda * (sum of positive eigenvalues) + lambda * (sum of negative ones).
inline double pucci_plus(const SymMatrix &m, double lambda, double Lambda) {
  require_finite(m, "pucci_plus");
  if (!(lambda > 0.0) || !(Lambda >= lambda))
    throw InvalidInput("pucci_plus: need 0 < lambda <= Lambda");
  double s = 0.0;
  for (double e : eigenvalues(m))
    s += e > 0.0 ? Lambda * e : lambda * e;
  return s;
}

//! lambda * (sum of positive eigenvalues) + Lambda * (sum of negative ones).
inline double pucci_minus(const SymMatrix &m, double lambda, double Lambda) {
  require_finite(m, "pucci_minus");
  if (!(lambda > 0.0) || !(Lambda >= lambda))
    throw InvalidInput("pucci_minus: need 0 < lambda <= Lambda");
  double s = 0.0;
  for (double e : eigenvalues(m))
    s += e > 0.0 ? lambda * e : Lambda * e;
  return s;
}

/*!
  A uniformly elliptic, positively 1-homogeneous operator F on symmetric
  matrices. In bellman-sup mode F(M) = max_t tr(A_t M) over a finite list of
  controls with spectra in [lambda, Lambda]; the Pucci modes are evaluated in
  closed form; laplacian mode is the trace.
*/
class OperatorSpec {
public:
  static OperatorSpec laplacian(int n) {
    OperatorSpec s;
    s.mode_ = OperatorMode::laplacian;
    s.n_ = n;
    s.lambda_ = s.Lambda_ = 1.0;
    s.controls_ = {SymMatrix::identity(n)};
    s.validate();
    return s;
  }

  static OperatorSpec pucci(OperatorMode mode, int n, double lambda,
                            double Lambda) {
    if (mode != OperatorMode::pucci_plus && mode != OperatorMode::pucci_minus)
      throw ConfigError("OperatorSpec::pucci: mode must be a Pucci mode");
    OperatorSpec s;
    s.mode_ = mode;
    s.n_ = n;
    s.lambda_ = lambda;
    s.Lambda_ = Lambda;
    s.validate();
    return s;
  }

  static OperatorSpec bellman(double lambda, double Lambda,
                              std::vector<SymMatrix> controls) {
    OperatorSpec s;
    s.mode_ = OperatorMode::bellman_sup;
    s.lambda_ = lambda;
    s.Lambda_ = Lambda;
    s.n_ = controls.empty() ? 2 : controls.front().dim();
    s.controls_ = std::move(controls);
    s.validate();
    return s;
  }

  //! Controls a * I for the given scalars.
  static OperatorSpec isotropic(int n, double lambda, double Lambda,
                                const std::vector<double> &scales) {
    std::vector<SymMatrix> c;
    for (double a : scales)
      c.push_back(a * SymMatrix::identity(n));
    return bellman(lambda, Lambda, std::move(c));
  }

  OperatorMode mode() const { return mode_; }
  int dim() const { return n_; }
  double lambda() const { return lambda_; }
  double Lambda() const { return Lambda_; }
  const std::vector<SymMatrix> &controls() const { return controls_; }

  //! Policy iteration maximizes for every mode except pucci-minus.
  bool maximizes() const { return mode_ != OperatorMode::pucci_minus; }

  double operator()(const SymMatrix &m) const {
    require_finite(m, "bellman_eval");
    if (m.dim() != n_)
      throw InvalidInput("bellman_eval: dimension mismatch");
    switch (mode_) {
    case OperatorMode::laplacian:
      return m.trace();
    case OperatorMode::pucci_plus:
      return pucci_plus(m, lambda_, Lambda_);
    case OperatorMode::pucci_minus:
      return pucci_minus(m, lambda_, Lambda_);
    case OperatorMode::bellman_sup:
      break;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto &a : controls_)
      best = std::max(best, a.contract(m));
    return best;
  }

  /*!
    Finite family of linear controls whose max (min for pucci-minus)
    reproduces F. For the Pucci modes this samples the extremal controls
    lambda I + (Lambda - lambda) P over projections P onto rank-one (and, for
    n = 3, rank-two) subspaces; `directions` sets the angular density.
  */
  std::vector<SymMatrix> solver_controls(int directions = 720) const {
    if (mode_ == OperatorMode::bellman_sup || mode_ == OperatorMode::laplacian)
      return controls_;
    const double d = Lambda_ - lambda_;
    const auto id = SymMatrix::identity(n_);
    std::vector<SymMatrix> fam{lambda_ * id, Lambda_ * id};
    if (d == 0.0)
      return {lambda_ * id};
    if (n_ == 2) {
      for (int k = 0; k < directions; ++k) {
        const double phi = std::numbers::pi * k / directions;
        const Vec v{std::cos(phi), std::sin(phi), 0.0};
        fam.push_back(lambda_ * id + d * SymMatrix::outer(v, 2));
      }
    } else {
      for (const auto &v : fibonacci_sphere(directions)) {
        const auto p = SymMatrix::outer(v, 3);
        fam.push_back(lambda_ * id + d * p);
        fam.push_back(Lambda_ * id - d * p);
      }
    }
    return fam;
  }

  //! Stable textual identity used to tag produced fields.
  std::string fingerprint() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](double x) {
      std::uint64_t bits;
      static_assert(sizeof bits == sizeof x);
      std::memcpy(&bits, &x, sizeof x);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffu;
        h *= 1099511628211ull;
      }
    };
    mix(static_cast<double>(mode_));
    mix(n_);
    mix(lambda_);
    mix(Lambda_);
    for (const auto &c : controls_)
      for (double x : c.row_major())
        mix(x);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  //! Quasi-uniform unit vectors on the sphere (golden-angle spiral).
  static std::vector<Vec> fibonacci_sphere(int count) {
    std::vector<Vec> pts;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / count;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * i;
      pts.push_back({rho * std::cos(phi), rho * std::sin(phi), z});
    }
    return pts;
  }

private:
  OperatorSpec() = default;

  void validate() const {
    if (n_ != 2 && n_ != 3)
      throw ConfigError("operator dimension must be 2 or 3");
    if (!(lambda_ > 0.0) || !std::isfinite(Lambda_) || Lambda_ < lambda_)
      throw ConfigError("ellipticity constants must satisfy 0 < lambda <= Lambda");
    if (mode_ == OperatorMode::laplacian && (lambda_ != 1.0 || Lambda_ != 1.0))
      throw ConfigError("laplacian mode requires lambda = Lambda = 1");
    if (mode_ == OperatorMode::bellman_sup && controls_.empty())
      throw ConfigError("bellman-sup operator needs at least one control");
    const double slack = 1e-12 * Lambda_;
    for (std::size_t t = 0; t < controls_.size(); ++t) {
      const auto &a = controls_[t];
      if (a.dim() != n_)
        throw ConfigError("control " + std::to_string(t) + " has wrong dimension");
      if (!a.all_finite())
        throw ConfigError("control " + std::to_string(t) + " is not finite");
      const auto e = eigenvalues(a);
      if (e.front() < lambda_ - slack || e.back() > Lambda_ + slack)
        throw ConfigError("control " + std::to_string(t) +
                          " has eigenvalues outside [lambda, Lambda]");
    }
  }

  OperatorMode mode_ = OperatorMode::laplacian;
  int n_ = 2;
  double lambda_ = 1.0;
  double Lambda_ = 1.0;
  std::vector<SymMatrix> controls_;
};

inline double bellman_eval(const OperatorSpec &spec, const SymMatrix &m) {
  return spec(m);
}

// Structural verifiers -------------------------------------------------------

inline SymMatrix random_symmetric(int n, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SymMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      m(i, j) = u(rng);
  return m;
}

//! B B^T for a random B, so the result is positive semidefinite.
inline SymMatrix random_psd(int n, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double b[3][3];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      b[i][j] = u(rng);
  SymMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        s += b[i][k] * b[j][k];
      m(i, j) = s;
    }
  return m;
}

struct EllipticityReport {
  bool pass = true;
  int samples = 0;
  int failures = 0;
  //! min over samples of F(M+N) - F(M) - lambda ||N||
  double worst_lower_margin = std::numeric_limits<double>::infinity();
  //! min over samples of Lambda ||N|| - (F(M+N) - F(M))
  double worst_upper_margin = std::numeric_limits<double>::infinity();
};

/*!
  Samples random symmetric M and positive semidefinite N and checks
  lambda ||N|| <= F(M+N) - F(M) <= Lambda ||N|| with ||N|| = tr N.
*/
inline EllipticityReport check_ellipticity(const OperatorSpec &spec,
                                           int samples, std::uint64_t seed) {
  if (samples < 1)
    throw InvalidInput("check_ellipticity: samples must be >= 1");
  std::mt19937_64 rng(seed);
  EllipticityReport r;
  r.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const auto m = random_symmetric(spec.dim(), rng);
    const auto nn = random_psd(spec.dim(), rng);
    const double norm_n = nn.trace();
    const double diff = spec(m + nn) - spec(m);
    const double lo = diff - spec.lambda() * norm_n;
    const double hi = spec.Lambda() * norm_n - diff;
    r.worst_lower_margin = std::min(r.worst_lower_margin, lo);
    r.worst_upper_margin = std::min(r.worst_upper_margin, hi);
    const double tol = 1e-12 * (1.0 + std::abs(diff) + spec.Lambda() * norm_n);
    if (lo < -tol || hi < -tol)
      ++r.failures;
  }
  r.pass = r.failures == 0;
  return r;
}

struct HomogeneityReport {
  bool pass = true;
  int samples = 0;
  int failures = 0;
  double worst_relative_error = 0.0;
  bool zero_exact = true;
  //! Whether F(-M) = -F(M) also held on every sample; true only for
  //! single-control (linear) operators.
  bool odd_symmetric = true;
};

/*!
  Checks F(tM) = t F(M) for t > 0 and, for t < 0, F(tM) = |t| F(-M) against
  the enumeration oracle over the controls (t times the minimum of
  tr(A_t M) for bellman-sup); also requires F(0) = 0 exactly.
*/
inline HomogeneityReport check_homogeneity(const OperatorSpec &spec,
                                           int samples, std::uint64_t seed) {
  if (samples < 1)
    throw InvalidInput("check_homogeneity: samples must be >= 1");
  std::mt19937_64 rng(seed);
  HomogeneityReport r;
  r.samples = samples;
  r.zero_exact = spec(SymMatrix(spec.dim())) == 0.0;
  const double ts[] = {-2.0, -1.0, 0.5, 3.0};
  auto oracle = [&](const SymMatrix &m, double t) {
    // enumeration at +M and -M
    if (spec.mode() != OperatorMode::bellman_sup)
      return t >= 0 ? t * spec(m) : -t * spec(-m);
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (const auto &a : spec.controls()) {
      hi = std::max(hi, a.contract(m));
      lo = std::min(lo, a.contract(m));
    }
    return t >= 0 ? t * hi : t * lo;
  };
  for (int s = 0; s < samples; ++s) {
    const auto m = random_symmetric(spec.dim(), rng);
    const double fm = spec(m);
    bool ok = true;
    for (double t : ts) {
      const double got = spec(t * m);
      const double want = oracle(m, t);
      const double scale = std::max(1.0, std::abs(want));
      const double err = std::abs(got - want) / scale;
      r.worst_relative_error = std::max(r.worst_relative_error, err);
      if (err > 1e-12)
        ok = false;
      if (t > 0 && std::abs(got - t * fm) > 1e-12 * std::max(1.0, std::abs(t * fm)))
        ok = false;
    }
    if (std::abs(spec(-m) + fm) > 1e-12 * std::max(1.0, std::abs(fm)))
      r.odd_symmetric = false;
    if (!ok)
      ++r.failures;
  }
  r.pass = r.failures == 0 && r.zero_exact;
  return r;
}

} // namespace ufb
