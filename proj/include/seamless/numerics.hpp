#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "seamless/errors.hpp"

namespace seamless {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

double norm_pdf(double x);

/// Standard normal CDF. Saturates at 0 and 1; accurate in both tails.
double norm_cdf(double x);

/// Inverse of norm_cdf. Throws std::domain_error unless 0 < p < 1.
double norm_quantile(double p);

/// P(X <= h, Y <= k) for standard bivariate normal (X, Y) with correlation
/// rho. Infinite bounds are allowed. Absolute error below 1e-13 in practice.
double bvn_cdf(double h, double k, double rho);

/// Correlation coefficients of a standardized trivariate normal.
struct Corr3 {
  double r12 = 0.0;
  double r13 = 0.0;
  double r23 = 0.0;

  Eigen::Matrix3d matrix() const;

  /// Checks entries and positive semi-definiteness (principal minors
  /// >= -1e-12). A matrix that is indefinite only within that tolerance is
  /// projected onto the PSD cone by clipping negative eigenvalues and
  /// rescaling to unit diagonal.
  /// Throws std::domain_error for entries outside [-1, 1] and NumericError
  /// for a non-PSD matrix.
  Corr3 validated() const;
};

/// P(X1 <= b1, X2 <= b2, X3 <= b3) for a standardized trivariate normal.
/// Computed by conditioning on one coordinate and integrating bivariate
/// probabilities with adaptive Gauss-Kronrod quadrature.
double tvn_cdf(double b1, double b2, double b3, const Corr3& corr);

enum class Extreme { max, min };

/// Density at q of max (or min) of two standard normals with correlation
/// rho: 2 phi(q) Phi(+-k q), k = sqrt((1 - rho) / (1 + rho)).
double extreme_pair_density(double q, double rho, Extreme which);

/// Adaptive 15-point Gauss-Kronrod integral of f over the finite [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12);

/// Brent's method. Requires f(lo), f(hi) of opposite sign (or a zero at an
/// endpoint); stops once the bracket is narrower than tol. Throws
/// NumericError when the root is not bracketed.
template <class F>
double find_root(F&& f, double lo, double hi, double tol) {
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (!(std::isfinite(fa) && std::isfinite(fb)) || (fa > 0.0) == (fb > 0.0)) {
    throw NumericError("find_root: no sign change on [" + std::to_string(lo) +
                       ", " + std::to_string(hi) + "]");
  }
  double c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < 200; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol1 =
        2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * tol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
  }
  return b;
}

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace seamless
