#include "seamless/numerics.hpp"

#include <algorithm>
#include <array>
#include <numbers>
#include <sstream>

namespace seamless {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPsdTol = 1e-12;

// 20-point Gauss-Legendre rule on [-1, 1], built once by Newton iteration.
struct GaussLegendre20 {
  std::array<double, 20> x{};
  std::array<double, 20> w{};

  GaussLegendre20() {
    constexpr int n = 20;
    for (int i = 0; i < n; ++i) {
      double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 1; j <= n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

const GaussLegendre20& gauss_legendre20() {
  static const GaussLegendre20 rule;
  return rule;
}

// Upper orthant P(X > h, Y > k), Drezner-Wesolowsky / Genz reduction.
double bvn_upper(double h, double k, double r) {
  const auto& gl = gauss_legendre20();
  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = 0.5 * (h * h + k * k);
    const double asr = std::asin(r);
    for (int i = 0; i < 20; ++i) {
      const double sn = std::sin(0.5 * asr * (gl.x[i] + 1.0));
      bvn += gl.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    }
    return bvn * asr / (2.0 * kTwoPi) + norm_cdf(-h) * norm_cdf(-k);
  }
  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-0.5 * (bs / as + hk)) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 +
           c * d * as * as / 5.0);
    if (hk > -160.0) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-0.5 * hk) * std::sqrt(kTwoPi) * norm_cdf(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a *= 0.5;
    for (int i = 0; i < 20; ++i) {
      const double xs = std::pow(a * (gl.x[i] + 1.0), 2);
      const double rs = std::sqrt(1.0 - xs);
      const double asr = -0.5 * (bs / xs + hk);
      if (asr > -100.0) {
        bvn += a * gl.w[i] * std::exp(asr) *
               (std::exp(-hk * xs / (2.0 * (1.0 + rs) * (1.0 + rs))) / rs -
                (1.0 + c * xs * (1.0 + d * xs)));
      }
    }
    bvn = -bvn / kTwoPi;
  }
  if (r > 0.0) return bvn + norm_cdf(-std::max(h, k));
  bvn = -bvn;
  if (k > h) {
    if (h < 0.0) {
      bvn += norm_cdf(k) - norm_cdf(h);
    } else {
      bvn += norm_cdf(-h) - norm_cdf(-k);
    }
  }
  return bvn;
}

// QUADPACK G7-K15 abscissae and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

double gk15(const std::function<double(double)>& f, double a, double b,
            double& err) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double fsum = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * fsum;
    if (j % 2 == 1) gauss += kWg[j / 2] * fsum;
  }
  err = std::abs((kronrod - gauss) * half);
  return kronrod * half;
}

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol, double whole, double whole_err,
                          int depth) {
  if (whole_err <= tol || depth >= 40) return whole;
  const double mid = 0.5 * (a + b);
  double err_l = 0.0, err_r = 0.0;
  const double left = gk15(f, a, mid, err_l);
  const double right = gk15(f, mid, b, err_r);
  return integrate_adaptive(f, a, mid, 0.5 * tol, left, err_l, depth + 1) +
         integrate_adaptive(f, mid, b, 0.5 * tol, right, err_r, depth + 1);
}

}  // namespace

double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi);
}

double norm_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("norm_quantile: p must lie in (0, 1), got " +
                            std::to_string(p));
  }
  if (p == 0.5) return 0.0;
  // Work in the lower tail so the residual keeps full relative precision.
  const bool upper = p > 0.5;
  const double tail = upper ? 1.0 - p : p;
  // Abramowitz & Stegun 26.2.23 start, |error| < 4.5e-4, then Halley steps.
  const double t = std::sqrt(-2.0 * std::log(tail));
  double x = -(t - (2.515517 + 0.802853 * t + 0.010328 * t * t) /
                       (1.0 + 1.432788 * t + 0.189269 * t * t +
                        0.001308 * t * t * t));
  for (int i = 0; i < 4; ++i) {
    const double pdf = norm_pdf(x);
    if (pdf == 0.0) break;
    const double r = (norm_cdf(x) - tail) / pdf;
    x -= r / (1.0 + 0.5 * x * r);
  }
  return upper ? -x : x;
}

double bvn_cdf(double h, double k, double rho) {
  if (std::isnan(h) || std::isnan(k) || std::isnan(rho)) {
    throw std::domain_error("bvn_cdf: NaN argument");
  }
  if (h == -kInf || k == -kInf) return 0.0;
  if (h == kInf) return norm_cdf(k);
  if (k == kInf) return norm_cdf(h);
  rho = std::clamp(rho, -1.0, 1.0);
  return std::clamp(bvn_upper(-h, -k, rho), 0.0, 1.0);
}

Eigen::Matrix3d Corr3::matrix() const {
  Eigen::Matrix3d m;
  m << 1.0, r12, r13,
       r12, 1.0, r23,
       r13, r23, 1.0;
  return m;
}

Corr3 Corr3::validated() const {
  for (const double r : {r12, r13, r23}) {
    if (!(r >= -1.0 && r <= 1.0)) {
      throw std::domain_error("correlation entry outside [-1, 1]: " +
                              std::to_string(r));
    }
  }
  const double det = 1.0 + 2.0 * r12 * r13 * r23 - r12 * r12 - r13 * r13 -
                     r23 * r23;
  if (det >= 0.0) return *this;
  if (det < -kPsdTol) {
    std::ostringstream msg;
    msg << "correlation matrix (r12=" << r12 << ", r13=" << r13
        << ", r23=" << r23 << ") is not positive semi-definite: 3x3 determinant "
        << det;
    throw NumericError(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(matrix());
  const Eigen::Vector3d clipped = eig.eigenvalues().cwiseMax(0.0);
  Eigen::Matrix3d psd =
      eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::Vector3d inv_sd = psd.diagonal().cwiseSqrt().cwiseInverse();
  psd = inv_sd.asDiagonal() * psd * inv_sd.asDiagonal();
  return Corr3{std::clamp(psd(0, 1), -1.0, 1.0), std::clamp(psd(0, 2), -1.0, 1.0),
               std::clamp(psd(1, 2), -1.0, 1.0)};
}

double tvn_cdf(double b1, double b2, double b3, const Corr3& corr) {
  const Eigen::Matrix3d r = corr.validated().matrix();
  const std::array<double, 3> b = {b1, b2, b3};
  for (const double v : b) {
    if (std::isnan(v)) throw std::domain_error("tvn_cdf: NaN bound");
    if (v == -kInf) return 0.0;
  }

  std::array<int, 3> idx{};
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    if (b[i] != kInf) idx[n++] = i;
  }
  if (n == 0) return 1.0;
  if (n == 1) return norm_cdf(b[idx[0]]);
  if (n == 2) return bvn_cdf(b[idx[0]], b[idx[1]], r(idx[0], idx[1]));

  // Collinear pair: fold into a bivariate probability.
  constexpr double kUnit = 1.0 - 1e-12;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (std::abs(r(i, j)) < kUnit) continue;
      const int m = 3 - i - j;
      if (r(i, j) > 0.0) return bvn_cdf(std::min(b[i], b[j]), b[m], r(i, m));
      // X_j = -X_i, so the event is -b_j <= X_i <= b_i.
      if (-b[j] >= b[i]) return 0.0;
      return std::max(0.0, bvn_cdf(b[i], b[m], r(i, m)) -
                               bvn_cdf(-b[j], b[m], r(i, m)));
    }
  }

  // Condition on the coordinate least correlated with the other two.
  int c = 0;
  double best = kInf;
  for (int i = 0; i < 3; ++i) {
    const double worst =
        std::max(std::abs(r(i, (i + 1) % 3)), std::abs(r(i, (i + 2) % 3)));
    if (worst < best) {
      best = worst;
      c = i;
    }
  }
  const int i = (c + 1) % 3;
  const int j = (c + 2) % 3;
  const double rci = r(c, i), rcj = r(c, j);
  const double si = std::sqrt((1.0 - rci) * (1.0 + rci));
  const double sj = std::sqrt((1.0 - rcj) * (1.0 + rcj));
  const double partial = std::clamp((r(i, j) - rci * rcj) / (si * sj), -1.0, 1.0);

  constexpr double kTail = 9.0;
  const double upper = std::min(b[c], kTail);
  if (upper <= -kTail) return 0.0;
  const double bi = b[i], bj = b[j];
  auto integrand = [&](double t) {
    return norm_pdf(t) * bvn_cdf((bi - rci * t) / si, (bj - rcj * t) / sj, partial);
  };
  // Split at zero so the bulk of the mass is resolved on both sides.
  double total = 0.0;
  if (upper > 0.0) {
    total = integrate(integrand, -kTail, 0.0, 5e-12) +
            integrate(integrand, 0.0, upper, 5e-12);
  } else {
    total = integrate(integrand, -kTail, upper, 1e-11);
  }
  return std::clamp(total, 0.0, 1.0);
}

double extreme_pair_density(double q, double rho, Extreme which) {
  if (!(std::abs(rho) < 1.0)) {
    throw std::domain_error("extreme_pair_density: |rho| must be < 1");
  }
  const double k = std::sqrt((1.0 - rho) / (1.0 + rho));
  const double sign = which == Extreme::max ? 1.0 : -1.0;
  return 2.0 * norm_pdf(q) * norm_cdf(sign * k * q);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol) {
  if (a == b) return 0.0;
  double err = 0.0;
  const double whole = gk15(f, a, b, err);
  return integrate_adaptive(f, a, b, abs_tol, whole, err, 0);
}

}  // namespace seamless
