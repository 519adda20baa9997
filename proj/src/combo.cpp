#include "seamless/combo.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "seamless/numerics.hpp"

namespace seamless {

namespace {

void check_open_unit(double p, const char* name) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in (0, 1), got " +
                                std::to_string(p));
  }
}

void check_ratio(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("r must be > 0");
}

// Keeps adjusted p-values inside (0, 1) when rounding pushes them to 1.
double inside_unit(double p) {
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0 - 0x1.0p-53);
}

// P(Y_sel > z_{1-p}) when Y_sel is the max of the two correlated Stage 1
// statistics with probability w and the min otherwise. Written through the
// lower orthant at Phi^{-1}(p) so small p keep their relative precision:
// 1 - Phi2(q, q) = 2p - Phi2(-q, -q).
double selected_tail(double p, double w, double rho) {
  const double z = norm_quantile(p);
  const double both = bvn_cdf(z, z, rho);
  return inside_unit((2.0 * p - both) * w + both * (1.0 - w));
}

// Root of tail(p) = p1a on the Sidak-inverse/identity bracket.
template <class Tail>
double invert_between(double p1a, Tail&& tail) {
  const double lo = invert_sidak(p1a);
  const double hi = p1a;
  const double slack = 1e-15 * p1a;
  const double f_hi = tail(hi) - p1a;
  if (f_hi <= slack) {
    if (f_hi < -slack) {
      throw NumericError("p-value inversion not bracketed at p1a = " +
                         std::to_string(p1a));
    }
    return hi;
  }
  const double f_lo = tail(lo) - p1a;
  if (f_lo >= -slack) {
    if (f_lo > slack) {
      throw NumericError("p-value inversion not bracketed at p1a = " +
                         std::to_string(p1a));
    }
    return lo;
  }
  return find_root([&](double p) { return tail(p) - p1a; }, lo, hi, 1e-14 * p1a);
}

}  // namespace

double adjust_p1(double p1s, double w, double r) {
  check_open_unit(p1s, "p1s");
  check_ratio(r);
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("w must lie in [0, 1]");
  if (w <= 0.5) return p1s;
  return selected_tail(p1s, w, 1.0 / (1.0 + r));
}

double invert_p1(double p1a, double w, double r) {
  check_open_unit(p1a, "p1a");
  check_ratio(r);
  if (!(w >= 0.5 && w <= 1.0)) {
    throw std::invalid_argument("invert_p1: w must lie in [0.5, 1]");
  }
  if (w == 0.5) return p1a;
  const double rho = 1.0 / (1.0 + r);
  return invert_between(p1a, [&](double p) { return selected_tail(p, w, rho); });
}

double combination_p(double p1a, double p2s, double s) {
  check_open_unit(p1a, "p1a");
  check_open_unit(p2s, "p2s");
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("s must lie in [0, 1]");
  // 1 - Phi(sqrt(s) z1 + sqrt(1-s) z2) with z = Phi^{-1}(1 - p) = -Phi^{-1}(p).
  return norm_cdf(std::sqrt(s) * norm_quantile(p1a) +
                  std::sqrt(1.0 - s) * norm_quantile(p2s));
}

bool reject(const PValuePair& pair, double w, double r, double s, double alpha) {
  return combination_p(adjust_p1(pair.p1s, w, r), pair.p2s, s) < alpha;
}

double sidak_adjust(double p1s) {
  check_open_unit(p1s, "p1s");
  return inside_unit(p1s * (2.0 - p1s));
}

double dunnett_adjust(double p1s, double r) {
  check_open_unit(p1s, "p1s");
  check_ratio(r);
  return selected_tail(p1s, 1.0, 1.0 / (1.0 + r));
}

double invert_sidak(double p1a) {
  check_open_unit(p1a, "p1a");
  return p1a / (1.0 + std::sqrt(1.0 - p1a));
}

double invert_dunnett(double p1a, double r) {
  check_open_unit(p1a, "p1a");
  check_ratio(r);
  const double rho = 1.0 / (1.0 + r);
  return invert_between(p1a, [&](double p) { return selected_tail(p, 1.0, rho); });
}

double alpha_c(double w, const TrialGeometry& geom, int grid_n, ComboMethod method) {
  geom.validate();
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("w must lie in [0, 1]");
  if (grid_n < 1000) throw std::invalid_argument("grid_n must be >= 1000");

  constexpr double kMinP = 1e-6;
  const double rho = geom.stage1_corr();
  const double sqrt_s = std::sqrt(geom.s);
  const double sqrt_1s = std::sqrt(1.0 - geom.s);
  const double q_alpha = -norm_quantile(geom.alpha);
  const double weight_w = method == ComboMethod::exact ? w : 1.0;

  CompensatedSum weighted_z;
  CompensatedSum total_density;
  for (int k = 1; k <= grid_n; ++k) {
    const double p2 = (k - 0.5) / grid_n;
    const double z2 = -norm_quantile(p2);
    // Boundary of p_c = alpha.
    const double p1a = norm_cdf(-(q_alpha - sqrt_1s * z2) / sqrt_s);
    if (p1a <= kMinP || p2 <= kMinP || p1a >= 1.0) continue;

    double p1s = p1a;
    try {
      switch (method) {
        case ComboMethod::exact:
          p1s = w <= 0.5 ? p1a : invert_p1(p1a, w, geom.r);
          break;
        case ComboMethod::sidak:
          p1s = invert_sidak(p1a);
          break;
        case ComboMethod::dunnett:
          p1s = invert_dunnett(p1a, geom.r);
          break;
      }
    } catch (const NumericError& e) {
      std::ostringstream msg;
      msg << "alpha_c: inversion failed at grid point k=" << k << " (p2=" << p2
          << ", p1a=" << p1a << "): " << e.what();
      throw NumericError(msg.str());
    }

    const double q1 = -norm_quantile(p1s);
    const double density =
        extreme_pair_density(q1, rho, Extreme::max) * weight_w +
        extreme_pair_density(q1, rho, Extreme::min) * (1.0 - weight_w);
    if (density == 0.0) continue;
    weighted_z.add((sqrt_s * q1 + sqrt_1s * z2) * density);
    total_density.add(density);
  }
  if (total_density.value() <= 0.0) {
    throw NumericError("alpha_c: no usable boundary points");
  }
  return norm_cdf(-weighted_z.value() / total_density.value());
}

std::vector<Fig4Row> fig4_sweep(const TrialGeometry& geom,
                                const std::vector<double>& w_grid, int grid_n) {
  for (const double w : w_grid) {
    if (!(w >= 0.5 && w <= 1.0)) {
      throw std::invalid_argument("fig4_sweep: w grid must lie in [0.5, 1]");
    }
  }
  const double dunnett = alpha_c(1.0, geom, grid_n, ComboMethod::dunnett);
  const double sidak = alpha_c(1.0, geom, grid_n, ComboMethod::sidak);
  std::vector<Fig4Row> rows;
  rows.reserve(w_grid.size());
  for (const double w : w_grid) {
    rows.push_back({w, solve_alphaE(geom, w), alpha_c(w, geom, grid_n), dunnett,
                    sidak});
  }
  return rows;
}

std::vector<double> default_w_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back((50.0 + 5.0 * i) / 100.0);
  return grid;
}

}  // namespace seamless
