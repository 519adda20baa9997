#include "seamless/alpha_exact.hpp"

#include <stdexcept>

#include "seamless/numerics.hpp"

namespace seamless {

namespace {

void check_probability(double w) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throw std::invalid_argument("w must lie in [0, 1], got " + std::to_string(w));
  }
}

}  // namespace

void TrialGeometry::validate() const {
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("s must lie in (0, 1)");
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("r must be > 0");
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw std::invalid_argument("alpha must lie in (0, 0.5)");
  }
}

double TrialGeometry::combined_corr() const { return s / (1.0 + r) + 1.0 - s; }

double TrialGeometry::stage1_corr() const { return 1.0 / (1.0 + r); }

double overall_type1(double alphaE, const TrialGeometry& geom, double w) {
  if (!(alphaE > 0.0 && alphaE < 0.5)) {
    throw std::invalid_argument("alphaE must lie in (0, 0.5)");
  }
  check_probability(w);
  // 1 - Phi2(q, q) is evaluated as 2 alphaE - Phi2(-q, -q) to avoid
  // cancellation; q = Phi^{-1}(1 - alphaE).
  const double z = norm_quantile(alphaE);
  const double both_below = bvn_cdf(z, z, geom.combined_corr());
  const double max_exceeds = 2.0 * alphaE - both_below;
  return max_exceeds * w + both_below * (1.0 - w);
}

double solve_alphaE(const TrialGeometry& geom, double w) {
  geom.validate();
  check_probability(w);
  if (w <= 0.5) return geom.alpha;
  auto excess = [&](double a) { return overall_type1(a, geom, w) - geom.alpha; };
  return find_root(excess, 1e-9, geom.alpha, 1e-15);
}

std::vector<AlphaExactRow> alpha_exact_sweep(const TrialGeometry& geom,
                                             const std::vector<double>& w_grid) {
  std::vector<AlphaExactRow> rows;
  rows.reserve(w_grid.size());
  for (const double w : w_grid) rows.push_back({w, solve_alphaE(geom, w)});
  return rows;
}

}  // namespace seamless
