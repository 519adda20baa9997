#include "seamless/selection.hpp"

#include <stdexcept>
#include <string>

namespace seamless {

void DesignParams::validate() const {
  if (M < 1) throw std::invalid_argument("M must be >= 1");
  if (!(Rx > 0.0 && Rx < 1.0)) throw std::invalid_argument("Rx must lie in (0, 1)");
  if (!(Rs > 0.0 && Rs < 1.0)) throw std::invalid_argument("Rs must lie in (0, 1)");
}

double DesignParams::sigma_x() const { return std::sqrt(2.0 * Rx * (1.0 - Rx) / M); }

double DesignParams::sigma_s() const { return std::sqrt(2.0 * Rs * (1.0 - Rs) / M); }

void SelectionRule::validate() const {
  if (scenario != 1 && scenario != 2) {
    throw std::invalid_argument("scenario must be 1 or 2, got " +
                                std::to_string(scenario));
  }
  if (!(Cx >= 0.0 && Cx < 1.0)) throw std::invalid_argument("Cx must lie in [0, 1)");
  if (!(Cs >= 0.0 && Cs < 1.0)) throw std::invalid_argument("Cs must lie in [0, 1)");
}

Corr3 CorrelationSet::difference_corr() const {
  return Corr3{rho_xy, -rho_ys, -rho_xs};
}

SelectionBounds selection_bounds(const DesignParams& params,
                                 const SelectionRule& rule) {
  const double bx = rule.Cx / params.sigma_x();
  const double bs = rule.Cs / params.sigma_s();
  if (rule.scenario == 1) return {bx, -bs};
  return {-bx, bs};
}

WinnerProb winner_prob(const DesignParams& params, const SelectionRule& rule,
                       const CorrelationSet& corr) {
  params.validate();
  rule.validate();
  const Corr3 diff = corr.difference_corr().validated();
  const SelectionBounds b = selection_bounds(params, rule);

  // Dose 1 wins on OS iff Y12 - Y11 < 0; flipping that coordinate negates
  // its two correlations.
  const double w1 = tvn_cdf(0.0, b.x, b.s, diff);
  const Corr3 flipped{-diff.r12, -diff.r13, diff.r23};
  const double w2 = 0.5 - tvn_cdf(0.0, b.x, b.s, flipped);
  return {w1 + w2, w1, w2};
}

std::vector<Fig3Row> fig3_sweep(const DesignParams& params, double Cs,
                                double rho_xy, double rho_xs,
                                const std::vector<double>& rho_ys_list,
                                const std::vector<double>& Cx_grid) {
  if (rho_ys_list.empty() || Cx_grid.empty()) {
    throw std::invalid_argument("fig3_sweep: grids must be nonempty");
  }
  std::vector<Fig3Row> rows;
  rows.reserve(2 * rho_ys_list.size() * Cx_grid.size());
  for (const int scenario : {1, 2}) {
    for (const double rho_ys : rho_ys_list) {
      for (const double cx : Cx_grid) {
        const SelectionRule rule{scenario, cx, Cs};
        const CorrelationSet corr{rho_xy, rho_xs, rho_ys};
        rows.push_back({scenario, rho_ys, cx, winner_prob(params, rule, corr)});
      }
    }
  }
  return rows;
}

std::vector<double> default_fig3_cx_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.02 * i);
  return grid;
}

std::vector<double> default_fig3_rho_ys() { return {-0.1, -0.3, -0.5}; }

}  // namespace seamless
