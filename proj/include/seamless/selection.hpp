#pragma once

#include <vector>

#include "seamless/numerics.hpp"

namespace seamless {

/// Stage 1 dose comparison: M patients per dose arm, average ORR and
/// Grade 3-4 AE rate across the two doses.
struct DesignParams {
  int M = 40;
  double Rx = 0.2;
  double Rs = 0.2;

  void validate() const;
  /// Standard deviation of the ORR difference X1 - X2 under the null.
  double sigma_x() const;
  /// Standard deviation of the AE-rate difference S1 - S2 under the null.
  double sigma_s() const;
};

/// Scenario 1 keeps the higher dose unless the lower one is within Cx on ORR
/// and at least Cs better on AE; scenario 2 keeps the lower dose unless the
/// higher one is better by Cx on ORR and no worse than Cs on AE.
struct SelectionRule {
  int scenario = 1;
  double Cx = 0.0;
  double Cs = 0.05;

  void validate() const;
};

/// Individual-level correlations between ORR (x), OS (y) and AE (s).
struct CorrelationSet {
  double rho_xy = 0.3;
  double rho_xs = 0.5;
  double rho_ys = -0.3;

  /// Correlation of the standardized differences
  /// (Y12 - Y11, X2 - X1, S1 - S2): (rho_xy, -rho_ys, -rho_xs).
  Corr3 difference_corr() const;
};

/// Standardized bounds (on X2 - X1 and S1 - S2) of the region where dose 1
/// is selected.
struct SelectionBounds {
  double x = 0.0;
  double s = 0.0;
};

SelectionBounds selection_bounds(const DesignParams& params,
                                 const SelectionRule& rule);

struct WinnerProb {
  double w = 0.0;
  double w1 = 0.0;  ///< dose 1 selected and better on OS
  double w2 = 0.0;  ///< dose 2 selected and better on OS
};

/// Probability of picking the winner under the global null.
WinnerProb winner_prob(const DesignParams& params, const SelectionRule& rule,
                       const CorrelationSet& corr);

struct Fig3Row {
  int scenario = 1;
  double rho_ys = 0.0;
  double Cx = 0.0;
  WinnerProb prob;
};

/// Evaluates winner_prob on (scenario in {1, 2}) x rho_ys_list x Cx_grid,
/// ordered scenario-major, then rho_ys, then Cx.
std::vector<Fig3Row> fig3_sweep(const DesignParams& params, double Cs,
                                double rho_xy, double rho_xs,
                                const std::vector<double>& rho_ys_list,
                                const std::vector<double>& Cx_grid);

std::vector<double> default_fig3_cx_grid();
std::vector<double> default_fig3_rho_ys();

}  // namespace seamless
