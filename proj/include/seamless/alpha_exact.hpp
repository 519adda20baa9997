#pragma once

#include <vector>

namespace seamless {

/// Stage 1 OS information fraction s, dose:control randomization ratio r,
/// one-sided target level alpha.
struct TrialGeometry {
  double s = 0.2;
  double r = 1.0;
  double alpha = 0.025;

  void validate() const;
  /// Correlation of the combined-data statistics of the two doses,
  /// s / (1 + r) + 1 - s.
  double combined_corr() const;
  /// Correlation of the two Stage 1 dose-vs-control statistics, 1 / (1 + r).
  double stage1_corr() const;
};

/// Overall Type I error of the combined-data test run at level alphaE when
/// the winner is picked with probability w.
double overall_type1(double alphaE, const TrialGeometry& geom, double w);

/// Level alphaE at which overall_type1 equals geom.alpha. Returns geom.alpha
/// unchanged for w <= 0.5 (strong control).
double solve_alphaE(const TrialGeometry& geom, double w);

struct AlphaExactRow {
  double w = 0.0;
  double alphaE = 0.0;
};

std::vector<AlphaExactRow> alpha_exact_sweep(const TrialGeometry& geom,
                                             const std::vector<double>& w_grid);

}  // namespace seamless
