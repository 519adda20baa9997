#pragma once

#include <vector>

#include "seamless/alpha_exact.hpp"

namespace seamless {

/// One-sided stage-wise log-rank p-values of the selected dose.
struct PValuePair {
  double p1s = 0.5;
  double p2s = 0.5;
};

/// Stage 1 p-value adjusted for picking the winner with probability w;
/// identity for w <= 0.5.
double adjust_p1(double p1s, double w, double r);

/// Inverse of adjust_p1 in p1s for w in [0.5, 1].
double invert_p1(double p1a, double w, double r);

/// Weighted inverse normal combination of the two stage p-values, weights
/// sqrt(s) and sqrt(1 - s).
double combination_p(double p1a, double p2s, double s);

/// True when the combination p-value is strictly below alpha.
bool reject(const PValuePair& pair, double w, double r, double s, double alpha);

double sidak_adjust(double p1s);
double dunnett_adjust(double p1s, double r);

/// Inverses of the two conventional adjustments.
double invert_sidak(double p1a);
double invert_dunnett(double p1a, double r);

enum class ComboMethod { exact, sidak, dunnett };

inline constexpr int kDefaultGridN = 10000;

/// Log-rank scale level equivalent to the combination test: averages the
/// combined statistic along the rejection boundary p_c = alpha, weighting
/// each boundary point by the density of the selected Stage 1 statistic.
/// Sidak and Dunnett assume the winner is always picked (w = 1).
double alpha_c(double w, const TrialGeometry& geom, int grid_n = kDefaultGridN,
               ComboMethod method = ComboMethod::exact);

struct Fig4Row {
  double w = 0.0;
  double alphaE = 0.0;
  double alphaC = 0.0;
  double alphaC_dunnett = 0.0;
  double alphaC_sidak = 0.0;
};

std::vector<Fig4Row> fig4_sweep(const TrialGeometry& geom,
                                const std::vector<double>& w_grid,
                                int grid_n = kDefaultGridN);

/// 0.5, 0.55, ..., 1.0
std::vector<double> default_w_grid();

}  // namespace seamless
