#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "seamless/alpha_exact.hpp"
#include "seamless/selection.hpp"

namespace seamless {

/// Monte Carlo proportion with its binomial standard error.
struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
};

/// Replicate count, seed and worker threads (0 = hardware concurrency).
/// Results depend only on (n, seed).
struct McConfig {
  std::int64_t n = 1'000'000;
  std::uint64_t seed = 20240101;
  unsigned threads = 0;
};

/// difference: the standardized trivariate differences are drawn directly
/// with the correlation used by winner_prob.
/// arm_level: each dose arm draws its own (A, X, S) triple and the Stage 1
/// log-rank statistics share a control component,
///   Y1j = sqrt(1/(1+r)) Z0 + sqrt(r/(1+r)) Aj,
/// with corr(A, X) and corr(A, S) scaled so that within-arm
/// corr(Y1j, Xj) = rho_xy and corr(Y1j, Sj) = rho_ys.
enum class WMode { difference, arm_level };

McEstimate simulate_w(const DesignParams& params, const SelectionRule& rule,
                      const CorrelationSet& corr, WMode mode, const McConfig& mc,
                      double r = 1.0);

/// Selection modelled as a coin flip: the larger of the two Stage 1
/// statistics is carried forward with probability w.
McEstimate simulate_type1_abstract(double w, const TrialGeometry& geom,
                                   double alphaE, const McConfig& mc);

enum class Type1Test { exact_parametric, combination, dunnett, sidak };

/// End-to-end rejection rate under the global null: the dose is selected on
/// the simulated ORR and AE differences (arm-level model above) and the
/// chosen test is applied with w taken from winner_prob.
McEstimate simulate_type1_full(const DesignParams& params, const SelectionRule& rule,
                               const CorrelationSet& corr, const TrialGeometry& geom,
                               Type1Test test, const McConfig& mc);

/// Correlation of the per-arm latent triple (A, X, S) in the arm-level
/// model. Throws NumericError naming the first violating principal minor.
Eigen::Matrix3d arm_latent_corr(const CorrelationSet& corr, double r);

}  // namespace seamless
