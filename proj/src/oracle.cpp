#include "seamless/oracle.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "seamless/combo.hpp"
#include "seamless/numerics.hpp"
#include "seamless/rng.hpp"

namespace seamless {

namespace {

constexpr std::uint32_t kStreamW = 1;
constexpr std::uint32_t kStreamAbstract = 2;
constexpr std::uint32_t kStreamFull = 3;

// Counts replicates in [0, n) for which hit(index) is true. Each worker owns
// a contiguous index range and an integer counter, so the total does not
// depend on the number of workers.
template <class Hit>
std::int64_t count_hits(std::int64_t n, unsigned threads, const Hit& hit) {
  unsigned workers = threads != 0 ? threads : std::thread::hardware_concurrency();
  workers = static_cast<unsigned>(
      std::clamp<std::int64_t>(workers == 0 ? 1 : workers, 1, n));
  auto run = [&](std::int64_t begin, std::int64_t end) {
    std::int64_t count = 0;
    for (std::int64_t i = begin; i < end; ++i) count += hit(static_cast<std::uint64_t>(i)) ? 1 : 0;
    return count;
  };
  if (workers == 1) return run(0, n);
  std::vector<std::int64_t> counts(workers, 0);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        counts[t] = run(n * t / workers, n * (t + 1) / workers);
      });
    }
  }
  std::int64_t total = 0;
  for (const auto c : counts) total += c;
  return total;
}

McEstimate proportion(std::int64_t hits, const McConfig& mc) {
  const double v = static_cast<double>(hits) / static_cast<double>(mc.n);
  return {v, std::sqrt(v * (1.0 - v) / static_cast<double>(mc.n)), mc.n, mc.seed};
}

void require_replicates(const McConfig& mc, std::int64_t minimum, const char* what) {
  if (mc.n < minimum) {
    throw std::invalid_argument(std::string(what) + ": n must be >= " +
                                std::to_string(minimum));
  }
}

// Lower-triangular L with L L^T = c; falls back to a clipped eigen square
// root when c is singular.
Eigen::Matrix3d correlation_factor(const Eigen::Matrix3d& c) {
  Eigen::LLT<Eigen::Matrix3d> llt(c);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(c);
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Eigen::Vector3d draw3(CounterRng& rng, const Eigen::Matrix3d& factor) {
  const Eigen::Vector3d z(rng.normal(), rng.normal(), rng.normal());
  return factor * z;
}

double clamp_p(double p) {
  constexpr double kLo = 1e-300;
  constexpr double kHi = 1.0 - 0x1.0p-53;
  return std::clamp(p, kLo, kHi);
}

}  // namespace

Eigen::Matrix3d arm_latent_corr(const CorrelationSet& corr, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("r must be > 0");
  const double scale = std::sqrt((1.0 + r) / r);
  const double a_x = corr.rho_xy * scale;
  const double a_s = corr.rho_ys * scale;
  const double xs = corr.rho_xs;
  Eigen::Matrix3d m;
  m << 1.0, a_x, a_s,
       a_x, 1.0, xs,
       a_s, xs, 1.0;

  auto fail = [&](const std::string& minor, double value) {
    std::ostringstream msg;
    msg << "arm-level latent correlation (A, X, S) is not positive "
           "semi-definite: minor "
        << minor << " = " << value << " (rho_xy=" << corr.rho_xy
        << ", rho_xs=" << corr.rho_xs << ", rho_ys=" << corr.rho_ys << ", r=" << r
        << ")";
    throw NumericError(msg.str());
  };
  constexpr double kTol = -1e-12;
  if (const double v = 1.0 - a_x * a_x; v < kTol) fail("{A,X}", v);
  if (const double v = 1.0 - a_s * a_s; v < kTol) fail("{A,S}", v);
  if (const double v = 1.0 - xs * xs; v < kTol) fail("{X,S}", v);
  if (const double v = m.determinant(); v < kTol) fail("{A,X,S}", v);
  return m;
}

McEstimate simulate_w(const DesignParams& params, const SelectionRule& rule,
                      const CorrelationSet& corr, WMode mode, const McConfig& mc,
                      double r) {
  params.validate();
  rule.validate();
  require_replicates(mc, 10'000, "simulate_w");
  const SelectionBounds bounds = selection_bounds(params, rule);

  if (mode == WMode::difference) {
    const Eigen::Matrix3d factor =
        correlation_factor(corr.difference_corr().validated().matrix());
    const auto hits = count_hits(mc.n, mc.threads, [&](std::uint64_t i) {
      CounterRng rng(mc.seed, i, kStreamW);
      const Eigen::Vector3d u = draw3(rng, factor);  // (Y12-Y11, X2-X1, S1-S2)
      const bool dose1_selected = u[1] < bounds.x && u[2] < bounds.s;
      const bool dose1_better = u[0] < 0.0;
      return dose1_selected == dose1_better;
    });
    return proportion(hits, mc);
  }

  const Eigen::Matrix3d factor = correlation_factor(arm_latent_corr(corr, r));
  const auto hits = count_hits(mc.n, mc.threads, [&](std::uint64_t i) {
    CounterRng rng(mc.seed, i, kStreamW);
    const Eigen::Vector3d arm1 = draw3(rng, factor);  // (A1, X1, S1)
    const Eigen::Vector3d arm2 = draw3(rng, factor);
    // The shared control term cancels in Y12 - Y11.
    const double x_diff = (arm2[1] - arm1[1]) / std::numbers::sqrt2;
    const double s_diff = (arm1[2] - arm2[2]) / std::numbers::sqrt2;
    const bool dose1_selected = x_diff < bounds.x && s_diff < bounds.s;
    const bool dose1_better = arm1[0] > arm2[0];
    return dose1_selected == dose1_better;
  });
  return proportion(hits, mc);
}

McEstimate simulate_type1_abstract(double w, const TrialGeometry& geom,
                                   double alphaE, const McConfig& mc) {
  geom.validate();
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("w must lie in [0, 1]");
  if (!(alphaE > 0.0 && alphaE < 0.5)) {
    throw std::invalid_argument("alphaE must lie in (0, 0.5)");
  }
  require_replicates(mc, 100'000, "simulate_type1_abstract");
  const double shared = std::sqrt(geom.stage1_corr());
  const double own = std::sqrt(1.0 - geom.stage1_corr());
  const double sqrt_s = std::sqrt(geom.s);
  const double sqrt_1s = std::sqrt(1.0 - geom.s);
  const double critical = -norm_quantile(alphaE);

  const auto hits = count_hits(mc.n, mc.threads, [&](std::uint64_t i) {
    CounterRng rng(mc.seed, i, kStreamAbstract);
    const double control = rng.normal();
    const double y11 = shared * control + own * rng.normal();
    const double y12 = shared * control + own * rng.normal();
    const double y2 = rng.normal();
    const bool pick_max = rng.uniform() < w;
    const double y_sel = pick_max ? std::max(y11, y12) : std::min(y11, y12);
    return sqrt_s * y_sel + sqrt_1s * y2 > critical;
  });
  return proportion(hits, mc);
}

McEstimate simulate_type1_full(const DesignParams& params, const SelectionRule& rule,
                               const CorrelationSet& corr, const TrialGeometry& geom,
                               Type1Test test, const McConfig& mc) {
  geom.validate();
  require_replicates(mc, 100'000, "simulate_type1_full");
  const Eigen::Matrix3d factor = correlation_factor(arm_latent_corr(corr, geom.r));
  const SelectionBounds bounds = selection_bounds(params, rule);
  const double w = winner_prob(params, rule, corr).w;

  const double shared = std::sqrt(geom.stage1_corr());
  const double own = std::sqrt(1.0 - geom.stage1_corr());
  const double sqrt_s = std::sqrt(geom.s);
  const double sqrt_1s = std::sqrt(1.0 - geom.s);
  const double critical_e = -norm_quantile(solve_alphaE(geom, w));

  const auto hits = count_hits(mc.n, mc.threads, [&](std::uint64_t i) {
    CounterRng rng(mc.seed, i, kStreamFull);
    const double control = rng.normal();
    const Eigen::Vector3d arm1 = draw3(rng, factor);  // (A1, X1, S1)
    const Eigen::Vector3d arm2 = draw3(rng, factor);
    const double y2 = rng.normal();
    const double x_diff = (arm2[1] - arm1[1]) / std::numbers::sqrt2;
    const double s_diff = (arm1[2] - arm2[2]) / std::numbers::sqrt2;
    const bool dose1_selected = x_diff < bounds.x && s_diff < bounds.s;
    const double y_sel =
        shared * control + own * (dose1_selected ? arm1[0] : arm2[0]);

    if (test == Type1Test::exact_parametric) {
      return sqrt_s * y_sel + sqrt_1s * y2 > critical_e;
    }
    const PValuePair pair{clamp_p(norm_cdf(-y_sel)), clamp_p(norm_cdf(-y2))};
    switch (test) {
      case Type1Test::combination:
        return reject(pair, w, geom.r, geom.s, geom.alpha);
      case Type1Test::dunnett:
        return combination_p(dunnett_adjust(pair.p1s, geom.r), pair.p2s, geom.s) <
               geom.alpha;
      case Type1Test::sidak:
        return combination_p(sidak_adjust(pair.p1s), pair.p2s, geom.s) < geom.alpha;
      default:
        return false;
    }
  });
  return proportion(hits, mc);
}

}  // namespace seamless
