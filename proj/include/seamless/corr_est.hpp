#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace seamless {

/// Published treatment effect estimates of one subgroup on two endpoints
/// (e.g. -log HR of OS and ORR difference).
struct SubgroupRow {
  std::string variable;
  std::string subgroup;
  double effect1 = 0.0;
  double effect2 = 0.0;
};

using SubgroupTable = std::vector<SubgroupRow>;

/// Correlation of two treatment effects from paired within-variable subgroup
/// differences. Every baseline variable must have exactly two subgroups.
double modified_pearson(const SubgroupTable& table);

enum class CollapseGroup { A, B };

/// (variable, subgroup) -> merged group.
using CollapsePlan = std::map<std::pair<std::string, std::string>, CollapseGroup>;

/// Merges subgroups into two per variable, averaging effects with equal
/// weights. A merged subgroup is named by joining its members with '+'.
SubgroupTable collapse_subgroups(const SubgroupTable& table, const CollapsePlan& plan);

struct SurvivalObs {
  double time = 0.0;
  bool event = false;
};

/// Standardized two-sample log-rank statistic (E_A - O_A) / sqrt(V);
/// positive when group A has fewer deaths than expected.
double logrank_z(std::span<const SurvivalObs> group_a,
                 std::span<const SurvivalObs> group_b);

enum class Arm { treatment, control };

struct PatientRecord {
  Arm arm = Arm::control;
  bool response = false;
  bool ae = false;
  double time = 0.0;
  bool event = false;
  /// Joined values of the stratification columns; empty when unstratified.
  std::string stratum;
};

enum class TestStat { orr_diff_z, ae_diff_z, logrank_z };

/// Treatment-vs-control standardized statistic on a set of patients. Binary
/// endpoints use the pooled two-proportion z statistic.
double test_statistic(std::span<const PatientRecord> data, TestStat stat);

struct BootstrapConfig {
  int B = 1000;
  std::uint64_t seed = 20240101;
  unsigned threads = 1;
};

struct BootstrapResult {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_resamples = 0;
  int n_degenerate = 0;
};

/// Pearson correlation of two test statistics across B resamples drawn with
/// replacement within each (arm, stratum) cell. The interval is the 2.5% and
/// 97.5% percentiles of the correlation over B resamples of the statistic
/// pairs.
BootstrapResult bootstrap_corr(std::span<const PatientRecord> data, TestStat stat1,
                               TestStat stat2, const BootstrapConfig& config);

double pearson(std::span<const double> x, std::span<const double> y);

// Delimited text input (',' ';' or tab, detected from the header row).
SubgroupTable read_subgroup_table(std::istream& in);
CollapsePlan read_collapse_plan(std::istream& in);
std::vector<PatientRecord> read_patient_records(
    std::istream& in, const std::vector<std::string>& strata_columns = {});

}  // namespace seamless
