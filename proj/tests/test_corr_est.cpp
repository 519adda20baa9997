#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "seamless/corr_est.hpp"
#include "seamless/errors.hpp"

using namespace seamless;

namespace {

SubgroupTable affine_table(double slope, double shift) {
  const double e1[] = {0.1, 0.35, -0.2, 0.05, 0.4, 0.12, -0.3, 0.22};
  const char* vars[] = {"age", "age", "sex", "sex", "region", "region", "ecog", "ecog"};
  const char* subs[] = {"<65", ">=65", "M", "F", "EU", "US", "0", "1"};
  SubgroupTable t;
  for (int i = 0; i < 8; ++i) t.push_back({vars[i], subs[i], e1[i], slope * e1[i] + shift});
  return t;
}

std::vector<PatientRecord> coin_cohort(int per_arm, std::uint64_t seed, double latent_rho,
                                       bool ae_equals_response) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  std::exponential_distribution<double> expo(1.0);
  std::vector<PatientRecord> out;
  const double sd = std::sqrt(1.0 - latent_rho * latent_rho);
  for (Arm arm : {Arm::treatment, Arm::control}) {
    for (int i = 0; i < per_arm; ++i) {
      const double a = z(gen);
      const double b = latent_rho * a + sd * z(gen);
      PatientRecord rec;
      rec.arm = arm;
      rec.response = a > 0.3;
      rec.ae = ae_equals_response ? rec.response : b > 0.5;
      rec.time = expo(gen);
      rec.event = expo(gen) < 2.0;
      rec.stratum = i % 2 ? "x" : "y";
      out.push_back(rec);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("modified pearson on perfect relations") {
  CHECK(std::abs(modified_pearson(affine_table(2.0, 5.0)) - 1.0) <= 1e-12);
  CHECK(std::abs(modified_pearson(affine_table(-1.0, 0.0)) + 1.0) <= 1e-12);
}

TEST_CASE("modified pearson formula and invariances") {
  const SubgroupTable t{{"a", "1", 0.3, 0.1}, {"a", "2", 0.1, 0.4},
                        {"b", "1", -0.2, 0.2}, {"b", "2", 0.25, -0.05},
                        {"c", "1", 0.05, 0.3}, {"c", "2", 0.0, 0.1}};
  // differences: (0.2, -0.3), (-0.45, 0.25), (0.05, 0.2)
  const double num = 0.2 * -0.3 + -0.45 * 0.25 + 0.05 * 0.2;
  const double den = std::sqrt((0.04 + 0.2025 + 0.0025) * (0.09 + 0.0625 + 0.04));
  const double rho = modified_pearson(t);
  CHECK(rho == doctest::Approx(num / den).epsilon(1e-14));
  CHECK(rho >= -1.0);
  CHECK(rho <= 1.0);

  SubgroupTable shifted = t, scaled = t, flipped = t;
  for (auto& row : shifted) row.effect1 += 3.0;
  for (auto& row : scaled) row.effect2 *= 7.5;
  for (auto& row : flipped) row.effect2 = -row.effect2;
  CHECK(modified_pearson(shifted) == doctest::Approx(rho).epsilon(1e-12));
  CHECK(modified_pearson(scaled) == doctest::Approx(rho).epsilon(1e-12));
  CHECK(modified_pearson(flipped) == doctest::Approx(-rho).epsilon(1e-12));
}

TEST_CASE("modified pearson data errors") {
  SubgroupTable three = affine_table(1.0, 0.0);
  three.push_back({"age", "80+", 0.2, 0.1});
  CHECK_THROWS_AS(modified_pearson(three), DataError);
  const SubgroupTable flat{{"a", "1", 0.1, 0.2}, {"a", "2", 0.1, 0.3}};
  CHECK_THROWS_AS(modified_pearson(flat), DataError);
  CHECK_THROWS_AS(modified_pearson({}), DataError);
}

TEST_CASE("collapse subgroups") {
  const auto t = affine_table(2.0, 1.0);
  CollapsePlan identity;
  for (std::size_t i = 0; i < t.size(); ++i) {
    identity[{t[i].variable, t[i].subgroup}] = i % 2 ? CollapseGroup::B : CollapseGroup::A;
  }
  const auto same = collapse_subgroups(t, identity);
  REQUIRE(same.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(same[i].variable == t[i].variable);
    CHECK(same[i].subgroup == t[i].subgroup);
    CHECK(same[i].effect1 == t[i].effect1);
    CHECK(same[i].effect2 == t[i].effect2);
  }

  const SubgroupTable three{{"v", "1", 1.0, 0.0}, {"v", "2", 2.0, 0.0}, {"v", "3", 3.0, 1.0}};
  const CollapsePlan plan{{{"v", "1"}, CollapseGroup::A},
                          {{"v", "2"}, CollapseGroup::B},
                          {{"v", "3"}, CollapseGroup::B}};
  const auto merged = collapse_subgroups(three, plan);
  REQUIRE(merged.size() == 2);
  CHECK(merged[0].effect1 == 1.0);
  CHECK(merged[1].effect1 == 2.5);
  CHECK(merged[1].effect2 == 0.5);
  CHECK(merged[1].subgroup == "2+3");

  CollapsePlan missing = plan;
  missing.erase({"v", "3"});
  CHECK_THROWS_AS(collapse_subgroups(three, missing), DataError);
  CollapsePlan one_sided = plan;
  one_sided[{"v", "1"}] = CollapseGroup::B;
  CHECK_THROWS_AS(collapse_subgroups(three, one_sided), DataError);
}

TEST_CASE("collapse then estimate matches a hand reduction") {
  const SubgroupTable raw{
      {"age", "young", 0.1, 0.2},  {"age", "mid", 0.3, 0.1},   {"age", "old", 0.5, 0.6},
      {"sex", "M", 0.2, 0.15},     {"sex", "F", -0.1, 0.05},
      {"line", "1", 0.4, 0.3},     {"line", "2", 0.0, -0.1},   {"line", "3+", 0.2, 0.2}};
  const CollapsePlan plan{{{"age", "young"}, CollapseGroup::A}, {{"age", "mid"}, CollapseGroup::A},
                          {{"age", "old"}, CollapseGroup::B},   {{"sex", "M"}, CollapseGroup::A},
                          {{"sex", "F"}, CollapseGroup::B},     {{"line", "1"}, CollapseGroup::A},
                          {{"line", "2"}, CollapseGroup::B},    {{"line", "3+"}, CollapseGroup::B}};
  const SubgroupTable hand{{"age", "A", 0.2, 0.15}, {"age", "B", 0.5, 0.6},
                           {"sex", "A", 0.2, 0.15}, {"sex", "B", -0.1, 0.05},
                           {"line", "A", 0.4, 0.3}, {"line", "B", 0.1, 0.05}};
  CHECK(modified_pearson(collapse_subgroups(raw, plan)) ==
        doctest::Approx(modified_pearson(hand)).epsilon(1e-13));
}

TEST_CASE("log-rank worked example") {
  const std::vector<SurvivalObs> a{{1.0, true}, {3.0, true}};
  const std::vector<SurvivalObs> b{{2.0, true}, {4.0, true}};
  // O_A = 2, E_A = 1/2 + 1/3 + 1/2, V = 1/4 + 2/9 + 1/4
  const double expect = (4.0 / 3.0 - 2.0) / std::sqrt(13.0 / 18.0);
  CHECK(logrank_z(a, b) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(logrank_z(b, a) == doctest::Approx(-expect).epsilon(1e-14));
}

TEST_CASE("log-rank ties and censoring") {
  // one tied death time: n = 4, d = 2, n_A = 2 -> E_A = 1, V = 2*2*2*2/(16*3)
  const std::vector<SurvivalObs> a{{1.0, true}, {5.0, false}};
  const std::vector<SurvivalObs> b{{1.0, true}, {5.0, false}};
  CHECK(std::abs(logrank_z(a, b)) <= 1e-12);
  const std::vector<SurvivalObs> c{{1.0, true}, {1.0, true}};
  const std::vector<SurvivalObs> d{{1.0, false}, {1.0, false}};
  // all at risk at t = 1: n = 4, d = 2, n_A = 2 -> O_A - E_A = 1, V = 1/3
  CHECK(logrank_z(c, d) == doctest::Approx(-1.0 / std::sqrt(1.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("log-rank symmetry and monotone invariance") {
  std::mt19937_64 gen(5);
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution coin(0.7);
  std::vector<SurvivalObs> a(60), b(55);
  for (auto& o : a) o = {e(gen), coin(gen)};
  for (auto& o : b) o = {1.3 * e(gen), coin(gen)};
  CHECK(std::abs(logrank_z(a, a)) <= 1e-12);
  const double z = logrank_z(a, b);
  CHECK(logrank_z(b, a) == doctest::Approx(-z).epsilon(1e-13));
  auto transform = [](std::vector<SurvivalObs> v) {
    for (auto& o : v) o.time = std::log1p(o.time) * 3.0 + 2.0;
    return v;
  };
  CHECK(logrank_z(transform(a), transform(b)) == doctest::Approx(z).epsilon(1e-13));
}

TEST_CASE("log-rank errors") {
  const std::vector<SurvivalObs> none{{1.0, false}, {2.0, false}};
  CHECK_THROWS_AS(logrank_z(none, none), DataError);
  const std::vector<SurvivalObs> negative{{-1.0, true}};
  CHECK_THROWS_AS(logrank_z(negative, none), std::invalid_argument);
}

TEST_CASE("two-proportion statistics") {
  std::vector<PatientRecord> data;
  for (int i = 0; i < 10; ++i) data.push_back({Arm::treatment, i < 6, i < 2, 1.0 + i, true, ""});
  for (int i = 0; i < 10; ++i) data.push_back({Arm::control, i < 3, i < 4, 1.5 + i, true, ""});
  const double pooled = 9.0 / 20.0;
  const double z = (0.6 - 0.3) / std::sqrt(pooled * (1 - pooled) * (0.1 + 0.1));
  CHECK(test_statistic(data, TestStat::orr_diff_z) == doctest::Approx(z).epsilon(1e-14));
  const double pooled_ae = 6.0 / 20.0;
  const double z_ae = (0.2 - 0.4) / std::sqrt(pooled_ae * (1 - pooled_ae) * 0.2);
  CHECK(test_statistic(data, TestStat::ae_diff_z) == doctest::Approx(z_ae).epsilon(1e-14));
}

TEST_CASE("bootstrap on identical endpoints") {
  const auto data = coin_cohort(150, 1, 0.0, true);
  const auto res = bootstrap_corr(data, TestStat::orr_diff_z, TestStat::ae_diff_z, {500, 9, 1});
  CHECK(std::abs(res.estimate - 1.0) <= 1e-9);
  CHECK(res.n_resamples == 500);
  CHECK(res.ci_low <= res.estimate + 1e-12);
  CHECK(res.ci_high >= res.estimate - 1e-12);
}

TEST_CASE("bootstrap under independence") {
  const auto data = coin_cohort(400, 2, 0.0, false);
  const int B = 2000;
  const auto res = bootstrap_corr(data, TestStat::orr_diff_z, TestStat::ae_diff_z, {B, 17, 1});
  CHECK(std::abs(res.estimate) <= 3.0 / std::sqrt(double(B)));
  CHECK(res.ci_low < res.estimate);
  CHECK(res.ci_high > res.estimate);
}

TEST_CASE("bootstrap on a correlated latent cohort") {
  const auto data = coin_cohort(400, 3, 0.3, false);
  const auto res = bootstrap_corr(data, TestStat::orr_diff_z, TestStat::ae_diff_z, {1000, 23, 1});
  CHECK(res.estimate > 0.1);
  CHECK(res.estimate < 0.5);
  const auto surv = bootstrap_corr(data, TestStat::logrank_z, TestStat::orr_diff_z, {300, 23, 1});
  CHECK(std::abs(surv.estimate) < 0.3);
}

TEST_CASE("bootstrap reproducibility across thread counts and strata") {
  const auto data = coin_cohort(120, 4, 0.3, false);
  const auto one = bootstrap_corr(data, TestStat::orr_diff_z, TestStat::ae_diff_z, {400, 5, 1});
  for (unsigned threads : {2u, 3u, 8u}) {
    const auto many =
        bootstrap_corr(data, TestStat::orr_diff_z, TestStat::ae_diff_z, {400, 5, threads});
    CHECK(many.estimate == one.estimate);
    CHECK(many.ci_low == one.ci_low);
    CHECK(many.ci_high == one.ci_high);
  }
  const auto again = bootstrap_corr(data, TestStat::orr_diff_z, TestStat::ae_diff_z, {400, 5, 1});
  CHECK(again.estimate == one.estimate);
  const auto other = bootstrap_corr(data, TestStat::orr_diff_z, TestStat::ae_diff_z, {400, 6, 1});
  CHECK(other.estimate != one.estimate);

  auto unstratified = data;
  for (auto& rec : unstratified) rec.stratum.clear();
  const auto flat =
      bootstrap_corr(unstratified, TestStat::orr_diff_z, TestStat::ae_diff_z, {400, 5, 1});
  CHECK(flat.estimate != one.estimate);
}

TEST_CASE("bootstrap errors") {
  auto data = coin_cohort(50, 6, 0.0, false);
  CHECK_THROWS_AS(bootstrap_corr(data, TestStat::orr_diff_z, TestStat::ae_diff_z, {100, 1, 1}),
                  std::invalid_argument);
  for (auto& rec : data) rec.ae = false;
  CHECK_THROWS_AS(bootstrap_corr(data, TestStat::orr_diff_z, TestStat::ae_diff_z, {200, 1, 1}),
                  DataError);
  std::vector<PatientRecord> one_arm = coin_cohort(50, 7, 0.0, false);
  for (auto& rec : one_arm) rec.arm = Arm::treatment;
  CHECK_THROWS_AS(bootstrap_corr(one_arm, TestStat::orr_diff_z, TestStat::ae_diff_z, {200, 1, 1}),
                  DataError);
}

TEST_CASE("readers") {
  std::istringstream sub("Variable;Subgroup;Effect1;Effect2\nage;<65;0.1;0.2\nage;>=65;0.3;0.5\n");
  const auto table = read_subgroup_table(sub);
  REQUIRE(table.size() == 2);
  CHECK(table[1].subgroup == ">=65");
  CHECK(table[1].effect2 == 0.5);

  std::istringstream plan_in("variable,subgroup,group\nv,1,A\nv,2,b\n");
  const auto plan = read_collapse_plan(plan_in);
  CHECK(plan.at({"v", "2"}) == CollapseGroup::B);

  std::istringstream pts("arm\tresponse\tae\ttime\tevent\tsex\r\n"
                         "treatment\t1\t0\t3.5\t1\tF\r\n"
                         "control\tfalse\tyes\t2\t0\tM\r\n");
  const auto recs = read_patient_records(pts, {"sex"});
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].arm == Arm::treatment);
  CHECK(recs[0].response);
  CHECK_FALSE(recs[0].ae);
  CHECK(recs[0].time == 3.5);
  CHECK(recs[1].ae);
  CHECK(recs[1].stratum == "M");

  std::istringstream bad_num("variable,subgroup,effect1,effect2\na,1,x,0.2\n");
  CHECK_THROWS_AS(read_subgroup_table(bad_num), DataError);
  std::istringstream missing_col("variable,subgroup,effect1\na,1,0.1\n");
  CHECK_THROWS_AS(read_subgroup_table(missing_col), DataError);
  std::istringstream ragged("arm,response,ae,time,event\ncontrol,1,0,2\n");
  CHECK_THROWS_AS(read_patient_records(ragged), DataError);
  std::istringstream negative("arm,response,ae,time,event\ncontrol,1,0,-2,1\n");
  CHECK_THROWS_AS(read_patient_records(negative), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_subgroup_table(empty), DataError);
}
