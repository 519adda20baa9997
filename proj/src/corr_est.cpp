#include "seamless/corr_est.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "seamless/errors.hpp"
#include "seamless/rng.hpp"

namespace seamless {

namespace {

constexpr std::uint32_t kStreamResample = 11;
constexpr std::uint32_t kStreamInterval = 12;

// Variables in order of first appearance, each with its rows.
std::vector<std::pair<std::string, std::vector<const SubgroupRow*>>> group_by_variable(
    const SubgroupTable& table) {
  std::vector<std::pair<std::string, std::vector<const SubgroupRow*>>> groups;
  for (const auto& row : table) {
    if (!std::isfinite(row.effect1) || !std::isfinite(row.effect2)) {
      throw DataError("non-finite effect for " + row.variable + "/" + row.subgroup);
    }
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == row.variable; });
    if (it == groups.end()) {
      groups.push_back({row.variable, {&row}});
    } else {
      it->second.push_back(&row);
    }
  }
  return groups;
}

double binary_z(std::span<const PatientRecord> data, bool PatientRecord::*field) {
  double n_t = 0, n_c = 0, x_t = 0, x_c = 0;
  for (const auto& p : data) {
    if (p.arm == Arm::treatment) {
      n_t += 1;
      x_t += p.*field ? 1 : 0;
    } else {
      n_c += 1;
      x_c += p.*field ? 1 : 0;
    }
  }
  if (n_t == 0 || n_c == 0) throw DataError("two-proportion z: empty arm");
  const double pooled = (x_t + x_c) / (n_t + n_c);
  const double var = pooled * (1.0 - pooled) * (1.0 / n_t + 1.0 / n_c);
  if (!(var > 0.0)) throw DataError("two-proportion z: zero variance");
  return (x_t / n_t - x_c / n_c) / std::sqrt(var);
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct DelimitedTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (lower(header[i]) == lower(name)) return static_cast<int>(i);
    }
    throw DataError("missing column '" + name + "'");
  }
};

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(trim(field));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

DelimitedTable read_delimited(std::istream& in) {
  DelimitedTable table;
  std::string line;
  int line_no = 0;
  char delim = ',';
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (table.header.empty()) {
      if (line.find('\t') != std::string::npos) {
        delim = '\t';
      } else if (line.find(';') != std::string::npos &&
                 line.find(',') == std::string::npos) {
        delim = ';';
      }
      table.header = split(line, delim);
      continue;
    }
    auto fields = split(line, delim);
    if (fields.size() != table.header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (table.header.empty()) throw DataError("empty input: no header row");
  return table;
}

double parse_real(const std::string& text, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": not a number: '" + text + "'");
  }
}

bool parse_bool(const std::string& text, int line_no) {
  const std::string v = lower(text);
  if (v == "1" || v == "true" || v == "yes" || v == "y") return true;
  if (v == "0" || v == "false" || v == "no" || v == "n") return false;
  throw DataError("line " + std::to_string(line_no) + ": not a boolean: '" + text + "'");
}

Arm parse_arm(const std::string& text, int line_no) {
  const std::string v = lower(text);
  if (v == "treatment" || v == "trt" || v == "t" || v == "1") return Arm::treatment;
  if (v == "control" || v == "ctrl" || v == "c" || v == "0") return Arm::control;
  throw DataError("line " + std::to_string(line_no) + ": unknown arm '" + text + "'");
}

// Linear-interpolation sample quantile of sorted data.
double sorted_quantile(const std::vector<double>& sorted, double prob) {
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

template <class Body>
void parallel_for(int count, unsigned threads, const Body& body) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (int i = static_cast<int>(t); i < count; i += static_cast<int>(workers)) body(i);
    });
  }
}

}  // namespace

double modified_pearson(const SubgroupTable& table) {
  const auto groups = group_by_variable(table);
  if (groups.empty()) throw DataError("modified_pearson: empty subgroup table");
  double cross = 0.0, ss1 = 0.0, ss2 = 0.0;
  for (const auto& [variable, rows] : groups) {
    if (rows.size() != 2) {
      throw DataError("baseline variable '" + variable + "' has " +
                      std::to_string(rows.size()) +
                      " subgroups; collapse it to exactly two first");
    }
    const double d1 = rows[0]->effect1 - rows[1]->effect1;
    const double d2 = rows[0]->effect2 - rows[1]->effect2;
    cross += d1 * d2;
    ss1 += d1 * d1;
    ss2 += d2 * d2;
  }
  if (!(ss1 > 0.0 && ss2 > 0.0)) {
    throw DataError("modified_pearson: zero within-variable variation");
  }
  return std::clamp(cross / std::sqrt(ss1 * ss2), -1.0, 1.0);
}

SubgroupTable collapse_subgroups(const SubgroupTable& table, const CollapsePlan& plan) {
  SubgroupTable out;
  for (const auto& [variable, rows] : group_by_variable(table)) {
    std::vector<const SubgroupRow*> members[2];
    for (const SubgroupRow* row : rows) {
      const auto it = plan.find({row->variable, row->subgroup});
      if (it == plan.end()) {
        throw DataError("collapse plan has no entry for " + row->variable + "/" +
                        row->subgroup);
      }
      members[it->second == CollapseGroup::A ? 0 : 1].push_back(row);
    }
    for (const auto& group : members) {
      if (group.empty()) {
        throw DataError("collapse plan leaves a group empty for variable '" +
                        variable + "'");
      }
      SubgroupRow merged{variable, group.front()->subgroup, 0.0, 0.0};
      for (std::size_t i = 1; i < group.size(); ++i) merged.subgroup += "+" + group[i]->subgroup;
      for (const SubgroupRow* row : group) {
        merged.effect1 += row->effect1;
        merged.effect2 += row->effect2;
      }
      merged.effect1 /= static_cast<double>(group.size());
      merged.effect2 /= static_cast<double>(group.size());
      out.push_back(std::move(merged));
    }
  }
  return out;
}

double logrank_z(std::span<const SurvivalObs> group_a,
                 std::span<const SurvivalObs> group_b) {
  struct Tagged {
    double time;
    bool event;
    bool in_a;
  };
  std::vector<Tagged> all;
  all.reserve(group_a.size() + group_b.size());
  for (const auto& o : group_a) all.push_back({o.time, o.event, true});
  for (const auto& o : group_b) all.push_back({o.time, o.event, false});
  for (const auto& o : all) {
    if (!(o.time >= 0.0)) throw std::invalid_argument("survival time must be >= 0");
  }
  std::sort(all.begin(), all.end(),
            [](const Tagged& x, const Tagged& y) { return x.time < y.time; });

  double at_risk_a = static_cast<double>(group_a.size());
  double at_risk_b = static_cast<double>(group_b.size());
  double observed_a = 0.0, expected_a = 0.0, variance = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    double deaths = 0.0, deaths_a = 0.0, leaving_a = 0.0, leaving_b = 0.0;
    for (; j < all.size() && all[j].time == all[i].time; ++j) {
      if (all[j].event) {
        deaths += 1.0;
        deaths_a += all[j].in_a ? 1.0 : 0.0;
      }
      (all[j].in_a ? leaving_a : leaving_b) += 1.0;
    }
    const double at_risk = at_risk_a + at_risk_b;
    if (deaths > 0.0) {
      observed_a += deaths_a;
      expected_a += deaths * at_risk_a / at_risk;
      if (at_risk > 1.0) {
        variance += deaths * (at_risk_a / at_risk) * (at_risk_b / at_risk) *
                    (at_risk - deaths) / (at_risk - 1.0);
      }
    }
    at_risk_a -= leaving_a;
    at_risk_b -= leaving_b;
    i = j;
  }
  if (!(variance > 0.0)) throw DataError("log-rank statistic has zero variance");
  return (expected_a - observed_a) / std::sqrt(variance);
}

double test_statistic(std::span<const PatientRecord> data, TestStat stat) {
  switch (stat) {
    case TestStat::orr_diff_z:
      return binary_z(data, &PatientRecord::response);
    case TestStat::ae_diff_z:
      return binary_z(data, &PatientRecord::ae);
    case TestStat::logrank_z: {
      std::vector<SurvivalObs> treated, control;
      for (const auto& p : data) {
        (p.arm == Arm::treatment ? treated : control).push_back({p.time, p.event});
      }
      return logrank_z(treated, control);
    }
  }
  throw std::invalid_argument("unknown statistic");
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("pearson: need two equal-length samples of size >= 2");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0 && syy > 0.0)) throw DataError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

BootstrapResult bootstrap_corr(std::span<const PatientRecord> data, TestStat stat1,
                               TestStat stat2, const BootstrapConfig& config) {
  if (config.B < 200) throw std::invalid_argument("bootstrap_corr: B must be >= 200");

  // Resampling cells: (arm, stratum).
  std::map<std::pair<int, std::string>, std::vector<std::size_t>> cells;
  bool has_treated = false, has_control = false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& p = data[i];
    cells[{p.arm == Arm::treatment ? 0 : 1, p.stratum}].push_back(i);
    (p.arm == Arm::treatment ? has_treated : has_control) = true;
  }
  if (!has_treated || !has_control) {
    throw DataError("bootstrap_corr: both arms must be nonempty");
  }

  const int B = config.B;
  std::vector<double> s1(B), s2(B);
  std::vector<char> ok(B, 0);
  parallel_for(B, config.threads, [&](int b) {
    CounterRng rng(config.seed, static_cast<std::uint64_t>(b), kStreamResample);
    std::vector<PatientRecord> sample;
    sample.reserve(data.size());
    for (const auto& [key, members] : cells) {
      for (std::size_t k = 0; k < members.size(); ++k) {
        sample.push_back(data[members[rng.below(members.size())]]);
      }
    }
    try {
      s1[b] = test_statistic(sample, stat1);
      s2[b] = test_statistic(sample, stat2);
      ok[b] = 1;
    } catch (const DataError&) {
      ok[b] = 0;
    }
  });

  std::vector<double> x, y;
  for (int b = 0; b < B; ++b) {
    if (ok[b]) {
      x.push_back(s1[b]);
      y.push_back(s2[b]);
    }
  }
  const int degenerate = B - static_cast<int>(x.size());
  if (degenerate * 100 > B) {
    throw DataError("bootstrap_corr: degenerate statistic in " +
                    std::to_string(degenerate) + " of " + std::to_string(B) +
                    " resamples");
  }

  BootstrapResult result;
  result.estimate = pearson(x, y);
  result.n_resamples = static_cast<int>(x.size());
  result.n_degenerate = degenerate;

  const std::size_t m = x.size();
  std::vector<double> replicate(B);
  parallel_for(B, config.threads, [&](int b) {
    CounterRng rng(config.seed, static_cast<std::uint64_t>(b), kStreamInterval);
    std::vector<double> xs(m), ys(m);
    for (std::size_t k = 0; k < m; ++k) {
      const auto j = rng.below(m);
      xs[k] = x[j];
      ys[k] = y[j];
    }
    try {
      replicate[b] = pearson(xs, ys);
    } catch (const DataError&) {
      replicate[b] = result.estimate;
    }
  });
  std::sort(replicate.begin(), replicate.end());
  result.ci_low = sorted_quantile(replicate, 0.025);
  result.ci_high = sorted_quantile(replicate, 0.975);
  return result;
}

SubgroupTable read_subgroup_table(std::istream& in) {
  const DelimitedTable t = read_delimited(in);
  const int c_var = t.column("variable");
  const int c_sub = t.column("subgroup");
  const int c_e1 = t.column("effect1");
  const int c_e2 = t.column("effect2");
  SubgroupTable table;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    table.push_back({f[c_var], f[c_sub], parse_real(f[c_e1], t.line_numbers[i]),
                     parse_real(f[c_e2], t.line_numbers[i])});
  }
  return table;
}

CollapsePlan read_collapse_plan(std::istream& in) {
  const DelimitedTable t = read_delimited(in);
  const int c_var = t.column("variable");
  const int c_sub = t.column("subgroup");
  const int c_grp = t.column("group");
  CollapsePlan plan;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const std::string g = lower(f[c_grp]);
    if (g != "a" && g != "b") {
      throw DataError("line " + std::to_string(t.line_numbers[i]) +
                      ": group must be A or B");
    }
    plan[{f[c_var], f[c_sub]}] = g == "a" ? CollapseGroup::A : CollapseGroup::B;
  }
  return plan;
}

std::vector<PatientRecord> read_patient_records(
    std::istream& in, const std::vector<std::string>& strata_columns) {
  const DelimitedTable t = read_delimited(in);
  const int c_arm = t.column("arm");
  const int c_resp = t.column("response");
  const int c_ae = t.column("ae");
  const int c_time = t.column("time");
  const int c_event = t.column("event");
  std::vector<int> c_strata;
  for (const auto& name : strata_columns) c_strata.push_back(t.column(name));

  std::vector<PatientRecord> records;
  records.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const int line = t.line_numbers[i];
    PatientRecord rec;
    rec.arm = parse_arm(f[c_arm], line);
    rec.response = parse_bool(f[c_resp], line);
    rec.ae = parse_bool(f[c_ae], line);
    rec.time = parse_real(f[c_time], line);
    if (!(rec.time >= 0.0)) {
      throw DataError("line " + std::to_string(line) + ": negative survival time");
    }
    rec.event = parse_bool(f[c_event], line);
    for (std::size_t k = 0; k < c_strata.size(); ++k) {
      if (k) rec.stratum += '|';
      rec.stratum += f[c_strata[k]];
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace seamless
