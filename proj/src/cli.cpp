#include "seamless/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "seamless/alpha_exact.hpp"
#include "seamless/combo.hpp"
#include "seamless/corr_est.hpp"
#include "seamless/errors.hpp"
#include "seamless/oracle.hpp"
#include "seamless/selection.hpp"

namespace seamless::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

// Every flag of every subcommand. Defaults describe the hypothetical
// two-dose study: M=40, Rx=Rs=0.2, s=0.2, r=1, alpha=0.025, Cs=0.05.
struct RunConfig {
  std::string out_path;
  std::string config_path;

  DesignParams design;
  SelectionRule rule;
  CorrelationSet corr;
  TrialGeometry geom;

  std::optional<double> w;
  std::vector<double> w_grid;
  std::vector<double> rho_ys_list = default_fig3_rho_ys();
  std::vector<double> cx_grid = default_fig3_cx_grid();
  int grid_n = kDefaultGridN;
  std::string combo_method = "exact";

  double p1s = 0.025;
  double p2s = 0.025;
  bool invert = false;

  std::string corr_method = "subgroup";
  std::string input_path;
  std::string collapse_path;
  int B = 1000;
  std::uint64_t seed = 20240101;
  std::vector<std::string> strata;
  std::string stat1 = "logrank_z";
  std::string stat2 = "orr_diff_z";

  std::string target = "w";
  std::int64_t n = 1'000'000;
  std::string mode = "difference";
  std::string test = "exact_parametric";
  std::optional<double> alphaE;
  unsigned threads = 0;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

template <class... T>
std::string csv_row(T... values) {
  std::string line;
  ((line += (line.empty() ? "" : ",") + fmt(static_cast<double>(values))), ...);
  return line + "\n";
}

void add_io_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--out", cfg.out_path, "Write output to this file instead of stdout");
  sub->add_option("--config", cfg.config_path,
                  "Flat key=value file of defaults (keys are flag names without --)");
}

void add_design_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--M", cfg.design.M, "Patients per dose arm in Stage 1 (count)")
      ->capture_default_str();
  sub->add_option("--Rx", cfg.design.Rx, "Average expected ORR (probability)")
      ->capture_default_str();
  sub->add_option("--Rs", cfg.design.Rs, "Average expected Grade 3-4 AE rate (probability)")
      ->capture_default_str();
  sub->add_option("--Cs", cfg.rule.Cs, "AE-rate threshold (probability difference)")
      ->capture_default_str();
  sub->add_option("--rho-xy", cfg.corr.rho_xy, "ORR-OS correlation")->capture_default_str();
  sub->add_option("--rho-xs", cfg.corr.rho_xs, "ORR-AE correlation")->capture_default_str();
}

void add_rule_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--scenario", cfg.rule.scenario, "Dose selection scenario (1 or 2)")
      ->capture_default_str();
  sub->add_option("--Cx", cfg.rule.Cx, "ORR threshold (probability difference)")
      ->capture_default_str();
  sub->add_option("--rho-ys", cfg.corr.rho_ys, "OS-AE correlation")->capture_default_str();
}

void add_geometry_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--s", cfg.geom.s, "Stage 1 OS information fraction in (0, 1)")
      ->capture_default_str();
  sub->add_option("--r", cfg.geom.r, "Randomization ratio dose:control (> 0)")
      ->capture_default_str();
  sub->add_option("--alpha", cfg.geom.alpha, "One-sided target significance level")
      ->capture_default_str();
}

void add_w_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--w", cfg.w, "Probability of picking the winner");
  sub->add_option("--w-grid", cfg.w_grid,
                  "Comma-separated w values (default 0.5,0.55,...,1)")
      ->delimiter(',');
}

std::vector<double> w_values(const RunConfig& cfg) {
  std::vector<double> ws;
  if (cfg.w) ws.push_back(*cfg.w);
  ws.insert(ws.end(), cfg.w_grid.begin(), cfg.w_grid.end());
  return ws.empty() ? default_w_grid() : ws;
}

ComboMethod parse_combo_method(const std::string& name) {
  if (name == "sidak") return ComboMethod::sidak;
  if (name == "dunnett") return ComboMethod::dunnett;
  return ComboMethod::exact;
}

TestStat parse_stat(const std::string& name) {
  if (name == "orr_diff_z") return TestStat::orr_diff_z;
  if (name == "ae_diff_z") return TestStat::ae_diff_z;
  return TestStat::logrank_z;
}

Type1Test parse_test(const std::string& name) {
  if (name == "combination") return Type1Test::combination;
  if (name == "dunnett") return Type1Test::dunnett;
  if (name == "sidak") return Type1Test::sidak;
  return Type1Test::exact_parametric;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file '" + path + "'");
  return in;
}

std::string fig3_header() { return "scenario,rho_ys,Cx,w,w1,w2\n"; }

std::string fig3_line(int scenario, double rho_ys, double cx, const WinnerProb& p) {
  return std::to_string(scenario) + "," + fmt(rho_ys) + "," + fmt(cx) + "," +
         fmt(p.w) + "," + fmt(p.w1) + "," + fmt(p.w2) + "\n";
}

std::string run_winner_prob(const RunConfig& cfg) {
  const WinnerProb p = winner_prob(cfg.design, cfg.rule, cfg.corr);
  return fig3_header() + fig3_line(cfg.rule.scenario, cfg.corr.rho_ys, cfg.rule.Cx, p);
}

std::string run_fig3(const RunConfig& cfg) {
  std::string text = fig3_header();
  for (const auto& row : fig3_sweep(cfg.design, cfg.rule.Cs, cfg.corr.rho_xy,
                                    cfg.corr.rho_xs, cfg.rho_ys_list, cfg.cx_grid)) {
    text += fig3_line(row.scenario, row.rho_ys, row.Cx, row.prob);
  }
  return text;
}

std::string run_alpha_exact(const RunConfig& cfg) {
  std::string text = "w,alphaE\n";
  for (const auto& row : alpha_exact_sweep(cfg.geom, w_values(cfg))) {
    text += csv_row(row.w, row.alphaE);
  }
  return text;
}

std::string run_adjust_p(const RunConfig& cfg) {
  const double w = cfg.w.value_or(1.0);
  if (cfg.invert) {
    return "p1a,w,p1s\n" + csv_row(cfg.p1s, w, invert_p1(cfg.p1s, w, cfg.geom.r));
  }
  return "p1s,w,p1a,p1a_dunnett,p1a_sidak\n" +
         csv_row(cfg.p1s, w, adjust_p1(cfg.p1s, w, cfg.geom.r),
                 dunnett_adjust(cfg.p1s, cfg.geom.r), sidak_adjust(cfg.p1s));
}

std::string run_combine(const RunConfig& cfg) {
  cfg.geom.validate();
  const double w = cfg.w.value_or(1.0);
  const double p1a = adjust_p1(cfg.p1s, w, cfg.geom.r);
  const double pc = combination_p(p1a, cfg.p2s, cfg.geom.s);
  const bool rejected =
      reject({cfg.p1s, cfg.p2s}, w, cfg.geom.r, cfg.geom.s, cfg.geom.alpha);
  return "p1s,p2s,p1a,pc,reject\n" +
         csv_row(cfg.p1s, cfg.p2s, p1a, pc, rejected ? 1.0 : 0.0);
}

std::string run_alpha_combo(const RunConfig& cfg) {
  const ComboMethod method = parse_combo_method(cfg.combo_method);
  std::string text = "w,alphaC\n";
  for (const double w : w_values(cfg)) {
    text += csv_row(w, alpha_c(w, cfg.geom, cfg.grid_n, method));
  }
  return text;
}

std::string run_fig4(const RunConfig& cfg) {
  std::string text = "w,alphaE,alphaC,alphaC_dunnett,alphaC_sidak\n";
  for (const auto& row : fig4_sweep(cfg.geom, w_values(cfg), cfg.grid_n)) {
    text += csv_row(row.w, row.alphaE, row.alphaC, row.alphaC_dunnett, row.alphaC_sidak);
  }
  return text;
}

std::string run_estimate_corr(const RunConfig& cfg) {
  ordered_json j;
  if (cfg.corr_method == "subgroup") {
    auto in = open_input(cfg.input_path);
    SubgroupTable table = read_subgroup_table(in);
    if (!cfg.collapse_path.empty()) {
      auto plan_in = open_input(cfg.collapse_path);
      table = collapse_subgroups(table, read_collapse_plan(plan_in));
    }
    j["estimate"] = modified_pearson(table);
    j["ci_low"] = nullptr;
    j["ci_high"] = nullptr;
    j["method"] = "subgroup";
    j["n_resamples"] = 0;
  } else {
    auto in = open_input(cfg.input_path);
    const auto records = read_patient_records(in, cfg.strata);
    BootstrapConfig bc;
    bc.B = cfg.B;
    bc.seed = cfg.seed;
    bc.threads = cfg.threads == 0 ? 1 : cfg.threads;
    const auto res = bootstrap_corr(records, parse_stat(cfg.stat1),
                                    parse_stat(cfg.stat2), bc);
    j["estimate"] = res.estimate;
    j["ci_low"] = res.ci_low;
    j["ci_high"] = res.ci_high;
    j["method"] = "bootstrap";
    j["n_resamples"] = res.n_resamples;
  }
  return j.dump(2) + "\n";
}

std::string run_simulate(const RunConfig& cfg) {
  const McConfig mc{cfg.n, cfg.seed, cfg.threads};
  McEstimate est;
  if (cfg.target == "w") {
    const WMode mode = cfg.mode == "arm-level" ? WMode::arm_level : WMode::difference;
    est = simulate_w(cfg.design, cfg.rule, cfg.corr, mode, mc, cfg.geom.r);
  } else if (cfg.target == "type1-abstract") {
    est = simulate_type1_abstract(cfg.w.value_or(0.5), cfg.geom,
                                  cfg.alphaE.value_or(cfg.geom.alpha), mc);
  } else {
    est = simulate_type1_full(cfg.design, cfg.rule, cfg.corr, cfg.geom,
                              parse_test(cfg.test), mc);
  }
  ordered_json j;
  j["value"] = est.value;
  j["std_error"] = est.std_error;
  j["n"] = est.n;
  j["seed"] = est.seed;
  return j.dump(2) + "\n";
}

struct Command {
  CLI::App* app;
  std::function<std::string(const RunConfig&)> run;
};

std::vector<Command> build(CLI::App& app, RunConfig& cfg) {
  std::vector<Command> commands;
  auto add = [&](const char* name, const char* help,
                 std::function<std::string(const RunConfig&)> run) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_io_options(sub, cfg);
    commands.push_back({sub, std::move(run)});
    return sub;
  };

  auto* winner = add("winner-prob", "Probability of picking the winner (CSV)", run_winner_prob);
  add_design_options(winner, cfg);
  add_rule_options(winner, cfg);

  auto* fig3 = add("fig3", "Winner probability over scenarios x rho_ys x Cx (CSV)", run_fig3);
  add_design_options(fig3, cfg);
  fig3->add_option("--rho-ys-list", cfg.rho_ys_list, "Comma-separated OS-AE correlations")
      ->delimiter(',')
      ->capture_default_str();
  fig3->add_option("--Cx-grid", cfg.cx_grid, "Comma-separated ORR thresholds")
      ->delimiter(',')
      ->capture_default_str();

  auto* alpha_exact = add("alpha-exact", "Adjusted level of the exact parametric test (CSV)",
                          run_alpha_exact);
  add_geometry_options(alpha_exact, cfg);
  add_w_options(alpha_exact, cfg);

  auto* adjust = add("adjust-p", "Stage 1 p-value adjustment for dose selection (CSV)",
                     run_adjust_p);
  adjust->add_option("--p1s", cfg.p1s, "Stage 1 p-value (or adjusted p-value with --invert)")
      ->capture_default_str();
  adjust->add_option("--w", cfg.w, "Probability of picking the winner (default 1)");
  adjust->add_option("--r", cfg.geom.r, "Randomization ratio dose:control (> 0)")
      ->capture_default_str();
  adjust->add_flag("--invert", cfg.invert, "Recover p1s from an adjusted p-value");

  auto* combine = add("combine", "Exact inverse normal combination test (CSV)", run_combine);
  add_geometry_options(combine, cfg);
  combine->add_option("--p1s", cfg.p1s, "Stage 1 p-value")->capture_default_str();
  combine->add_option("--p2s", cfg.p2s, "Stage 2 p-value")->capture_default_str();
  combine->add_option("--w", cfg.w, "Probability of picking the winner (default 1)");

  auto* combo = add("alpha-combo", "Log-rank scale level of the combination test (CSV)",
                    run_alpha_combo);
  add_geometry_options(combo, cfg);
  add_w_options(combo, cfg);
  combo->add_option("--method", cfg.combo_method, "Stage 1 adjustment")
      ->check(CLI::IsMember({"exact", "sidak", "dunnett"}))
      ->capture_default_str();
  combo->add_option("--grid-n", cfg.grid_n, "Boundary grid size (>= 1000)")
      ->capture_default_str();

  auto* fig4 = add("fig4", "alphaE, alphaC and Dunnett/Sidak levels over w (CSV)", run_fig4);
  add_geometry_options(fig4, cfg);
  fig4->add_option("--w-grid", cfg.w_grid,
                   "Comma-separated w values in [0.5, 1] (default 0.5,0.55,...,1)")
      ->delimiter(',');
  fig4->add_option("--grid-n", cfg.grid_n, "Boundary grid size (>= 1000)")
      ->capture_default_str();

  auto* estimate = add("estimate-corr", "Correlation between two test statistics (JSON)",
                       run_estimate_corr);
  estimate->add_option("--method", cfg.corr_method, "subgroup or bootstrap")
      ->check(CLI::IsMember({"subgroup", "bootstrap"}))
      ->capture_default_str();
  estimate->add_option("--input", cfg.input_path,
                       "Subgroup table (variable,subgroup,effect1,effect2) or patient "
                       "records (arm,response,ae,time,event)")
      ->required();
  estimate->add_option("--collapse", cfg.collapse_path,
                       "Collapse plan (variable,subgroup,group with group A or B)");
  estimate->add_option("--B", cfg.B, "Bootstrap resamples (>= 200)")->capture_default_str();
  estimate->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  estimate->add_option("--strata", cfg.strata, "Comma-separated stratification columns")
      ->delimiter(',');
  estimate->add_option("--stat1", cfg.stat1, "First statistic")
      ->check(CLI::IsMember({"orr_diff_z", "ae_diff_z", "logrank_z"}))
      ->capture_default_str();
  estimate->add_option("--stat2", cfg.stat2, "Second statistic")
      ->check(CLI::IsMember({"orr_diff_z", "ae_diff_z", "logrank_z"}))
      ->capture_default_str();
  estimate->add_option("--threads", cfg.threads, "Worker threads (0 = 1)")
      ->capture_default_str();

  auto* simulate = add("simulate", "Monte Carlo verification under the global null (JSON)",
                       run_simulate);
  simulate->add_option("--target", cfg.target, "w, type1-abstract or type1-full")
      ->check(CLI::IsMember({"w", "type1-abstract", "type1-full"}))
      ->capture_default_str();
  simulate->add_option("--n", cfg.n, "Replicates")->capture_default_str();
  simulate->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  simulate->add_option("--mode", cfg.mode, "difference or arm-level (target w)")
      ->check(CLI::IsMember({"difference", "arm-level"}))
      ->capture_default_str();
  simulate->add_option("--test", cfg.test, "Test for target type1-full")
      ->check(CLI::IsMember({"exact_parametric", "combination", "dunnett", "sidak"}))
      ->capture_default_str();
  simulate->add_option("--w", cfg.w, "Winner probability for type1-abstract (default 0.5)");
  simulate->add_option("--alphaE", cfg.alphaE,
                       "Test level for type1-abstract (default --alpha)");
  simulate->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  add_design_options(simulate, cfg);
  add_rule_options(simulate, cfg);
  add_geometry_options(simulate, cfg);

  return commands;
}

bool mentions(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

std::optional<std::string> flag_value(const std::vector<std::string>& args,
                                      const std::string& flag) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == flag && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind(flag + "=", 0) == 0) return args[i].substr(flag.size() + 1);
  }
  return std::nullopt;
}

// Appends flags from a key=value config file for every key the subcommand
// knows and the command line does not already set.
std::vector<std::string> merge_config(const std::vector<std::string>& args,
                                      const std::vector<Command>& commands) {
  const auto path = flag_value(args, "--config");
  if (!path || args.empty()) return args;
  const auto cmd = std::find_if(commands.begin(), commands.end(), [&](const Command& c) {
    return c.app->get_name() == args.front();
  });
  if (cmd == commands.end()) return args;

  std::ifstream in(*path);
  if (!in) throw DataError("cannot open config file '" + *path + "'");
  std::vector<std::string> merged = args;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (strip(line).empty()) continue;
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    const std::string flag = "--" + key;
    if (key == "config" || key == "out" || mentions(args, flag)) continue;
    const CLI::Option* opt = cmd->app->get_option_no_throw(flag);
    if (opt == nullptr) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1" || value == "yes") merged.push_back(flag);
    } else {
      merged.push_back(flag + "=" + value);
    }
  }
  return merged;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Design quantities for adaptive Phase 2/3 trials with dose selection",
               "seamless"};
  app.require_subcommand(1);
  const auto commands = build(app, cfg);

  try {
    std::vector<std::string> argv = merge_config(args, commands);
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* shown = &app;
    for (const auto& c : commands) {
      if (c.app->parsed()) shown = c.app;
    }
    out << shown->help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }

  try {
    for (const auto& c : commands) {
      if (!c.app->parsed()) continue;
      const std::string text = c.run(cfg);
      if (cfg.out_path.empty()) {
        out << text;
      } else {
        std::ofstream file(cfg.out_path, std::ios::binary);
        if (!file || !(file << text)) {
          throw DataError("cannot write output file '" + cfg.out_path + "'");
        }
      }
      return kOk;
    }
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::domain_error& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kUsageError;
  }
  err << "error: no subcommand given\n";
  return kUsageError;
}

}  // namespace seamless::cli
