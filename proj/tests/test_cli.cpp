#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seamless/cli.hpp"

namespace fs = std::filesystem;
using seamless::cli::dispatch;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream fields(line);
    std::string f;
    while (std::getline(fields, f, ',')) row.push_back(f);
    rows.push_back(row);
  }
  return rows;
}

fs::path scratch(const std::string& name, const std::string& content = {}) {
  const fs::path dir = fs::temp_directory_path() / "seamless_cli_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  if (!content.empty()) std::ofstream(p) << content;
  return p;
}

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("alpha-exact example") {
  const auto r = run({"alpha-exact", "--s", "0.2", "--r", "1", "--alpha", "0.025", "--w", "0.5"});
  CHECK(r.code == 0);
  CHECK(r.out == "w,alphaE\n0.5,0.025\n");
  CHECK(r.err.empty());
}

TEST_CASE("winner-prob example") {
  const auto r = run({"winner-prob", "--scenario", "1", "--Cx", "0", "--Cs", "0", "--rho-xy", "0",
                      "--rho-xs", "0", "--rho-ys", "0", "--M", "40", "--Rx", "0.2", "--Rs", "0.2"});
  CHECK(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"scenario", "rho_ys", "Cx", "w", "w1", "w2"});
  CHECK(std::stod(rows[1][3]) == 0.5);
  CHECK(std::abs(std::stod(rows[1][4]) - 0.125) <= 1e-10);
}

TEST_CASE("fig4 example") {
  const auto r = run({"fig4", "--s", "0.2", "--r", "1", "--alpha", "0.025"});
  CHECK(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 12);
  CHECK(rows[0] ==
        std::vector<std::string>{"w", "alphaE", "alphaC", "alphaC_dunnett", "alphaC_sidak"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 5);
    CHECK(std::abs(std::stod(rows[i][1]) - std::stod(rows[i][2])) <= 0.001);
  }
}

TEST_CASE("fig3 default grid") {
  const auto r = run({"fig3"});
  CHECK(r.code == 0);
  CHECK(count_lines(r.out) == 67);
  const auto custom = run({"fig3", "--rho-ys-list", "-0.2", "--Cx-grid", "0,0.1"});
  CHECK(custom.code == 0);
  CHECK(count_lines(custom.out) == 5);
}

TEST_CASE("ten significant digits") {
  const auto r = run({"alpha-exact", "--w", "0.8"});
  REQUIRE(r.code == 0);
  const std::string value = parse_csv(r.out)[1][1];
  std::string digits;
  for (char c : value) {
    if (std::isdigit(static_cast<unsigned char>(c))) digits += c;
  }
  digits.erase(0, digits.find_first_not_of('0'));
  CHECK(digits.size() <= 10);
  CHECK(digits.size() >= 9);
}

TEST_CASE("p-value commands") {
  const auto adj = run({"adjust-p", "--p1s", "0.5", "--w", "1", "--r", "1"});
  CHECK(adj.code == 0);
  const auto rows = parse_csv(adj.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"p1s", "w", "p1a", "p1a_dunnett", "p1a_sidak"});
  CHECK(std::abs(std::stod(rows[1][2]) - 2.0 / 3.0) <= 1e-9);
  CHECK(std::stod(rows[1][4]) == 0.75);

  const auto inv = run({"adjust-p", "--p1s", "0.025", "--w", "1", "--invert"});
  CHECK(inv.code == 0);
  CHECK(parse_csv(inv.out)[0] == std::vector<std::string>{"p1a", "w", "p1s"});

  const auto yes = run({"combine", "--p1s", "0.000001", "--p2s", "0.000001", "--w", "1"});
  CHECK(yes.code == 0);
  CHECK(parse_csv(yes.out)[1].back() == "1");
  const auto no = run({"combine", "--p1s", "0.5", "--p2s", "0.5"});
  CHECK(parse_csv(no.out)[1].back() == "0");

  const auto ac = run({"alpha-combo", "--w", "0.5"});
  CHECK(ac.code == 0);
  CHECK(std::abs(std::stod(parse_csv(ac.out)[1][1]) - 0.025) <= 1e-6);
  const auto sidak = run({"alpha-combo", "--method", "sidak"});
  CHECK(sidak.code == 0);
}

TEST_CASE("simulate output is byte-identical for the same seed") {
  const std::vector<std::string> args{"simulate", "--target", "w", "--n", "20000", "--seed", "5"};
  const auto a = run(args);
  const auto b = run(args);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  const auto j = nlohmann::json::parse(a.out);
  CHECK(j.at("n") == 20000);
  CHECK(j.at("seed") == 5);
  CHECK(j.contains("value"));
  CHECK(j.contains("std_error"));
  auto threaded = args;
  threaded.insert(threaded.end(), {"--threads", "3"});
  CHECK(run(threaded).out == a.out);

  const auto abs = run({"simulate", "--target", "type1-abstract", "--n", "100000", "--w", "0.8",
                        "--alphaE", "0.02"});
  CHECK(abs.code == 0);
  const auto full = run({"simulate", "--target", "type1-full", "--test", "sidak", "--n", "100000"});
  CHECK(full.code == 0);
}

TEST_CASE("output file") {
  const fs::path out = scratch("alpha.csv");
  fs::remove(out);
  const auto r = run({"alpha-exact", "--w", "0.5", "--out", out.string()});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "w,alphaE\n0.5,0.025\n");
}

TEST_CASE("config file supplies defaults and flags override") {
  const fs::path cfg = scratch("run.cfg", "# study\ns = 0.5\nw=0.8\nr = 2\n");
  const auto from_file = run({"alpha-exact", "--config", cfg.string()});
  CHECK(from_file.code == 0);
  const auto direct = run({"alpha-exact", "--s", "0.5", "--w", "0.8", "--r", "2"});
  CHECK(from_file.out == direct.out);
  const auto overridden = run({"alpha-exact", "--config", cfg.string(), "--w", "0.5"});
  CHECK(overridden.out == "w,alphaE\n0.5,0.025\n");
  const auto missing = run({"alpha-exact", "--config", scratch("nope.cfg").string() + ".x"});
  CHECK(missing.code == 3);
  const fs::path bad = scratch("bad.cfg", "this line has no equals\n");
  CHECK(run({"alpha-exact", "--config", bad.string()}).code == 3);
}

TEST_CASE("estimate-corr") {
  const fs::path table = scratch("subgroups.csv",
                                 "variable,subgroup,effect1,effect2\n"
                                 "age,young,0.1,0.7\nage,old,0.3,1.1\n"
                                 "sex,M,0.2,0.9\nsex,F,-0.1,0.3\n");
  const auto r = run({"estimate-corr", "--method", "subgroup", "--input", table.string()});
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(std::abs(j.at("estimate").get<double>() - 1.0) <= 1e-12);
  CHECK(j.at("ci_low").is_null());
  CHECK(j.at("method") == "subgroup");
  CHECK(j.at("n_resamples") == 0);
  CHECK(r.out.find("\"estimate\"") < r.out.find("\"ci_low\""));

  const fs::path three = scratch("three.csv",
                                 "variable,subgroup,effect1,effect2\n"
                                 "age,a,0.1,0.2\nage,b,0.3,0.1\nage,c,0.2,0.4\n");
  const auto needs_collapse = run({"estimate-corr", "--input", three.string()});
  CHECK(needs_collapse.code == 3);
  CHECK_FALSE(needs_collapse.err.empty());
  const fs::path two_vars = scratch("twovars.csv",
                                    "variable,subgroup,effect1,effect2\n"
                                    "age,a,0.1,0.2\nage,b,0.3,0.1\nage,c,0.2,0.4\n"
                                    "sex,M,0.0,0.3\nsex,F,0.2,0.1\n");
  const fs::path plan2 = scratch("plan2.csv",
                                 "variable,subgroup,group\nage,a,A\nage,b,B\nage,c,B\n"
                                 "sex,M,A\nsex,F,B\n");
  CHECK(run({"estimate-corr", "--input", two_vars.string(), "--collapse", plan2.string()}).code == 0);

  std::string patients = "arm,response,ae,time,event\n";
  for (int i = 0; i < 80; ++i) {
    const bool resp = (i * 7) % 5 < 2;
    patients += std::string(i % 2 ? "treatment" : "control") + "," + (resp ? "1" : "0") + "," +
                (resp ? "1" : "0") + "," + std::to_string(1 + i % 13) + ",1\n";
  }
  const fs::path pts = scratch("patients.csv", patients);
  const auto boot = run({"estimate-corr", "--method", "bootstrap", "--input", pts.string(),
                         "--B", "300", "--seed", "3", "--stat1", "orr_diff_z", "--stat2",
                         "ae_diff_z"});
  CHECK(boot.code == 0);
  const auto bj = nlohmann::json::parse(boot.out);
  CHECK(std::abs(bj.at("estimate").get<double>() - 1.0) <= 1e-9);
  CHECK(bj.at("n_resamples") == 300);
  CHECK(bj.at("method") == "bootstrap");
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == 1);
  CHECK(run({"no-such-command"}).code == 1);
  CHECK(run({"alpha-exact", "--bogus", "1"}).code == 1);
  CHECK(run({"alpha-exact", "--w", "abc"}).code == 1);
  const auto invalid = run({"alpha-exact", "--s", "1.5"});
  CHECK(invalid.code == 1);
  CHECK(count_lines(invalid.err) == 1);
  const auto psd = run({"winner-prob", "--rho-xy", "0.9", "--rho-xs", "0.9", "--rho-ys", "-0.9"});
  CHECK(psd.code == 2);
  CHECK(count_lines(psd.err) == 1);
  const auto arm_psd = run({"simulate", "--target", "type1-full", "--rho-ys", "-0.5", "--n",
                            "100000"});
  CHECK(arm_psd.code == 2);
  CHECK(arm_psd.err.find("{A,X,S}") != std::string::npos);
  const auto missing = run({"estimate-corr", "--input", "/nonexistent/file.csv"});
  CHECK(missing.code == 3);
  CHECK(run({"estimate-corr"}).code == 1);
}

TEST_CASE("help lists flags with defaults") {
  const auto top = run({"--help"});
  CHECK(top.code == 0);
  for (const char* cmd : {"winner-prob", "fig3", "alpha-exact", "adjust-p", "combine",
                          "alpha-combo", "fig4", "estimate-corr", "simulate"}) {
    CHECK(top.out.find(cmd) != std::string::npos);
    const auto h = run({cmd, "--help"});
    INFO(cmd);
    CHECK(h.code == 0);
    CHECK(h.out.find("--out") != std::string::npos);
    CHECK(h.out.find("--config") != std::string::npos);
  }
  const auto a = run({"alpha-exact", "--help"});
  CHECK(a.out.find("0.025") != std::string::npos);
  const auto w = run({"winner-prob", "--help"});
  CHECK(w.out.find("40") != std::string::npos);
  CHECK(w.out.find("--rho-ys") != std::string::npos);
}
