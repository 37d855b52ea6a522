// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dkp/config.hpp"
#include "dkp/report.hpp"

using namespace dkp;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DKPLAB_BIN) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing: sections, comments, quoting") {
  const auto kv = KeyValueConfig::parse(
      "# comment\n[mesh]\nn = 2\nJ = 5 # trailing\n[field]\npreset = "
      "\"dkp_smooth\"\ndelta = 0.1\n");
  CHECK(kv.get_int("mesh.J", 0) == 5);
  CHECK(kv.get_str("field.preset", "") == "dkp_smooth");
  CHECK(kv.get_num("field.delta", 0) == 0.1);
}

TEST_CASE("config rejects unknown keys and malformed values") {
  const auto kv = KeyValueConfig::parse("[mesh]\nbogus = 1\n");
  CHECK_THROWS_AS(ExperimentConfig::from(kv), ConfigError);
  const auto kv2 = KeyValueConfig::parse("[mesh]\nJ = five\n");
  CHECK_THROWS_AS(ExperimentConfig::from(kv2), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("[mesh\nJ = 5\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("novalue\n"), ConfigError);
}

TEST_CASE("config validates module preconditions upfront") {
  CHECK_THROWS_AS(ExperimentConfig::from(KeyValueConfig::parse("[mesh]\nJ = 99\n")),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from(KeyValueConfig::parse("[mesh]\nn = 4\n")),
                  ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::from(KeyValueConfig::parse("[probe]\np = 0.5\n")),
      ConfigError);
}

TEST_CASE("cli: validation failures exit with code 2") {
  CHECK(run_cli("solve --preset dkp_smooth --J 99") == 2);
  CHECK(run_cli("probe nosuchprobe") == 2);
  CHECK(run_cli("analyze --norm dkp --preset whitney_piecewise --J 4") == 2);
}

TEST_CASE("cli: analyze on a constant field reports zero") {
  const fs::path dir = fs::temp_directory_path() / "dkplab_test_analyze";
  fs::remove_all(dir);
  CHECK(run_cli("analyze --preset constant --J 4 --out " + dir.string() +
                " --timestamp fixed") == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(j["schema"] == 1);
  CHECK(j["norm"].get<double>() <= 1e-12);
  CHECK(fs::exists(dir / "tents.csv"));
}

TEST_CASE("cli: probe writes report.json and cases.csv; reruns are identical") {
  const fs::path dir = fs::temp_directory_path() / "dkplab_test_probe";
  fs::remove_all(dir);
  const std::string base = "probe regularity --preset dkp_smooth --delta 0.1 "
                           "--J 4 --p 2 --family trig --timestamp fixed --out ";
  CHECK(run_cli(base + (dir / "a").string()) == 0);
  CHECK(run_cli(base + (dir / "b").string()) == 0);
  const std::string ja = slurp(dir / "a" / "report.json");
  const std::string jb = slurp(dir / "b" / "report.json");
  CHECK(ja == jb);  // byte identical with a pinned timestamp
  CHECK(fs::exists(dir / "a" / "cases.csv"));
  CHECK(fs::exists(dir / "a" / "regularity.dat"));
  const auto j = nlohmann::json::parse(ja);
  CHECK(j["probe"] == "regularity");
  CHECK(j["cases"].size() == 4);
}

TEST_CASE("cli: config file with flag overrides") {
  const fs::path dir = fs::temp_directory_path() / "dkplab_test_cfg";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "exp.cfg");
    cfg << "[mesh]\nJ = 4\n[field]\npreset = constant\n[probe]\np = 2\n";
  }
  // flag overrides the file preset
  CHECK(run_cli("probe dirichlet --config " + (dir / "exp.cfg").string() +
                " --preset dkp_smooth --family trig --timestamp fixed --out " +
                (dir / "out").string()) == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
  CHECK(j["preset"] == "dkp_smooth");
}

TEST_CASE("report merge: corrupt files are skipped with a warning") {
  const fs::path dir = fs::temp_directory_path() / "dkplab_test_merge";
  fs::remove_all(dir);
  fs::create_directories(dir);
  CHECK(run_cli("probe regularity --preset dkp_smooth --J 4 --family trig "
                "--timestamp fixed --out " + (dir / "r1").string()) == 0);
  CHECK(run_cli("probe regularity --preset dkp_smooth --J 5 --family trig "
                "--timestamp fixed --out " + (dir / "r2").string()) == 0);
  write_text(dir / "corrupt.json", "this is not json");
  CHECK(run_cli("report " + (dir / "r1" / "report.json").string() + " " +
                (dir / "r2" / "report.json").string() + " " +
                (dir / "corrupt.json").string() + " --out " +
                (dir / "merged").string()) == 0);
  const std::string csv = slurp(dir / "merged" / "merged.csv");
  CHECK(csv.find("regularity") != std::string::npos);
  // two valid rows plus header
  int lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 3);

  // all-corrupt input fails
  CHECK(run_cli("report " + (dir / "corrupt.json").string()) == 2);
}

TEST_CASE("cli: solve writes nodal csv and a summary") {
  const fs::path dir = fs::temp_directory_path() / "dkplab_test_solve";
  fs::remove_all(dir);
  CHECK(run_cli("solve --preset dkp_smooth --delta 0.1 --data cos:1 --J 4 "
                "--timestamp fixed --out " + dir.string()) == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(j["residual"].get<double>() <= 1e-10);
  CHECK(j.contains("energy"));
  const std::string csv = slurp(dir / "u.csv");
  CHECK(csv.rfind("x,t,u", 0) == 0);
}

TEST_CASE("merged report json helpers") {
  ProbeReport rep;
  rep.probe = "regularity";
  rep.preset = "p";
  rep.params = {{"J", 5.0}, {"p", 2.0}};
  ProbeCase c;
  c.id = "cos1";
  c.num = 2;
  c.den = 1;
  c.ratio = 2;
  rep.cases.push_back(c);
  rep.finalize();
  const Json j = probe_report_json(rep);
  CHECK(j["max_ratio"] == 2.0);
  CHECK(j["cases"][0]["id"] == "cos1");
}
