#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "ehk/run.hpp"

using namespace ehk;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("ehk_cli_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig small_run(const fs::path& out) {
  RunConfig c = preset("fig2a");
  c.sampling.n_traj = 1200;
  c.times = {40.0, 40};
  c.output = out.string();
  return c;
}

int run_cli(const std::string& args) { return std::system((std::string(EHK_CLI_PATH) + " " + args).c_str()); }

}  // namespace

TEST(Cli, CorrelateWritesCsvAndSummary) {
  const auto dir = scratch("correlate");
  const RunConfig c = small_run(dir);
  run_correlate(c);
  const std::string csv = slurp(dir / "correlation.csv");
  EXPECT_EQ(csv.rfind("t,re,im,stderr\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 42);
  const json s = load_json_file((dir / "summary.json").string());
  EXPECT_EQ(s["config_hash"], config_hash(c));
  EXPECT_EQ(s["seed"], 1);
  EXPECT_EQ(s["command"], "correlate");
  EXPECT_EQ(s["stats"]["n_total"], 1200);
}

TEST(Cli, ByteIdenticalAcrossWorkerCounts) {
  std::string ref;
  for (unsigned threads : {1u, 4u, 8u}) {
    const auto dir = scratch("threads" + std::to_string(threads));
    RunConfig c = small_run(dir);
    c.threads = threads;
    run_correlate(c);
    const std::string csv = slurp(dir / "correlation.csv");
    if (ref.empty()) ref = csv;
    EXPECT_EQ(csv, ref) << threads << " workers";
  }
}

TEST(Cli, RefusesForeignOutputUnlessForced) {
  const auto dir = scratch("conflict");
  RunConfig c = small_run(dir);
  c.sampling.n_traj = 100;
  run_correlate(c);
  EXPECT_NO_THROW(run_correlate(c));  // same config may rerun
  c.sampling.seed = 2;
  EXPECT_THROW(run_correlate(c), OutputConflict);
  EXPECT_NO_THROW(run_correlate(c, RunOptions{true}));
  EXPECT_EQ(load_json_file((dir / "summary.json").string())["seed"], 2);
}

TEST(Cli, TransmitWritesAllMethods) {
  const auto dir = scratch("transmit");
  RunConfig c = small_run(dir);
  c.transmit.methods = {Method::HK, Method::uniformWKB, Method::exactFormula};
  c.transmit.n_energies = 10;
  run_transmit(c);
  const std::string csv = slurp(dir / "transmission.csv");
  EXPECT_EQ(csv.rfind("E_over_V0,P,method\n", 0), 0u);
  for (const char* m : {",HK\n", ",uniformWKB\n", ",exactFormula\n"}) EXPECT_NE(csv.find(m), std::string::npos) << m;
  EXPECT_TRUE(fs::exists(dir / "correlation_HK.csv"));
}

TEST(Cli, TransmitRejectsUnresolvableBandBeforeWriting) {
  const auto dir = scratch("band");
  RunConfig c = small_run(dir);
  c.transmit.energy_range = std::pair{0.2, 6.0};  // the band ends near 4.7 V0
  EXPECT_THROW(run_transmit(c), BandExceeded);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Cli, WkbTable) {
  const auto dir = scratch("wkb");
  RunConfig c = small_run(dir);
  run_wkb(c);
  std::istringstream in(slurp(dir / "wkb.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "E_over_V0,W,W_closed_form,T,P_uniform_wkb,P_exact");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    double e, w, wc;
    char comma;
    std::istringstream ls(line);
    ls >> e >> comma >> w >> comma >> wc;
    EXPECT_LT(std::abs(w / wc - 1.0), 1e-8);
  }
  EXPECT_EQ(rows, 20);
}

TEST(Cli, AtlasPreset) {
  const auto dir = scratch("atlas");
  RunConfig c = preset("fig1");
  c.output = dir.string();
  const json s = run_atlas(c);
  EXPECT_GT(s["classes"].value("a", 0), 0);
  EXPECT_GT(s["classes"].value("b", 0), 0);
  EXPECT_GT(s["classes"].value("c", 0), 0);
  EXPECT_TRUE(fs::exists(dir / "orbits.csv"));
  EXPECT_TRUE(fs::exists(dir / "burning_lines.csv"));
}

TEST(Cli, WarnsOnShallowBarrier) {
  RunConfig c;
  c.hbar = 2.0;
  EXPECT_FALSE(config_warnings(c).empty());
  EXPECT_TRUE(config_warnings(RunConfig{}).empty());
}

TEST(Cli, BinaryEndToEnd) {
  const auto dir = scratch("binary");
  EXPECT_EQ(run_cli("wkb --preset fig2a --out " + dir.string() + " > /dev/null"), 0);
  EXPECT_TRUE(fs::exists(dir / "wkb.csv"));
  // a different seed into the same directory is refused with a JSON error record
  EXPECT_NE(run_cli("wkb --preset fig2a --seed 5 --out " + dir.string() + " 2> /dev/null"), 0);
  const json err = load_json_file((dir / "error.json").string());
  EXPECT_EQ(err["status"], "error");
  EXPECT_EQ(err["code"], "OutputConflict");
  EXPECT_EQ(run_cli("wkb --preset fig2a --seed 5 --force --out " + dir.string() + " > /dev/null"), 0);
  // environment overrides sit between config file and flags
  const auto env_dir = scratch("env");
  EXPECT_EQ(run_cli("wkb --preset fig2a --out " + env_dir.string() + " > /dev/null"), 0);
  EXPECT_EQ(std::system(("EHK_HBAR=0.5 " + std::string(EHK_CLI_PATH) + " wkb --preset fig2a --force --out " +
                         env_dir.string() + " > /dev/null")
                            .c_str()),
            0);
  EXPECT_EQ(load_json_file((env_dir / "summary.json").string())["config"]["hbar"], 0.5);
  EXPECT_NE(run_cli("wkb --preset nope --out " + scratch("nope").string() + " 2> /dev/null"), 0);
  EXPECT_EQ(run_cli("preset fig3 > " + (fs::path(::testing::TempDir()) / "fig3.json").string()), 0);
  EXPECT_EQ(load_json_file((fs::path(::testing::TempDir()) / "fig3.json").string()), to_json(preset("fig3")));
}
