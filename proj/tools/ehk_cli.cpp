// ehk_cli: figure recipes for the extended Herman-Kluk propagator.
//
//   ehk_cli correlate --preset fig2a --out out/fig2a
//   ehk_cli transmit  --config presets/fig3.json --threads 8
//   ehk_cli preset fig2b > my.json
//
// Settings are layered: preset, then --config (merged on top), then EHK_*
// environment variables, then the command-line flags.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "ehk/config.hpp"
#include "ehk/run.hpp"

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool force = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON run configuration");
  sub->add_option("--preset", c.preset, "named recipe: fig1, fig2a, fig2b, fig3");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--seed", c.seed, "sampling seed");
  sub->add_option("--threads", c.threads, "worker threads (0: all cores)");
  sub->add_flag("--force", c.force, "overwrite results of a different config");
}

ehk::RunConfig resolve(Common c) {
  if (c.preset.empty()) {
    if (const char* p = std::getenv("EHK_PRESET")) c.preset = p;
  }
  if (c.config.empty()) {
    if (const char* p = std::getenv("EHK_CONFIG")) c.config = p;
  }
  ehk::json j = ehk::to_json(c.preset.empty() ? ehk::RunConfig{} : ehk::preset(c.preset));
  if (!c.config.empty()) j.merge_patch(ehk::load_json_file(c.config));
  ehk::apply_env_overrides(j);
  if (!c.out.empty()) j["output"] = c.out;
  if (c.seed) j["sampling"]["seed"] = *c.seed;
  if (c.threads) j["threads"] = *c.threads;
  return ehk::config_from_json(j);
}

void write_error_record(const std::string& out_dir, const std::string& code, const std::string& message) {
  const ehk::json rec{{"status", "error"}, {"code", code}, {"message", message}};
  std::cerr << rec.dump() << '\n';
  if (out_dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::ofstream os(std::filesystem::path(out_dir) / "error.json");
  if (os) os << rec.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extended Herman-Kluk tunnelling: correlation functions, transmission and complex orbits"};
  app.require_subcommand(1);

  Common common;
  auto* atlas = app.add_subcommand("atlas", "complex-plane orbit atlas (orbits.csv, burning_lines.csv)");
  auto* correlate = app.add_subcommand("correlate", "c_fi(t) with the configured propagator (correlation.csv)");
  auto* transmit = app.add_subcommand("transmit", "P(E) for each configured method (transmission.csv)");
  auto* wkb = app.add_subcommand("wkb", "tunnelling actions and WKB transmission (wkb.csv)");
  auto* oracle = app.add_subcommand("oracle", "c_fi(t) from the split-operator grid (correlation.csv)");
  for (auto* s : {atlas, correlate, transmit, wkb, oracle}) add_common(s, common);

  std::string preset_name;
  auto* dump = app.add_subcommand("preset", "print a preset as a JSON config");
  dump->add_option("name", preset_name, "fig1, fig2a, fig2b or fig3")->required();

  CLI11_PARSE(app, argc, argv);

  std::string out_dir = common.out;
  try {
    if (dump->parsed()) {
      std::cout << ehk::to_json(ehk::preset(preset_name)).dump(2) << '\n';
      return 0;
    }
    const ehk::RunConfig cfg = resolve(common);
    out_dir = cfg.output;
    if (!atlas->parsed())
      for (const auto& w : ehk::config_warnings(cfg)) std::cerr << "warning: " << w << '\n';
    const ehk::RunOptions opt{common.force};
    ehk::json summary;
    if (atlas->parsed()) summary = ehk::run_atlas(cfg, opt);
    if (correlate->parsed()) summary = ehk::run_correlate(cfg, opt);
    if (transmit->parsed()) summary = ehk::run_transmit(cfg, opt);
    if (wkb->parsed()) summary = ehk::run_wkb(cfg, opt);
    if (oracle->parsed()) summary = ehk::run_oracle(cfg, opt);
    for (const auto& w : summary.value("warnings", ehk::json::array())) std::cerr << "warning: " << w.get<std::string>() << '\n';
    std::cout << "wrote " << cfg.output << " (config " << ehk::config_hash(cfg) << ")\n";
    return 0;
  } catch (const ehk::Error& e) {
    write_error_record(out_dir, e.code(), e.what());
  } catch (const ehk::json::exception& e) {
    write_error_record(out_dir, "ConfigError", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    write_error_record(out_dir, "OutputConflict", e.what());
  }
  return 2;
}
