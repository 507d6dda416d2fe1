#pragma once

// Run orchestration behind the CLI subcommands. Every runner writes its CSV
// files plus summary.json into the output directory and refuses to mix
// results of different configurations there unless forced.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ehk/config.hpp"
#include "ehk/complex_dynamics.hpp"
#include "ehk/hk.hpp"
#include "ehk/oracle.hpp"
#include "ehk/spectra.hpp"
#include "ehk/tunneling.hpp"
#include "ehk/wkb.hpp"

namespace ehk {

namespace fs = std::filesystem;

struct RunOptions {
  bool force = false;
};

/// Creates `dir` and checks that it does not hold another config's results.
inline void prepare_output(const fs::path& dir, const std::string& hash, bool force) {
  fs::create_directories(dir);
  const fs::path summary = dir / "summary.json";
  if (force || !fs::exists(summary)) return;
  std::string old;
  try {
    old = load_json_file(summary.string()).value("config_hash", "");
  } catch (const ConfigError&) {
    old = "";
  }
  if (old != hash) {
    throw OutputConflict("'" + dir.string() + "' holds results of config " + (old.empty() ? "?" : old) +
                         "; this run is " + hash + " (use --force to overwrite)");
  }
}

inline std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw OutputConflict("cannot write '" + path.string() + "'");
  return os;
}

struct CorrelationRun {
  CorrelationSeries series;
  json stats = json::object();
  std::vector<std::string> warnings;
};

inline PropagationOptions propagation_options(const RunConfig& c) {
  PropagationOptions po;
  po.trajectory.tol = c.sampling.tol;
  po.trajectory.stride_points = c.sampling.stride_points;
  po.threads = c.threads;
  po.broaden = c.sampling.broaden;
  po.stratify = c.sampling.stratify;
  return po;
}

inline json stats_json(const EnsembleStats& s) {
  return {{"n_total", s.n_total},   {"n_failed", s.n_failed}, {"n_greater", s.n_greater},
          {"n_less", s.n_less},     {"n_jumped", s.n_jumped}, {"n_rerouted", s.n_rerouted},
          {"first_failure", s.first_failure}};
}

/// Runs the requested propagator on the configured packets and time grid.
inline CorrelationRun compute_correlation(const RunConfig& c, Propagator which) {
  const auto times = c.times.grid();
  CorrelationRun out;
  if (which == Propagator::Oracle) {
    GridLayout layout;
    out.series = oracle_correlation(c.potential, c.initial, c.final_, times, c.grid, c.hbar, &layout);
    out.stats = json{{"grid_n", layout.n},
                 {"x_min", layout.x_min},
                 {"x_max", layout.x_max},
                 {"absorber_strength", detail::opt(layout.absorber_strength)},
                 {"absorber_leakage", layout.absorber_leakage}};
    return out;
  }
  const PropagationOptions po = propagation_options(c);
  EnsembleResult r;
  if (which == Propagator::HK) {
    r = hk_correlation(c.potential, c.initial, c.final_, times, c.sampling.n_traj, c.sampling.seed, c.hbar, po);
  } else {
    r = ehk_correlation(c.potential, c.initial, c.final_, times, c.sampling.n_traj, c.sampling.seed, c.hbar, c.ehk, po);
  }
  out.series = std::move(r.total);
  out.stats = stats_json(r.stats);
  out.warnings = std::move(r.warnings);
  return out;
}

/// Soft problems with a config that do not stop a run.
inline std::vector<std::string> config_warnings(const RunConfig& c) {
  std::vector<std::string> w;
  const double depth = c.potential.v0 * c.potential.l * c.potential.l / (c.hbar * c.hbar);
  if (depth < 5.0) w.push_back("V0 l^2 m / hbar^2 = " + std::to_string(depth) + " < 5: the barrier is too low for semiclassics");
  return w;
}

inline void write_summary(const fs::path& dir, const std::string& command, const RunConfig& c, const json& extra,
                          double seconds) {
  json s;
  s["command"] = command;
  s["config_hash"] = config_hash(c);
  s["seed"] = c.sampling.seed;
  s["wall_time_s"] = seconds;
  s["config"] = to_json(c);
  for (const auto& [k, v] : extra.items()) s[k] = v;
  json warnings = s.value("warnings", json::array());
  if (command != "atlas")
    for (const auto& w : config_warnings(c)) warnings.push_back(w);
  s["warnings"] = warnings;
  auto os = open_output(dir / "summary.json");
  os << s.dump(2) << '\n';
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// correlation.csv (t,re,im,stderr) for the configured propagator.
inline json run_correlate(const RunConfig& c, const RunOptions& opt = {}, std::string command = "correlate") {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir(c.output);
  prepare_output(dir, config_hash(c), opt.force);
  const CorrelationRun r = compute_correlation(c, c.propagator);
  {
    auto os = open_output(dir / "correlation.csv");
    write_correlation_csv(os, r.series);
  }
  json extra{{"propagator", to_string(c.propagator)}, {"stats", r.stats}, {"warnings", r.warnings}};
  write_summary(dir, command, c, extra, detail::seconds_since(t0));
  return extra;
}

/// Same as correlate with the grid oracle as propagator.
inline json run_oracle(RunConfig c, const RunOptions& opt = {}) {
  c.propagator = Propagator::Oracle;
  return run_correlate(c, opt, "oracle");
}

/// Absolute energies requested by the transmit section.
inline std::pair<double, double> transmit_energy_range(const RunConfig& c, bool needs_band) {
  const double v0 = c.potential.v0;
  if (c.transmit.energy_range) return {c.transmit.energy_range->first * v0, c.transmit.energy_range->second * v0};
  std::pair<double, double> r{0.2 * v0, 0.9 * v0};
  if (needs_band) {
    const auto band = resolvable_band(c.initial, c.final_, c.hbar, c.transmit.band_threshold);
    r = {std::max(r.first, band.first), std::min(r.second, band.second)};
    if (!(r.second > r.first)) {
      throw BandExceeded("resolvable band [" + std::to_string(band.first / v0) + ", " + std::to_string(band.second / v0) +
                         "] V0 does not meet [0.2, 0.9] V0");
    }
  }
  return r;
}

/// transmission.csv (E_over_V0,P,method) with one block per method, plus
/// correlation_<method>.csv for every propagated curve.
inline json run_transmit(const RunConfig& c, const RunOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir(c.output);
  bool propagate = false;
  for (Method m : c.transmit.methods) propagate = propagate || m == Method::eHK || m == Method::HK;
  const auto [e_lo, e_hi] = transmit_energy_range(c, propagate);
  if (propagate) {
    // Fail before any output or propagation when the band cannot be resolved.
    const auto band = resolvable_band(c.initial, c.final_, c.hbar, c.transmit.band_threshold);
    if (e_lo < band.first * (1.0 - 1e-12) || e_hi > band.second * (1.0 + 1e-12)) {
      throw BandExceeded("requested E/V0 [" + std::to_string(e_lo / c.potential.v0) + ", " +
                         std::to_string(e_hi / c.potential.v0) + "] leaves the resolvable band [" +
                         std::to_string(band.first / c.potential.v0) + ", " +
                         std::to_string(band.second / c.potential.v0) + "]");
    }
  }
  prepare_output(dir, config_hash(c), opt.force);

  SpectrumOptions so;
  so.taper = c.transmit.taper;
  so.taper_fraction = c.transmit.taper_fraction;
  so.n_energies = c.transmit.n_energies;
  so.energy_range = std::pair{e_lo, e_hi};
  so.band_threshold = c.transmit.band_threshold;

  std::vector<TransmissionCurve> curves;
  json stats = json::object();
  std::vector<std::string> warnings;
  for (Method m : c.transmit.methods) {
    switch (m) {
      case Method::eHK:
      case Method::HK: {
        const CorrelationRun r = compute_correlation(c, m == Method::eHK ? Propagator::eHK : Propagator::HK);
        {
          auto os = open_output(dir / ("correlation_" + std::string(to_string(m)) + ".csv"));
          write_correlation_csv(os, r.series);
        }
        curves.push_back(transmission_from_correlation(r.series, c.initial, c.final_, c.hbar, so, m));
        stats[std::string(to_string(m))] = r.stats;
        warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
        break;
      }
      case Method::uniformWKB:
        curves.push_back(sample_transmission(
            [&](double e) { return uniform_wkb_transmission(c.potential, e, c.hbar); }, e_lo, e_hi, so.n_energies, m));
        break;
      case Method::exactFormula:
        if (c.potential.family != Family::Eckart) throw ConfigError("exactFormula is only available for the Eckart barrier");
        curves.push_back(sample_transmission(
            [&](double e) { return exact_eckart_transmission(c.potential.v0, c.potential.l, e, c.hbar); }, e_lo, e_hi,
            so.n_energies, m));
        break;
      case Method::gridFlux:
        curves.push_back(grid_transmission_scan(c.potential, e_lo, e_hi, c.hbar));
        break;
    }
  }
  {
    auto os = open_output(dir / "transmission.csv");
    os << "E_over_V0,P,method\n";
    for (const auto& curve : curves) write_transmission_rows(os, curve, c.potential.v0);
  }
  json extra{{"methods", json::array()}, {"stats", stats}, {"warnings", warnings}};
  for (Method m : c.transmit.methods) extra["methods"].push_back(to_string(m));
  write_summary(dir, "transmit", c, extra, detail::seconds_since(t0));
  return extra;
}

/// orbits.csv and burning_lines.csv for the atlas section.
inline json run_atlas(const RunConfig& c, const RunOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir(c.output);
  std::vector<ComplexState> starts = c.atlas.orbits;
  for (double x : c.atlas.class_c_starts) {
    starts.push_back(class_c_start(c.potential, x, 1.0));
    starts.push_back(class_c_start(c.potential, x, -1.0));
  }
  if (starts.empty()) throw ConfigError("atlas: no initial conditions");
  prepare_output(dir, config_hash(c), opt.force);
  AtlasOptions ao;
  ao.reference_energy = c.atlas.reference_energy;
  ao.n_samples = c.atlas.n_samples;
  ao.threads = c.threads;
  const AtlasDataset atlas = emit_orbit_atlas(c.potential, starts, c.atlas.t_max, c.atlas.tol, ao);
  {
    auto os = open_output(dir / "orbits.csv");
    write_orbits_csv(os, atlas);
  }
  {
    auto os = open_output(dir / "burning_lines.csv");
    write_lines_csv(os, atlas);
  }
  std::size_t failed = 0;
  json classes = json::object();
  for (const auto& o : atlas.orbits) {
    if (o.failure) {
      ++failed;
      continue;
    }
    classes[std::string(to_string(o.record.classification))] = classes.value(std::string(to_string(o.record.classification)), 0) + 1;
  }
  json extra{{"n_orbits", atlas.orbits.size()}, {"n_failed", failed}, {"classes", classes},
             {"burning_angle", detail::opt(atlas.burning_angle)}, {"line_offset", atlas.line_offset}};
  write_summary(dir, "atlas", c, extra, detail::seconds_since(t0));
  return extra;
}

/// wkb.csv: tunnelling actions and transmission estimates on 20 energies
/// spread over [0.05, 0.95] V0.
inline json run_wkb(const RunConfig& c, const RunOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir(c.output);
  prepare_output(dir, config_hash(c), opt.force);
  const double v0 = c.potential.v0;
  const bool eckart = c.potential.family == Family::Eckart;
  auto os = open_output(dir / "wkb.csv");
  os << "E_over_V0,W,W_closed_form,T,P_uniform_wkb,P_exact\n";
  for (int i = 0; i < 20; ++i) {
    const double e = v0 * (0.05 + 0.9 * i / 19.0);
    const TurningPoints tp = turning_points(c.potential, e);
    const double w = short_action(c.potential, e, tp.left, tp.right).magnitude();
    const double closed = eckart ? std::numbers::pi * c.potential.l * std::sqrt(2.0) * (std::sqrt(v0) - std::sqrt(e))
                                 : std::nan("");
    const double exact = eckart ? exact_eckart_transmission(v0, c.potential.l, e, c.hbar) : std::nan("");
    csv::row(os, e / v0, w, closed, std::exp(-w / c.hbar), uniform_wkb_transmission(c.potential, e, c.hbar), exact);
  }
  json extra{{"n_energies", 20}};
  write_summary(dir, "wkb", c, extra, detail::seconds_since(t0));
  return extra;
}

}  // namespace ehk
