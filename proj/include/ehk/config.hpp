#pragma once

// Run configuration: JSON documents with a schema_version, named presets for
// the figure recipes, EHK_* environment overrides and a stable config hash.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ehk/complex_dynamics.hpp"
#include "ehk/oracle.hpp"
#include "ehk/packet.hpp"
#include "ehk/potential.hpp"
#include "ehk/series.hpp"
#include "ehk/tunneling.hpp"

extern char** environ;

namespace ehk {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class Propagator { HK, eHK, Oracle };

inline std::string_view to_string(Propagator p) {
  switch (p) {
    case Propagator::HK: return "HK";
    case Propagator::eHK: return "eHK";
    case Propagator::Oracle: return "Oracle";
  }
  return "?";
}

inline Propagator parse_propagator(std::string_view s) {
  if (s == "HK") return Propagator::HK;
  if (s == "eHK") return Propagator::eHK;
  if (s == "Oracle") return Propagator::Oracle;
  throw ConfigError("unknown propagator '" + std::string(s) + "' (HK, eHK, Oracle)");
}

struct SamplingConfig {
  std::size_t n_traj = 50000;
  std::uint64_t seed = 1;
  double tol = 1e-8;
  std::size_t stride_points = 200;
  double stratify = 0.3;
  double broaden = 1.0;
};

struct TimesConfig {
  double t_max = 120.0;
  std::size_t n_samples = 121;

  std::vector<double> grid() const { return uniform_times(t_max, t_max > 0.0 ? n_samples : 1); }
};

struct TransmitConfig {
  std::vector<Method> methods{Method::eHK, Method::HK, Method::uniformWKB, Method::exactFormula};
  std::optional<std::pair<double, double>> energy_range;  // in units of V0; default: [0.2, 0.9] clipped to the band
  std::size_t n_energies = 400;
  bool taper = true;
  double taper_fraction = 0.2;
  double band_threshold = 1e-3;
};

struct AtlasConfig {
  std::vector<ComplexState> orbits;       // explicit starts (classes a and b)
  std::vector<double> class_c_starts;     // x_i of zero-energy class (c) starts, both signs of vy
  double t_max = 200.0;
  double tol = 1e-9;
  std::size_t n_samples = 400;
  std::optional<double> reference_energy;  // draws its real-axis turning points
};

struct RunConfig {
  PotentialSpec potential = PotentialSpec::eckart(12.5, 1.0);
  GaussianPacket initial{6.0, 40.0, -std::sqrt(12.5 / 4.0)};
  GaussianPacket final_{6.0, -40.0, -std::sqrt(12.5 / 4.0)};
  Propagator propagator = Propagator::eHK;
  EhkConfig ehk;
  SamplingConfig sampling;
  GridConfig grid;
  TimesConfig times;
  TransmitConfig transmit;
  AtlasConfig atlas;
  double hbar = 1.0;
  unsigned threads = 0;  // 0: hardware concurrency; does not enter the hash
  std::string output = "out";

  void validate() const {
    potential.validate();
    initial.validate();
    final_.validate();
    ehk.validate(potential);
    if (!(hbar > 0.0)) throw ConfigError("hbar must be positive");
    if (sampling.n_traj == 0) throw ConfigError("sampling.n_traj must be >= 1");
    if (!(sampling.tol > 0.0)) throw ConfigError("sampling.tol must be positive");
    if (!(sampling.stratify >= 0.0 && sampling.stratify < 1.0)) throw ConfigError("sampling.stratify must lie in [0, 1)");
    if (!(sampling.broaden > 0.0)) throw ConfigError("sampling.broaden must be positive");
    if (!(times.t_max >= 0.0)) throw ConfigError("times.t_max must be >= 0");
    if (times.t_max > 0.0 && times.n_samples < 2) throw ConfigError("times.n_samples must be >= 2");
    if (grid.n < 16 || (grid.n & (grid.n - 1)) != 0) throw ConfigError("grid.n must be a power of two >= 16");
    if (!(grid.dt > 0.0)) throw ConfigError("grid.dt must be positive");
    if (transmit.energy_range && !(transmit.energy_range->second > transmit.energy_range->first &&
                                   transmit.energy_range->first > 0.0)) {
      throw ConfigError("transmit.energy_range must be an increasing pair of positive E/V0 values");
    }
    if (transmit.methods.empty()) throw ConfigError("transmit.methods is empty");
  }
};

// ---------------------------------------------------------------- JSON

namespace detail {

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& dst) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    dst.reset();
    return;
  }
  T v{};
  read(j, key, v);
  dst = v;
}

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

inline void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (auto key : keys) known = known || key == k;
    if (!known) throw ConfigError("unknown key '" + k + "' in " + std::string(where));
  }
}

}  // namespace detail

inline json to_json(const PotentialSpec& s) {
  json j{{"family", to_string(s.family)}, {"v0", s.v0}, {"l", s.l}, {"k", s.k}, {"pole_exclusion", s.pole_exclusion}};
  j["drive"] = s.drive ? json{{"amplitude", s.drive->amplitude}, {"omega", s.drive->omega}} : json(nullptr);
  return j;
}

inline PotentialSpec potential_from_json(const json& j) {
  detail::check_keys(j, "potential", {"family", "v0", "l", "k", "pole_exclusion", "drive"});
  PotentialSpec s;
  std::string family = "eckart";
  detail::read(j, "family", family);
  s.family = parse_family(family);
  detail::read(j, "v0", s.v0);
  detail::read(j, "l", s.l);
  detail::read(j, "k", s.k);
  detail::read(j, "pole_exclusion", s.pole_exclusion);
  if (j.contains("drive") && !j["drive"].is_null()) {
    detail::check_keys(j["drive"], "potential.drive", {"amplitude", "omega"});
    Drive d;
    detail::read(j["drive"], "amplitude", d.amplitude);
    detail::read(j["drive"], "omega", d.omega);
    s.drive = d;
  }
  return s;
}

inline json to_json(const GaussianPacket& g) { return {{"gamma", g.gamma}, {"q", g.q}, {"p", g.p}}; }

inline GaussianPacket packet_from_json(const json& j, std::string_view where) {
  detail::check_keys(j, where, {"gamma", "q", "p"});
  GaussianPacket g;
  detail::read(j, "gamma", g.gamma);
  detail::read(j, "q", g.q);
  detail::read(j, "p", g.p);
  return g;
}

inline json to_json(const RunConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["potential"] = to_json(c.potential);
  j["packets"] = {{"initial", to_json(c.initial)}, {"final", to_json(c.final_)}};
  j["propagator"] = to_string(c.propagator);
  j["ehk"] = {{"delta_pb", detail::opt(c.ehk.delta_pb)},
              {"jump_policy", "InstantJump"},
              {"max_jumps", c.ehk.max_jumps},
              {"jump_phase", to_string(c.ehk.jump_phase)},
              {"strict_jump_budget", c.ehk.strict_jump_budget}};
  j["sampling"] = {{"n_traj", c.sampling.n_traj},       {"seed", c.sampling.seed},
                   {"tol", c.sampling.tol},             {"stride_points", c.sampling.stride_points},
                   {"stratify", c.sampling.stratify},   {"broaden", c.sampling.broaden}};
  j["grid"] = {{"n", c.grid.n},
               {"half_width", detail::opt(c.grid.half_width)},
               {"dt", c.grid.dt},
               {"absorber", c.grid.absorber},
               {"absorber_fraction", c.grid.absorber_fraction},
               {"absorber_strength", detail::opt(c.grid.absorber_strength)},
               {"edge_threshold", c.grid.edge_threshold},
               {"target_leakage", c.grid.target_leakage},
               {"grow", c.grid.grow},
               {"max_growth", c.grid.max_growth}};
  j["times"] = {{"t_max", c.times.t_max}, {"n_samples", c.times.n_samples}};
  json methods = json::array();
  for (Method m : c.transmit.methods) methods.push_back(to_string(m));
  j["transmit"] = {{"methods", methods},
                   {"energy_range", c.transmit.energy_range
                                        ? json::array({c.transmit.energy_range->first, c.transmit.energy_range->second})
                                        : json(nullptr)},
                   {"n_energies", c.transmit.n_energies},
                   {"taper", c.transmit.taper},
                   {"taper_fraction", c.transmit.taper_fraction},
                   {"band_threshold", c.transmit.band_threshold}};
  json orbits = json::array();
  for (const auto& s : c.atlas.orbits) orbits.push_back({{"x", s.x}, {"y", s.y}, {"vx", s.vx}, {"vy", s.vy}});
  j["atlas"] = {{"orbits", orbits},
                {"class_c_starts", c.atlas.class_c_starts},
                {"t_max", c.atlas.t_max},
                {"tol", c.atlas.tol},
                {"n_samples", c.atlas.n_samples},
                {"reference_energy", detail::opt(c.atlas.reference_energy)}};
  j["hbar"] = c.hbar;
  j["threads"] = c.threads;
  j["output"] = c.output;
  return j;
}

/// Parses a config document. Missing keys keep their defaults; unknown keys
/// are rejected so that typos do not silently change a run.
inline RunConfig config_from_json(const json& j) {
  detail::check_keys(j, "config", {"schema_version", "potential", "packets", "propagator", "ehk", "sampling", "grid",
                                   "times", "transmit", "atlas", "hbar", "threads", "output"});
  int version = 0;
  detail::read(j, "schema_version", version);
  if (version != kSchemaVersion) {
    throw ConfigError("schema_version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
  RunConfig c;
  if (j.contains("potential")) c.potential = potential_from_json(j["potential"]);
  if (j.contains("packets")) {
    const json& p = j["packets"];
    detail::check_keys(p, "packets", {"initial", "final"});
    if (p.contains("initial")) c.initial = packet_from_json(p["initial"], "packets.initial");
    if (p.contains("final")) c.final_ = packet_from_json(p["final"], "packets.final");
  }
  if (j.contains("propagator")) c.propagator = parse_propagator(j["propagator"].get<std::string>());
  if (j.contains("ehk")) {
    const json& e = j["ehk"];
    detail::check_keys(e, "ehk", {"delta_pb", "jump_policy", "max_jumps", "jump_phase", "strict_jump_budget"});
    detail::read(e, "delta_pb", c.ehk.delta_pb);
    if (e.contains("jump_policy") && e["jump_policy"] != "InstantJump") {
      throw ConfigError("unknown jump_policy (only InstantJump is implemented)");
    }
    detail::read(e, "max_jumps", c.ehk.max_jumps);
    if (e.contains("jump_phase")) c.ehk.jump_phase = parse_jump_phase(e["jump_phase"].get<std::string>());
    detail::read(e, "strict_jump_budget", c.ehk.strict_jump_budget);
  }
  if (j.contains("sampling")) {
    const json& s = j["sampling"];
    detail::check_keys(s, "sampling", {"n_traj", "seed", "tol", "stride_points", "stratify", "broaden"});
    detail::read(s, "n_traj", c.sampling.n_traj);
    detail::read(s, "seed", c.sampling.seed);
    detail::read(s, "tol", c.sampling.tol);
    detail::read(s, "stride_points", c.sampling.stride_points);
    detail::read(s, "stratify", c.sampling.stratify);
    detail::read(s, "broaden", c.sampling.broaden);
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    detail::check_keys(g, "grid", {"n", "half_width", "dt", "absorber", "absorber_fraction", "absorber_strength",
                                   "edge_threshold", "target_leakage", "grow", "max_growth"});
    detail::read(g, "n", c.grid.n);
    detail::read(g, "half_width", c.grid.half_width);
    detail::read(g, "dt", c.grid.dt);
    detail::read(g, "absorber", c.grid.absorber);
    detail::read(g, "absorber_fraction", c.grid.absorber_fraction);
    detail::read(g, "absorber_strength", c.grid.absorber_strength);
    detail::read(g, "edge_threshold", c.grid.edge_threshold);
    detail::read(g, "target_leakage", c.grid.target_leakage);
    detail::read(g, "grow", c.grid.grow);
    detail::read(g, "max_growth", c.grid.max_growth);
  }
  if (j.contains("times")) {
    detail::check_keys(j["times"], "times", {"t_max", "n_samples"});
    detail::read(j["times"], "t_max", c.times.t_max);
    detail::read(j["times"], "n_samples", c.times.n_samples);
  }
  if (j.contains("transmit")) {
    const json& t = j["transmit"];
    detail::check_keys(t, "transmit", {"methods", "energy_range", "n_energies", "taper", "taper_fraction", "band_threshold"});
    if (t.contains("methods")) {
      c.transmit.methods.clear();
      for (const auto& m : t["methods"]) c.transmit.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (t.contains("energy_range")) {
      if (t["energy_range"].is_null()) {
        c.transmit.energy_range.reset();
      } else {
        const auto r = t["energy_range"].get<std::vector<double>>();
        if (r.size() != 2) throw ConfigError("transmit.energy_range needs two values");
        c.transmit.energy_range = std::pair{r[0], r[1]};
      }
    }
    detail::read(t, "n_energies", c.transmit.n_energies);
    detail::read(t, "taper", c.transmit.taper);
    detail::read(t, "taper_fraction", c.transmit.taper_fraction);
    detail::read(t, "band_threshold", c.transmit.band_threshold);
  }
  if (j.contains("atlas")) {
    const json& a = j["atlas"];
    detail::check_keys(a, "atlas", {"orbits", "class_c_starts", "t_max", "tol", "n_samples", "reference_energy"});
    if (a.contains("orbits")) {
      c.atlas.orbits.clear();
      for (const auto& o : a["orbits"]) {
        detail::check_keys(o, "atlas.orbits[]", {"x", "y", "vx", "vy"});
        ComplexState s;
        detail::read(o, "x", s.x);
        detail::read(o, "y", s.y);
        detail::read(o, "vx", s.vx);
        detail::read(o, "vy", s.vy);
        c.atlas.orbits.push_back(s);
      }
    }
    detail::read(a, "class_c_starts", c.atlas.class_c_starts);
    detail::read(a, "t_max", c.atlas.t_max);
    detail::read(a, "tol", c.atlas.tol);
    detail::read(a, "n_samples", c.atlas.n_samples);
    detail::read(a, "reference_energy", c.atlas.reference_energy);
  }
  detail::read(j, "hbar", c.hbar);
  detail::read(j, "threads", c.threads);
  detail::read(j, "output", c.output);
  c.validate();
  return c;
}

// ---------------------------------------------------------------- presets

namespace detail {

/// Eckart scattering between mirror packets with V0 / (p^2/2) = 8.
inline RunConfig eckart_mirror(double v0, double q_i) {
  RunConfig c;
  c.potential = PotentialSpec::eckart(v0, 1.0);
  const double p = -std::sqrt(v0 / 4.0);
  c.initial = {6.0, q_i, p};
  c.final_ = {6.0, -q_i, p};
  return c;
}

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig1", "fig2a", "fig2b", "fig3"};
  return names;
}

inline RunConfig preset(std::string_view name) {
  if (name == "fig1") {
    RunConfig c;
    c.potential = PotentialSpec::algebraic(2, 1.0, 1.0);
    // vx < 0, vy > 0 starts: large |eps_im| crosses x = 0, small stays right
    for (double x : {2.0, 3.0, 4.0}) c.atlas.orbits.push_back({x, 0.0, -0.15, 0.02, 0.0});
    c.atlas.orbits.push_back({2.0, 0.0, -0.3, 0.5, 0.0});
    c.atlas.orbits.push_back({3.0, 0.0, -0.2, 0.6, 0.0});
    c.atlas.orbits.push_back({2.0, 0.0, -0.05, 0.5, 0.0});
    c.atlas.class_c_starts = {1.5, 2.0, 3.0, 5.0};
    c.atlas.t_max = 3000.0;
    c.atlas.reference_energy = 0.5;
    c.output = "out/fig1";
    return c;
  }
  if (name == "fig2a") {
    RunConfig c = detail::eckart_mirror(12.5, 40.0);
    c.times = {120.0, 121};
    c.output = "out/fig2a";
    return c;
  }
  if (name == "fig2b") {
    RunConfig c = detail::eckart_mirror(12.5, 15.0);
    // q_i A / V0 = -0.75, Omega / sqrt(V0 / 2 l^2) = 0.02
    c.potential = c.potential.with_drive(-0.75 * 12.5 / 15.0, 0.02 * std::sqrt(12.5 / 2.0));
    c.times = {120.0, 241};
    // the drive pumps momentum; dt = 0.01 misses the late revival by ~40%
    c.grid.dt = 0.005;
    c.output = "out/fig2b";
    return c;
  }
  if (name == "fig3") {
    RunConfig c = detail::eckart_mirror(12.5, 40.0);
    c.times = {160.0, 641};
    c.transmit.energy_range = std::pair{0.2, 0.9};
    c.output = "out/fig3";
    return c;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "' (fig1, fig2a, fig2b, fig3)");
}

// ---------------------------------------------------------------- overrides

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

/// Applies EHK_<SECTION>__<KEY>=value overrides (double underscore descends
/// one level, e.g. EHK_SAMPLING__N_TRAJ=1000, EHK_HBAR=0.5). Values are read
/// as JSON when they parse, otherwise as strings. EHK_PRESET and EHK_CONFIG
/// are reserved for the CLI.
inline void apply_env_overrides(json& j, char** env = environ) {
  if (env == nullptr) return;
  std::vector<std::pair<std::string, std::string>> vars;
  for (char** e = env; *e != nullptr; ++e) {
    std::string_view kv(*e);
    if (!kv.starts_with("EHK_")) continue;
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    vars.emplace_back(std::string(kv.substr(4, eq - 4)), std::string(kv.substr(eq + 1)));
  }
  std::sort(vars.begin(), vars.end());
  for (const auto& [name, raw] : vars) {
    if (name == "PRESET" || name == "CONFIG") continue;
    std::string path = lowercase(name);
    json* node = &j;
    std::size_t start = 0;
    for (;;) {
      const auto sep = path.find("__", start);
      const std::string key = path.substr(start, sep == std::string::npos ? std::string::npos : sep - start);
      if (sep == std::string::npos) {
        json value = json::parse(raw, nullptr, false);
        (*node)[key] = value.is_discarded() ? json(raw) : value;
        break;
      }
      if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = json::object();
      node = &(*node)[key];
      start = sep + 2;
    }
  }
}

/// FNV-1a over the canonical dump, with `output` and `threads` removed:
/// neither changes the numbers a run produces.
inline std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j.erase("output");
  j.erase("threads");
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

}  // namespace ehk
