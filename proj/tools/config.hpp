#pragma once

// Experiment configuration: defaults, JSON config file (unknown keys are
// rejected with their path), then command-line flags on top.

#include <cstdint>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include "json.hpp"

#include "lmf/error.hpp"

namespace lmf::cli {

struct Config {
  std::uint64_t seed = 1;
  std::string scale = "desk";
  std::string out = "lmf_out";
  unsigned threads = 0;
  std::string tape;              // input tape CSV; empty: simulate
  std::string calibration_file;  // CalibrationTable JSON

  struct Simulation {
    double alpha = 1.5;
    std::int64_t n_st = 100;
    std::int64_t n_events = 1000000;
    double heterogeneity = 0;  // Pareto shape of intensities; 0 = homogeneous
    std::int64_t ticks_per_day = 0;
  } simulation;

  struct Classification {
    double theta = 0.01;
    int gap_days = 1;
    int utc_offset_minutes = 0;
  } classification;

  struct Estimation {
    std::int64_t tau_max = 10000;
    double delta = 0.05;
    std::int64_t psd_half_width = 5;
    std::int64_t dfa_boxes = 24;
  } estimation;

  struct Calibration {
    std::string method = "acf";  // acf | psd | both
    std::int64_t points = 50;
    std::int64_t replicates = 20;
    double alpha_min = 1.05, alpha_max = 1.95;
    std::int64_t n_st_min = 50, n_st_max = 500;
    std::int64_t n_events_min = 500000, n_events_max = 5000000;
    double max_failure = 0.05;
    bool split = true;  // calibrate on an ensemble disjoint from the evaluated one
  } calibration;
};

enum Group : unsigned {
  kCommon = 1,
  kSource = 2,
  kSimulation = 4,
  kClassification = 8,
  kEstimation = 16,
  kCalibration = 32,
  kCalibrationFile = 64,
};

/// One configurable value: its JSON path, its flag, and how to set it.
struct Field {
  std::string path;  // "simulation.alpha"
  std::string flag;  // "--alpha"
  std::string help;
  unsigned group;
  std::function<void(const nlohmann::json&)> set;
  std::function<nlohmann::json()> get;
};

namespace detail {

template <typename T>
Field make_field(std::string path, std::string flag, std::string help, unsigned group, T& slot) {
  auto set = [&slot, path](const nlohmann::json& v) {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path + ": expected a string");
      slot = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
      slot = v.get<bool>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path + ": expected a number");
      slot = v.get<T>();
    } else {
      if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(path + ": expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && v.get<std::int64_t>() < 0)
        throw ConfigError(path + ": must be non-negative");
      slot = v.get<T>();
    }
  };
  auto get = [&slot] { return nlohmann::json(slot); };
  return {std::move(path), std::move(flag), std::move(help), group, set, get};
}

}  // namespace detail

inline std::vector<Field> fields(Config& c) {
  using detail::make_field;
  auto& s = c.simulation;
  auto& k = c.classification;
  auto& e = c.estimation;
  auto& b = c.calibration;
  return {
      make_field("seed", "--seed", "master RNG seed", kCommon, c.seed),
      make_field("scale", "--scale", "desk | full", kCommon, c.scale),
      make_field("out", "--out", "output directory", kCommon, c.out),
      make_field("threads", "--threads", "worker threads (0: all cores)", kCommon, c.threads),
      make_field("tape", "--tape", "input tape CSV (default: simulate)", kSource, c.tape),
      make_field("calibration_file", "--calibration", "calibration table JSON", kCalibrationFile,
                 c.calibration_file),
      make_field("simulation.alpha", "--alpha", "metaorder tail exponent", kSimulation, s.alpha),
      make_field("simulation.n_st", "--n-st", "number of splitting traders", kSimulation, s.n_st),
      make_field("simulation.n_events", "--n-events", "market orders to simulate", kSimulation, s.n_events),
      make_field("simulation.heterogeneity", "--heterogeneity", "Pareto shape of trader intensities (0: uniform)",
                 kSimulation, s.heterogeneity),
      make_field("simulation.ticks_per_day", "--ticks-per-day", "ticks per business day (0: one day)", kSimulation,
                 s.ticks_per_day),
      make_field("classification.theta", "--theta", "runs-test significance level", kClassification, k.theta),
      make_field("classification.gap_days", "--gap-days", "business-day gap that ends a run", kClassification,
                 k.gap_days),
      make_field("classification.utc_offset_minutes", "--utc-offset", "minutes added to tape timestamps",
                 kClassification, k.utc_offset_minutes),
      make_field("estimation.tau_max", "--tau-max", "largest ACF lag", kEstimation, e.tau_max),
      make_field("estimation.delta", "--delta", "log-smoothing width (decades)", kEstimation, e.delta),
      make_field("estimation.psd_half_width", "--psd-half-width", "PSD moving-average half width", kEstimation,
                 e.psd_half_width),
      make_field("estimation.dfa_boxes", "--dfa-boxes", "number of DFA box sizes", kEstimation, e.dfa_boxes),
      make_field("calibration.method", "--method", "acf | psd | both", kCalibration, b.method),
      make_field("calibration.points", "--points", "ensemble size", kCalibration, b.points),
      make_field("calibration.replicates", "--replicates", "independent replicates", kCalibration, b.replicates),
      make_field("calibration.alpha_min", "--alpha-min", "ensemble alpha lower bound", kCalibration, b.alpha_min),
      make_field("calibration.alpha_max", "--alpha-max", "ensemble alpha upper bound", kCalibration, b.alpha_max),
      make_field("calibration.n_st_min", "--n-st-min", "ensemble N_ST lower bound", kCalibration, b.n_st_min),
      make_field("calibration.n_st_max", "--n-st-max", "ensemble N_ST upper bound", kCalibration, b.n_st_max),
      make_field("calibration.n_events_min", "--n-events-min", "ensemble N lower bound", kCalibration,
                 b.n_events_min),
      make_field("calibration.n_events_max", "--n-events-max", "ensemble N upper bound", kCalibration,
                 b.n_events_max),
      make_field("calibration.max_failure", "--max-failure", "tolerated fraction of failed estimations",
                 kCalibration, b.max_failure),
      make_field("calibration.split", "--split", "calibrate on a disjoint ensemble (true/false)", kCalibration,
                 b.split),
  };
}

/// Applies a JSON config object. Keys outside `groups` are rejected too,
/// so a config cannot silently carry settings a command ignores.
inline void apply_json(Config& c, const nlohmann::json& j, unsigned groups) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  auto fs = fields(c);
  auto find = [&](const std::string& path) -> Field* {
    for (auto& f : fs)
      if (f.path == path && (f.group & groups)) return &f;
    return nullptr;
  };
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      for (const auto& [sub, v] : value.items()) {
        auto* f = find(key + "." + sub);
        if (!f) throw ConfigError("config: unknown key '" + key + "." + sub + "'");
        f->set(v);
      }
    } else {
      auto* f = find(key);
      if (!f) throw ConfigError("config: unknown key '" + key + "'");
      f->set(value);
    }
  }
}

/// Effective configuration restricted to `groups`, minus run plumbing
/// (output path, thread count) that does not change results.
inline nlohmann::json to_json(Config& c, unsigned groups) {
  nlohmann::json j = nlohmann::json::object();
  for (auto& f : fields(c)) {
    if (!(f.group & groups) || f.path == "out" || f.path == "threads") continue;
    auto dot = f.path.find('.');
    if (dot == std::string::npos) j[f.path] = f.get();
    else j[f.path.substr(0, dot)][f.path.substr(dot + 1)] = f.get();
  }
  return j;
}

/// Flag value as JSON: numbers and booleans parse, everything else is text.
inline nlohmann::json flag_value(const std::string& raw, bool want_string) {
  if (want_string) return raw;
  auto v = nlohmann::json::parse(raw, nullptr, false);
  if (v.is_discarded() || v.is_object() || v.is_array()) return raw;
  return v;
}

/// Registers the flags of `groups` on a subcommand. Values are kept as
/// strings and applied after the config file by `apply_flags`.
struct FlagSet {
  std::map<std::string, std::string> raw;  // path -> value
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
  unsigned groups = 0;

  void attach(CLI::App& app, unsigned g) {
    groups = g;
    Config scratch;
    app.add_option("--config", config_path, "JSON config file");
    for (auto& f : fields(scratch)) {
      if (!(f.group & g)) continue;
      auto default_text = f.get().is_string() ? f.get().get<std::string>() : f.get().dump();
      options[f.path] = app.add_option(f.flag, raw[f.path], f.help + " [" + default_text + "]");
    }
  }

  Config resolve() const;
};

namespace detail {

inline void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path + ": " + what);
}

}  // namespace detail

/// Domain checks; the error names the offending field.
inline void validate(const Config& c, unsigned groups) {
  using detail::require;
  const bool desk = c.scale == "desk";
  require(c.scale == "desk" || c.scale == "full", "scale", "must be 'desk' or 'full'");
  if (groups & kSimulation) {
    const auto& s = c.simulation;
    require(s.alpha > 1, "simulation.alpha", "must be > 1");
    require(s.n_st >= 1, "simulation.n_st", "must be >= 1");
    require(s.n_events >= 1, "simulation.n_events", "must be >= 1");
    require(!desk || s.n_events <= 10000000, "simulation.n_events", "desk scale caps N at 1e7 (use --scale full)");
    require(s.heterogeneity >= 0, "simulation.heterogeneity", "must be >= 0");
    require(s.ticks_per_day >= 0, "simulation.ticks_per_day", "must be >= 0");
  }
  if (groups & kClassification) {
    const auto& k = c.classification;
    require(k.theta > 0 && k.theta < 1, "classification.theta", "must lie in (0, 1)");
    require(k.gap_days >= 0, "classification.gap_days", "must be >= 0");
    require(std::abs(k.utc_offset_minutes) <= 24 * 60, "classification.utc_offset_minutes", "must be within a day");
  }
  if (groups & kEstimation) {
    const auto& e = c.estimation;
    require(e.tau_max >= 1000, "estimation.tau_max", "must be >= 1000 (the tentative fit uses lags 1..1000)");
    require(e.delta > 0 && e.delta <= 1, "estimation.delta", "must lie in (0, 1]");
    require(e.psd_half_width >= 0, "estimation.psd_half_width", "must be >= 0");
    require(e.dfa_boxes >= 2, "estimation.dfa_boxes", "must be >= 2");
  }
  if (groups & kCalibration) {
    const auto& b = c.calibration;
    require(b.method == "acf" || b.method == "psd" || b.method == "both", "calibration.method",
            "must be acf, psd or both");
    require(b.points >= 2, "calibration.points", "must be >= 2");
    require(b.replicates >= 1, "calibration.replicates", "must be >= 1");
    require(!desk || b.replicates <= 20, "calibration.replicates", "desk scale caps replicates at 20 (use --scale full)");
    require(b.alpha_min > 1 && b.alpha_max < 2 && b.alpha_min <= b.alpha_max, "calibration.alpha_min",
            "alpha range must lie inside (1, 2)");
    require(b.n_st_min >= 1 && b.n_st_min <= b.n_st_max, "calibration.n_st_min", "need 1 <= n_st_min <= n_st_max");
    require(b.n_events_min >= 1 && b.n_events_min <= b.n_events_max, "calibration.n_events_min",
            "need 1 <= n_events_min <= n_events_max");
    require(!desk || b.n_events_max <= 10000000, "calibration.n_events_max",
            "desk scale caps N at 1e7 (use --scale full)");
    require(b.max_failure >= 0 && b.max_failure <= 1, "calibration.max_failure", "must lie in [0, 1]");
  }
}

inline Config FlagSet::resolve() const {
  Config c;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot read config file '" + config_path + "'");
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config: '" + config_path + "' is not valid JSON");
    apply_json(c, j, groups);
  }
  for (auto& f : fields(c)) {
    auto it = options.find(f.path);
    if (it == options.end() || it->second->count() == 0) continue;
    auto v = flag_value(raw.at(f.path), f.get().is_string());
    try {
      f.set(v);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (flag " + f.flag + ")");
    }
  }
  validate(c, groups);
  return c;
}

}  // namespace lmf::cli
