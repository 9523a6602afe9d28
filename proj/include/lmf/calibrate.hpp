#pragma once

// Monte-Carlo calibration of the gamma estimators and the prefactor-based
// inference of the number of splitting traders.
//
// Bias: per replicate, OLS of gamma_NLLS on (alpha - 1) gives (beta1, beta2);
// the table keeps replicate means. The unbiased estimate inverts the line.
// Trader count: per replicate, OLS of (1 - gamma) log10 N_true on the
// estimator's log10[1 / ((gamma + 1) c0)] gives (beta3, beta4).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmf/acf.hpp"
#include "lmf/dfa.hpp"
#include "lmf/error.hpp"
#include "lmf/fit_report.hpp"
#include "lmf/lmf_model.hpp"
#include "lmf/parallel.hpp"
#include "lmf/psd.hpp"
#include "lmf/random.hpp"

namespace lmf {

// ---------------------------------------------------------------------------
// Prefactor theory

/// Homogeneous ACF amplitude 1 / (alpha N^(2 - alpha)).
inline double lmf_prefactor(double alpha, double n_st) {
  if (!(n_st > 0)) throw ParameterError("lmf_prefactor: n_st must be positive");
  return 1.0 / (alpha * std::pow(n_st, 2.0 - alpha));
}

/// Heterogeneous amplitude (1 / alpha) sum lambda_i^(3 - alpha).
inline double sk_prefactor(double alpha, std::span<const double> intensities) {
  if (intensities.empty()) throw ParameterError("sk_prefactor: empty intensity vector");
  long double s = 0;
  for (double l : intensities) {
    if (!(l > 0)) throw ParameterError("sk_prefactor: intensities must be positive");
    s += std::pow(static_cast<long double>(l), 3.0L - alpha);
  }
  return static_cast<double>(s) / alpha;
}

/// log10[1 / ((gamma + 1) c0)] = (1 - gamma) log10 N; finite at gamma = 1.
inline double nst_lmf_log10(double c0, double gamma) {
  if (!(c0 > 0)) throw ParameterError("nst_lmf: c0 must be positive");
  return -std::log10((gamma + 1.0) * c0);
}

/// N = [1 / ((gamma + 1) c0)]^(1 / (1 - gamma)).
inline double nst_lmf(double c0, double gamma) {
  if (gamma >= 1.0 - 1e-6) throw EstimationFailure("nst_lmf: gamma too close to the singularity at 1");
  return std::pow(10.0, nst_lmf_log10(c0, gamma) / (1.0 - gamma));
}

// ---------------------------------------------------------------------------
// Ensembles

struct EnsemblePoint {
  std::int64_t n_st = 100;
  std::int64_t n_events = 1000000;
  double alpha = 1.5;
};

struct EnsembleRanges {
  double alpha_lo = 1.05, alpha_hi = 1.95;
  std::int64_t n_st_lo = 50, n_st_hi = 500;
  std::int64_t n_events_lo = 500000, n_events_hi = 5000000;
};

/// alpha uniform; N_ST and N_eps log-uniform. N_eps is kept strictly above
/// half a million, the sample-market filter.
inline std::vector<EnsemblePoint> make_default_ensemble(std::size_t points, std::uint64_t seed,
                                                        const EnsembleRanges& r = {}) {
  if (!(r.alpha_lo > 1 && r.alpha_hi < 2 && r.alpha_lo <= r.alpha_hi))
    throw ParameterError("ensemble: alpha range must lie inside (1, 2)");
  if (r.n_st_lo < 1 || r.n_st_hi < r.n_st_lo || r.n_events_lo < 1 || r.n_events_hi < r.n_events_lo)
    throw ParameterError("ensemble: bad N_ST or N_eps range");
  RandomStream rng(seed, 0xe75e);
  auto log_uniform = [&](double lo, double hi) {
    return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
  };
  std::vector<EnsemblePoint> out(points);
  for (auto& p : out) {
    p.alpha = r.alpha_lo + rng.uniform() * (r.alpha_hi - r.alpha_lo);
    p.n_st = std::llround(log_uniform(static_cast<double>(r.n_st_lo), static_cast<double>(r.n_st_hi)));
    p.n_events = std::llround(
        log_uniform(static_cast<double>(r.n_events_lo), static_cast<double>(r.n_events_hi)));
    p.n_events = std::max<std::int64_t>(p.n_events, 500001);
  }
  return out;
}

/// One estimator output on one simulated market.
struct Observation {
  double alpha = 0;
  double n_st = 0;
  double gamma = 0;
  std::optional<double> c0;
};

/// Outcomes for each method on one (replicate, point) simulation.
using Sample = std::map<Method, std::optional<Observation>>;

/// results[method][replicate][point]
struct EnsembleRun {
  std::vector<EnsemblePoint> points;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::map<Method, std::vector<std::vector<std::optional<Observation>>>> results;
};

inline std::uint64_t ensemble_seed(std::uint64_t seed, std::size_t replicate, std::size_t point) {
  return derive_seed(derive_seed(seed, replicate), point);
}

/// Simulates one homogeneous LMF market and runs each requested estimator
/// on it; estimator failures become empty outcomes.
inline Sample simulate_and_estimate(const EnsemblePoint& p, std::uint64_t seed,
                                    std::span<const Method> methods) {
  LmfParams params;
  params.n_traders = p.n_st;
  params.n_events = p.n_events;
  params.alpha = p.alpha;
  params.seed = seed;
  SimulationOptions opt;
  opt.build_tapes = false;
  auto sim = simulate(params, opt);
  Sample out;
  for (auto m : methods) {
    try {
      FitReport r = m == Method::acf   ? acf_gamma(sim.series)
                    : m == Method::psd ? psd_gamma(sim.series)
                                       : dfa_gamma(sim.series);
      out[m] = Observation{p.alpha, static_cast<double>(p.n_st), r.gamma, r.c0};
    } catch (const FitError&) {
      out[m] = std::nullopt;
    } catch (const EstimationFailure&) {
      out[m] = std::nullopt;
    }
  }
  return out;
}

/// Runs `estimator(point, seed)` for every (replicate, point), in parallel,
/// with seeds derived from (seed, replicate, point).
template <typename Estimator>
EnsembleRun run_ensemble_with(std::vector<EnsemblePoint> points, std::size_t replicates,
                              std::uint64_t seed, std::span<const Method> methods,
                              Estimator&& estimator, unsigned threads = 0) {
  if (points.empty()) throw ParameterError("run_ensemble: empty ensemble");
  if (replicates < 1) throw ParameterError("run_ensemble: replicates must be >= 1");
  const auto np = points.size();
  auto samples = parallel_map(
      replicates * np,
      [&](std::size_t k) { return estimator(points[k % np], ensemble_seed(seed, k / np, k % np)); },
      threads);
  EnsembleRun run;
  run.replicates = replicates;
  run.seed = seed;
  for (auto m : methods) {
    auto& table = run.results[m];
    table.assign(replicates, std::vector<std::optional<Observation>>(np));
    for (std::size_t k = 0; k < samples.size(); ++k) {
      auto it = samples[k].find(m);
      if (it != samples[k].end()) table[k / np][k % np] = it->second;
    }
  }
  run.points = std::move(points);
  return run;
}

inline EnsembleRun run_ensemble(std::vector<EnsemblePoint> points, std::size_t replicates,
                                std::uint64_t seed, std::vector<Method> methods = {Method::acf, Method::psd},
                                unsigned threads = 0) {
  return run_ensemble_with(
      std::move(points), replicates, seed, methods,
      [&](const EnsemblePoint& p, std::uint64_t s) { return simulate_and_estimate(p, s, methods); },
      threads);
}

// ---------------------------------------------------------------------------
// Calibration

struct LineFit {
  double slope = 0;
  double intercept = 0;
};

inline LineFit ols_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw CalibrationError("ols_line: need >= 2 paired points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw CalibrationError("ols_line: regressor has no spread");
  return {sxy / sxx, my - sxy / sxx * mx};
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("pearson: need >= 2 paired points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

struct CalibrationTable {
  Method method = Method::acf;
  double beta1 = 1, beta2 = 0;
  double beta3 = 1, beta4 = 0;
  std::size_t n_replicates = 0;
  std::size_t n_failed = 0;
  std::vector<EnsemblePoint> ensemble;
  std::vector<double> beta1_samples, beta2_samples, beta3_samples, beta4_samples;
};

inline double unbias(double gamma_nlls, const CalibrationTable& table) {
  if (!(table.beta1 > 0)) throw CalibrationError("unbias: beta1 must be positive");
  return (gamma_nlls - table.beta2) / table.beta1;
}

/// Calibrated log10 N_ST from an estimate (gamma_NLLS, c0).
inline double nst_calibrated_log10(double c0, double gamma_nlls, const CalibrationTable& table) {
  if (gamma_nlls >= 1.0 - 1e-6) throw EstimationFailure("nst: gamma too close to the singularity at 1");
  return (table.beta3 * nst_lmf_log10(c0, gamma_nlls) + table.beta4) / (1.0 - gamma_nlls);
}

namespace detail {

inline void check_failures(std::size_t failed, std::size_t total, double tolerance) {
  if (static_cast<double>(failed) > tolerance * static_cast<double>(total))
    throw CalibrationError("calibration: " + std::to_string(failed) + " of " + std::to_string(total) +
                           " estimations failed (tolerance " + std::to_string(tolerance) + ")");
}

inline double mean(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// (beta1, beta2) and, where prefactors are available, (beta3, beta4) from
/// an ensemble run. Failed points are dropped; more than `tolerance` of all
/// (replicate, point) estimations failing is an error.
inline CalibrationTable calibrate_from_run(const EnsembleRun& run, Method method,
                                           double tolerance = 0.05) {
  auto it = run.results.find(method);
  if (it == run.results.end()) throw CalibrationError("calibrate: method missing from ensemble run");
  CalibrationTable table;
  table.method = method;
  table.n_replicates = run.replicates;
  table.ensemble = run.points;
  std::size_t total = 0;
  bool have_nst = true;
  for (const auto& rep : it->second) {
    std::vector<double> a, g, lx, ly;
    for (const auto& obs : rep) {
      ++total;
      if (!obs) {
        ++table.n_failed;
        continue;
      }
      a.push_back(obs->alpha - 1.0);
      g.push_back(obs->gamma);
      if (obs->c0 && *obs->c0 > 0) {
        lx.push_back(nst_lmf_log10(*obs->c0, obs->gamma));
        ly.push_back((1.0 - obs->gamma) * std::log10(obs->n_st));
      }
    }
    if (a.size() < 2) continue;
    auto line = ols_line(a, g);
    table.beta1_samples.push_back(line.slope);
    table.beta2_samples.push_back(line.intercept);
    if (lx.size() >= 2 && lx.size() == a.size()) {
      auto nline = ols_line(lx, ly);
      table.beta3_samples.push_back(nline.slope);
      table.beta4_samples.push_back(nline.intercept);
    } else {
      have_nst = false;
    }
  }
  detail::check_failures(table.n_failed, total, tolerance);
  if (table.beta1_samples.empty()) throw CalibrationError("calibrate: no usable replicate");
  table.beta1 = detail::mean(table.beta1_samples);
  table.beta2 = detail::mean(table.beta2_samples);
  if (have_nst && !table.beta3_samples.empty()) {
    table.beta3 = detail::mean(table.beta3_samples);
    table.beta4 = detail::mean(table.beta4_samples);
  } else {
    table.beta3 = std::nan("");
    table.beta4 = std::nan("");
  }
  if (!(table.beta1 > 0)) throw CalibrationError("calibrate: non-positive slope beta1");
  return table;
}

/// Simulates the ensemble `replicates` times and fits (beta1, beta2).
inline CalibrationTable calibrate_bias(const std::vector<EnsemblePoint>& ensemble, Method method,
                                       std::size_t replicates = 100, std::uint64_t seed = 0,
                                       unsigned threads = 0) {
  for (const auto& p : ensemble)
    if (!(p.alpha > 1 && p.alpha < 2)) throw ParameterError("calibrate: alpha must lie in (1, 2)");
  return calibrate_from_run(run_ensemble(ensemble, replicates, seed, {method}, threads), method);
}

/// Same ensemble run, reporting (beta3, beta4).
inline std::pair<double, double> calibrate_nst(const std::vector<EnsemblePoint>& ensemble, Method method,
                                               std::size_t replicates = 100, std::uint64_t seed = 0,
                                               unsigned threads = 0) {
  auto t = calibrate_bias(ensemble, method, replicates, seed, threads);
  if (std::isnan(t.beta3)) throw CalibrationError("calibrate_nst: estimator reported no prefactors");
  return {t.beta3, t.beta4};
}

// ---------------------------------------------------------------------------
// Persistence

inline nlohmann::json to_json(const CalibrationTable& t) {
  nlohmann::json j;
  j["method"] = to_string(t.method);
  j["beta1"] = t.beta1;
  j["beta2"] = t.beta2;
  j["beta3"] = std::isnan(t.beta3) ? nlohmann::json(nullptr) : nlohmann::json(t.beta3);
  j["beta4"] = std::isnan(t.beta4) ? nlohmann::json(nullptr) : nlohmann::json(t.beta4);
  j["n_replicates"] = t.n_replicates;
  j["n_failed"] = t.n_failed;
  auto& e = j["ensemble"] = nlohmann::json::array();
  for (const auto& p : t.ensemble) e.push_back({{"n_st", p.n_st}, {"n_events", p.n_events}, {"alpha", p.alpha}});
  return j;
}

inline Method method_from_string(const std::string& s) {
  if (s == "acf") return Method::acf;
  if (s == "psd") return Method::psd;
  if (s == "dfa") return Method::dfa;
  throw ConfigError("unknown method '" + s + "'");
}

inline CalibrationTable calibration_from_json(const nlohmann::json& j) {
  try {
    CalibrationTable t;
    t.method = method_from_string(j.at("method").get<std::string>());
    t.beta1 = j.at("beta1").get<double>();
    t.beta2 = j.at("beta2").get<double>();
    t.beta3 = j.at("beta3").is_null() ? std::nan("") : j.at("beta3").get<double>();
    t.beta4 = j.at("beta4").is_null() ? std::nan("") : j.at("beta4").get<double>();
    t.n_replicates = j.at("n_replicates").get<std::size_t>();
    t.n_failed = j.value("n_failed", std::size_t{0});
    for (const auto& p : j.at("ensemble"))
      t.ensemble.push_back({p.at("n_st").get<std::int64_t>(), p.at("n_events").get<std::int64_t>(),
                            p.at("alpha").get<double>()});
    if (!(t.beta1 > 0)) throw CalibrationError("calibration table: beta1 must be positive");
    if (t.n_replicates < 1) throw CalibrationError("calibration table: n_replicates must be >= 1");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("calibration table: ") + e.what());
  }
}

}  // namespace lmf
