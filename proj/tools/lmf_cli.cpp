// lmf: experiment runner for the order-splitting toolkit.
//
//   lmf simulate | classify | fit-alpha | fit-gamma | calibrate | scatter
//   lmf reproduce fig6|fig7|fig8|fig-dfa [--scale desk|full]
//
// Exit codes: 0 ok, 2 configuration error, 3 estimation failure, 4 I/O error.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "artifacts.hpp"
#include "config.hpp"
#include "lmf.hpp"
#include "svg.hpp"

using namespace lmf;
using namespace lmf::cli;

namespace {

constexpr unsigned kMarket = kCommon | kSource | kSimulation | kClassification;

void log(const std::string& msg) { std::cerr << "lmf: " << msg << '\n'; }

std::string svg_string(const Plot& p) {
  std::ostringstream s;
  p.write(s);
  return s.str();
}

std::vector<Method> methods_of(const Config& c) {
  if (c.calibration.method == "both") return {Method::acf, Method::psd};
  return {method_from_string(c.calibration.method)};
}

LmfParams sim_params(const Config& c) {
  LmfParams p;
  p.n_traders = c.simulation.n_st;
  p.n_events = c.simulation.n_events;
  p.alpha = c.simulation.alpha;
  p.seed = c.seed;
  if (c.simulation.heterogeneity > 0)
    p.intensities = pareto_intensities(p.n_traders, c.simulation.heterogeneity, derive_seed(c.seed, 0x4e7));
  return p;
}

SimulationResult run_simulation(const Config& c, bool tapes, bool metaorders = false) {
  SimulationOptions opt;
  opt.build_tapes = tapes;
  opt.record_metaorders = metaorders;
  opt.ticks_per_day = c.simulation.ticks_per_day;
  opt.gap_threshold_days = c.classification.gap_days;
  auto p = sim_params(c);
  return p.intensities.empty() ? simulate(p, opt) : simulate_heterogeneous(p, opt);
}

/// Sign series and trader tapes, from --tape or from a simulation.
struct Market {
  SignSeries series;
  TapeMap tapes;
  std::vector<Metaorder> completed;  // simulation only
  std::vector<std::string> trader_ids;
  bool simulated = false;
};

Market load_market(const Config& c, bool tapes, bool metaorders = false) {
  Market m;
  if (c.tape.empty()) {
    auto sim = run_simulation(c, tapes, metaorders);
    m.series = std::move(sim.series);
    m.tapes = std::move(sim.tapes);
    m.completed = std::move(sim.completed);
    m.trader_ids = std::move(sim.trader_ids);
    m.simulated = true;
    return m;
  }
  std::ifstream in(c.tape);
  if (!in) throw IoError("cannot read tape '" + c.tape + "'");
  auto parsed = parse_events(in);
  for (const auto& e : parsed.row_errors) log(c.tape + ":" + std::to_string(e.line) + ": skipped: " + e.message);
  auto desks = resolve_trading_desks(parsed.events);
  auto windows = default_session_windows();
  auto kept = trim_sessions(parsed.events, windows, c.classification.utc_offset_minutes);
  auto mt = build_sign_series(kept, desks, c.classification.gap_days);
  m.series = std::move(mt.series);
  m.tapes = std::move(mt.tapes);
  return m;
}

std::string ccdf_csv(const std::map<std::int64_t, double>& ccdf) {
  Csv csv({"x", "ccdf"});
  for (const auto& [x, p] : ccdf) csv.cell(static_cast<std::int64_t>(x)).cell(p);
  return csv.str();
}

void add_ccdf(Plot& plot, const std::map<std::int64_t, double>& ccdf, const std::string& color,
              const std::string& label) {
  std::vector<double> x, y;
  for (const auto& [k, p] : ccdf)
    if (k > 0 && p > 0) x.push_back(static_cast<double>(k)), y.push_back(p);
  plot.line(x, y, color, label);
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(Config& c) {
  ArtifactDir out(c.out);
  auto sim = run_simulation(c, true);  // tapes carry tick ownership
  auto events = to_order_events(sim);
  std::ostringstream s;
  write_events_csv(s, events);
  out.write("tape.csv", s.str());
  out.finish("simulate", c.seed, to_json(c, kCommon | kSimulation));
  log("wrote " + std::to_string(events.size()) + " executions to " + (out.root() / "tape.csv").string());
  return 0;
}

// ---------------------------------------------------------------------------
// classify

int cmd_classify(Config& c) {
  ArtifactDir out(c.out);
  auto m = load_market(c, true);
  auto cls = classify_traders(m.tapes, c.classification.theta);
  std::ostringstream s;
  write_classification_csv(s, cls, m.tapes);
  out.write("classification.csv", s.str());

  auto stats = st_statistics(cls, m.tapes, m.series.size());
  nlohmann::json summary{{"n_traders", m.tapes.size()},
                         {"n_st", cls.st_ids.size()},
                         {"n_rt", cls.rt_ids.size()},
                         {"st_fraction", stats.st_fraction},
                         {"st_mo_share", stats.st_mo_share},
                         {"theta", cls.theta}};
  Plot plot("Run-length CCDF", "run length L", "P(run > L)", true, true);
  if (!cls.st_ids.empty()) {
    auto ccdf = empirical_ccdf(pooled_runs(m.tapes, cls.st_ids));
    out.write("run_ccdf_st.csv", ccdf_csv(ccdf));
    add_ccdf(plot, ccdf, "#c0392b", "ST");
  }
  if (!cls.rt_ids.empty()) {
    auto runs = pooled_runs(m.tapes, cls.rt_ids);
    if (!runs.empty()) {
      auto ccdf = empirical_ccdf(runs);
      out.write("run_ccdf_rt.csv", ccdf_csv(ccdf));
      add_ccdf(plot, ccdf, "#2471a3", "RT");
      summary["rt_mean_run"] = geometric_fit(runs);
    }
  }
  out.write("run_ccdf.svg", svg_string(plot));
  out.write_json("summary.json", summary);
  out.finish("classify", c.seed, to_json(c, kMarket));
  log(std::to_string(cls.st_ids.size()) + " of " + std::to_string(m.tapes.size()) + " traders are splitting");
  return 0;
}

// ---------------------------------------------------------------------------
// fit-alpha

nlohmann::json tail_json(const TailFit& f, std::size_t n) {
  return {{"alpha", f.alpha}, {"alpha_pdf", f.alpha_pdf}, {"xmin", f.xmin},
          {"ks_distance", f.ks_distance}, {"n_tail", f.n_tail}, {"n_samples", n}};
}

int cmd_fit_alpha(Config& c) {
  ArtifactDir out(c.out);
  auto m = load_market(c, true, true);
  auto cls = classify_traders(m.tapes, c.classification.theta);
  if (cls.st_ids.empty()) throw EstimationFailure("fit-alpha: no splitting traders found");
  auto runs = pooled_runs(m.tapes, cls.st_ids);
  auto fit = clauset_fit(runs);
  nlohmann::json result{{"st_runs", tail_json(fit, runs.size())}};

  auto ccdf = empirical_ccdf(runs);
  out.write("run_ccdf_st.csv", ccdf_csv(ccdf));
  Plot plot("Splitting-trader runs", "run length L", "P(run > L)", true, true);
  add_ccdf(plot, ccdf, "#c0392b", "ST runs");

  if (m.simulated && !m.completed.empty()) {
    std::set<std::uint32_t> st;
    for (std::uint32_t i = 0; i < m.trader_ids.size(); ++i)
      if (cls.is_st(m.trader_ids[i])) st.insert(i);
    std::vector<std::int64_t> lengths;
    for (const auto& mo : m.completed)
      if (st.count(mo.trader)) lengths.push_back(mo.length);
    if (lengths.size() >= 50) {
      auto mfit = clauset_fit(lengths);
      result["st_metaorders"] = tail_json(mfit, lengths.size());
      auto mccdf = empirical_ccdf(lengths);
      out.write("metaorder_ccdf.csv", ccdf_csv(mccdf));
      add_ccdf(plot, mccdf, "#7d3c98", "metaorders");
    }
  }
  // fitted tail, anchored at the empirical CCDF just below xmin
  auto anchor = std::prev(ccdf.lower_bound(fit.xmin))->second;
  std::vector<double> fx, fy;
  for (double x = static_cast<double>(fit.xmin); x <= static_cast<double>(ccdf.rbegin()->first); x *= 1.5) {
    fx.push_back(x);
    fy.push_back(anchor * std::pow(x / static_cast<double>(fit.xmin), -fit.alpha));
  }
  plot.line(fx, fy, "#17202a", "fit");
  out.write("run_ccdf.svg", svg_string(plot));
  out.write_json("alpha.json", result);
  Csv fcsv({"alpha", "xmin", "ks", "n_tail"});
  fcsv.cell(fit.alpha).cell(fit.xmin).cell(fit.ks_distance).cell(fit.n_tail);
  out.write("alpha.csv", fcsv.str());
  out.finish("fit-alpha", c.seed, to_json(c, kMarket));
  log("alpha = " + num(fit.alpha) + " (xmin " + std::to_string(fit.xmin) + ")");
  return 0;
}

// ---------------------------------------------------------------------------
// fit-gamma

AcfOptions acf_options(const Config& c) {
  AcfOptions o;
  o.tau_max = static_cast<std::size_t>(c.estimation.tau_max);
  o.delta = c.estimation.delta;
  return o;
}

PsdOptions psd_options(const Config& c) {
  PsdOptions o;
  o.half_width = static_cast<std::size_t>(c.estimation.psd_half_width);
  return o;
}

DfaOptions dfa_options(const Config& c) {
  DfaOptions o;
  o.box_count = static_cast<std::size_t>(c.estimation.dfa_boxes);
  return o;
}

std::optional<CalibrationTable> load_calibration(const Config& c, Method m) {
  if (c.calibration_file.empty()) return std::nullopt;
  std::ifstream in(c.calibration_file);
  if (!in) throw IoError("cannot read calibration '" + c.calibration_file + "'");
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("calibration: '" + c.calibration_file + "' is not valid JSON");
  std::vector<nlohmann::json> tables = j.is_array() ? j.get<std::vector<nlohmann::json>>() : std::vector{j};
  for (const auto& t : tables) {
    auto table = calibration_from_json(t);
    if (table.method == m) return table;
  }
  return std::nullopt;
}

int cmd_fit_gamma(Config& c) {
  ArtifactDir out(c.out);
  auto m = load_market(c, false);
  const auto& signs = m.series.signs;
  nlohmann::json result;
  int failures = 0;

  auto attempt = [&](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const FitError& e) {
      result[name] = {{"error", e.what()}};
      ++failures;
      log(std::string(name) + ": " + e.what());
    } catch (const EstimationFailure& e) {
      result[name] = {{"error", e.what()}};
      ++failures;
      log(std::string(name) + ": " + e.what());
    }
  };
  auto decorate = [&](nlohmann::json& j, const FitReport& r, Method method) {
    if (r.c0 && *r.c0 > 0 && r.gamma < 1 - 1e-6) j["n_st_lmf"] = nst_lmf(*r.c0, r.gamma);
    if (auto table = load_calibration(c, method)) {
      j["gamma_unbiased"] = unbias(r.gamma, *table);
      if (r.c0 && *r.c0 > 0 && !std::isnan(table->beta3) && r.gamma < 1 - 1e-6)
        j["n_st_calibrated"] = std::pow(10.0, nst_calibrated_log10(*r.c0, r.gamma, *table));
    }
  };

  attempt("acf", [&] {
    auto opt = acf_options(c);
    auto raw_max = static_cast<std::size_t>(std::ceil(static_cast<double>(opt.tau_max) * std::pow(10.0, opt.delta / 2)));
    auto raw = sample_acf(signs, raw_max);
    auto smooth = log_smooth(raw, opt.delta);
    Csv csv({"tau", "acf", "acf_smoothed"});
    for (std::size_t t = 1; t <= raw.tau_max(); ++t) csv.cell(t).cell(raw.at(t)).cell(smooth.at(t));
    out.write("acf.csv", csv.str());
    {
      std::vector<double> tx(smooth.tau_max());
      for (std::size_t t = 1; t <= smooth.tau_max(); ++t) tx[t - 1] = static_cast<double>(t);
      std::ostringstream xy;
      write_xy_csv(xy, tx, smooth.values);
      out.write("acf_smoothed.csv", xy.str());
    }
    auto r = acf_gamma_from_acf(raw, opt);
    auto j = to_json(r);
    decorate(j, r, Method::acf);
    result["acf"] = j;
    Plot plot("Sign autocorrelation", "lag tau", "C(tau)", true, true);
    std::vector<double> x, y, fx, fy;
    for (std::size_t t = 1; t <= opt.tau_max; ++t) x.push_back(static_cast<double>(t)), y.push_back(smooth.at(t));
    plot.line(x, y, "#2471a3", "smoothed ACF");
    for (double t = r.window_lower; t <= r.window_upper; t *= 1.2)
      fx.push_back(t), fy.push_back(*r.c0 * std::pow(t, -r.gamma));
    plot.line(fx, fy, "#c0392b", "power-law fit");
    out.write("acf.svg", svg_string(plot));
  });

  attempt("psd", [&] {
    auto raw = periodogram(signs);
    auto smooth = linear_smooth(raw, static_cast<std::size_t>(c.estimation.psd_half_width));
    // log-thinned bins keep the file small at large N
    Csv csv({"k", "omega", "psd", "psd_smoothed"});
    std::vector<double> x, y;
    std::size_t last = 0;
    for (double g = 1; g <= static_cast<double>(raw.bins()); g *= 1.01) {
      auto k = static_cast<std::size_t>(g);
      if (k == last) continue;
      last = k;
      csv.cell(k).cell(raw.freq(k)).cell(raw.at(k)).cell(smooth.at(k));
      x.push_back(raw.freq(k));
      y.push_back(smooth.at(k));
    }
    out.write("psd.csv", csv.str());
    {
      std::ostringstream xy;
      write_xy_csv(xy, x, y);
      out.write("psd_smoothed.csv", xy.str());
    }
    auto r = psd_gamma_from_psd(raw, psd_options(c));
    auto j = to_json(r);
    decorate(j, r, Method::psd);
    result["psd"] = j;
    Plot plot("Power spectral density", "frequency omega", "S(omega)", true, true);
    plot.line(x, y, "#2471a3", "smoothed PSD");
    out.write("psd.svg", svg_string(plot));
  });

  attempt("dfa", [&] {
    std::vector<double> x(signs.begin(), signs.end());
    auto curve = dfa_curve(x, dfa_options(c));
    Csv csv({"box", "fluctuation"});
    for (std::size_t i = 0; i < curve.sizes.size(); ++i) csv.cell(curve.sizes[i]).cell(curve.fluctuation[i]);
    out.write("dfa.csv", csv.str());
    result["dfa"] = to_json(dfa_gamma(std::span<const double>(x), dfa_options(c)));
    Plot plot("Detrended fluctuation", "box size n", "F(n)", true, true);
    plot.points(curve.sizes, curve.fluctuation, "#2471a3", "F(n)");
    out.write("dfa.svg", svg_string(plot));
  });

  out.write_json("gamma.json", result);
  out.finish("fit-gamma", c.seed, to_json(c, kCommon | kSource | kSimulation | kClassification | kEstimation |
                                               kCalibrationFile));
  if (failures == 3) throw EstimationFailure("fit-gamma: every estimator failed");
  for (const char* k : {"acf", "psd", "dfa"})
    if (result[k].contains("gamma")) log(std::string(k) + ": gamma = " + num(result[k]["gamma"].get<double>()));
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate / scatter

std::vector<EnsemblePoint> ensemble_of(const Config& c, std::uint64_t seed) {
  EnsembleRanges r;
  r.alpha_lo = c.calibration.alpha_min;
  r.alpha_hi = c.calibration.alpha_max;
  r.n_st_lo = c.calibration.n_st_min;
  r.n_st_hi = c.calibration.n_st_max;
  r.n_events_lo = c.calibration.n_events_min;
  r.n_events_hi = c.calibration.n_events_max;
  return make_default_ensemble(static_cast<std::size_t>(c.calibration.points), seed, r);
}

/// Ensemble run with the configured estimator options.
EnsembleRun run_configured(const Config& c, std::vector<EnsemblePoint> points, std::size_t replicates,
                           std::uint64_t seed, const std::vector<Method>& methods) {
  auto aopt = acf_options(c);
  auto popt = psd_options(c);
  auto dopt = dfa_options(c);
  log("simulating " + std::to_string(points.size() * replicates) + " markets");
  return run_ensemble_with(
      std::move(points), replicates, seed, methods,
      [&](const EnsemblePoint& p, std::uint64_t s) {
        LmfParams params;
        params.n_traders = p.n_st;
        params.n_events = p.n_events;
        params.alpha = p.alpha;
        params.seed = s;
        SimulationOptions opt;
        opt.build_tapes = false;
        auto sim = simulate(params, opt);
        Sample sample;
        for (auto m : methods) {
          try {
            auto r = m == Method::acf   ? acf_gamma(sim.series, aopt)
                     : m == Method::psd ? psd_gamma(sim.series, popt)
                                        : dfa_gamma(sim.series, dopt);
            sample[m] = Observation{p.alpha, static_cast<double>(p.n_st), r.gamma, r.c0};
          } catch (const FitError&) {
            sample[m] = std::nullopt;
          } catch (const EstimationFailure&) {
            sample[m] = std::nullopt;
          }
        }
        return sample;
      },
      c.threads);
}

std::string ensemble_csv(const EnsembleRun& run) {
  std::vector<std::string> header{"replicate", "point", "alpha", "n_st", "n_events"};
  for (const auto& [m, _] : run.results) {
    header.push_back(std::string("gamma_") + to_string(m));
    header.push_back(std::string("c0_") + to_string(m));
  }
  Csv csv(header);
  for (std::size_t r = 0; r < run.replicates; ++r)
    for (std::size_t i = 0; i < run.points.size(); ++i) {
      const auto& p = run.points[i];
      csv.cell(r).cell(i).cell(p.alpha).cell(p.n_st).cell(p.n_events);
      for (const auto& [m, table] : run.results) {
        const auto& obs = table[r][i];
        csv.cell(obs ? num(obs->gamma) : "").cell(obs && obs->c0 ? num(*obs->c0) : "");
      }
    }
  return csv.str();
}

std::string betas_csv(const CalibrationTable& t) {
  Csv csv({"replicate", "beta1", "beta2", "beta3", "beta4"});
  for (std::size_t r = 0; r < t.beta1_samples.size(); ++r)
    csv.cell(r)
        .cell(t.beta1_samples[r])
        .cell(t.beta2_samples[r])
        .cell(r < t.beta3_samples.size() ? t.beta3_samples[r] : std::nan(""))
        .cell(r < t.beta4_samples.size() ? t.beta4_samples[r] : std::nan(""));
  return csv.str();
}

Plot bias_plot(const EnsembleRun& run, Method m, const CalibrationTable& t) {
  Plot plot(std::string("Estimator bias (") + to_string(m) + ")", "alpha - 1", "gamma_NLLS");
  std::vector<double> x, y;
  for (const auto& rep : run.results.at(m))
    for (const auto& obs : rep)
      if (obs) x.push_back(obs->alpha - 1), y.push_back(obs->gamma);
  plot.points(x, y, "#2471a3", "simulations");
  plot.line({0, 1}, {0, 1}, "#7f8c8d", "gamma = alpha - 1");
  plot.line({0, 1}, {t.beta2, t.beta1 + t.beta2}, "#c0392b", "OLS fit");
  return plot;
}

/// Calibrates each method on `run` and writes its artifacts with `prefix`.
std::map<Method, CalibrationTable> calibrate_and_write(ArtifactDir& out, const Config& c, const EnsembleRun& run,
                                                       const std::string& prefix) {
  std::map<Method, CalibrationTable> tables;
  for (const auto& [m, _] : run.results) {
    auto t = calibrate_from_run(run, m, c.calibration.max_failure);
    auto name = std::string(to_string(m));
    out.write_json(prefix + "calibration_" + name + ".json", lmf::to_json(t));
    out.write(prefix + "betas_" + name + ".csv", betas_csv(t));
    out.write(prefix + "bias_" + name + ".svg", svg_string(bias_plot(run, m, t)));
    log(name + ": beta1 = " + num(t.beta1) + ", beta2 = " + num(t.beta2) + ", failed " + std::to_string(t.n_failed));
    tables.emplace(m, std::move(t));
  }
  return tables;
}

int cmd_calibrate(Config& c) {
  ArtifactDir out(c.out);
  auto run = run_configured(c, ensemble_of(c, c.seed), static_cast<std::size_t>(c.calibration.replicates), c.seed,
                            methods_of(c));
  out.write("ensemble.csv", ensemble_csv(run));
  calibrate_and_write(out, c, run, "");
  out.finish("calibrate", c.seed, to_json(c, kCommon | kEstimation | kCalibration));
  return 0;
}

struct BinStats {
  double lo, hi;
  std::size_t n;
  double mean, q1, median, q3, min, max;
};

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  auto i = static_cast<std::size_t>(pos);
  double frac = pos - static_cast<double>(i);
  return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
}

/// Scatter of (alpha, gamma_unbiased) with 0.1-wide alpha bins.
void write_scatter(ArtifactDir& out, const std::string& prefix, Method m, const EnsembleRun& run,
                   const CalibrationTable& table, nlohmann::json& summary) {
  const auto name = std::string(to_string(m));
  std::vector<double> alpha, gamma;
  for (const auto& rep : run.results.at(m))
    for (const auto& obs : rep)
      if (obs) alpha.push_back(obs->alpha), gamma.push_back(unbias(obs->gamma, table));
  if (alpha.size() < 2) throw EstimationFailure("scatter: fewer than two successful estimates");
  auto bin_of = [](double a) { return static_cast<int>(std::floor(a * 10 + 1e-9)); };
  std::map<int, std::vector<double>> bins;
  for (std::size_t i = 0; i < alpha.size(); ++i) bins[bin_of(alpha[i])].push_back(gamma[i]);
  std::map<int, BinStats> stats;
  for (const auto& [b, v] : bins) {
    double mean = 0;
    for (double g : v) mean += g;
    mean /= static_cast<double>(v.size());
    stats[b] = {b / 10.0, (b + 1) / 10.0, v.size(), mean, quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75),
                *std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
  }

  Csv csv({"alpha", "gamma_unbiased", "bin_mean"});
  double err = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    csv.cell(alpha[i]).cell(gamma[i]).cell(stats[bin_of(alpha[i])].mean);
    err += alpha[i] - 1 - gamma[i];
  }
  out.write(prefix + "scatter_" + name + ".csv", csv.str());
  Csv bcsv({"alpha_lo", "alpha_hi", "n", "mean", "q1", "median", "q3", "min", "max"});
  for (const auto& [b, s] : stats)
    bcsv.cell(s.lo).cell(s.hi).cell(s.n).cell(s.mean).cell(s.q1).cell(s.median).cell(s.q3).cell(s.min).cell(s.max);
  out.write(prefix + "bins_" + name + ".csv", bcsv.str());

  std::vector<double> ax(alpha.begin(), alpha.end()), mx, my;
  for (auto& a : ax) a -= 1;
  Plot plot("Unbiased estimates (" + name + ")", "alpha - 1", "gamma_unbiased");
  plot.points(ax, gamma, "#aab7b8", "simulations");
  for (const auto& [b, s] : stats) {
    double centre = (s.lo + s.hi) / 2 - 1;
    plot.box({centre, 0.03, s.min, s.q1, s.median, s.q3, s.max});
    mx.push_back(centre);
    my.push_back(s.mean);
  }
  plot.line(mx, my, "#c0392b", "bin mean");
  plot.line({0, 1}, {0, 1}, "#7f8c8d", "gamma = alpha - 1");
  out.write(prefix + "scatter_" + name + ".svg", svg_string(plot));

  auto line = ols_line(ax, gamma);
  summary[name] = {{"mean_error", err / static_cast<double>(alpha.size())},
                   {"slope", line.slope},
                   {"intercept", line.intercept},
                   {"n", alpha.size()},
                   {"beta1", table.beta1},
                   {"beta2", table.beta2}};
}

/// Calibration tables for scatter-type outputs: from --calibration, else
/// fitted on a disjoint ensemble (or on `evaluated` when split is off).
std::map<Method, CalibrationTable> tables_for(ArtifactDir& out, const Config& c, const EnsembleRun& evaluated,
                                              const std::vector<Method>& methods) {
  std::map<Method, CalibrationTable> tables;
  bool all = true;
  for (auto m : methods)
    if (auto t = load_calibration(c, m)) tables[m] = *t;
    else all = false;
  if (all) return tables;
  if (!c.calibration.split) return calibrate_and_write(out, c, evaluated, "");
  auto seed = derive_seed(c.seed, 0xca1);
  auto run = run_configured(c, ensemble_of(c, seed), static_cast<std::size_t>(c.calibration.replicates), seed, methods);
  out.write("calibration_ensemble.csv", ensemble_csv(run));
  return calibrate_and_write(out, c, run, "");
}

int cmd_scatter(Config& c) {
  ArtifactDir out(c.out);
  auto methods = methods_of(c);
  auto run = run_configured(c, ensemble_of(c, c.seed), static_cast<std::size_t>(c.calibration.replicates), c.seed,
                            methods);
  out.write("ensemble.csv", ensemble_csv(run));
  auto tables = tables_for(out, c, run, methods);
  nlohmann::json summary;
  for (auto m : methods) write_scatter(out, "", m, run, tables.at(m), summary);
  out.write_json("summary.json", summary);
  out.finish("scatter", c.seed, to_json(c, kCommon | kEstimation | kCalibration | kCalibrationFile));
  return 0;
}

// ---------------------------------------------------------------------------
// reproduce

std::int64_t consistency_events(const Config& c) { return c.scale == "full" ? 100000000 : 10000000; }
std::size_t consistency_replicates(const Config& c) { return c.scale == "full" ? 10 : 3; }

const std::vector<double> kAlphaGrid{1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9};

/// Panel (a): gamma against alpha - 1 at N_ST = 100 on a fixed alpha grid.
EnsembleRun consistency_run(const Config& c, const std::vector<Method>& methods) {
  std::vector<EnsemblePoint> pts;
  for (double a : kAlphaGrid) pts.push_back({100, consistency_events(c), a});
  return run_configured(c, pts, consistency_replicates(c), derive_seed(c.seed, 0xa), methods);
}

std::string consistency_csv(const EnsembleRun& run, const std::vector<Method>& methods) {
  std::vector<std::string> header{"alpha", "replicate"};
  for (auto m : methods) header.push_back(std::string("gamma_") + to_string(m));
  Csv csv(header);
  for (std::size_t i = 0; i < run.points.size(); ++i)
    for (std::size_t r = 0; r < run.replicates; ++r) {
      csv.cell(run.points[i].alpha).cell(r);
      for (auto m : methods) {
        const auto& obs = run.results.at(m)[r][i];
        csv.cell(obs ? num(obs->gamma) : "");
      }
    }
  return csv.str();
}

Plot consistency_plot(const EnsembleRun& run, const std::vector<Method>& methods, const std::string& title) {
  Plot plot(title, "alpha - 1", "gamma");
  const char* colors[] = {"#c0392b", "#2471a3", "#27ae60"};
  std::size_t k = 0;
  for (auto m : methods) {
    std::vector<double> x, y;
    for (std::size_t r = 0; r < run.replicates; ++r)
      for (std::size_t i = 0; i < run.points.size(); ++i)
        if (const auto& obs = run.results.at(m)[r][i]) x.push_back(obs->alpha - 1), y.push_back(obs->gamma);
    plot.points(x, y, colors[k++ % 3], to_string(m));
  }
  plot.line({0, 1}, {0, 1}, "#7f8c8d", "gamma = alpha - 1");
  return plot;
}

int reproduce_bias_figure(Config& c, Method m, const std::string& fig) {
  ArtifactDir out(c.out);
  if (c.scale == "full") c.calibration.replicates = std::max<std::int64_t>(c.calibration.replicates, 100);
  const std::vector<Method> methods{m};
  auto cons = consistency_run(c, methods);
  out.write("a_consistency.csv", consistency_csv(cons, methods));
  out.write("a_consistency.svg", svg_string(consistency_plot(cons, methods, fig + "(a) consistency")));

  auto calib = run_configured(c, ensemble_of(c, c.seed), static_cast<std::size_t>(c.calibration.replicates), c.seed,
                              methods);
  out.write("b_bias_ensemble.csv", ensemble_csv(calib));
  auto tables = calibrate_and_write(out, c, calib, "b_");

  auto held_seed = derive_seed(c.seed, 0x401d);
  auto held = c.calibration.split ? run_configured(c, ensemble_of(c, held_seed),
                                                   static_cast<std::size_t>(c.calibration.replicates), held_seed, methods)
                                  : calib;
  nlohmann::json summary;
  write_scatter(out, "c_", m, held, tables.at(m), summary);
  out.write_json("summary.json", summary);
  out.finish("reproduce " + fig, c.seed, to_json(c, kCommon | kEstimation | kCalibration));
  return 0;
}

int reproduce_fig8(Config& c) {
  ArtifactDir out(c.out);
  auto points = ensemble_of(c, c.seed);
  auto run = run_configured(c, points, static_cast<std::size_t>(c.calibration.replicates), c.seed, {Method::acf});
  out.write("calibration_ensemble.csv", ensemble_csv(run));
  auto table = calibrate_and_write(out, c, run, "").at(Method::acf);
  if (std::isnan(table.beta3)) throw EstimationFailure("fig8: no prefactors for the N_ST calibration");

  // evaluation: homogeneous and heterogeneous markets at alpha = 1.5
  Csv csv({"kind", "n_st_true", "n_events", "gamma_nlls", "c0_nlls", "n_st_lmf", "n_st_calibrated"});
  std::vector<double> lt, le, ht, he;
  RandomStream rng(derive_seed(c.seed, 0xf18), 0);
  const double heterogeneity = c.simulation.heterogeneity > 0 ? c.simulation.heterogeneity : 1.5;
  const auto n_events = std::clamp<std::int64_t>(1000000, c.calibration.n_events_min, c.calibration.n_events_max);
  for (int kind = 0; kind < 2; ++kind)
    for (std::int64_t i = 0; i < c.calibration.points; ++i) {
      LmfParams p;
      p.n_traders = std::llround(std::exp(std::log(static_cast<double>(c.calibration.n_st_min)) +
                                          rng.uniform() * std::log(static_cast<double>(c.calibration.n_st_max) /
                                                                   static_cast<double>(c.calibration.n_st_min))));
      p.n_events = n_events;
      p.alpha = 1.5;
      p.seed = derive_seed(derive_seed(c.seed, 0xf19 + kind), static_cast<std::uint64_t>(i));
      if (kind == 1) p.intensities = pareto_intensities(p.n_traders, heterogeneity, p.seed ^ 0x5eed);
      SimulationOptions opt;
      opt.build_tapes = false;
      auto sim = kind == 0 ? simulate(p, opt) : simulate_heterogeneous(p, opt);
      try {
        auto r = acf_gamma(sim.series, acf_options(c));
        double raw = nst_lmf(*r.c0, r.gamma);
        double cal = std::pow(10.0, nst_calibrated_log10(*r.c0, r.gamma, table));
        csv.cell(kind == 0 ? "homogeneous" : "heterogeneous")
            .cell(p.n_traders)
            .cell(p.n_events)
            .cell(r.gamma)
            .cell(*r.c0)
            .cell(raw)
            .cell(cal);
        (kind == 0 ? lt : ht).push_back(static_cast<double>(p.n_traders));
        (kind == 0 ? le : he).push_back(cal);
      } catch (const FitError& e) {
        log("fig8: skipped a market: " + std::string(e.what()));
      } catch (const EstimationFailure& e) {
        log("fig8: skipped a market: " + std::string(e.what()));
      }
    }
  out.write("nst.csv", csv.str());
  Plot plot("N_ST inference", "true N_ST", "calibrated N_ST^LMF", true, true);
  plot.points(lt, le, "#2471a3", "homogeneous");
  plot.points(ht, he, "#c0392b", "heterogeneous");
  double lo = static_cast<double>(c.calibration.n_st_min), hi = static_cast<double>(c.calibration.n_st_max);
  plot.line({lo, hi}, {lo, hi}, "#7f8c8d", "y = x");
  out.write("nst.svg", svg_string(plot));

  auto logs = [](std::vector<double> v) {
    for (auto& x : v) x = std::log10(x);
    return v;
  };
  nlohmann::json summary{{"beta3", table.beta3}, {"beta4", table.beta4}};
  if (lt.size() >= 2) summary["pearson_log_homogeneous"] = pearson(logs(lt), logs(le));
  if (!ht.empty()) {
    std::size_t below = 0;
    for (std::size_t i = 0; i < ht.size(); ++i) below += he[i] <= ht[i];
    summary["heterogeneous_lower_bound_share"] = static_cast<double>(below) / static_cast<double>(ht.size());
  }
  out.write_json("summary.json", summary);
  out.finish("reproduce fig8", c.seed, to_json(c, kCommon | kSimulation | kEstimation | kCalibration));
  return 0;
}

int reproduce_fig_dfa(Config& c) {
  ArtifactDir out(c.out);
  const std::vector<Method> methods{Method::acf, Method::dfa};
  auto run = consistency_run(c, methods);
  out.write("dfa_consistency.csv", consistency_csv(run, methods));
  out.write("dfa_consistency.svg", svg_string(consistency_plot(run, methods, "DFA versus ACF")));
  nlohmann::json summary;
  for (auto m : methods) {
    std::vector<double> x, y;
    for (const auto& rep : run.results.at(m))
      for (const auto& obs : rep)
        if (obs) x.push_back(obs->alpha - 1), y.push_back(obs->gamma);
    auto line = ols_line(x, y);
    summary[to_string(m)] = {{"slope", line.slope}, {"intercept", line.intercept}, {"n", x.size()}};
  }
  out.write_json("summary.json", summary);
  out.finish("reproduce fig-dfa", c.seed, to_json(c, kCommon | kEstimation));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Order-splitting and long-memory toolkit"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    unsigned groups;
    int (*run)(Config&);
  };
  const std::vector<Sub> subs{
      {"simulate", "simulate an LMF market and write its tape CSV", kCommon | kSimulation, cmd_simulate},
      {"classify", "runs-test classification and run-length CCDFs", kMarket, cmd_classify},
      {"fit-alpha", "tail exponent of splitting-trader runs", kMarket, cmd_fit_alpha},
      {"fit-gamma", "ACF, PSD and DFA exponents of the sign series",
       kMarket | kEstimation | kCalibrationFile, cmd_fit_gamma},
      {"calibrate", "Monte-Carlo bias calibration of the estimators", kCommon | kEstimation | kCalibration,
       cmd_calibrate},
      {"scatter", "alpha versus unbiased gamma over an ensemble",
       kCommon | kEstimation | kCalibration | kCalibrationFile, cmd_scatter},
  };
  std::vector<std::pair<CLI::App*, FlagSet>> registered;
  registered.reserve(subs.size() + 1);
  for (const auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    registered.emplace_back(sc, FlagSet{});
    registered.back().second.attach(*sc, s.groups);
  }
  auto* repro = app.add_subcommand("reproduce", "regenerate a figure's data at the configured scale");
  std::string figure;
  repro->add_option("figure", figure, "fig6 | fig7 | fig8 | fig-dfa")
      ->required()
      ->check(CLI::IsMember({"fig6", "fig7", "fig8", "fig-dfa"}));
  registered.emplace_back(repro, FlagSet{});
  registered.back().second.attach(*repro, kCommon | kSimulation | kEstimation | kCalibration);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (std::size_t i = 0; i < registered.size(); ++i) {
      auto& [sc, flags] = registered[i];
      if (!sc->parsed()) continue;
      auto cfg = flags.resolve();
      if (i < subs.size()) return subs[i].run(cfg);
      if (figure == "fig6") return reproduce_bias_figure(cfg, Method::acf, figure);
      if (figure == "fig7") return reproduce_bias_figure(cfg, Method::psd, figure);
      if (figure == "fig8") return reproduce_fig8(cfg);
      return reproduce_fig_dfa(cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "lmf: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const ParameterError& e) {
    std::cerr << "lmf: invalid parameter: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "lmf: I/O error: " << e.what() << '\n';
    return 4;
  } catch (const FormatError& e) {
    std::cerr << "lmf: input error: " << e.what() << '\n';
    return 4;
  } catch (const Error& e) {
    // FitError, EstimationFailure, CalibrationError, EmptyInputError
    std::cerr << "lmf: estimation failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "lmf: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
