// Acceptance runner: `lmf_acceptance N` checks criterion N (1..13), `all`
// (or no argument) checks every criterion. One line per criterion:
//   criterion N: PASS|FAIL <measurements>
// Set LMF_ACCEPTANCE_SCALE=full for the 10^8-event consistency check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "lmf.hpp"
#include "stats.hpp"

using namespace lmf;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fail]");
  }
  void info(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

bool full_scale() {
  const char* s = std::getenv("LMF_ACCEPTANCE_SCALE");
  return s && std::string(s) == "full";
}

SimulationResult homogeneous(std::int64_t n_st, std::int64_t n_events, double alpha, std::uint64_t seed,
                             bool tapes = false) {
  LmfParams p;
  p.n_traders = n_st;
  p.n_events = n_events;
  p.alpha = alpha;
  p.seed = seed;
  SimulationOptions opt;
  opt.build_tapes = tapes;
  return simulate(p, opt);
}

std::vector<std::int8_t> coin_signs(RandomStream& rng, std::size_t n) {
  std::vector<std::int8_t> s(n);
  for (auto& v : s) v = static_cast<std::int8_t>(rng.coin());
  return s;
}

TraderTape tape_of(const std::string& id, std::vector<std::int8_t> signs) {
  TraderTape t;
  t.trader_id = id;
  t.reduced_signs = std::move(signs);
  for (std::size_t k = 0; k < t.reduced_signs.size(); ++k) t.ticks.push_back(static_cast<std::int64_t>(k));
  t.days.assign(t.reduced_signs.size(), 0);
  t.run_lengths = runs_decompose(t);
  t.active_days = 1;
  return t;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  for (double a : {1.2, 1.5, 1.8, 2.5}) {
    auto t0 = Clock::now();
    RandomStream rng(derive_seed(1001, static_cast<std::uint64_t>(a * 10)), 0);
    std::vector<std::int64_t> xs(1000000);
    for (auto& x : xs) x = sample_pareto_integer(rng, a);
    auto chi = oracle::chi_square_integer(xs, [&](std::int64_t l) { return pareto_integer_pmf(l, a); }, 100);
    double dt = seconds_since(t0);
    o.check(chi.p_value > 0.001 && dt < 10,
            fmt("alpha=%.1f chi2=%.1f dof=%d p=%.3g t=%.2fs", a, chi.statistic, chi.dof, chi.p_value, dt));
  }
  return o;
}

// Criteria 2 and 11 share these simulations.
struct ConsistencyPoint {
  double alpha;
  FitReport acf;
  std::optional<FitReport> dfa;
  double seconds;
};

std::vector<ConsistencyPoint> consistency_runs(bool with_dfa) {
  const std::int64_t n = full_scale() ? 100000000 : 10000000;
  std::vector<ConsistencyPoint> out;
  for (double a : {1.2, 1.5, 1.8}) {
    auto t0 = Clock::now();
    auto sim = homogeneous(100, n, a, derive_seed(2002, static_cast<std::uint64_t>(a * 10)));
    ConsistencyPoint pt{a, acf_gamma(sim.series), std::nullopt, 0};
    pt.seconds = seconds_since(t0);
    if (with_dfa) pt.dfa = dfa_gamma(sim.series);
    out.push_back(std::move(pt));
  }
  return out;
}

Outcome criterion2() {
  Outcome o;
  const double tol = full_scale() ? 0.10 : 0.15;
  o.info(full_scale() ? "scale=full N=1e8" : "scale=desk N=1e7");
  for (const auto& pt : consistency_runs(false)) {
    double err = pt.acf.gamma - (pt.alpha - 1);
    bool fast = full_scale() || pt.seconds < 300;
    o.check(std::abs(err) <= tol && fast,
            fmt("alpha=%.1f gamma=%.4f err=%+.4f t=%.1fs", pt.alpha, pt.acf.gamma, err, pt.seconds));
  }
  return o;
}

Outcome criterion3() {
  Outcome o;
  auto t0 = Clock::now();
  const std::vector<Method> methods{Method::acf, Method::psd};
  auto calib = run_ensemble(make_default_ensemble(50, 3003), 20, 3003, methods);
  // held-out ensemble: same parameter law, disjoint seeds
  auto held = run_ensemble(make_default_ensemble(50, 3303), 5, 3303, methods);
  for (auto m : methods) {
    CalibrationTable table;
    try {
      table = calibrate_from_run(calib, m);
    } catch (const CalibrationError& e) {
      o.check(false, std::string(to_string(m)) + ": " + e.what());
      continue;
    }
    o.check(table.beta1 > 0.3 && table.beta1 < 0.95 && table.beta2 > 0.0 && table.beta2 < 0.3,
            fmt("%s beta1=%.3f beta2=%.3f failed=%zu/1000", to_string(m), table.beta1, table.beta2,
                table.n_failed));
    std::vector<double> x, y;
    double err = 0;
    std::size_t failed = 0;
    for (const auto& rep : held.results.at(m))
      for (const auto& obs : rep) {
        if (!obs) {
          ++failed;
          continue;
        }
        double g = unbias(obs->gamma, table);
        x.push_back(obs->alpha - 1);
        y.push_back(g);
        err += obs->alpha - 1 - g;
      }
    err /= static_cast<double>(x.size());
    auto line = ols_line(x, y);
    o.check(std::abs(err) <= 0.05, fmt("%s held-out mean error=%+.4f (n=%zu, failed=%zu)", to_string(m), err,
                                       x.size(), failed));
    o.info(fmt("%s held-out unbiased slope=%.3f intercept=%+.3f", to_string(m), line.slope, line.intercept));
  }
  double dt = seconds_since(t0);
  o.check(dt < 7200, fmt("t=%.0fs threads=%u", dt, default_threads()));
  return o;
}

Outcome criterion4() {
  Outcome o;
  auto t0 = Clock::now();
  RandomStream rng(4004, 0);
  TapeMap bern;
  for (int i = 0; i < 10000; ++i) {
    auto id = "B" + std::to_string(i);
    bern[id] = tape_of(id, coin_signs(rng, 1000));
  }
  double fpr = static_cast<double>(classify_traders(bern).st_ids.size()) / 1e4;
  TapeMap split;
  for (int i = 0; i < 1000; ++i) {
    auto id = "S" + std::to_string(i);
    split[id] = tape_of(id, homogeneous(1, 1000, 1.5, derive_seed(4044, static_cast<std::uint64_t>(i))).series.signs);
  }
  double power = static_cast<double>(classify_traders(split).st_ids.size()) / 1e3;
  double dt = seconds_since(t0);
  o.check(fpr <= 0.013, fmt("fpr=%.4f", fpr));
  o.check(power >= 0.95, fmt("power=%.4f", power));
  o.check(dt < 60, fmt("t=%.1fs", dt));
  return o;
}

Outcome criterion5() {
  Outcome o;
  RandomStream rng(5005, 0);
  TapeMap tapes;
  std::set<std::string> ids;
  for (int i = 0; i < 250; ++i) {
    auto id = "R" + std::to_string(i);
    tapes[id] = tape_of(id, coin_signs(rng, 1000));
    ids.insert(id);
  }
  auto runs = pooled_runs(tapes, ids);
  // empirical_ccdf(x) = P(L > x); the law P_>(L) = 2^(1-L) read at L = x + 1
  double ks = 0;
  for (const auto& [x, p] : empirical_ccdf(runs))
    ks = std::max(ks, std::abs(p - std::pow(2.0, -static_cast<double>(x))));
  double lstar = geometric_fit(runs);
  o.check(runs.size() >= 100000, fmt("runs=%zu", runs.size()));
  o.check(ks < 0.01, fmt("KS=%.5f", ks));
  o.check(lstar >= 1.95 && lstar <= 2.05, fmt("L*=%.4f", lstar));
  return o;
}

Outcome criterion6() {
  Outcome o;
  LmfParams p;
  p.n_traders = 100;
  p.n_events = 2000000;
  p.alpha = 1.5;
  p.seed = 6006;
  SimulationOptions opt;
  opt.record_metaorders = true;
  auto sim = simulate(p, opt);
  auto cls = classify_traders(sim.tapes);
  // runs of the ST tapes (same-sign neighbours merge)
  auto runs = pooled_runs(sim.tapes, cls.st_ids);
  // completed metaorders of the same traders
  std::set<std::uint32_t> st_index;
  for (std::uint32_t i = 0; i < sim.trader_ids.size(); ++i)
    if (cls.is_st(sim.trader_ids[i])) st_index.insert(i);
  std::vector<std::int64_t> lengths;
  for (const auto& m : sim.completed)
    if (st_index.count(m.trader)) lengths.push_back(m.length);
  auto fit = clauset_fit(lengths);
  o.check(lengths.size() >= 100000, fmt("ST traders=%zu metaorders=%zu", cls.st_ids.size(), lengths.size()));
  o.check(std::abs(fit.alpha - 1.5) <= 0.05,
          fmt("metaorder alpha=%.4f xmin=%lld n_tail=%lld", fit.alpha, static_cast<long long>(fit.xmin),
              static_cast<long long>(fit.n_tail)));
  auto rfit = clauset_fit(runs);
  o.info(fmt("tape runs=%zu alpha=%.4f xmin=%lld (informational)", runs.size(), rfit.alpha,
             static_cast<long long>(rfit.xmin)));
  return o;
}

Outcome criterion7() {
  Outcome o;
  double worst = 0;
  for (int k = 1; k <= 9; ++k) {
    double a = 1.0 + 0.1 * k;
    for (double n : {10.0, 100.0, 1000.0}) worst = std::max(worst, std::abs(nst_lmf(lmf_prefactor(a, n), a - 1) / n - 1));
  }
  o.check(worst <= 1e-9, fmt("max relative error=%.3g over 27 grid points", worst));
  return o;
}

Outcome criterion8() {
  Outcome o;
  RandomStream rng(8008, 0);
  int violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    auto n = 2 + static_cast<std::int64_t>(rng.uniform() * 499);
    double a = 1.0 + 1e-3 + rng.uniform() * (1 - 2e-3);
    std::vector<double> w(static_cast<std::size_t>(n));
    double shape = 0.5 + 3 * rng.uniform();
    for (auto& v : w) v = std::pow(1.0 - rng.uniform(), -1.0 / shape);
    w = normalize_intensities(std::move(w));
    double sk = sk_prefactor(a, w), lmf = lmf_prefactor(a, static_cast<double>(n));
    violations += sk < lmf * (1 - 1e-12);
  }
  o.check(violations == 0, fmt("violations=%d of 10000", violations));
  return o;
}

Outcome criterion9() {
  Outcome o;
  const double alpha = 1.5;
  const std::int64_t n_events = 1000000;
  // beta3/beta4 from a separate homogeneous calibration ensemble
  EnsembleRanges r;
  r.n_st_lo = 20;
  r.n_st_hi = 500;
  r.n_events_lo = r.n_events_hi = n_events;
  auto table = calibrate_from_run(run_ensemble(make_default_ensemble(40, 9009, r), 5, 9009, {Method::acf}),
                                  Method::acf);
  o.info(fmt("beta3=%.3f beta4=%+.3f", table.beta3, table.beta4));

  RandomStream rng(9090, 0);
  auto draw_nst = [&] { return std::llround(std::exp(std::log(20.0) + rng.uniform() * std::log(25.0))); };
  std::vector<double> truth, est;
  std::size_t failed = 0;
  for (int i = 0; i < 30; ++i) {
    auto n_st = draw_nst();
    auto sim = homogeneous(n_st, n_events, alpha, derive_seed(9091, static_cast<std::uint64_t>(i)));
    try {
      auto fit = acf_gamma(sim.series);
      est.push_back(nst_calibrated_log10(*fit.c0, fit.gamma, table));
      truth.push_back(std::log10(static_cast<double>(n_st)));
    } catch (const Error&) {
      ++failed;
    }
  }
  double rho = pearson(truth, est);
  o.check(rho >= 0.8 && failed <= 1, fmt("homogeneous pearson=%.3f (n=%zu, failed=%zu)", rho, est.size(), failed));

  int below = 0, used = 0;
  for (int i = 0; i < 30; ++i) {
    LmfParams p;
    p.n_traders = draw_nst();
    p.n_events = n_events;
    p.alpha = alpha;
    p.intensities = pareto_intensities(p.n_traders, 1.5, derive_seed(9092, static_cast<std::uint64_t>(i)));
    p.seed = derive_seed(9093, static_cast<std::uint64_t>(i));
    SimulationOptions opt;
    opt.build_tapes = false;
    auto sim = simulate_heterogeneous(p, opt);
    try {
      auto fit = acf_gamma(sim.series);
      ++used;
      below += nst_calibrated_log10(*fit.c0, fit.gamma, table) <= std::log10(static_cast<double>(p.n_traders));
    } catch (const Error&) {
    }
  }
  double share = used ? static_cast<double>(below) / used : 0;
  o.check(share >= 0.9 && used >= 27, fmt("heterogeneous N_LMF <= N_ST in %d/%d (%.0f%%)", below, used, 100 * share));
  return o;
}

Outcome criterion10() {
  Outcome o;
  double worst = 0;
  int fails = 0;
  for (int i = 0; i < 20; ++i) {
    auto sim = homogeneous(100, 10000000, 1.5, derive_seed(1010, static_cast<std::uint64_t>(i)));
    try {
      double d = std::abs(acf_gamma(sim.series).gamma - psd_gamma(sim.series).gamma);
      worst = std::max(worst, d);
      fails += d > 0.15;
    } catch (const Error& e) {
      ++fails;
      o.info(fmt("realization %d: %s", i, e.what()));
    }
  }
  o.check(fails == 0, fmt("max |gamma_acf - gamma_psd|=%.4f, exceedances=%d/20", worst, fails));
  return o;
}

Outcome criterion11() {
  Outcome o;
  std::vector<double> x, ga, gd;
  for (const auto& pt : consistency_runs(true)) {
    x.push_back(pt.alpha - 1);
    ga.push_back(pt.acf.gamma);
    gd.push_back(pt.dfa->gamma);
    o.info(fmt("alpha=%.1f acf=%.3f dfa=%.3f", pt.alpha, pt.acf.gamma, pt.dfa->gamma));
  }
  double sa = ols_line(x, ga).slope, sd = ols_line(x, gd).slope;
  o.check(sd < sa, fmt("slope dfa=%.3f < slope acf=%.3f", sd, sa));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion12() {
  Outcome o;
  const char* cli = std::getenv("LMF_CLI");
  if (!cli) {
    o.check(false, "LMF_CLI not set (build with LMF_BUILD_TOOLS)");
    return o;
  }
  auto root = fs::temp_directory_path() / ("lmf_accept_12_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "simulate --alpha 1.5 --n-st 100 --n-events 1000000 --seed 7"},
      {"classify", "classify --alpha 1.5 --n-st 50 --n-events 200000 --seed 7"},
      {"fit-gamma", "fit-gamma --alpha 1.5 --n-st 100 --n-events 1000000 --seed 7"},
      {"scatter", "scatter --method both --points 6 --replicates 2 --seed 7 --n-events-min 500001 --n-events-max 600000 --max-failure 0.5"},
  };
  for (const auto& [name, args] : commands) {
    std::vector<fs::path> dirs{root / (name + "_a"), root / (name + "_b")};
    bool ran = true;
    for (const auto& d : dirs) {
      std::string cmd = std::string("\"") + cli + "\" " + args + " --out \"" + d.string() + "\" > /dev/null";
      ran = ran && std::system(cmd.c_str()) == 0;
    }
    if (!ran) {
      o.check(false, name + ": command failed");
      continue;
    }
    std::size_t files = 0, same = 0;
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      auto other = dirs[1] / e.path().filename();
      same += fs::exists(other) && slurp(e.path()) == slurp(other);
    }
    o.check(files > 0 && same == files, fmt("%s: %zu/%zu CSVs identical", name.c_str(), same, files));
  }
  fs::remove_all(root);
  return o;
}

Outcome criterion13() {
  Outcome o;
  std::vector<OrderEvent> events{
      {1, "O1", "V1", Side::buy, EventKind::submission, 0},
      {2, "O2", "V1", Side::sell, EventKind::submission, 0},
      {3, "O2", "V2", Side::sell, EventKind::cancellation, 0},
  };
  auto desks = resolve_trading_desks(events);
  o.check(desks.component_count == 1 && desks.desk("V1") == desks.desk("V2"),
          fmt("desks=%zu V1->%s V2->%s", desks.component_count, desks.desk("V1").c_str(), desks.desk("V2").c_str()));
  return o;
}

const std::vector<std::function<Outcome()>> kCriteria{criterion1, criterion2,  criterion3,  criterion4, criterion5,
                                                      criterion6, criterion7,  criterion8,  criterion9, criterion10,
                                                      criterion11, criterion12, criterion13};

bool run(int n) {
  auto t0 = Clock::now();
  Outcome o;
  try {
    o = kCriteria.at(static_cast<std::size_t>(n - 1))();
  } catch (const std::exception& e) {
    o.check(false, std::string("exception: ") + e.what());
  }
  std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " " << o.detail
            << fmt(" (%.1fs)", seconds_since(t0)) << std::endl;
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::string which = argc > 1 ? argv[1] : "all";
  if (which == "all") {
    bool ok = true;
    for (int n = 1; n <= 13; ++n) ok = run(n) && ok;
    return ok ? 0 : 1;
  }
  int n = std::atoi(which.c_str());
  if (n < 1 || n > 13) {
    std::cerr << "usage: lmf_acceptance [1..13|all]\n";
    return 2;
  }
  return run(n) ? 0 : 1;
}
