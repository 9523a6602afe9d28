#pragma once

// Sign-autocorrelation estimator: sample ACF, logarithmic smoothing, an
// automatically chosen fit window, relative-least-squares exponent and an
// integral prefactor.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lmf/error.hpp"
#include "lmf/fft.hpp"
#include "lmf/fit_report.hpp"
#include "lmf/order_tape.hpp"
#include "lmf/rls.hpp"

namespace lmf {

/// C(tau) for tau = 1..tau_max; values[tau - 1].
struct Acf {
  std::vector<double> values;
  std::size_t n_events = 0;

  std::size_t tau_max() const noexcept { return values.size(); }
  double at(std::size_t tau) const { return values.at(tau - 1); }
};

/// C(tau) = sum_t e(t) e(t+tau) / (N - tau), without mean subtraction.
/// Lag sums are computed by FFT and rounded to the exact integers they are.
inline Acf sample_acf(std::span<const std::int8_t> signs, std::size_t tau_max = 10000) {
  const auto n = signs.size();
  if (tau_max == 0) throw ParameterError("sample_acf: tau_max must be positive");
  if (n <= tau_max) throw ParameterError("sample_acf: series shorter than tau_max + 1");
  std::vector<double> x(signs.begin(), signs.end());
  auto sums = fft::lag_sums(x, tau_max);
  Acf acf;
  acf.n_events = n;
  acf.values.resize(tau_max);
  for (std::size_t tau = 1; tau <= tau_max; ++tau)
    acf.values[tau - 1] = std::round(sums[tau]) / static_cast<double>(n - tau);
  return acf;
}

inline Acf sample_acf(const SignSeries& series, std::size_t tau_max = 10000) {
  return sample_acf(series.signs, tau_max);
}

/// Uniform average of C over the integer lags in
/// (floor(tau 10^(-delta/2)), floor(tau 10^(delta/2))], clipped to the
/// available lags. The half-open range is the one on which the weight
/// 1 / (upper - lower) sums to one; for tau <= 16 it is just {tau}.
inline Acf log_smooth(const Acf& acf, double delta = 0.05) {
  if (!(delta > 0)) throw ParameterError("log_smooth: delta must be positive");
  const auto n = acf.tau_max();
  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + acf.values[i];
  const double up = std::pow(10.0, delta / 2), down = std::pow(10.0, -delta / 2);
  Acf out;
  out.n_events = acf.n_events;
  out.values.resize(n);
  for (std::size_t tau = 1; tau <= n; ++tau) {
    auto lo = static_cast<std::size_t>(std::floor(static_cast<double>(tau) * down));
    auto hi = static_cast<std::size_t>(std::floor(static_cast<double>(tau) * up));
    hi = std::min(hi, n);
    if (hi <= lo) lo = tau - 1, hi = tau;
    out.values[tau - 1] = static_cast<double>((prefix[hi] - prefix[lo]) / static_cast<long double>(hi - lo));
  }
  return out;
}

/// C(tau) ~ c0 exp(-tau / tau_temp) + c1 tau^(-gamma_temp).
struct TentativeFit {
  double c0 = 0;
  double c1 = 0;
  double tau_temp = 1;
  double gamma_temp = 0;
  double cost = 0;

  double exponential(double tau) const { return c0 * std::exp(-tau / tau_temp); }
  double power(double tau) const { return c1 * std::pow(tau, -gamma_temp); }
};

/// Relative-least-squares fit of the exponential-plus-power model on lags
/// 1..fit_max, multi-started from a power-law-dominated and an
/// exponential-dominated initial guess.
inline TentativeFit tentative_fit(const Acf& acf, std::size_t fit_max = 1000) {
  if (acf.tau_max() < fit_max) throw ParameterError("tentative_fit: need lags 1..fit_max");
  std::vector<double> tau(fit_max), logtau(fit_max), y(fit_max);
  for (std::size_t i = 0; i < fit_max; ++i) {
    tau[i] = static_cast<double>(i + 1);
    logtau[i] = std::log(tau[i]);
    y[i] = acf.values[i];
  }
  // parameters: (c0, ln tau_temp, ln c1, gamma)
  auto cost = [&](const std::array<double, 4>& p) {
    const double tt = std::exp(p[1]), lc1 = p[2], g = p[3];
    double j = 0;
    for (std::size_t i = 0; i < fit_max; ++i) {
      double f = p[0] * std::exp(-tau[i] / tt) + std::exp(lc1 - g * logtau[i]);
      double r = (y[i] - f) / f;
      j += r * r;
    }
    return j;
  };

  double c1 = std::abs(y[0]) > 0 ? std::abs(y[0]) : 1.0, g = 0.5;
  {
    std::vector<double> tx, ty;
    for (std::size_t i = 99; i < fit_max; ++i)
      if (y[i] > 0) tx.push_back(tau[i]), ty.push_back(y[i]);
    if (tx.size() >= 10) {
      auto ols = loglog_ols(tx, ty);
      if (std::isfinite(ols.exponent) && ols.exponent > -1 && ols.exponent < 5) {
        g = ols.exponent;
        c1 = ols.scale;
      }
    }
  }
  const double head = y[0];
  std::vector<std::array<double, 4>> starts;
  for (double tt : {2.0, 10.0, 50.0}) {
    double c0 = (head - c1) * std::exp(1.0 / tt);
    starts.push_back({c0, std::log(tt), std::log(c1), g});
  }
  if (head > 0) starts.push_back({head * std::exp(0.2), std::log(5.0), std::log(head) - 30, 0.5});

  SimplexOptions opt;
  opt.max_iterations = 10000;
  SimplexResult<4> best;
  bool have = false;
  for (const auto& s : starts) {
    auto r = nelder_mead<4>(cost, s, opt);
    for (int restart = 0; restart < 3 && r.cost > 0; ++restart) {
      auto again = nelder_mead<4>(cost, r.x, opt);
      if (!(again.cost < r.cost)) break;
      again.converged = again.converged || r.converged;
      r = again;
    }
    if (!have || r.cost < best.cost) best = r, have = true;
  }
  if (!std::isfinite(best.cost)) throw FitError("tentative_fit: no finite fit found");
  if (!best.converged) throw FitError("tentative_fit: simplex did not converge");
  return {best.x[0], std::exp(best.x[2]), std::exp(best.x[1]), best.x[3], best.cost};
}

/// Smallest tau in [10, 100] where the exponential part is below 0.1 of the
/// power-law part; 100 when there is none.
inline std::size_t lower_threshold(const TentativeFit& fit, double epsilon = 0.1) {
  for (std::size_t tau = 10; tau <= 100; ++tau) {
    double e = std::abs(fit.exponential(static_cast<double>(tau)));
    double p = std::abs(fit.power(static_cast<double>(tau)));
    if (e == 0 || (p > 0 && e / p < epsilon)) return tau;
  }
  return 100;
}

/// min(tau_stat, 100 tau_lower), where tau_stat is the first lag >= 1000 at
/// which the smoothed ACF drops below 1/sqrt(N) (10^4 if it never does).
inline std::size_t upper_threshold(const Acf& smoothed, std::size_t n_events,
                                   std::size_t tau_lower) {
  const double floor_level = 1.0 / std::sqrt(static_cast<double>(n_events));
  const std::size_t last = std::min<std::size_t>(10000, smoothed.tau_max());
  std::size_t tau_stat = 10000;
  for (std::size_t tau = 1000; tau <= last; ++tau) {
    if (smoothed.at(tau) < floor_level) {
      tau_stat = tau;
      break;
    }
  }
  return std::min({tau_stat, 100 * tau_lower, smoothed.tau_max()});
}

/// c0 such that c0 tau^(-gamma) has the same integral over [lower, upper]
/// as the smoothed ACF (trapezoidal rule over integer lags).
inline double acf_prefactor(const Acf& smoothed, double gamma, std::size_t lower, std::size_t upper) {
  double integral = 0;
  for (std::size_t tau = lower; tau < upper; ++tau)
    integral += 0.5 * (smoothed.at(tau) + smoothed.at(tau + 1));
  const double lo = static_cast<double>(lower), hi = static_cast<double>(upper);
  const double e = 1.0 - gamma;
  if (std::abs(e) < 1e-9) return integral / std::log(hi / lo);
  return e / (std::pow(hi, e) - std::pow(lo, e)) * integral;
}

struct AcfOptions {
  std::size_t tau_max = 10000;
  double delta = 0.05;
  std::size_t tentative_max = 1000;
};

/// Window selection, exponent and prefactor from a raw sample ACF.
inline FitReport acf_gamma_from_acf(const Acf& raw, const AcfOptions& opt = {}) {
  auto tentative = tentative_fit(raw, opt.tentative_max);
  auto lower = lower_threshold(tentative);
  auto smoothed = log_smooth(raw, opt.delta);
  auto upper = upper_threshold(smoothed, raw.n_events, lower);
  if (upper <= lower) throw FitError("acf_gamma: empty fit window");

  std::vector<double> x, y;
  for (std::size_t tau = lower; tau <= upper; ++tau) {
    x.push_back(static_cast<double>(tau));
    y.push_back(smoothed.at(tau));
  }
  auto fit = rls_powerlaw_fit(x, y);

  FitReport report;
  report.method = Method::acf;
  report.gamma = fit.exponent;
  report.window_lower = static_cast<double>(lower);
  report.window_upper = static_cast<double>(upper);
  report.diagnostics = {{"tentative_c0", tentative.c0},
                        {"tentative_c1", tentative.c1},
                        {"tentative_tau", tentative.tau_temp},
                        {"tentative_gamma", tentative.gamma_temp},
                        {"tentative_cost", tentative.cost},
                        {"rls_scale", fit.scale},
                        {"rls_cost", fit.cost},
                        {"n_points", static_cast<double>(fit.n_points)},
                        {"n_dropped", static_cast<double>(fit.n_dropped)},
                        {"n_events", static_cast<double>(raw.n_events)}};
  if (fit.exponent < 0)
    throw EstimationFailure("acf_gamma: fitted gamma is negative (" + std::to_string(fit.exponent) + ")");
  report.c0 = acf_prefactor(smoothed, fit.exponent, lower, upper);
  return report;
}

inline FitReport acf_gamma(std::span<const std::int8_t> signs, const AcfOptions& opt = {}) {
  auto raw_max = static_cast<std::size_t>(
      std::ceil(static_cast<double>(opt.tau_max) * std::pow(10.0, opt.delta / 2)));
  return acf_gamma_from_acf(sample_acf(signs, raw_max), opt);
}

inline FitReport acf_gamma(const SignSeries& series, const AcfOptions& opt = {}) {
  return acf_gamma(series.signs, opt);
}

}  // namespace lmf
