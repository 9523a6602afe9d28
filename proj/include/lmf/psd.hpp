#pragma once

// Periodogram estimator of the sign power spectrum. Frequencies are in
// cycles per tick, omega_k = k / N. S holds the two-sided density
// |X_k|^2 / N, which estimates sum_tau C(tau) exp(-2 pi i omega tau).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "lmf/error.hpp"
#include "lmf/fft.hpp"
#include "lmf/fit_report.hpp"
#include "lmf/order_tape.hpp"
#include "lmf/rls.hpp"

namespace lmf {

/// S(omega_k) for k = 1..floor(N/2); values[k - 1].
struct Psd {
  std::vector<double> values;
  std::size_t n_events = 0;

  double delta_omega() const noexcept { return 1.0 / static_cast<double>(n_events); }
  double freq(std::size_t k) const noexcept { return static_cast<double>(k) * delta_omega(); }
  double at(std::size_t k) const { return values.at(k - 1); }
  std::size_t bins() const noexcept { return values.size(); }

  /// Parseval: sum over all nonzero DFT bins of S * delta_omega, which is
  /// the population variance of the series. The Nyquist bin of an even
  /// length has no mirror image.
  double total_power() const {
    double s = 0;
    for (std::size_t k = 1; k <= values.size(); ++k) {
      bool nyquist = n_events % 2 == 0 && 2 * k == n_events;
      s += (nyquist ? 1.0 : 2.0) * values[k - 1];
    }
    return s * delta_omega();
  }
};

inline Psd periodogram(std::span<const double> x) {
  const auto n = x.size();
  if (n < 2) throw ParameterError("periodogram: need at least 2 samples");
  auto power = fft::power_spectrum(x);
  Psd psd;
  psd.n_events = n;
  psd.values.assign(power.begin() + 1, power.end());
  for (auto& v : psd.values) v /= static_cast<double>(n);
  return psd;
}

inline Psd periodogram(std::span<const std::int8_t> signs) {
  std::vector<double> x(signs.begin(), signs.end());
  return periodogram(std::span<const double>(x));
}

inline Psd periodogram(const SignSeries& series) { return periodogram(series.signs); }

/// Centered moving average over 2 half_width + 1 bins, truncated at the ends.
inline Psd linear_smooth(const Psd& psd, std::size_t half_width = 5) {
  const auto n = psd.bins();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + psd.values[i];
  Psd out;
  out.n_events = psd.n_events;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i >= half_width ? i - half_width : 0;
    std::size_t hi = std::min(n, i + half_width + 1);
    out.values[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

/// Spectral amplitude for C(tau) = c0 tau^(-gamma): S(omega) ~ k c0 omega^(gamma-1)
/// with k = 2 (2 pi)^(gamma-1) Gamma(1-gamma) sin(pi gamma / 2).
inline double spectral_constant(double gamma) {
  return 2.0 * std::pow(2.0 * std::numbers::pi, gamma - 1.0) * std::tgamma(1.0 - gamma) *
         std::sin(std::numbers::pi * gamma / 2.0);
}

/// c0 whose spectral power law has the same integral over [lower, upper]
/// bins as the smoothed PSD (trapezoidal in omega). Requires 0 < gamma < 1.
inline double psd_prefactor(const Psd& smoothed, double gamma, std::size_t lower, std::size_t upper) {
  if (!(gamma > 0 && gamma < 1)) throw EstimationFailure("psd_prefactor: gamma outside (0, 1)");
  double integral = 0;
  for (std::size_t k = lower; k < upper; ++k)
    integral += 0.5 * (smoothed.at(k) + smoothed.at(k + 1));
  integral *= smoothed.delta_omega();
  const double w0 = smoothed.freq(lower), w1 = smoothed.freq(upper);
  return gamma * integral / ((std::pow(w1, gamma) - std::pow(w0, gamma)) * spectral_constant(gamma));
}

struct PsdOptions {
  std::size_t half_width = 5;
  std::size_t lower_bin = 15;
  std::size_t upper_min_bin = 100;
  std::size_t upper_max_bin = 1000;
  double median_max_freq = 1e-3;
};

inline FitReport psd_gamma_from_psd(const Psd& raw, const PsdOptions& opt = {}) {
  auto smoothed = linear_smooth(raw, opt.half_width);
  const std::size_t lower = opt.lower_bin;
  const auto median_hi = std::min(
      smoothed.bins(),
      static_cast<std::size_t>(std::floor(opt.median_max_freq * static_cast<double>(raw.n_events))));
  if (median_hi < lower) throw ParameterError("psd_gamma: series too short for the median band");
  std::vector<double> band(smoothed.values.begin() + static_cast<std::ptrdiff_t>(lower - 1),
                           smoothed.values.begin() + static_cast<std::ptrdiff_t>(median_hi));
  auto mid = band.begin() + static_cast<std::ptrdiff_t>(band.size() / 2);
  std::nth_element(band.begin(), mid, band.end());
  double median = *mid;
  if (band.size() % 2 == 0) median = 0.5 * (median + *std::max_element(band.begin(), mid));

  const std::size_t last = std::min(opt.upper_max_bin, smoothed.bins());
  std::size_t upper = last;
  for (std::size_t k = opt.upper_min_bin; k <= last; ++k) {
    if (smoothed.at(k) < median) {
      upper = k;
      break;
    }
  }
  if (upper <= lower) throw FitError("psd_gamma: empty fit window");

  std::vector<double> x, y;
  for (std::size_t k = lower; k <= upper; ++k) {
    x.push_back(smoothed.freq(k));
    y.push_back(smoothed.at(k));
  }
  auto fit = rls_powerlaw_fit(x, y);
  const double h = fit.exponent;

  FitReport report;
  report.method = Method::psd;
  report.gamma = 1.0 - h;
  report.window_lower = smoothed.freq(lower);
  report.window_upper = smoothed.freq(upper);
  report.diagnostics = {{"hurst_slope", h},
                        {"median", median},
                        {"bin_lower", static_cast<double>(lower)},
                        {"bin_upper", static_cast<double>(upper)},
                        {"rls_scale", fit.scale},
                        {"rls_cost", fit.cost},
                        {"n_points", static_cast<double>(fit.n_points)},
                        {"n_dropped", static_cast<double>(fit.n_dropped)},
                        {"n_events", static_cast<double>(raw.n_events)}};
  if (h >= 1) throw EstimationFailure("psd_gamma: spectral slope H >= 1 (" + std::to_string(h) + ")");
  if (report.gamma > 0) report.c0 = psd_prefactor(smoothed, report.gamma, lower, upper);
  return report;
}

inline FitReport psd_gamma(std::span<const std::int8_t> signs, const PsdOptions& opt = {}) {
  return psd_gamma_from_psd(periodogram(signs), opt);
}

inline FitReport psd_gamma(const SignSeries& series, const PsdOptions& opt = {}) {
  return psd_gamma(series.signs, opt);
}

}  // namespace lmf
