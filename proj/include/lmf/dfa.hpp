#pragma once

// First-order detrended fluctuation analysis. Kept as the negative control:
// on LMF order flow its exponent drifts off gamma = alpha - 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lmf/error.hpp"
#include "lmf/fit_report.hpp"
#include "lmf/order_tape.hpp"
#include "lmf/rls.hpp"

namespace lmf {

/// `count` log-spaced integer box sizes in [lo, hi], duplicates removed.
inline std::vector<std::size_t> log_spaced_sizes(std::size_t lo, std::size_t hi, std::size_t count) {
  if (lo < 2 || hi < lo || count < 2) throw ParameterError("log_spaced_sizes: bad range");
  std::vector<std::size_t> out;
  const double a = std::log(static_cast<double>(lo)), b = std::log(static_cast<double>(hi));
  for (std::size_t i = 0; i < count; ++i) {
    auto n = static_cast<std::size_t>(std::llround(std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1))));
    if (out.empty() || n != out.back()) out.push_back(n);
  }
  return out;
}

/// F(n): rms residual of the mean-removed profile after a least-squares
/// line is removed from each non-overlapping box of n samples.
inline double dfa_fluctuation(std::span<const double> profile, std::size_t n) {
  const std::size_t boxes = profile.size() / n;
  if (boxes == 0) throw ParameterError("dfa_fluctuation: box larger than series");
  const double nd = static_cast<double>(n);
  const double tbar = (nd - 1) / 2;
  const double stt = nd * (nd * nd - 1) / 12;  // sum (t - tbar)^2
  double total = 0;
  for (std::size_t b = 0; b < boxes; ++b) {
    const double* y = profile.data() + b * n;
    double ybar = 0;
    for (std::size_t t = 0; t < n; ++t) ybar += y[t];
    ybar /= nd;
    double sty = 0;
    for (std::size_t t = 0; t < n; ++t) sty += (static_cast<double>(t) - tbar) * (y[t] - ybar);
    const double slope = sty / stt;
    for (std::size_t t = 0; t < n; ++t) {
      double r = y[t] - ybar - slope * (static_cast<double>(t) - tbar);
      total += r * r;
    }
  }
  return std::sqrt(total / static_cast<double>(boxes * n));
}

struct DfaOptions {
  std::size_t min_box = 10;
  std::size_t max_box = 0;  // 0: N / 10
  std::size_t box_count = 24;
};

/// Box sizes and fluctuation F(n) of the mean-removed profile.
struct DfaCurve {
  std::vector<double> sizes;
  std::vector<double> fluctuation;
};

inline DfaCurve dfa_curve(std::span<const double> x, const DfaOptions& opt = {}) {
  const auto n = x.size();
  const std::size_t hi = opt.max_box ? opt.max_box : n / 10;
  if (hi < opt.min_box || n < 4 * hi) throw ParameterError("dfa_gamma: series too short");
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> profile(n);
  double acc = 0, spread = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += x[i] - mean;
    profile[i] = acc;
    spread = std::max(spread, std::abs(x[i] - mean));
  }
  if (spread == 0) throw FitError("dfa_gamma: constant series");

  DfaCurve c;
  for (auto s : log_spaced_sizes(opt.min_box, hi, opt.box_count)) {
    c.sizes.push_back(static_cast<double>(s));
    c.fluctuation.push_back(dfa_fluctuation(profile, s));
  }
  return c;
}

inline FitReport dfa_gamma(std::span<const double> x, const DfaOptions& opt = {}) {
  const auto n = x.size();
  auto curve = dfa_curve(x, opt);
  const auto& xs = curve.sizes;
  const auto& fs = curve.fluctuation;
  // F ~ n^h is a growing power law: fit with exponent -h
  auto fit = rls_powerlaw_fit(xs, fs);
  const double h = -fit.exponent;

  FitReport report;
  report.method = Method::dfa;
  report.gamma = 2.0 - 2.0 * h;
  report.window_lower = xs.front();
  report.window_upper = xs.back();
  report.diagnostics = {{"hurst", h},
                        {"rls_scale", fit.scale},
                        {"rls_cost", fit.cost},
                        {"n_boxes", static_cast<double>(xs.size())},
                        {"n_events", static_cast<double>(n)}};
  return report;
}

inline FitReport dfa_gamma(std::span<const std::int8_t> signs, const DfaOptions& opt = {}) {
  std::vector<double> x(signs.begin(), signs.end());
  return dfa_gamma(std::span<const double>(x), opt);
}

inline FitReport dfa_gamma(const SignSeries& series, const DfaOptions& opt = {}) {
  return dfa_gamma(series.signs, opt);
}

}  // namespace lmf
