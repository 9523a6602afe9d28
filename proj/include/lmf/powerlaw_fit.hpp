#pragma once

// Metaorder-length tail estimation: empirical CCDF, Clauset-style tail fit
// with KS-selected lower cutoff, and the geometric decay length of
// random-trader runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "lmf/error.hpp"

namespace lmf {

/// P_>(x) = #{samples > x} / n, evaluated at x = 0 and at every distinct
/// sample value.
inline std::map<std::int64_t, double> empirical_ccdf(std::span<const std::int64_t> samples) {
  if (samples.empty()) throw EmptyInputError("empirical_ccdf: no samples");
  std::vector<std::int64_t> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  std::map<std::int64_t, double> ccdf;
  ccdf[0] = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), 0) - sorted.begin());
  ccdf[0] = (n - ccdf[0]) / n;
  for (auto it = sorted.begin(); it != sorted.end();) {
    auto next = std::upper_bound(it, sorted.end(), *it);
    ccdf[*it] = static_cast<double>(sorted.end() - next) / n;
    it = next;
  }
  return ccdf;
}

enum class TailEstimator {
  /// Exact discrete MLE of P(L >= l | L >= xmin) = (l / xmin)^(-alpha).
  discrete_exact,
  /// Closed-form continuous approximation with the half-integer shift,
  /// alpha_pdf = 1 + n / sum ln(x / (xmin - 1/2)).
  shifted_continuous,
};

struct TailFit {
  double alpha = 0;      // CCDF exponent: P_>(L) ~ L^(-alpha)
  double alpha_pdf = 0;  // density exponent, alpha + 1
  std::int64_t xmin = 1;
  double ks_distance = 0;
  std::int64_t n_tail = 0;
};

namespace detail {

struct ValueCounts {
  std::vector<double> value;
  std::vector<double> count;
};

inline ValueCounts value_counts(std::span<const std::int64_t> sorted) {
  ValueCounts vc;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    vc.value.push_back(static_cast<double>(sorted[i]));
    vc.count.push_back(static_cast<double>(j - i));
    i = j;
  }
  return vc;
}

/// Score of the discrete tail log-likelihood in alpha, over distinct values
/// [first, end) of `vc`.
inline double tail_score(const ValueCounts& vc, std::size_t first, double xmin, double n_tail,
                         double a) {
  double s = n_tail * std::log(xmin);
  for (std::size_t k = first; k < vc.value.size(); ++k) {
    double x = vc.value[k];
    double lx = std::log(x), lx1 = std::log1p(x);
    // r = ((x+1)/x)^(-a); p = x^-a (1 - r) xmin^a; d ln p / da = ln xmin - lx + r (lx1 - lx) / (1 - r)
    double r = std::exp(-a * (lx1 - lx));
    s += vc.count[k] * (-lx + r * (lx1 - lx) / (1.0 - r));
  }
  return s;
}

inline double discrete_tail_mle(const ValueCounts& vc, std::size_t first, double xmin,
                                double n_tail, double guess) {
  // The log-likelihood is concave in alpha; bracket the root of the score.
  double lo = 1e-4, hi = std::max(2.0 * guess, 1.0);
  while (tail_score(vc, first, xmin, n_tail, hi) > 0 && hi < 1e3) hi *= 2;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (tail_score(vc, first, xmin, n_tail, mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Fits the tail exponent for every candidate xmin among the distinct
/// sample values up to the 90th percentile and keeps the one whose fitted
/// law is closest to the empirical tail in KS distance (ties: smaller xmin).
inline TailFit clauset_fit(std::span<const std::int64_t> samples,
                           TailEstimator estimator = TailEstimator::discrete_exact,
                           std::int64_t min_tail = 10) {
  if (samples.size() < 50) throw FitError("clauset_fit: need at least 50 samples");
  std::vector<std::int64_t> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() < 1) throw ParameterError("clauset_fit: samples must be positive integers");
  const auto vc = detail::value_counts(sorted);
  const auto n = sorted.size();
  const auto cap = static_cast<double>(sorted[static_cast<std::size_t>(0.9 * static_cast<double>(n - 1))]);

  // suffix sums over distinct values: counts and count * ln(value)
  const auto m = vc.value.size();
  std::vector<double> tail_n(m + 1, 0.0), tail_log(m + 1, 0.0);
  for (std::size_t k = m; k-- > 0;) {
    tail_n[k] = tail_n[k + 1] + vc.count[k];
    tail_log[k] = tail_log[k + 1] + vc.count[k] * std::log(vc.value[k]);
  }

  bool found = false;
  TailFit best;
  for (std::size_t first = 0; first < m && vc.value[first] <= cap; ++first) {
    const double xmin = vc.value[first];
    const double nt = tail_n[first];
    if (nt < static_cast<double>(min_tail)) break;

    double shifted = nt / (tail_log[first] - nt * std::log(xmin - 0.5));
    double alpha = shifted;
    if (estimator == TailEstimator::discrete_exact)
      alpha = detail::discrete_tail_mle(vc, first, xmin, nt, shifted);

    auto model_tail = [&](double x) {  // P(L >= x | L >= xmin)
      if (estimator == TailEstimator::discrete_exact) return std::pow(x / xmin, -alpha);
      return std::pow((x - 0.5) / (xmin - 0.5), -alpha);
    };
    double ks = 0, above = nt;
    for (std::size_t k = first; k < m; ++k) {
      double ge = above / nt;
      above -= vc.count[k];
      double gt = above / nt;
      ks = std::max({ks, std::abs(ge - model_tail(vc.value[k])),
                     std::abs(gt - model_tail(vc.value[k] + 1.0))});
    }
    if (!found || ks < best.ks_distance) {
      found = true;
      best = {alpha, alpha + 1.0, static_cast<std::int64_t>(xmin), ks,
              static_cast<std::int64_t>(nt)};
    }
  }
  if (!found) throw FitError("clauset_fit: insufficient tail support");
  return best;
}

/// Decay length L* of P_>(L) = (L*)^(1-L), fitted by maximum likelihood
/// (the sample mean).
inline double geometric_fit(std::span<const std::int64_t> run_lengths) {
  if (run_lengths.empty()) throw EmptyInputError("geometric_fit: no runs");
  long double sum = 0;
  for (auto r : run_lengths) sum += r;
  return static_cast<double>(sum / static_cast<long double>(run_lengths.size()));
}

}  // namespace lmf
