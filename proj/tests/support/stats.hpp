#pragma once

// Test-side statistics oracles, independent of the library code under test.

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace lmf::oracle {

struct ChiSquare {
  double statistic = 0;
  int dof = 0;
  double p_value = 1;
};

/// Pearson chi-square of integer samples against a pmf on 1..max_value
/// plus one bin for everything above. Adjacent cells are pooled until each
/// expects at least `min_expected` counts.
template <typename Pmf>
ChiSquare chi_square_integer(std::span<const std::int64_t> samples, Pmf&& pmf,
                             std::int64_t max_value, double min_expected = 5.0) {
  const double n = static_cast<double>(samples.size());
  std::vector<double> observed(static_cast<std::size_t>(max_value) + 2, 0.0);
  for (auto x : samples) observed[static_cast<std::size_t>(std::min(x, max_value + 1))] += 1;
  std::vector<double> expected(observed.size(), 0.0);
  double head = 0;
  for (std::int64_t l = 1; l <= max_value; ++l) {
    expected[static_cast<std::size_t>(l)] = n * pmf(l);
    head += pmf(l);
  }
  expected[static_cast<std::size_t>(max_value) + 1] = n * (1.0 - head);

  std::vector<double> po, pe;
  double o = 0, e = 0;
  for (std::size_t l = 1; l < observed.size(); ++l) {
    o += observed[l];
    e += expected[l];
    if (e >= min_expected) {
      po.push_back(o), pe.push_back(e);
      o = e = 0;
    }
  }
  if (e > 0 && !pe.empty()) po.back() += o, pe.back() += e;
  ChiSquare r;
  for (std::size_t k = 0; k < po.size(); ++k) r.statistic += (po[k] - pe[k]) * (po[k] - pe[k]) / pe[k];
  r.dof = static_cast<int>(po.size()) - 1;
  r.p_value = boost::math::gamma_q(r.dof / 2.0, r.statistic / 2.0);
  return r;
}

/// Direct O(N tau) autocorrelation, the FFT path's oracle.
inline double direct_acf(std::span<const std::int8_t> s, std::size_t tau) {
  long long sum = 0;
  for (std::size_t t = 0; t + tau < s.size(); ++t) sum += s[t] * s[t + tau];
  return static_cast<double>(sum) / static_cast<double>(s.size() - tau);
}

}  // namespace lmf::oracle
