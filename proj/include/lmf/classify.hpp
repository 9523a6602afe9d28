#pragma once

// Runs-test strategy clustering. Under the symmetric-Bernoulli null each of
// the n_mo - 1 adjacent pairs of a trader's reduced sign sequence is a run
// boundary with probability 1/2, so B = n_run - 1 ~ Binomial(n_mo - 1, 1/2).
// Splitting lengthens runs, so the test rejects in the lower tail.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lmf/error.hpp"
#include "lmf/order_tape.hpp"

namespace lmf {

/// P(B <= n_run - 1) for B ~ Binomial(n_mo - 1, 1/2).
inline double runs_test_pvalue(std::int64_t n_mo, std::int64_t n_run) {
  if (n_mo < 2) throw ParameterError("runs_test_pvalue: n_mo must be >= 2");
  if (n_run < 1 || n_run > n_mo) throw ParameterError("runs_test_pvalue: n_run out of [1, n_mo]");
  const std::int64_t m = n_mo - 1;
  const std::int64_t b = n_run - 1;
  if (b >= m) return 1.0;

  const double md = static_cast<double>(m);
  auto log_pmf = [&](std::int64_t k) {
    auto kd = static_cast<double>(k);
    return std::lgamma(md + 1) - std::lgamma(kd + 1) - std::lgamma(md - kd + 1) -
           md * std::log(2.0);
  };

  // Sum the tail that does not contain the mode, walking away from its
  // largest term; the terms shrink geometrically.
  if (2 * b <= m) {
    double sum = 1.0, term = 1.0;
    for (std::int64_t k = b; k > 0; --k) {
      term *= static_cast<double>(k) / static_cast<double>(m - k + 1);
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    return std::min(1.0, std::exp(log_pmf(b)) * sum);
  }
  double sum = 1.0, term = 1.0;
  for (std::int64_t k = b + 1; k < m; ++k) {
    term *= static_cast<double>(m - k) / static_cast<double>(k + 1);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return std::clamp(1.0 - std::exp(log_pmf(b + 1)) * sum, 0.0, 1.0);
}

struct ClassificationResult {
  std::set<std::string> st_ids;
  std::set<std::string> rt_ids;
  std::map<std::string, double> p_values;
  double theta = 0.01;

  bool is_st(const std::string& id) const { return st_ids.count(id) > 0; }
};

/// Splitting trader iff the runs-test p-value is below theta. Traders with
/// fewer than two orders cannot be tested and count as random (p = 1).
inline ClassificationResult classify_traders(const TapeMap& tapes, double theta = 0.01) {
  if (tapes.empty()) throw EmptyInputError("classify_traders: no tapes");
  if (!(theta > 0 && theta < 1)) throw ParameterError("classify_traders: theta must be in (0,1)");
  ClassificationResult out;
  out.theta = theta;
  for (const auto& [id, tape] : tapes) {
    double p = tape.n_mo() < 2 ? 1.0 : runs_test_pvalue(tape.n_mo(), tape.n_run());
    out.p_values.emplace(id, p);
    (p < theta ? out.st_ids : out.rt_ids).insert(id);
  }
  return out;
}

struct StStatistics {
  double st_fraction = 0;  // |ST| / |all traders|
  double st_mo_share = 0;  // market orders by STs / N_eps
};

inline StStatistics st_statistics(const ClassificationResult& result, const TapeMap& tapes,
                                  std::size_t n_events) {
  StStatistics s;
  if (tapes.empty() || n_events == 0) return s;
  std::int64_t st_orders = 0;
  for (const auto& id : result.st_ids) st_orders += tapes.at(id).n_mo();
  s.st_fraction = static_cast<double>(result.st_ids.size()) / static_cast<double>(tapes.size());
  s.st_mo_share = static_cast<double>(st_orders) / static_cast<double>(n_events);
  return s;
}

/// Yearly average number of active splitting traders: the active-day
/// count of every ST with at least `min_orders` orders, divided by d_year.
inline double count_active_sts(const ClassificationResult& result, const TapeMap& tapes,
                               std::int64_t d_year, std::int64_t min_orders = 1000) {
  if (d_year <= 0) throw ParameterError("count_active_sts: d_year must be positive");
  std::int64_t days = 0;
  for (const auto& id : result.st_ids) {
    const auto& tape = tapes.at(id);
    if (tape.n_mo() >= min_orders) days += tape.active_days;
  }
  return static_cast<double>(days) / static_cast<double>(d_year);
}

/// Concatenated run lengths of the given traders, in id order.
inline std::vector<std::int64_t> pooled_runs(const TapeMap& tapes,
                                             const std::set<std::string>& ids) {
  std::vector<std::int64_t> runs;
  for (const auto& id : ids) {
    const auto& r = tapes.at(id).run_lengths;
    runs.insert(runs.end(), r.begin(), r.end());
  }
  return runs;
}

/// `trader_id,n_mo,n_run,p_value,label`.
inline void write_classification_csv(std::ostream& out, const ClassificationResult& result,
                                     const TapeMap& tapes) {
  out << "trader_id,n_mo,n_run,p_value,label\n";
  char buf[32];
  for (const auto& [id, tape] : tapes) {
    double p = result.p_values.at(id);
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, p);
    out << id << ',' << tape.n_mo() << ',' << tape.n_run() << ',' << std::string_view(buf, end - buf)
        << ',' << (result.is_st(id) ? "ST" : "RT") << '\n';
  }
}

}  // namespace lmf
