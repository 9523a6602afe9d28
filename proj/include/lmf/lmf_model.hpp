#pragma once

// Monte-Carlo simulator of the order-splitting model: N traders each work a
// metaorder of power-law distributed length; at every tick one trader is
// selected (uniformly, or by intensity) and emits one child order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmf/error.hpp"
#include "lmf/order_tape.hpp"
#include "lmf/random.hpp"

namespace lmf {

// ---------------------------------------------------------------------------
// Power-law integer sampler

/// L = floor((1-u)^(-1/alpha)); P(L >= l) = l^(-alpha) exactly.
inline std::int64_t pareto_integer_from_uniform(double u, double alpha) {
  if (!(alpha > 0)) throw ParameterError("pareto sampler: alpha must be > 0");
  double x = std::pow(1.0 - u, -1.0 / alpha);
  constexpr double kCap = 9.0e18;
  if (!(x < kCap)) return static_cast<std::int64_t>(kCap);
  return static_cast<std::int64_t>(std::floor(x));
}

inline std::int64_t sample_pareto_integer(RandomStream& rng, double alpha) {
  return pareto_integer_from_uniform(rng.uniform(), alpha);
}

/// P(L = l) = l^(-alpha) - (l+1)^(-alpha).
inline double pareto_integer_pmf(std::int64_t l, double alpha) {
  if (l < 1) return 0.0;
  auto x = static_cast<double>(l);
  return std::pow(x, -alpha) - std::pow(x + 1.0, -alpha);
}

/// P(L >= l).
inline double pareto_integer_tail(std::int64_t l, double alpha) {
  return l <= 1 ? 1.0 : std::pow(static_cast<double>(l), -alpha);
}

// ---------------------------------------------------------------------------
// Model parameters and state

struct LmfParams {
  std::int64_t n_traders = 1;
  std::int64_t n_events = 0;
  double alpha = 1.5;
  /// Trader-selection probabilities; empty means uniform 1/n_traders.
  std::vector<double> intensities;
  std::uint64_t seed = 0;

  bool uniform() const {
    if (intensities.empty()) return true;
    return std::all_of(intensities.begin(), intensities.end(),
                       [&](double v) { return v == intensities.front(); });
  }

  void validate() const {
    if (n_traders < 1) throw ParameterError("LmfParams: n_traders must be positive");
    if (n_events < 0) throw ParameterError("LmfParams: n_events must be non-negative");
    if (!(alpha > 1.0)) throw ParameterError("LmfParams: alpha must be > 1 (finite mean length)");
    if (intensities.empty()) return;
    if (static_cast<std::int64_t>(intensities.size()) != n_traders)
      throw ParameterError("LmfParams: intensities length differs from n_traders");
    double sum = 0;
    for (double v : intensities) {
      if (!(v > 0)) throw ParameterError("LmfParams: intensities must be positive");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ParameterError("LmfParams: intensities must sum to 1");
  }
};

/// Sign and remaining child orders of a trader's live metaorder.
struct TraderState {
  std::int8_t sign = 1;
  std::int64_t remaining = 1;
};

struct Metaorder {
  std::uint32_t trader = 0;
  std::int8_t sign = 1;
  std::int64_t length = 0;
};

struct SimulationOptions {
  bool build_tapes = true;
  /// Keep every completed metaorder (trader, sign, length).
  bool record_metaorders = false;
  /// Ticks per business day for the day index; 0 puts every tick on day 0.
  std::int64_t ticks_per_day = 0;
  /// Replace the power-law length law by a constant (degenerate checks).
  std::int64_t fixed_metaorder_length = 0;
  int gap_threshold_days = 1;
};

struct SimulationResult {
  SignSeries series;
  std::vector<std::uint32_t> trader_of_tick;
  std::vector<std::string> trader_ids;
  TapeMap tapes;
  std::vector<Metaorder> completed;
};

/// Vose alias table for O(1) weighted selection.
class AliasTable {
 public:
  explicit AliasTable(std::span<const double> weights) : prob_(weights.size()), alias_(weights.size()) {
    const auto n = weights.size();
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = weights[i] * static_cast<double>(n) / total;
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      auto s = small.back();
      small.pop_back();
      auto l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (auto i : large) prob_[i] = 1.0, alias_[i] = i;
    for (auto i : small) prob_[i] = 1.0, alias_[i] = i;
  }

  std::uint32_t sample(RandomStream& rng) const {
    auto column = static_cast<std::uint32_t>(rng.below(prob_.size()));
    return rng.uniform() < prob_[column] ? column : alias_[column];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

inline std::vector<std::string> make_trader_ids(std::int64_t n, const std::string& prefix = "T") {
  std::size_t width = std::to_string(std::max<std::int64_t>(n - 1, 0)).size();
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    auto digits = std::to_string(i);
    ids.push_back(prefix + std::string(width - digits.size(), '0') + digits);
  }
  return ids;
}

/// Runs the model for params.n_events ticks. Selection draws come from
/// stream 0 of the seed, trader i's metaorder draws from stream i + 1, so
/// a uniform intensity vector reproduces the homogeneous path exactly.
inline SimulationResult simulate(const LmfParams& params, const SimulationOptions& options = {}) {
  params.validate();
  if (params.n_events == 0) throw EmptyInputError("simulate: n_events must be positive");
  if (options.fixed_metaorder_length < 0)
    throw ParameterError("simulate: fixed_metaorder_length must be non-negative");

  const auto n_traders = static_cast<std::size_t>(params.n_traders);
  const auto n_events = static_cast<std::size_t>(params.n_events);

  RandomStream selector(params.seed, 0);
  std::vector<RandomStream> streams;
  streams.reserve(n_traders);
  for (std::size_t i = 0; i < n_traders; ++i) streams.emplace_back(params.seed, i + 1);

  std::vector<TraderState> state(n_traders);
  std::vector<std::int64_t> length(n_traders);
  auto fresh = [&](std::size_t i) {
    auto& rng = streams[i];
    length[i] = options.fixed_metaorder_length > 0 ? options.fixed_metaorder_length
                                                   : sample_pareto_integer(rng, params.alpha);
    state[i].remaining = length[i];
    state[i].sign = static_cast<std::int8_t>(rng.coin());
  };
  for (std::size_t i = 0; i < n_traders; ++i) fresh(i);

  const bool uniform = params.uniform();
  std::optional<AliasTable> alias;
  if (!uniform) alias.emplace(params.intensities);

  SimulationResult out;
  out.series.signs.resize(n_events);
  const bool keep_owner = options.build_tapes;
  if (keep_owner) out.trader_of_tick.resize(n_events);

  for (std::size_t t = 0; t < n_events; ++t) {
    auto i = uniform ? static_cast<std::uint32_t>(selector.below(n_traders)) : alias->sample(selector);
    auto& s = state[i];
    out.series.signs[t] = s.sign;
    if (keep_owner) out.trader_of_tick[t] = i;
    if (s.remaining > 1) {
      --s.remaining;
    } else {
      if (options.record_metaorders) out.completed.push_back({i, s.sign, length[i]});
      fresh(i);
    }
  }

  if (options.ticks_per_day > 0) {
    out.series.day_of_tick.resize(n_events);
    for (std::size_t t = 0; t < n_events; ++t)
      out.series.day_of_tick[t] = static_cast<std::int32_t>(static_cast<std::int64_t>(t) /
                                                            options.ticks_per_day);
  }
  out.trader_ids = make_trader_ids(params.n_traders);
  if (options.build_tapes)
    out.tapes = build_tapes(out.series, out.trader_of_tick, out.trader_ids,
                            options.gap_threshold_days);
  return out;
}

/// Same dynamics with an explicit, possibly non-uniform intensity vector.
inline SimulationResult simulate_heterogeneous(const LmfParams& params,
                                               const SimulationOptions& options = {}) {
  if (params.intensities.empty())
    throw ParameterError("simulate_heterogeneous: intensities must be given");
  return simulate(params, options);
}

/// Normalizes positive weights to a probability vector.
inline std::vector<double> normalize_intensities(std::vector<double> weights) {
  long double sum = 0;
  for (double w : weights) {
    if (!(w > 0)) throw ParameterError("intensities: weights must be positive");
    sum += w;
  }
  for (double& w : weights) w = static_cast<double>(w / sum);
  return weights;
}

/// n intensities proportional to continuous Pareto(shape) draws.
inline std::vector<double> pareto_intensities(std::int64_t n, double shape, std::uint64_t seed) {
  if (n < 1) throw ParameterError("pareto_intensities: n must be positive");
  if (!(shape > 0)) throw ParameterError("pareto_intensities: shape must be positive");
  RandomStream rng(seed, 0x1a7e);
  std::vector<double> w(static_cast<std::size_t>(n));
  for (auto& v : w) v = std::pow(1.0 - rng.uniform(), -1.0 / shape);
  return normalize_intensities(std::move(w));
}

/// Synthetic execution events for a simulated series in the tape CSV
/// schema. Each day's ticks are laid out evenly inside 09:10-11:20 so the
/// default session trim keeps all of them.
inline std::vector<OrderEvent> to_order_events(const SimulationResult& sim) {
  if (sim.trader_of_tick.size() != sim.series.size())
    throw ParameterError("to_order_events: simulation was run without trader ownership");
  constexpr std::int64_t kMinute = 60'000'000'000LL;
  constexpr std::int64_t kDay = 24 * 60 * kMinute;
  constexpr std::int64_t kOpen = (9 * 60 + 10) * kMinute;
  constexpr std::int64_t kSpan = 130 * kMinute;
  std::vector<std::int64_t> per_day;
  for (std::size_t t = 0; t < sim.series.size(); ++t) {
    auto d = static_cast<std::size_t>(sim.series.day(t));
    if (per_day.size() <= d) per_day.resize(d + 1, 0);
    ++per_day[d];
  }
  std::vector<OrderEvent> events;
  events.reserve(sim.series.size());
  std::vector<std::int64_t> seen(per_day.size(), 0);
  for (std::size_t t = 0; t < sim.series.size(); ++t) {
    auto d = sim.series.day(t);
    auto k = seen[static_cast<std::size_t>(d)]++;
    OrderEvent ev;
    ev.timestamp = d * kDay + kOpen + k * (kSpan / per_day[static_cast<std::size_t>(d)]);
    ev.order_id = "M" + std::to_string(t);
    ev.account_id = sim.trader_ids[sim.trader_of_tick[t]];
    ev.side = sim.series.signs[t] > 0 ? Side::buy : Side::sell;
    ev.kind = EventKind::market_execution;
    ev.day_index = d;
    events.push_back(std::move(ev));
  }
  return events;
}

}  // namespace lmf
