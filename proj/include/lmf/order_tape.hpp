#pragma once

// Order-event ingestion: CSV parsing, trading-desk resolution, session
// trimming, and construction of market/per-trader sign tapes.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lmf/error.hpp"

namespace lmf {

enum class Side : std::int8_t { buy = 1, sell = -1 };

enum class EventKind : std::uint8_t { submission, cancellation, market_execution };

struct OrderEvent {
  std::int64_t timestamp = 0;  // ns since epoch, exchange-local wall clock
  std::string order_id;
  std::string account_id;
  Side side = Side::buy;
  EventKind kind = EventKind::market_execution;
  std::int32_t day_index = 0;
};

/// Market-wide tick-time sign sequence. Tick t is the t-th execution
/// (0-based); `day_of_tick` is either empty (every tick on day 0) or
/// aligned with `signs`.
struct SignSeries {
  std::vector<std::int8_t> signs;
  std::vector<std::int32_t> day_of_tick;

  std::size_t size() const noexcept { return signs.size(); }
  bool empty() const noexcept { return signs.empty(); }
  std::int32_t day(std::size_t t) const noexcept {
    return day_of_tick.empty() ? 0 : day_of_tick[t];
  }
};

/// One trader's view of the market: the ticks they executed, their
/// reduced sign sequence (zeros removed), and its run decomposition.
struct TraderTape {
  std::string trader_id;
  std::vector<std::int64_t> ticks;
  std::vector<std::int8_t> reduced_signs;
  std::vector<std::int32_t> days;  // business day of each reduced sign
  std::vector<std::int64_t> run_lengths;
  std::int64_t active_days = 0;

  std::int64_t n_mo() const noexcept {
    return static_cast<std::int64_t>(reduced_signs.size());
  }
  std::int64_t n_run() const noexcept {
    return static_cast<std::int64_t>(run_lengths.size());
  }
};

using TapeMap = std::map<std::string, TraderTape>;

// ---------------------------------------------------------------------------
// CSV parsing

struct CsvFormat {
  char delimiter = ',';
  /// Abort when more than this fraction of data rows is malformed.
  double max_bad_fraction = 0.01;
};

struct RowError {
  std::size_t line = 0;  // 1-based line number in the file
  std::string message;
};

struct ParseResult {
  std::vector<OrderEvent> events;
  std::vector<RowError> row_errors;
  std::size_t data_rows = 0;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace detail

inline const char* to_string(Side s) { return s == Side::buy ? "B" : "S"; }

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::submission: return "SUB";
    case EventKind::cancellation: return "CAN";
    case EventKind::market_execution: return "EXE";
  }
  return "?";
}

/// Parses the tape CSV (`timestamp,order_id,account_id,side,kind,day_index`,
/// columns in any order). Malformed rows are skipped and reported; the parse
/// aborts with FormatError once they exceed `max_bad_fraction` of the rows.
inline ParseResult parse_events(std::istream& in, const CsvFormat& format = {}) {
  static constexpr std::string_view kColumns[] = {"timestamp", "order_id", "account_id",
                                                  "side",      "kind",     "day_index"};
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw FormatError("tape CSV: missing header row");
  ++lineno;

  auto header = detail::split(line, format.delimiter);
  std::size_t col[6];
  for (std::size_t c = 0; c < 6; ++c) {
    auto it = std::find_if(header.begin(), header.end(),
                           [&](std::string_view h) { return detail::trim(h) == kColumns[c]; });
    if (it == header.end())
      throw FormatError("tape CSV: missing column '" + std::string(kColumns[c]) + "'");
    col[c] = static_cast<std::size_t>(it - header.begin());
  }
  const std::size_t width = header.size();

  ParseResult result;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    ++result.data_rows;
    auto fields = detail::split(line, format.delimiter);
    auto fail = [&](std::string msg) { result.row_errors.push_back({lineno, std::move(msg)}); };
    if (fields.size() != width) {
      fail("expected " + std::to_string(width) + " fields, got " + std::to_string(fields.size()));
      continue;
    }
    OrderEvent ev;
    if (!detail::parse_int(fields[col[0]], ev.timestamp)) {
      fail("unparseable timestamp '" + std::string(fields[col[0]]) + "'");
      continue;
    }
    ev.order_id = std::string(detail::trim(fields[col[1]]));
    ev.account_id = std::string(detail::trim(fields[col[2]]));
    if (ev.account_id.empty()) {
      fail("empty account_id");
      continue;
    }
    auto side = detail::trim(fields[col[3]]);
    if (side == "B") {
      ev.side = Side::buy;
    } else if (side == "S") {
      ev.side = Side::sell;
    } else {
      fail("unknown side '" + std::string(side) + "'");
      continue;
    }
    auto kind = detail::trim(fields[col[4]]);
    if (kind == "SUB") {
      ev.kind = EventKind::submission;
    } else if (kind == "CAN") {
      ev.kind = EventKind::cancellation;
    } else if (kind == "EXE") {
      ev.kind = EventKind::market_execution;
    } else {
      fail("unknown kind '" + std::string(kind) + "'");
      continue;
    }
    if (!detail::parse_int(fields[col[5]], ev.day_index)) {
      fail("unparseable day_index '" + std::string(fields[col[5]]) + "'");
      continue;
    }
    result.events.push_back(std::move(ev));
  }

  if (result.data_rows > 0 &&
      static_cast<double>(result.row_errors.size()) >
          format.max_bad_fraction * static_cast<double>(result.data_rows)) {
    std::string msg = "tape CSV: " + std::to_string(result.row_errors.size()) + " of " +
                      std::to_string(result.data_rows) + " rows malformed";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, result.row_errors.size()); ++i)
      msg += "; line " + std::to_string(result.row_errors[i].line) + ": " +
             result.row_errors[i].message;
    throw FormatError(msg);
  }
  return result;
}

inline void write_events_csv(std::ostream& out, std::span<const OrderEvent> events) {
  out << "timestamp,order_id,account_id,side,kind,day_index\n";
  for (const auto& ev : events)
    out << ev.timestamp << ',' << ev.order_id << ',' << ev.account_id << ','
        << to_string(ev.side) << ',' << to_string(ev.kind) << ',' << ev.day_index << '\n';
}

// ---------------------------------------------------------------------------
// Trading desks

/// Account id -> desk id. The desk id is the lexicographically smallest
/// account of the connected component.
struct DeskMap {
  std::map<std::string, std::string> desk_of;
  std::size_t component_count = 0;

  const std::string& desk(const std::string& account) const {
    auto it = desk_of.find(account);
    if (it == desk_of.end()) throw ParameterError("unknown account id '" + account + "'");
    return it->second;
  }
};

namespace detail {

class DisjointSets {
 public:
  std::size_t add() {
    parent_.push_back(parent_.size());
    return parent_.size() - 1;
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

/// Merges accounts that touch the same order id at any point of its life
/// cycle (e.g. submitted from one virtual server, cancelled from another).
inline DeskMap resolve_trading_desks(std::span<const OrderEvent> events) {
  std::unordered_map<std::string, std::size_t> account_index;
  std::vector<const std::string*> accounts;
  std::unordered_map<std::string, std::size_t> order_owner;
  detail::DisjointSets sets;

  for (const auto& ev : events) {
    auto [ait, inserted] = account_index.try_emplace(ev.account_id, accounts.size());
    if (inserted) {
      accounts.push_back(&ait->first);
      sets.add();
    }
    if (ev.order_id.empty()) continue;
    auto [oit, fresh] = order_owner.try_emplace(ev.order_id, ait->second);
    if (!fresh) sets.unite(oit->second, ait->second);
  }

  std::unordered_map<std::size_t, std::string> smallest;
  for (std::size_t i = 0; i < accounts.size(); ++i) {
    auto root = sets.find(i);
    auto [it, fresh] = smallest.try_emplace(root, *accounts[i]);
    if (!fresh && *accounts[i] < it->second) it->second = *accounts[i];
  }

  DeskMap map;
  map.component_count = smallest.size();
  for (std::size_t i = 0; i < accounts.size(); ++i)
    map.desk_of.emplace(*accounts[i], smallest[sets.find(i)]);
  return map;
}

// ---------------------------------------------------------------------------
// Session trimming

/// Half-open intraday window [start_minute, end_minute).
struct SessionWindow {
  int start_minute = 0;
  int end_minute = 0;
};

/// Continuous-auction windows with ten minutes cut around each auction:
/// 09:10-11:20 and 12:40-14:50.
inline std::vector<SessionWindow> default_session_windows() {
  return {{9 * 60 + 10, 11 * 60 + 20}, {12 * 60 + 40, 14 * 60 + 50}};
}

inline void validate_session_windows(std::span<const SessionWindow> windows) {
  if (windows.empty()) throw ConfigError("session windows: list is empty");
  std::vector<SessionWindow> sorted(windows.begin(), windows.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.start_minute < b.start_minute; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& w = sorted[i];
    if (w.start_minute < 0 || w.end_minute > 24 * 60 || w.start_minute >= w.end_minute)
      throw ConfigError("session windows: window [" + std::to_string(w.start_minute) + ", " +
                        std::to_string(w.end_minute) + ") is empty or outside the day");
    if (i > 0 && sorted[i - 1].end_minute > w.start_minute)
      throw ConfigError("session windows: overlapping windows");
  }
}

/// Keeps market executions whose intraday time falls in one of `windows`.
/// `utc_offset_minutes` shifts timestamps to exchange-local time.
inline std::vector<OrderEvent> trim_sessions(std::span<const OrderEvent> events,
                                             std::span<const SessionWindow> windows,
                                             int utc_offset_minutes = 0) {
  validate_session_windows(windows);
  constexpr std::int64_t kMinute = 60'000'000'000LL;
  constexpr std::int64_t kDay = 24 * 60 * kMinute;
  std::vector<OrderEvent> kept;
  for (const auto& ev : events) {
    if (ev.kind != EventKind::market_execution) continue;
    std::int64_t local = ev.timestamp + utc_offset_minutes * kMinute;
    std::int64_t intraday = ((local % kDay) + kDay) % kDay;
    bool inside = std::any_of(windows.begin(), windows.end(), [&](const SessionWindow& w) {
      return intraday >= w.start_minute * kMinute && intraday < w.end_minute * kMinute;
    });
    if (inside) kept.push_back(ev);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Runs and tapes

/// Run lengths of a reduced sign sequence. A run ends on a sign flip or when
/// the business-day gap to the next order exceeds `gap_threshold_days`.
/// `days` may be empty (no gap rule). A run cut by the end of data is kept.
inline std::vector<std::int64_t> runs_decompose(std::span<const std::int8_t> signs,
                                                std::span<const std::int32_t> days,
                                                int gap_threshold_days = 1) {
  std::vector<std::int64_t> runs;
  if (signs.empty()) return runs;
  std::int64_t current = 1;
  for (std::size_t k = 1; k < signs.size(); ++k) {
    bool gap = !days.empty() && days[k] - days[k - 1] > gap_threshold_days;
    if (signs[k] != signs[k - 1] || gap) {
      runs.push_back(current);
      current = 1;
    } else {
      ++current;
    }
  }
  runs.push_back(current);
  return runs;
}

inline std::vector<std::int64_t> runs_decompose(const TraderTape& tape,
                                                int gap_threshold_days = 1) {
  return runs_decompose(tape.reduced_signs, tape.days, gap_threshold_days);
}

/// Splits a market series into per-trader tapes. `trader_of_tick[t]` indexes
/// into `trader_ids`.
inline TapeMap build_tapes(const SignSeries& series, std::span<const std::uint32_t> trader_of_tick,
                           std::span<const std::string> trader_ids, int gap_threshold_days = 1) {
  if (trader_of_tick.size() != series.size())
    throw ParameterError("build_tapes: trader_of_tick length mismatch");
  std::vector<TraderTape> tapes(trader_ids.size());
  std::vector<std::int64_t> counts(trader_ids.size(), 0);
  for (auto who : trader_of_tick) ++counts.at(who);
  for (std::size_t i = 0; i < tapes.size(); ++i) {
    tapes[i].trader_id = trader_ids[i];
    tapes[i].ticks.reserve(counts[i]);
    tapes[i].reduced_signs.reserve(counts[i]);
    tapes[i].days.reserve(counts[i]);
  }
  for (std::size_t t = 0; t < series.size(); ++t) {
    auto& tape = tapes[trader_of_tick[t]];
    tape.ticks.push_back(static_cast<std::int64_t>(t));
    tape.reduced_signs.push_back(series.signs[t]);
    tape.days.push_back(series.day(t));
  }
  TapeMap out;
  for (auto& tape : tapes) {
    if (tape.ticks.empty()) continue;
    tape.run_lengths = runs_decompose(tape, gap_threshold_days);
    std::int64_t active = 1;
    for (std::size_t k = 1; k < tape.days.size(); ++k)
      if (tape.days[k] != tape.days[k - 1]) ++active;
    tape.active_days = active;
    auto id = tape.trader_id;
    out.emplace(std::move(id), std::move(tape));
  }
  return out;
}

struct MarketTapes {
  SignSeries series;
  TapeMap tapes;
};

/// Market sign series (+1 buy, -1 sell, one tick per execution) and the
/// per-desk tapes that tile it. Ties in timestamp keep input order.
inline MarketTapes build_sign_series(std::span<const OrderEvent> events, const DeskMap& desks,
                                     int gap_threshold_days = 1) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < events.size(); ++i)
    if (events[i].kind == EventKind::market_execution) order.push_back(i);
  if (order.empty()) throw EmptyInputError("build_sign_series: no market executions");
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return events[a].timestamp < events[b].timestamp;
  });

  std::map<std::string, std::uint32_t> desk_index;
  std::vector<std::string> desk_ids;
  MarketTapes out;
  out.series.signs.reserve(order.size());
  out.series.day_of_tick.reserve(order.size());
  std::vector<std::uint32_t> trader_of_tick;
  trader_of_tick.reserve(order.size());
  for (auto i : order) {
    const auto& ev = events[i];
    const auto& desk = desks.desk(ev.account_id);
    auto [it, fresh] = desk_index.try_emplace(desk, static_cast<std::uint32_t>(desk_ids.size()));
    if (fresh) desk_ids.push_back(desk);
    out.series.signs.push_back(static_cast<std::int8_t>(ev.side));
    out.series.day_of_tick.push_back(ev.day_index);
    trader_of_tick.push_back(it->second);
  }
  out.tapes = build_tapes(out.series, trader_of_tick, desk_ids, gap_threshold_days);
  return out;
}

/// `trader_id,tick,sign,day_index`, traders in id order, ticks ascending.
inline void write_tapes_csv(std::ostream& out, const TapeMap& tapes) {
  out << "trader_id,tick,sign,day_index\n";
  for (const auto& [id, tape] : tapes)
    for (std::size_t k = 0; k < tape.ticks.size(); ++k)
      out << id << ',' << tape.ticks[k] << ',' << static_cast<int>(tape.reduced_signs[k]) << ','
          << tape.days[k] << '\n';
}

}  // namespace lmf
