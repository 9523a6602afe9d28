#include <gtest/gtest.h>

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <sstream>

#include "lmf/classify.hpp"
#include "lmf/lmf_model.hpp"
#include "lmf/powerlaw_fit.hpp"
#include "lmf/random.hpp"

using namespace lmf;

namespace {

// Oracle: enumerate all 2^n_mo sign sequences and count those with at most
// n_run runs.
double enumerated_pvalue(int n_mo, int n_run) {
  long long hits = 0, total = 0;
  for (long long mask = 0; mask < (1LL << n_mo); ++mask) {
    int runs = 1;
    for (int k = 1; k < n_mo; ++k) runs += ((mask >> k) & 1) != ((mask >> (k - 1)) & 1);
    hits += runs <= n_run;
    ++total;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

// Oracle: exact integer binomial CDF P(Bin(m, 1/2) <= b), m <= 60.
double exact_binomial_cdf(int m, int b) {
  unsigned long long c = 1, acc = 0;
  for (int k = 0; k <= b; ++k) {
    acc += c;
    c = c * static_cast<unsigned long long>(m - k) / static_cast<unsigned long long>(k + 1);
  }
  return static_cast<double>(acc) / std::ldexp(1.0, m);
}

TraderTape tape_from(const std::string& id, const std::vector<std::int8_t>& signs) {
  TraderTape t;
  t.trader_id = id;
  t.reduced_signs = signs;
  for (std::size_t k = 0; k < signs.size(); ++k) t.ticks.push_back(static_cast<std::int64_t>(k));
  t.days.assign(signs.size(), 0);
  t.run_lengths = runs_decompose(t);
  t.active_days = signs.empty() ? 0 : 1;
  return t;
}

std::vector<std::int8_t> bernoulli_signs(RandomStream& rng, std::size_t n) {
  std::vector<std::int8_t> s(n);
  for (auto& v : s) v = static_cast<std::int8_t>(rng.coin());
  return s;
}

}  // namespace

TEST(RunsTest, TwoOrdersOneRun) {
  EXPECT_DOUBLE_EQ(enumerated_pvalue(2, 1), 0.5);
  EXPECT_NEAR(runs_test_pvalue(2, 1), 0.5, 1e-14);
}

TEST(RunsTest, ElevenOrdersOneRun) {
  EXPECT_NEAR(exact_binomial_cdf(10, 0), 9.765625e-4, 1e-15);
  EXPECT_NEAR(runs_test_pvalue(11, 1), 9.765625e-4, 1e-15);
}

TEST(RunsTest, TwentyOneOrdersElevenRuns) {
  double oracle = exact_binomial_cdf(20, 10);
  EXPECT_NEAR(oracle, 0.5881, 1e-4);
  EXPECT_NEAR(runs_test_pvalue(21, 11), oracle, 1e-12);
}

TEST(RunsTest, MatchesEnumerationForSmallN) {
  for (int n = 2; n <= 14; ++n)
    for (int r = 1; r <= n; ++r) EXPECT_NEAR(runs_test_pvalue(n, r), enumerated_pvalue(n, r), 1e-12) << n << "," << r;
}

TEST(RunsTest, MatchesIncompleteBetaForLargeN) {
  // P(Bin(m, 1/2) <= b) = I_{1/2}(m - b, b + 1)
  for (std::int64_t n : {1000LL, 100000LL, 10000000LL}) {
    std::int64_t m = n - 1;
    for (double frac : {0.45, 0.499, 0.5, 0.501, 0.55}) {
      auto b = static_cast<std::int64_t>(frac * static_cast<double>(m));
      double oracle = boost::math::ibetac(static_cast<double>(b + 1), static_cast<double>(m - b), 0.5);
      double p = runs_test_pvalue(n, b + 1);
      if (oracle > 1e-300) EXPECT_NEAR(p / oracle, 1.0, 1e-7) << n << " " << b;
    }
  }
}

TEST(RunsTest, MonotoneInRuns) {
  for (std::int64_t n : {5LL, 57LL, 1000LL}) {
    double prev = 0;
    for (std::int64_t r = 1; r <= n; ++r) {
      double p = runs_test_pvalue(n, r);
      EXPECT_GE(p, prev - 1e-15);
      prev = p;
    }
  }
}

TEST(RunsTest, DomainErrors) {
  EXPECT_THROW(runs_test_pvalue(1, 1), ParameterError);
  EXPECT_THROW(runs_test_pvalue(5, 0), ParameterError);
  EXPECT_THROW(runs_test_pvalue(5, 6), ParameterError);
}

TEST(Classify, ConstantAlternatingAndShortTraders) {
  TapeMap tapes;
  tapes["const"] = tape_from("const", std::vector<std::int8_t>(11, 1));
  std::vector<std::int8_t> alt;
  for (int i = 0; i < 11; ++i) alt.push_back(i % 2 ? -1 : 1);
  tapes["alt"] = tape_from("alt", alt);
  tapes["one"] = tape_from("one", {1});
  auto r = classify_traders(tapes, 0.01);
  EXPECT_TRUE(r.is_st("const"));
  EXPECT_NEAR(r.p_values.at("const"), 9.765625e-4, 1e-15);
  EXPECT_FALSE(r.is_st("alt"));
  EXPECT_NEAR(r.p_values.at("alt"), 1.0, 1e-12);
  EXPECT_FALSE(r.is_st("one"));
  EXPECT_EQ(r.st_ids.size() + r.rt_ids.size(), tapes.size());
}

TEST(Classify, EmptyTapeSetIsError) { EXPECT_THROW(classify_traders(TapeMap{}), EmptyInputError); }

TEST(Classify, BernoulliTradersAreMostlyRandom) {
  RandomStream rng(101, 0);
  TapeMap tapes;
  for (int i = 0; i < 2000; ++i) {
    auto id = "B" + std::to_string(i);
    tapes[id] = tape_from(id, bernoulli_signs(rng, 1000));
  }
  auto r = classify_traders(tapes);
  double fpr = static_cast<double>(r.st_ids.size()) / 2000.0;
  EXPECT_LE(fpr, 0.01 + 3 * std::sqrt(0.01 * 0.99 / 2000));
}

TEST(Classify, SplittingTradersAreDetected) {
  TapeMap tapes;
  for (int i = 0; i < 200; ++i) {
    LmfParams p;
    p.n_events = 1000;
    p.seed = derive_seed(55, static_cast<std::uint64_t>(i));
    auto sim = simulate(p);
    auto id = "S" + std::to_string(i);
    tapes[id] = tape_from(id, sim.series.signs);
  }
  auto r = classify_traders(tapes);
  EXPECT_GE(static_cast<double>(r.st_ids.size()) / 200.0, 0.95);
}

TEST(StStatistics, AllSplitting) {
  TapeMap tapes;
  tapes["a"] = tape_from("a", std::vector<std::int8_t>(20, 1));
  tapes["b"] = tape_from("b", std::vector<std::int8_t>(30, -1));
  auto r = classify_traders(tapes);
  auto s = st_statistics(r, tapes, 50);
  EXPECT_DOUBLE_EQ(s.st_fraction, 1.0);
  EXPECT_DOUBLE_EQ(s.st_mo_share, 1.0);
}

TEST(StStatistics, LmfMarketIsAlmostAllSplitting) {
  LmfParams p;
  p.n_traders = 100;
  p.n_events = 500000;
  p.seed = 4;
  auto sim = simulate(p);
  auto r = classify_traders(sim.tapes);
  EXPECT_GE(st_statistics(r, sim.tapes, sim.series.size()).st_fraction, 0.95);
}

TEST(StStatistics, MixedMarketMimicsQuarterSplitters) {
  // 25 splitting traders with heavy flow, 75 random traders with light flow:
  // by construction st_fraction = 0.25 and st_mo_share = 25*3200/(25*3200+75*266) ~ 0.8.
  RandomStream rng(8, 0);
  TapeMap tapes;
  std::size_t total = 0;
  for (int i = 0; i < 100; ++i) {
    auto id = "X" + std::to_string(100 + i);
    std::vector<std::int8_t> signs;
    if (i < 25) {
      LmfParams p;
      p.n_events = 3200;
      p.seed = derive_seed(8, static_cast<std::uint64_t>(i));
      signs = simulate(p).series.signs;
    } else {
      signs = bernoulli_signs(rng, 266);
    }
    total += signs.size();
    tapes[id] = tape_from(id, signs);
  }
  auto s = st_statistics(classify_traders(tapes), tapes, total);
  EXPECT_NEAR(s.st_fraction, 0.25, 0.03);
  EXPECT_NEAR(s.st_mo_share, 0.8, 0.03);
}

TEST(CountActive, DirectFormula) {
  ClassificationResult r;
  r.st_ids = {"a"};
  TapeMap tapes;
  tapes["a"].reduced_signs.assign(2000, 1);
  tapes["a"].active_days = 250;
  EXPECT_DOUBLE_EQ(count_active_sts(r, tapes, 250), 1.0);
  tapes["a"].active_days = 125;
  EXPECT_DOUBLE_EQ(count_active_sts(r, tapes, 250), 0.5);
  tapes["a"].reduced_signs.assign(999, 1);
  EXPECT_DOUBLE_EQ(count_active_sts(r, tapes, 250), 0.0);
  EXPECT_THROW(count_active_sts(r, tapes, 0), ParameterError);
}

TEST(CountActive, DailyTradersCountOncePerDay) {
  LmfParams p;
  p.n_traders = 10;
  p.n_events = 250 * 5000;
  p.seed = 6;
  SimulationOptions opt;
  opt.ticks_per_day = 5000;
  auto sim = simulate(p, opt);
  auto r = classify_traders(sim.tapes);
  ASSERT_EQ(r.st_ids.size(), 10u);
  EXPECT_DOUBLE_EQ(count_active_sts(r, sim.tapes, 250), 10.0);
}

TEST(Classify, CsvSchema) {
  TapeMap tapes;
  tapes["a"] = tape_from("a", std::vector<std::int8_t>(11, 1));
  std::ostringstream out;
  write_classification_csv(out, classify_traders(tapes), tapes);
  EXPECT_EQ(out.str(), "trader_id,n_mo,n_run,p_value,label\na,11,1,0.0009765625,ST\n");
}

TEST(RandomTraders, RunLawIsGeometricHalf) {
  RandomStream rng(17, 0);
  TapeMap tapes;
  std::set<std::string> ids;
  for (int i = 0; i < 200; ++i) {
    auto id = "R" + std::to_string(i);
    tapes[id] = tape_from(id, bernoulli_signs(rng, 1000));
    ids.insert(id);
  }
  auto runs = pooled_runs(tapes, ids);
  ASSERT_GT(runs.size(), 90000u);
  auto ccdf = empirical_ccdf(runs);
  double ks = 0;
  for (const auto& [x, p] : ccdf) ks = std::max(ks, std::abs(p - std::pow(2.0, -static_cast<double>(x))));
  // P_>(x) = 2^(-x) for integer x, i.e. P_>(L) = 2^(1-L) at L = x + 1
  EXPECT_LT(ks, 0.01);
  EXPECT_NEAR(geometric_fit(runs), 2.0, 0.05);
}
