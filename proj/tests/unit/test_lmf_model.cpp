#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "lmf/acf.hpp"
#include "lmf/lmf_model.hpp"
#include "stats.hpp"

using namespace lmf;

TEST(Sampler, ZeroUniformGivesOne) {
  for (double a : {0.5, 1.0, 1.5, 3.0}) EXPECT_EQ(pareto_integer_from_uniform(0.0, a), 1);
}

TEST(Sampler, ClosedFormEvaluation) {
  // 0.01^(-2/3) = 21.544...
  EXPECT_NEAR(std::pow(0.01, -1.0 / 1.5), 21.544, 1e-3);
  EXPECT_EQ(pareto_integer_from_uniform(0.99, 1.5), 21);
}

TEST(Sampler, RejectsNonPositiveAlphaButAllowsHeavyTails) {
  EXPECT_THROW(pareto_integer_from_uniform(0.5, 0.0), ParameterError);
  EXPECT_THROW(pareto_integer_from_uniform(0.5, -1.0), ParameterError);
  EXPECT_GE(pareto_integer_from_uniform(0.999999, 0.5), 1);
}

TEST(Sampler, PmfOfOneAndFrequency) {
  const double oracle = 1.0 - std::pow(2.0, -1.5);
  EXPECT_NEAR(oracle, 0.64645, 1e-5);
  EXPECT_NEAR(pareto_integer_pmf(1, 1.5), oracle, 1e-15);
  RandomStream rng(42, 0);
  const int n = 1000000;
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += sample_pareto_integer(rng, 1.5) == 1;
  double sd = std::sqrt(oracle * (1 - oracle) / n);
  EXPECT_NEAR(static_cast<double>(ones) / n, oracle, 4 * sd);
}

TEST(Sampler, ChiSquareAgainstExactPmf) {
  for (double a : {1.2, 1.5, 1.8, 2.5}) {
    RandomStream rng(derive_seed(9, static_cast<std::uint64_t>(a * 10)), 0);
    std::vector<std::int64_t> xs(1000000);
    for (auto& x : xs) x = sample_pareto_integer(rng, a);
    auto chi = oracle::chi_square_integer(xs, [&](std::int64_t l) { return pareto_integer_pmf(l, a); }, 100);
    EXPECT_GT(chi.p_value, 0.001) << "alpha " << a << " chi2 " << chi.statistic << " dof " << chi.dof;
  }
}

TEST(Sampler, TailIsExactPowerLaw) {
  double s = 0;
  for (std::int64_t l = 1; l < 50; ++l) s += pareto_integer_pmf(l, 1.7);
  EXPECT_NEAR(1.0 - s, pareto_integer_tail(50, 1.7), 1e-12);
}

TEST(Params, Validation) {
  LmfParams p;
  p.n_traders = 2;
  p.n_events = 10;
  p.alpha = 1.0;
  EXPECT_THROW(p.validate(), ParameterError);
  p.alpha = 1.5;
  p.intensities = {0.5, 0.4};
  EXPECT_THROW(p.validate(), ParameterError);
  p.intensities = {0.5, 0.5, 0.0};
  EXPECT_THROW(p.validate(), ParameterError);
  p.intensities = {0.5, 0.5};
  EXPECT_NO_THROW(p.validate());
  p.n_events = 0;
  EXPECT_THROW(simulate(p), EmptyInputError);
}

TEST(Simulate, NoSplittingIsWhiteNoise) {
  LmfParams p;
  p.n_events = 1000000;
  p.seed = 1;
  SimulationOptions opt;
  opt.fixed_metaorder_length = 1;
  opt.build_tapes = false;
  auto sim = simulate(p, opt);
  double c1 = oracle::direct_acf(sim.series.signs, 1);
  EXPECT_LT(std::abs(c1), 3.0 / std::sqrt(1e6));
}

TEST(Simulate, LengthTwoBlocksGiveHalfCorrelation) {
  // Oracle: with one trader and L = 2, ticks (2k, 2k+1) share a block and
  // pairs straddling blocks are independent fair coins, so E C(1) -> 1/2.
  LmfParams p;
  p.n_events = 1000000;
  p.seed = 2;
  SimulationOptions opt;
  opt.fixed_metaorder_length = 2;
  opt.build_tapes = false;
  auto sim = simulate(p, opt);
  for (std::size_t t = 0; t + 1 < sim.series.size(); t += 2) ASSERT_EQ(sim.series.signs[t], sim.series.signs[t + 1]);
  double c1 = oracle::direct_acf(sim.series.signs, 1);
  EXPECT_NEAR(c1, 0.5, 3.0 / std::sqrt(1e6));
}

TEST(Simulate, DeterministicGivenSeed) {
  LmfParams p;
  p.n_traders = 50;
  p.n_events = 200000;
  p.seed = 77;
  auto a = simulate(p), b = simulate(p);
  EXPECT_EQ(a.series.signs, b.series.signs);
  EXPECT_EQ(a.trader_of_tick, b.trader_of_tick);
  p.seed = 78;
  EXPECT_NE(simulate(p).series.signs, a.series.signs);
}

TEST(Simulate, ExplicitUniformIntensitiesReproduceHomogeneousPath) {
  LmfParams p;
  p.n_traders = 8;
  p.n_events = 100000;
  p.seed = 5;
  auto homo = simulate(p);
  p.intensities.assign(8, 0.125);
  auto explicit_uniform = simulate_heterogeneous(p);
  EXPECT_EQ(homo.series.signs, explicit_uniform.series.signs);
}

TEST(Simulate, SuperpositionIdentity) {
  LmfParams p;
  p.n_traders = 13;
  p.n_events = 50000;
  p.seed = 8;
  auto sim = simulate(p);
  std::vector<int> total(sim.series.size(), 0);
  std::size_t count = 0;
  for (const auto& [id, tape] : sim.tapes) {
    count += tape.ticks.size();
    for (std::size_t k = 0; k < tape.ticks.size(); ++k) total[tape.ticks[k]] += tape.reduced_signs[k];
  }
  EXPECT_EQ(count, sim.series.size());
  for (std::size_t t = 0; t < total.size(); ++t) ASSERT_EQ(total[t], sim.series.signs[t]);
}

TEST(Simulate, CompletedMetaordersFollowSamplerLaw) {
  LmfParams p;
  p.n_traders = 20;
  p.n_events = 4000000;
  p.alpha = 1.5;
  p.seed = 12;
  SimulationOptions opt;
  opt.build_tapes = false;
  opt.record_metaorders = true;
  auto sim = simulate(p, opt);
  std::vector<std::int64_t> lengths;
  for (const auto& m : sim.completed) lengths.push_back(m.length);
  ASSERT_GT(lengths.size(), 500000u);
  auto chi = oracle::chi_square_integer(lengths, [](std::int64_t l) { return pareto_integer_pmf(l, 1.5); }, 100);
  EXPECT_GT(chi.p_value, 0.001) << chi.statistic << " dof " << chi.dof;
}

TEST(Simulate, MetaorderSignsBalancedPerTrader) {
  LmfParams p;
  p.n_traders = 10;
  p.n_events = 2000000;
  p.seed = 13;
  SimulationOptions opt;
  opt.build_tapes = false;
  opt.record_metaorders = true;
  auto sim = simulate(p, opt);
  std::map<std::uint32_t, std::pair<double, double>> acc;  // (sum sign, count)
  for (const auto& m : sim.completed) acc[m.trader].first += m.sign, acc[m.trader].second += 1;
  ASSERT_EQ(acc.size(), 10u);
  for (const auto& [i, sc] : acc) EXPECT_LE(std::abs(sc.first / sc.second), 4.0 / std::sqrt(sc.second));
}

TEST(Simulate, TwoTraderIntensityShare) {
  LmfParams p;
  p.n_traders = 2;
  p.n_events = 1000000;
  p.intensities = {0.9, 0.1};
  p.seed = 21;
  auto sim = simulate_heterogeneous(p);
  double share = static_cast<double>(sim.tapes.begin()->second.n_mo()) / 1e6;
  EXPECT_NEAR(share, 0.9, 0.003);
}

TEST(Simulate, HeterogeneousIntensitiesKeepExponent) {
  LmfParams p;
  p.n_traders = 200;
  p.n_events = 10000000;
  p.alpha = 1.5;
  p.intensities = pareto_intensities(p.n_traders, 1.5, 31);
  p.seed = 31;
  SimulationOptions opt;
  opt.build_tapes = false;
  auto sim = simulate_heterogeneous(p, opt);
  auto fit = acf_gamma(sim.series);
  EXPECT_NEAR(fit.gamma, 0.5, 0.1);
}

TEST(Simulate, AliasTableMatchesWeights) {
  std::vector<double> w{0.5, 0.25, 0.125, 0.125};
  AliasTable table(w);
  RandomStream rng(3, 0);
  std::vector<double> hits(4, 0);
  const int n = 400000;
  for (int i = 0; i < n; ++i) hits[table.sample(rng)] += 1;
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(hits[k] / n, w[k], 4 * std::sqrt(w[k] * (1 - w[k]) / n));
}

TEST(Simulate, OrderEventsCarryTapeSchema) {
  LmfParams p;
  p.n_traders = 3;
  p.n_events = 10;
  p.seed = 1;
  auto events = to_order_events(simulate(p));
  ASSERT_EQ(events.size(), 10u);
  for (const auto& e : events) EXPECT_EQ(e.kind, EventKind::market_execution);
  EXPECT_EQ(events[3].order_id, "M3");
}
