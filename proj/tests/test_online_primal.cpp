#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "rolp/generators.hpp"
#include "rolp/online_primal.hpp"
#include "support/enumerate.hpp"
#include "support/tiny.hpp"

using namespace rolp;

namespace {

std::vector<std::size_t> identity(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

// Monte-Carlo mean of ALG over uniformly random orders, with its standard error.
std::pair<double, double> monte_carlo(const PackingInstance& inst, std::size_t trials, std::uint64_t seed,
                                      std::optional<double> p = std::nullopt) {
  double sum = 0.0, sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto stream = trial_stream(seed, t);
    auto prng = sub_stream(stream, StreamRole::kPermutation);
    auto rng = sub_stream(stream, StreamRole::kRounding);
    const auto perm = sample_permutation(inst.request_count(), prng);
    PrimalOptions opts;
    opts.known_opt = 1.0;
    const double alg = p ? run_primal_sampled(inst, *p, perm, rng, opts).alg_value
                         : run_primal(inst, perm, rng, opts).alg_value;
    sum += alg;
    sq += alg * alg;
  }
  const double n = static_cast<double>(trials);
  const double mean = sum / n;
  return {mean, std::sqrt(std::max(0.0, sq / n - mean * mean) / (n - 1.0))};
}

}  // namespace

TEST(RoundTentative, PointMassAndEmpty) {
  CounterRng rng(1);
  const std::vector<double> one{1.0}, zeros{0.0, 0.0};
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(round_tentative(one, rng), std::optional<std::size_t>(0));
    EXPECT_EQ(round_tentative(zeros, rng), std::nullopt);
  }
}

TEST(RoundTentative, BernoulliHalf) {
  CounterRng rng(2);
  const std::vector<double> half{0.5};
  int hits = 0;
  for (int i = 0; i < 100000; ++i) hits += round_tentative(half, rng).has_value();
  EXPECT_NEAR(hits / 100000.0, 0.5, 0.01);
}

TEST(RoundTentative, SplitsMassAcrossOptions) {
  CounterRng rng(3);
  const std::vector<double> row{0.2, 0.3, 0.1};
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 100000; ++i) {
    const auto k = round_tentative(row, rng);
    ++counts[k ? *k : 3];
  }
  EXPECT_NEAR(counts[0] / 1e5, 0.2, 0.01);
  EXPECT_NEAR(counts[1] / 1e5, 0.3, 0.01);
  EXPECT_NEAR(counts[2] / 1e5, 0.1, 0.01);
  EXPECT_NEAR(counts[3] / 1e5, 0.4, 0.01);
}

TEST(RoundTentative, RejectsMassAboveOne) {
  CounterRng rng(4);
  const std::vector<double> row{0.7, 0.5};
  EXPECT_THROW(round_tentative(row, rng), DistributionError);
}

TEST(FeasibilityTest, Examples) {
  const std::vector<double> b{2.0, 3.0};
  const Option opt{1.0, {{0, 1.0}}};
  EXPECT_TRUE(feasibility_test(std::vector<double>{0.0, 0.0}, opt, b));
  EXPECT_FALSE(feasibility_test(std::vector<double>{2.0, 0.0}, opt, b));
  EXPECT_TRUE(feasibility_test(std::vector<double>{1.0, 0.0}, opt, b));
  EXPECT_TRUE(feasibility_test(std::vector<double>{2.0, 3.0}, Option{1.0, {}}, b));
}

TEST(DefaultSamplingP, ClosedForm) {
  EXPECT_DOUBLE_EQ(default_sampling_p(2.0, 1), 1.0 - 1.0 / (4.0 * std::numbers::e));
  EXPECT_NEAR(default_sampling_p(2.0, 1), 0.90803, 1e-5);
  EXPECT_NEAR(default_sampling_p(1e9, 3), 1.0 - 1.0 / (2.0 * std::numbers::e), 1e-8);
  for (double B : {2.0, 2.5, 5.0, 50.0})
    for (std::size_t d : {1u, 2u, 8u, 100u}) {
      const double p = default_sampling_p(B, d);
      EXPECT_GT(p, 0.5);
      EXPECT_LT(p, 1.0);
    }
  EXPECT_THROW(default_sampling_p(1.5, 1), DomainError);
  EXPECT_THROW(default_sampling_p(2.0, 0), DomainError);
}

TEST(SampleLength, Floor) {
  EXPECT_EQ(sample_length(2.0 / 3.0, 3), 2u);
  EXPECT_EQ(sample_length(0.0, 10), 0u);
  EXPECT_EQ(sample_length(0.99, 10), 9u);
  EXPECT_THROW(sample_length(1.0, 10), DomainError);
  EXPECT_THROW(sample_length(-0.1, 10), DomainError);
}

TEST(RunPrimal, SingleRequestAllocated) {
  PackingInstance inst{"one", {1.0}, {Request{{Option{3.0, {{0, 1.0}}}}}}};
  CounterRng rng(5);
  const auto out = run_primal(inst, std::vector<std::size_t>{0}, rng);
  EXPECT_EQ(out.allocation[0], std::optional<std::size_t>(0));
  EXPECT_DOUBLE_EQ(out.ratio, 1.0);
}

TEST(RunPrimal, EmptyInstance) {
  PackingInstance inst{"empty", {1.0}, {}};
  CounterRng rng(5);
  const auto out = run_primal(inst, std::vector<std::size_t>{}, rng);
  EXPECT_EQ(out.alg_value, 0.0);
  EXPECT_EQ(out.opt_value, 0.0);
}

TEST(RunPrimal, RejectsNonPermutation) {
  const auto inst = oracle::instance_t1();
  CounterRng rng(5);
  EXPECT_THROW(run_primal(inst, std::vector<std::size_t>{0, 0}, rng), std::invalid_argument);
  EXPECT_THROW(run_primal(inst, std::vector<std::size_t>{0}, rng), std::invalid_argument);
}

TEST(RunPrimal, T1ExactExpectation) {
  const auto inst = oracle::instance_t1();
  EXPECT_NEAR(oracle::expected_alg(inst), 1.25, 1e-12);
  const auto [mean, se] = monte_carlo(inst, 100000, 31);
  EXPECT_NEAR(mean, 1.25, 3.0 * se);
}

TEST(RunPrimalSampled, T1HalfSampleEnumeration) {
  const auto inst = oracle::instance_t1();
  // Round 2 solves P(1, {r1, r2}): all mass on r2. When r2 came first it is
  // already gone and r1 gets x = 0, so E[ALG] = (2 + 0) / 2.
  EXPECT_NEAR(oracle::expected_alg(inst, 1), 1.0, 1e-12);
  const auto [mean, se] = monte_carlo(inst, 20000, 32, 0.5);
  EXPECT_NEAR(mean, 1.0, 3.0 * se + 1e-12);
}

TEST(RunPrimalSampled, ZeroPMatchesRunPrimal) {
  const auto inst = generate_random({4, 20, 2, 2.0, 2, 3});
  const auto perm = identity(inst.request_count());
  CounterRng a(9), b(9);
  const auto x = run_primal(inst, perm, a);
  const auto y = run_primal_sampled(inst, 0.0, perm, b);
  EXPECT_EQ(x.allocation, y.allocation);
  EXPECT_EQ(x.alg_value, y.alg_value);
}

TEST(RunPrimalSampled, FullSampleAllocatesNothing) {
  const auto inst = generate_random({4, 10, 2, 2.0, 2, 3});
  CounterRng rng(9);
  const auto out = run_primal_sampled(inst, 0.95, identity(10), rng);
  EXPECT_EQ(out.alg_value, 0.0);
  for (const auto& r : out.rounds) EXPECT_EQ(r.sampled, r.round <= 9);
}

TEST(RunPrimal, ExactExpectationMatchesMonteCarlo) {
  CounterRng rng(4242);
  for (int t = 0; t < 6; ++t) {
    const auto inst = normalize_rows(tiny::random_tiny(rng, 2, 3, 2));
    if (column_sparsity(inst) == 0) continue;
    const double exact = oracle::expected_alg(inst);
    const auto [mean, se] = monte_carlo(inst, 100000, 100 + t);
    EXPECT_NEAR(mean, exact, 3.0 * se + 1e-9) << "instance " << t;
  }
}

TEST(RunPrimal, SafetyInvariantsUnderAdversarialOrders) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = generate_random({5, 30, 3, 2.0, 3, seed});
    const double opt = solve_packing(normalize_rows(inst)).primal.objective;
    std::vector<std::vector<std::size_t>> orders{identity(30)};
    orders.push_back(orders[0]);
    std::reverse(orders[1].begin(), orders[1].end());
    auto by_profit = identity(30);
    std::sort(by_profit.begin(), by_profit.end(), [&](std::size_t a, std::size_t b) {
      return inst.requests[a].options[0].profit < inst.requests[b].options[0].profit;
    });
    orders.push_back(by_profit);
    for (const auto& perm : orders) {
      CounterRng rng(seed);
      const auto out = run_primal(inst, perm, rng);
      const auto norm = normalize_rows(inst);
      for (const auto& r : out.rounds)
        for (std::size_t i = 0; i < norm.resource_count(); ++i)
          EXPECT_LE(r.consumption_after[i], norm.capacities[i] + 1e-9);
      EXPECT_LE(out.alg_value, opt + 1e-6);
      double value = 0.0;
      for (std::size_t j = 0; j < 30; ++j)
        if (out.allocation[j]) value += inst.requests[j].options[*out.allocation[j]].profit;
      EXPECT_DOUBLE_EQ(value, out.alg_value);
    }
  }
}

TEST(RunPrimal, Deterministic) {
  const auto inst = generate_random({4, 25, 2, 2.0, 2, 8});
  CounterRng prng(3);
  const auto perm = sample_permutation(25, prng);
  CounterRng a(11), b(11);
  const auto x = run_primal(inst, perm, a);
  const auto y = run_primal(inst, perm, b);
  EXPECT_EQ(x.allocation, y.allocation);
  ASSERT_EQ(x.rounds.size(), y.rounds.size());
  for (std::size_t l = 0; l < x.rounds.size(); ++l) {
    EXPECT_EQ(x.rounds[l].tentative_option, y.rounds[l].tentative_option);
    EXPECT_EQ(x.rounds[l].scaled_lp_objective, y.rounds[l].scaled_lp_objective);
  }
}

TEST(RunPrimal, RoundLogConsistency) {
  const auto inst = generate_random({3, 15, 2, 2.0, 2, 1});
  CounterRng rng(1);
  const auto out = run_primal(inst, identity(15), rng);
  const auto norm = normalize_rows(inst);
  std::vector<double> tentative(3, 0.0);
  for (const auto& r : out.rounds) {
    EXPECT_EQ(r.tentative_load_before, tentative);
    if (r.tentative_option)
      for (const auto& e : norm.requests[r.request].options[*r.tentative_option].consumption)
        tentative[e.resource] += e.amount;
    if (r.accepted) {
      EXPECT_TRUE(r.tentative_option.has_value());
    }
    EXPECT_EQ(out.allocation[r.request], r.accepted ? r.tentative_option : std::nullopt);
  }
}
