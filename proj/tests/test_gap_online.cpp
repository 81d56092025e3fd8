#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "rolp/gap_online.hpp"
#include "rolp/generators.hpp"

using namespace rolp;

namespace {

std::vector<std::size_t> identity(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

void expect_light_capacity(const GapInstance& gap, const GapAssignment& a) {
  std::vector<double> load(gap.bin_count(), 0.0);
  for (std::size_t j = 0; j < gap.item_count(); ++j) {
    if (!a.bin_of[j]) continue;
    for (const auto& e : gap.items[j].bins)
      if (e.bin == *a.bin_of[j]) load[e.bin] += e.size;
  }
  for (std::size_t i = 0; i < gap.bin_count(); ++i) EXPECT_LE(load[i], gap.bin_capacities[i] + 1e-9);
}

}  // namespace

TEST(Split, MatchingFamilyAllHeavy) {
  const auto gap = generate_gap({4, 6, GapFamily::kMatching, 1});
  const auto split = split_heavy_light(gap);
  for (const auto& item : split.light.items) EXPECT_TRUE(item.bins.empty());
  for (std::size_t j = 0; j < gap.item_count(); ++j) EXPECT_EQ(split.heavy.items[j], gap.items[j]);
}

TEST(Split, SmallSizesAllLightAndBoundary) {
  GapInstance gap{"b", {2.0}, {GapItem{{{0, 1.0, 1.0}}}, GapItem{{{0, 1.0, 0.5}}}, GapItem{{{0, 1.0, 1.0000001}}}}};
  const auto split = split_heavy_light(gap);
  EXPECT_TRUE(split.heavy.items[0].bins.empty());
  EXPECT_TRUE(split.heavy.items[1].bins.empty());
  EXPECT_EQ(split.heavy.items[2].bins.size(), 1u);
  EXPECT_EQ(split.light.items[0].bins.size(), 1u);
}

TEST(DefaultLambda, ClosedForm) {
  EXPECT_NEAR(default_gap_lambda(), 0.337607, 1e-6);
  EXPECT_DOUBLE_EQ(kDefaultGapSamplingP, 2.0 / 3.0);
}

TEST(Secretary, SingleItemIsMatched) {
  GapInstance gap{"one", {1.0, 1.0}, {GapItem{{{0, 2.0, 1.0}, {1, 5.0, 1.0}}}}};
  const auto a = secretary_matching(gap, std::vector<std::size_t>{0});
  EXPECT_EQ(a.bin_of[0], std::optional<std::size_t>(1));
  EXPECT_EQ(a.value, 5.0);
}

TEST(Secretary, EmptyInstance) {
  GapInstance gap{"none", {1.0}, {}};
  EXPECT_EQ(secretary_matching(gap, std::vector<std::size_t>{}).value, 0.0);
}

TEST(Secretary, TwoItemsOneBinEnumeration) {
  // floor(2/e) = 0: nothing is sampled. Order (1, 2): item 1 is matched
  // alone, then item 2 wins the optimum but the bin is taken: value 1.
  // Order (2, 1): item 2 takes the bin: value 2. Mean 1.5.
  GapInstance gap{"two", {1.0}, {GapItem{{{0, 1.0, 1.0}}}, GapItem{{{0, 2.0, 1.0}}}}};
  const double v01 = secretary_matching(gap, std::vector<std::size_t>{0, 1}).value;
  const double v10 = secretary_matching(gap, std::vector<std::size_t>{1, 0}).value;
  EXPECT_EQ(v01, 1.0);
  EXPECT_EQ(v10, 2.0);
  EXPECT_EQ((v01 + v10) / 2.0, 1.5);
}

TEST(Secretary, NoBinReceivesTwoItems) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto gap = generate_gap({6, 15, GapFamily::kMatching, seed});
    CounterRng prng(seed);
    const auto a = secretary_matching(gap, sample_permutation(15, prng));
    std::vector<int> count(6, 0);
    double value = 0.0;
    for (std::size_t j = 0; j < 15; ++j)
      if (a.bin_of[j]) {
        EXPECT_EQ(count[*a.bin_of[j]]++, 0);
        value += gap.items[j].bins[*a.bin_of[j]].profit;
      }
    EXPECT_DOUBLE_EQ(value, a.value);
  }
}

TEST(LightPhase, SampleLengthTrace) {
  GapInstance gap{"three", {4.0}, {GapItem{{{0, 1.0, 1.0}}}, GapItem{{{0, 1.0, 1.0}}}, GapItem{{{0, 1.0, 1.0}}}}};
  CounterRng rng(1);
  const auto a = run_light_phase(gap, 2.0 / 3.0, identity(3), rng);
  EXPECT_FALSE(a.bin_of[0].has_value());
  EXPECT_FALSE(a.bin_of[1].has_value());
  EXPECT_TRUE(a.bin_of[2].has_value());
  EXPECT_EQ(rng.draws(), 1u);
}

TEST(LightPhase, SingleItemAlwaysFits) {
  GapInstance gap{"single", {2.0, 2.0}, {GapItem{{{0, 1.0, 1.0}, {1, 3.0, 0.5}}}}};
  for (std::uint64_t s = 0; s < 100; ++s) {
    CounterRng rng(s);
    const auto a = run_light_phase(gap, 0.0, std::vector<std::size_t>{0}, rng);
    EXPECT_EQ(a.bin_of[0], std::optional<std::size_t>(1));
  }
}

TEST(LightPhase, IdenticalItemsNeverOverflow) {
  GapInstance gap{"same", {2.0}, {}};
  for (int j = 0; j < 8; ++j) gap.items.push_back(GapItem{{{0, 1.0, 1.0}}});
  for (std::uint64_t s = 0; s < 10000; ++s) {
    CounterRng prng = sub_stream(trial_stream(s, 0), StreamRole::kPermutation);
    CounterRng rng = sub_stream(trial_stream(s, 0), StreamRole::kRounding);
    const auto a = run_light_phase(gap, 0.0, sample_permutation(8, prng), rng);
    int assigned = 0;
    for (const auto& b : a.bin_of) assigned += b.has_value();
    ASSERT_LE(assigned, 2);
  }
}

TEST(LightPhase, CapacitySafetyOnGeneralInstances) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto gap = generate_gap({4, 25, GapFamily::kGeneral, seed});
    const auto light = split_heavy_light(gap).light;
    CounterRng prng(seed), rng(seed + 99);
    auto perm = sample_permutation(25, prng);
    if (seed % 3 == 0) perm = identity(25);
    expect_light_capacity(light, run_light_phase(light, seed % 2 ? 0.0 : 2.0 / 3.0, perm, rng));
  }
}

TEST(LightPhase, MatchesPackingEmbeddingAtFullCapacity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto gap = generate_gap({3, 18, GapFamily::kGeneral, seed});
    const auto light = split_heavy_light(gap).light;
    CounterRng prng(seed);
    const auto perm = sample_permutation(18, prng);
    CounterRng a(seed + 5), b(seed + 5);
    const auto gap_run = run_light_phase(light, 2.0 / 3.0, perm, a);
    PrimalOptions opts;
    opts.unscaled_capacities = true;
    opts.known_opt = 1.0;
    const auto packing_run =
        detail::run_scaled_rounding(gap_to_packing(light), perm, b, sample_length(2.0 / 3.0, 18), opts);
    EXPECT_DOUBLE_EQ(gap_run.value, packing_run.alg_value);
    for (std::size_t j = 0; j < 18; ++j) {
      ASSERT_EQ(gap_run.bin_of[j].has_value(), packing_run.allocation[j].has_value());
      if (gap_run.bin_of[j]) {
        EXPECT_EQ(*gap_run.bin_of[j], light.items[j].bins[*packing_run.allocation[j]].bin);
      }
    }
  }
}

TEST(RunGap, CoinExtremes) {
  const auto gap = generate_gap({3, 12, GapFamily::kGeneral, 4});
  for (std::uint64_t s = 0; s < 50; ++s) {
    CounterRng coin(s), rng(s + 1);
    EXPECT_EQ(run_gap(gap, 1.0, 2.0 / 3.0, identity(12), coin, rng).branch, GapBranch::kHeavy);
    EXPECT_EQ(run_gap(gap, 0.0, 2.0 / 3.0, identity(12), coin, rng).branch, GapBranch::kLight);
  }
}

TEST(RunGap, RejectsBadParameters) {
  const auto gap = generate_gap({3, 5, GapFamily::kGeneral, 4});
  CounterRng coin(1), rng(2);
  EXPECT_THROW(run_gap(gap, 1.5, 0.5, identity(5), coin, rng), DomainError);
  EXPECT_THROW(run_gap(gap, 0.5, 1.0, identity(5), coin, rng), DomainError);
}

TEST(RunGap, PartitionInequality) {
  for (auto family : {GapFamily::kKnapsack, GapFamily::kMatching, GapFamily::kAdwords, GapFamily::kGeneral})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto gap = generate_gap({family == GapFamily::kKnapsack ? 1u : 4u, 20, family, seed});
      const auto o = compute_gap_optima(gap);
      EXPECT_GE(o.opt_heavy + o.opt_light, o.opt - 1e-7);
      EXPECT_LE(o.opt_heavy, o.opt + 1e-7);
      EXPECT_LE(o.opt_light, o.opt + 1e-7);
    }
}

TEST(RunGap, ValueNeverExceedsOpt) {
  const auto gap = generate_gap({4, 20, GapFamily::kGeneral, 8});
  for (std::uint64_t s = 0; s < 40; ++s) {
    CounterRng prng(s), coin(s + 1), rng(s + 2);
    const auto out = run_gap(gap, default_gap_lambda(), kDefaultGapSamplingP, sample_permutation(20, prng), coin, rng);
    EXPECT_LE(out.alg_value, out.opt_value + 1e-7);
    expect_light_capacity(gap, GapAssignment{out.assignment, out.alg_value});
  }
}

namespace {

// Straightforward version: a fresh optimum from scratch for
// every arrival.
GapAssignment secretary_reference(const GapInstance& heavy, const std::vector<std::size_t>& perm) {
  const std::size_t n = heavy.item_count(), m = heavy.bin_count();
  const auto sample_len = static_cast<std::size_t>(std::floor(static_cast<double>(n) / std::numbers::e));
  GapAssignment out;
  out.bin_of.assign(n, std::nullopt);
  std::vector<char> taken(m, 0);
  std::vector<std::size_t> seen;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t j = perm[pos];
    seen.insert(std::upper_bound(seen.begin(), seen.end(), j), j);
    if (pos < sample_len) continue;
    WeightMatrix w(m, seen.size());
    std::size_t col_j = 0;
    for (std::size_t c = 0; c < seen.size(); ++c) {
      if (seen[c] == j) col_j = c;
      for (const auto& e : heavy.items[seen[c]].bins) w(e.bin, c) = e.profit;
    }
    for (const auto& [bin, col] : max_weight_bipartite_matching(w).pairs)
      if (col == col_j && !taken[bin]) {
        taken[bin] = 1;
        out.bin_of[j] = bin;
        out.value += w(bin, col);
      }
  }
  return out;
}

}  // namespace

TEST(Secretary, AgreesWithReferenceWithoutTies) {
  CounterRng rng(404);
  for (int t = 0; t < 300; ++t) {
    const std::size_t m = 1 + rng.below(5), n = 1 + rng.below(8);
    GapInstance gap{"r", std::vector<double>(m, 1.0), std::vector<GapItem>(n)};
    for (auto& item : gap.items)
      for (std::size_t i = 0; i < m; ++i)
        if (rng.uniform() < 0.6) item.bins.push_back({i, rng.uniform_open_closed(), 1.0});
    const auto perm = sample_permutation(n, rng);
    const auto fast = secretary_matching(gap, perm);
    const auto ref = secretary_reference(gap, perm);
    EXPECT_EQ(fast.bin_of, ref.bin_of) << "trial " << t;
    EXPECT_DOUBLE_EQ(fast.value, ref.value);
  }
}

TEST(Secretary, TiedWeightsDeterministicAndValid) {
  CounterRng rng(405);
  for (int t = 0; t < 200; ++t) {
    const std::size_t m = 1 + rng.below(5), n = 1 + rng.below(8);
    GapInstance gap{"r", std::vector<double>(m, 1.0), std::vector<GapItem>(n)};
    for (auto& item : gap.items)
      for (std::size_t i = 0; i < m; ++i)
        if (rng.uniform() < 0.6) item.bins.push_back({i, static_cast<double>(1 + rng.below(2)), 1.0});
    const auto perm = sample_permutation(n, rng);
    const auto a = secretary_matching(gap, perm);
    EXPECT_EQ(a.bin_of, secretary_matching(gap, perm).bin_of);
    std::vector<int> used(m, 0);
    double value = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!a.bin_of[j]) continue;
      EXPECT_EQ(used[*a.bin_of[j]]++, 0);
      bool edge = false;
      for (const auto& e : gap.items[j].bins)
        if (e.bin == *a.bin_of[j]) {
          edge = true;
          value += e.profit;
        }
      EXPECT_TRUE(edge);
    }
    EXPECT_DOUBLE_EQ(value, a.value);
  }
}
