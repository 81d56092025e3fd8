#include <gtest/gtest.h>

#include <numeric>

#include "rolp/generators.hpp"
#include "rolp/rng.hpp"
#include "rolp/simplex.hpp"
#include "support/enumerate.hpp"
#include "support/lp_oracle.hpp"
#include "support/tiny.hpp"

using namespace rolp;

namespace {

std::vector<std::size_t> all_of(const PackingInstance& inst) {
  std::vector<std::size_t> s(inst.request_count());
  std::iota(s.begin(), s.end(), std::size_t{0});
  return s;
}

}  // namespace

TEST(SolvePacking, EmptySubsetIsZero) {
  const auto inst = oracle::instance_t1();
  const auto sol = solve_packing(inst, 1.0, std::vector<std::size_t>{});
  EXPECT_EQ(sol.primal.objective, 0.0);
  for (const auto& row : sol.primal.values)
    for (double x : row) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(oracle::brute_force_lp(inst, 1.0, std::vector<std::size_t>{}).objective, 0);
}

TEST(SolvePacking, ZeroCapacityIsZero) {
  auto inst = oracle::instance_t1();
  inst.capacities = {0.0};
  EXPECT_EQ(solve_packing(inst).primal.objective, 0.0);
}

TEST(SolvePacking, TwoRequestKnapsack) {
  const auto inst = oracle::instance_t1();
  const auto sol = solve_packing(inst, 1.0);
  EXPECT_NEAR(sol.primal.objective, 2.0, 1e-12);
  EXPECT_NEAR(sol.primal.value(1, 0), 1.0, 1e-12);
  EXPECT_NEAR(sol.primal.value(0, 0), 0.0, 1e-12);
  EXPECT_EQ(oracle::brute_force_lp(inst).objective, 2);
}

TEST(SolvePacking, HalfCapacitySingleRequest) {
  const auto inst = oracle::instance_t1();
  const std::vector<std::size_t> s{1};
  const auto sol = solve_packing(inst, 0.5, s);
  EXPECT_NEAR(sol.primal.value(1, 0), 0.5, 1e-12);
  EXPECT_NEAR(sol.primal.objective, 1.0, 1e-12);
  EXPECT_EQ(sol.primal.value(0, 0), 0.0);
}

TEST(SolvePacking, RejectsBadArguments) {
  const auto inst = oracle::instance_t1();
  EXPECT_THROW(solve_packing(inst, 0.0), std::invalid_argument);
  EXPECT_THROW(solve_packing(inst, 1.0, std::vector<std::size_t>{0, 0}), std::invalid_argument);
  EXPECT_THROW(solve_packing(inst, 1.0, std::vector<std::size_t>{2}), std::invalid_argument);
}

TEST(SolvePacking, PivotLimitThrowsSolverError) {
  const auto inst = generate_random({6, 30, 3, 3.0, 3, 4});
  SolverOptions opts;
  opts.pivot_limit = 1;
  EXPECT_THROW(solve_packing(inst, 1.0, opts), SolverError);
}

TEST(SolvePacking, ExcludedOptionsGetNoMass) {
  const auto inst = oracle::instance_t1();
  OptionMask mask{{false}, {true}};
  SolverOptions opts;
  opts.excluded = &mask;
  const auto sol = solve_packing(inst, 1.0, opts);
  EXPECT_NEAR(sol.primal.objective, 1.0, 1e-12);
  EXPECT_EQ(sol.primal.value(1, 0), 0.0);
  EXPECT_LE(verify_duality(inst, 1.0, all_of(inst), sol.primal, sol.dual, &mask), 1e-9);
}

TEST(SolvePacking, AgreesWithExactOracle) {
  CounterRng rng(20240601);
  const double fs[] = {0.25, 0.5, 1.0};
  int compared = 0;
  for (int t = 0; t < 240; ++t) {
    const auto inst = tiny::random_tiny(rng, 3, 4, 3);
    const double f = fs[rng.below(3)];
    std::vector<std::size_t> subset;
    for (std::size_t j = 0; j < inst.request_count(); ++j)
      if (rng.uniform() < 0.8) subset.push_back(j);
    const auto sol = solve_packing(inst, f, subset);
    const auto exact = oracle::brute_force_lp(inst, f, subset);
    EXPECT_NEAR(sol.primal.objective, exact.objective.get_d(), 1e-7) << "instance " << t;
    EXPECT_LE(verify_duality(inst, f, subset, sol.primal, sol.dual), 1e-7);
    ++compared;
  }
  EXPECT_GE(compared, 200);
}

TEST(SolvePacking, DualityOnGeneratedInstances) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = generate_random({8, 60, 2, 2.0 + static_cast<double>(seed), 1 + seed % 4, seed});
    for (double f : {0.1, 0.5, 1.0}) {
      const auto sol = solve_packing(inst, f);
      EXPECT_LE(verify_duality(inst, f, all_of(inst), sol.primal, sol.dual), 1e-7);
      EXPECT_NEAR(sol.primal.objective, sol.dual.dual_objective, 1e-7 * std::max(1.0, sol.primal.objective));
    }
  }
}

TEST(SolvePacking, MonotoneInScaling) {
  CounterRng rng(77);
  for (int t = 0; t < 40; ++t) {
    const auto inst = tiny::random_tiny(rng, 3, 5, 3);
    double prev = -1.0;
    for (double f : {0.05, 0.2, 0.4, 0.6, 0.8, 1.0, 1.5}) {
      const double obj = solve_packing(inst, f).primal.objective;
      EXPECT_GE(obj, prev - 1e-9);
      prev = obj;
    }
  }
}

TEST(SolvePacking, MonotoneInSubset) {
  CounterRng rng(78);
  for (int t = 0; t < 40; ++t) {
    const auto inst = generate_random({4, 12, 2, 2.0, 2, static_cast<std::uint64_t>(t)});
    auto perm = sample_permutation(inst.request_count(), rng);
    double prev = 0.0;
    for (std::size_t len = 1; len <= perm.size(); ++len) {
      const std::vector<std::size_t> s(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(len));
      const double obj = solve_packing(inst, 0.5, s).primal.objective;
      EXPECT_GE(obj, prev - 1e-9);
      prev = obj;
    }
  }
}

TEST(SolvePacking, ProfitScalingByTwoIsExact) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = generate_random({5, 25, 3, 3.0, 2, seed});
    auto scaled = inst;
    for (auto& req : scaled.requests)
      for (auto& opt : req.options) opt.profit *= 2.0;
    const auto a = solve_packing(inst, 0.7);
    const auto b = solve_packing(scaled, 0.7);
    EXPECT_EQ(b.primal.objective, 2.0 * a.primal.objective);
    EXPECT_EQ(a.primal.values, b.primal.values);
    EXPECT_EQ(a.pivots, b.pivots);
  }
}

TEST(SolvePacking, ProfitScalingGeneralFactor) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = generate_random({4, 15, 2, 2.0, 2, seed});
    auto scaled = inst;
    for (auto& req : scaled.requests)
      for (auto& opt : req.options) opt.profit *= 3.7;
    EXPECT_NEAR(solve_packing(scaled).primal.objective, 3.7 * solve_packing(inst).primal.objective, 1e-9);
  }
}

TEST(SolvePacking, Deterministic) {
  const auto inst = generate_random({6, 40, 3, 2.0, 3, 12});
  const auto a = solve_packing(inst, 0.3);
  const auto b = solve_packing(inst, 0.3);
  EXPECT_EQ(a.primal.values, b.primal.values);
  EXPECT_EQ(a.dual.resource_prices, b.dual.resource_prices);
}

TEST(VerifyDuality, DetectsCapacityOvershoot) {
  const auto inst = oracle::instance_t1();
  auto sol = solve_packing(inst);
  sol.primal.values[0][0] = 0.5;
  EXPECT_GE(verify_duality(inst, 1.0, all_of(inst), sol.primal, sol.dual), 0.5);
}

TEST(VerifyDuality, DetectsZeroDual) {
  const auto inst = oracle::instance_t1();
  auto sol = solve_packing(inst);
  DualCertificate zero{{0.0}, {0.0, 0.0}, 0.0};
  EXPECT_GE(verify_duality(inst, 1.0, all_of(inst), sol.primal, zero), 2.0 / std::max(1.0, 2.0));
}

namespace {

void expect_same_as_cold(const PackingInstance& inst, std::span<const std::size_t> order, bool scaled, double tol) {
  IncrementalPackingSolver solver(inst);
  std::vector<std::size_t> seen;
  for (std::size_t l = 0; l < order.size(); ++l) {
    solver.add_request(order[l]);
    seen.push_back(order[l]);
    const double f = scaled ? static_cast<double>(l + 1) / static_cast<double>(order.size()) : 1.0;
    const auto warm = solver.solve(f);
    const auto cold = solve_packing(inst, f, seen);
    ASSERT_NEAR(warm.primal.objective, cold.primal.objective, tol);
    for (std::size_t j = 0; j < inst.request_count(); ++j)
      for (std::size_t k = 0; k < inst.requests[j].options.size(); ++k)
        ASSERT_NEAR(warm.primal.values[j][k], cold.primal.values[j][k], tol) << "round " << l;
    EXPECT_LE(verify_duality(inst, f, seen, warm.primal, warm.dual), 1e-7);
  }
}

}  // namespace

TEST(IncrementalPackingSolver, MatchesColdSolvesOnTiedInstances) {
  CounterRng rng(71);
  for (int t = 0; t < 200; ++t) {
    const auto inst = normalize_rows(tiny::random_tiny(rng, 3, 6, 3));
    const auto order = sample_permutation(inst.request_count(), rng);
    expect_same_as_cold(inst, order, t % 2 == 0, 1e-9);
  }
}

TEST(IncrementalPackingSolver, MatchesColdSolvesOnGeneratedInstances) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto inst = normalize_rows(generate_random({6, 60, 2, 2.0 + 8.0 * static_cast<double>(seed % 3), 1 + seed % 4, seed}));
    CounterRng rng(seed);
    const auto order = sample_permutation(inst.request_count(), rng);
    expect_same_as_cold(inst, order, seed % 2 == 0, 1e-9);
  }
}

TEST(IncrementalPackingSolver, RejectsDuplicatesAndBadIndices) {
  const auto inst = oracle::instance_t1();
  IncrementalPackingSolver solver(inst);
  solver.add_request(1);
  EXPECT_THROW(solver.add_request(1), std::invalid_argument);
  EXPECT_THROW(solver.add_request(2), std::invalid_argument);
  EXPECT_THROW(solver.solve(0.0), std::invalid_argument);
  EXPECT_EQ(solver.subset(), std::vector<std::size_t>{1});
}
