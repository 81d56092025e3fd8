#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "rolp/instance.hpp"
#include "rolp/matching.hpp"
#include "rolp/online_primal.hpp"
#include "rolp/rng.hpp"
#include "rolp/simplex.hpp"

namespace rolp {

/// Options with size above half the bin capacity (at most one item fits per
/// bin) versus the rest. Both halves keep every item, possibly with no bins.
struct HeavyLightSplit {
  GapInstance heavy;
  GapInstance light;
};

inline HeavyLightSplit split_heavy_light(const GapInstance& gap) {
  HeavyLightSplit out;
  out.heavy.name = gap.name + "-heavy";
  out.light.name = gap.name + "-light";
  out.heavy.bin_capacities = gap.bin_capacities;
  out.light.bin_capacities = gap.bin_capacities;
  out.heavy.items.resize(gap.item_count());
  out.light.items.resize(gap.item_count());
  for (std::size_t j = 0; j < gap.item_count(); ++j) {
    for (const GapEntry& e : gap.items[j].bins) {
      if (e.size > 0.5 * gap.bin_capacities[e.bin])
        out.heavy.items[j].bins.push_back(e);
      else
        out.light.items[j].bins.push_back(e);
    }
  }
  return out;
}

/// Heads probability 1 / (1 + 16/(3e)).
inline double default_gap_lambda() { return 1.0 / (1.0 + 16.0 / (3.0 * std::numbers::e)); }

inline constexpr double kDefaultGapSamplingP = 2.0 / 3.0;

enum class GapBranch { kHeavy, kLight };

/// Assignment (bin per item, nullopt if unassigned) and its total profit.
struct GapAssignment {
  std::vector<std::optional<std::size_t>> bin_of;
  double value = 0.0;
};

struct GapOptima {
  double opt = 0.0;
  double opt_heavy = 0.0;
  double opt_light = 0.0;
};

struct GapRunOutcome {
  GapBranch branch = GapBranch::kLight;
  std::vector<std::optional<std::size_t>> assignment;
  double alg_value = 0.0;
  double opt_value = 0.0;
  double opt_heavy = 0.0;
  double opt_light = 0.0;
  double ratio = 1.0;
};

/// Fractional optima of the full instance and of both restrictions.
inline GapOptima compute_gap_optima(const GapInstance& gap, const HeavyLightSplit& split) {
  auto solve = [](const GapInstance& g) {
    return g.item_count() == 0 ? 0.0 : solve_packing(gap_to_packing(g), 1.0).primal.objective;
  };
  return {solve(gap), solve(split.heavy), solve(split.light)};
}

inline GapOptima compute_gap_optima(const GapInstance& gap) { return compute_gap_optima(gap, split_heavy_light(gap)); }

/// Online edge-weighted matching on the heavy restriction: observe the first
/// floor(n/e) items, then for each arriving item compute an optimal matching
/// of all items seen so far against all bins and commit the arriving item's
/// edge if its bin is still free. The optimum is maintained incrementally
/// (one Hungarian phase per arrival); exact ties are resolved by that
/// solver, deterministically for a given arrival order.
inline GapAssignment secretary_matching(const GapInstance& heavy, std::span<const std::size_t> permutation) {
  const std::size_t n = heavy.item_count();
  const std::size_t m = heavy.bin_count();
  require_permutation(permutation, n);
  GapAssignment out;
  out.bin_of.assign(n, std::nullopt);
  const auto sample_len = static_cast<std::size_t>(std::floor(static_cast<double>(n) / std::numbers::e));

  std::vector<char> bin_taken(m, 0);
  detail::IncrementalAssignment assignment(m, n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t j = permutation[pos];
    std::vector<double> costs(m, 0.0);
    for (const GapEntry& e : heavy.items[j].bins) costs[e.bin] = -std::max(0.0, e.profit);
    const std::size_t row = assignment.add_row(std::move(costs));
    if (pos < sample_len) continue;
    const std::size_t bin = assignment.column_of(row);
    if (bin < m && assignment.cost(row, bin) < 0.0 && !bin_taken[bin]) {
      bin_taken[bin] = 1;
      out.bin_of[j] = bin;
      out.value -= assignment.cost(row, bin);
    }
  }
  return out;
}

/// Light-branch loop: observe the first floor(p n) items; afterwards solve
/// the LP relaxation over the items seen so far at full capacities, round
/// the arriving item's row to a bin and assign it if it still fits.
inline GapAssignment run_light_phase(const GapInstance& light, double p, std::span<const std::size_t> permutation,
                                     CounterRng& rng) {
  const std::size_t n = light.item_count();
  require_permutation(permutation, n);
  const std::size_t sample_len = sample_length(p, n);
  const PackingInstance lp = gap_to_packing(light);

  GapAssignment out;
  out.bin_of.assign(n, std::nullopt);
  std::vector<double> load(light.bin_count(), 0.0);
  IncrementalPackingSolver solver(lp);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t j = permutation[pos];
    solver.add_request(j);
    if (pos < sample_len) continue;
    const auto solution = solver.solve(1.0);
    const auto k = round_tentative(solution.primal, j, rng);
    if (!k) continue;
    const GapEntry& e = light.items[j].bins[*k];
    if (load[e.bin] + e.size <= light.bin_capacities[e.bin] + kCapacityTol) {
      load[e.bin] += e.size;
      out.bin_of[j] = e.bin;
      out.value += e.profit;
    }
  }
  return out;
}

/// One run of the randomized GAP algorithm: with probability lambda run the
/// matching algorithm on the heavy options, otherwise the light-branch loop.
/// The coin is drawn from `coin`, the light branch rounds with `rng`.
inline GapRunOutcome run_gap(const GapInstance& gap, const HeavyLightSplit& split, const GapOptima& optima,
                             double lambda, double p, std::span<const std::size_t> permutation, CounterRng& coin,
                             CounterRng& rng) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("p must lie in [0, 1)");
  require_permutation(permutation, gap.item_count());
  GapRunOutcome out;
  out.opt_value = optima.opt;
  out.opt_heavy = optima.opt_heavy;
  out.opt_light = optima.opt_light;
  const bool heads = coin.uniform() < lambda;
  out.branch = heads ? GapBranch::kHeavy : GapBranch::kLight;
  const GapAssignment assignment =
      heads ? secretary_matching(split.heavy, permutation) : run_light_phase(split.light, p, permutation, rng);
  out.assignment = assignment.bin_of;
  out.alg_value = assignment.value;
  out.ratio = ratio_of(out.alg_value, out.opt_value);
  return out;
}

inline GapRunOutcome run_gap(const GapInstance& gap, double lambda, double p, std::span<const std::size_t> permutation,
                             CounterRng& coin, CounterRng& rng) {
  const auto split = split_heavy_light(gap);
  return run_gap(gap, split, compute_gap_optima(gap, split), lambda, p, permutation, coin, rng);
}

}  // namespace rolp
