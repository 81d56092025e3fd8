#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "rolp/errors.hpp"
#include "rolp/format.hpp"
#include "rolp/instance.hpp"
#include "rolp/rng.hpp"

namespace rolp {

struct RandomInstanceParams {
  std::size_t m = 8;
  std::size_t n = 100;
  std::size_t K = 2;
  double B = 10.0;
  std::size_t d = 2;
  std::uint64_t seed = 1;
};

/// Random packing instance: every option touches `d` distinct random
/// resources, rows are rescaled to maximum 1 and every capacity equals B.
inline PackingInstance generate_random(const RandomInstanceParams& params) {
  const auto [m, n, K, B, d, seed] = params;
  if (m < 1 || n < 1 || K < 1) throw DomainError("generate_random: m, n and K must be at least 1");
  if (d < 1 || d > m) throw DomainError("generate_random: d must lie in [1, m]");
  if (!(B >= 1.0)) throw DomainError("generate_random: B must be at least 1");

  CounterRng rng(mix64(seed ^ 0x5eed0001ULL));
  PackingInstance inst;
  inst.name = "random-m" + std::to_string(m) + "-n" + std::to_string(n) + "-K" + std::to_string(K) + "-B" +
              format_real(B) + "-d" + std::to_string(d) + "-s" + std::to_string(seed);
  inst.capacities.assign(m, B);
  inst.requests.resize(n);

  std::vector<std::size_t> pool(m);
  for (auto& req : inst.requests) {
    req.options.resize(K);
    for (auto& opt : req.options) {
      opt.profit = rng.uniform_open_closed();
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t t = 0; t < d; ++t) {
        const auto pick = t + static_cast<std::size_t>(rng.below(m - t));
        std::swap(pool[t], pool[pick]);
      }
      opt.consumption.clear();
      for (std::size_t t = 0; t < d; ++t) opt.consumption.push_back({pool[t], rng.uniform_open_closed()});
      std::sort(opt.consumption.begin(), opt.consumption.end(),
                [](const Entry& a, const Entry& b) { return a.resource < b.resource; });
    }
  }
  const auto maxima = row_maxima(inst);
  for (auto& req : inst.requests)
    for (auto& opt : req.options)
      for (auto& e : opt.consumption) e.amount /= maxima[e.resource];
  return inst;
}

enum class GapFamily { kKnapsack, kMatching, kAdwords, kGeneral };

inline std::string_view to_string(GapFamily family) noexcept {
  switch (family) {
    case GapFamily::kKnapsack: return "knapsack";
    case GapFamily::kMatching: return "matching";
    case GapFamily::kAdwords: return "adwords";
    case GapFamily::kGeneral: return "general";
  }
  return "general";
}

inline GapFamily parse_gap_family(std::string_view name) {
  if (name == "knapsack") return GapFamily::kKnapsack;
  if (name == "matching") return GapFamily::kMatching;
  if (name == "adwords") return GapFamily::kAdwords;
  if (name == "general") return GapFamily::kGeneral;
  throw DomainError("unknown GAP family '" + std::string(name) + "'");
}

struct GapInstanceParams {
  std::size_t m = 5;
  std::size_t n = 60;
  GapFamily family = GapFamily::kGeneral;
  std::uint64_t seed = 1;
};

/// Random GAP instance of the requested family.
///
///  knapsack  m = 1, profit and size uniform in (0,1], capacity max(1, n/8)
///  matching  complete bipartite, w = 1, b = 1, profit uniform in (0,1]
///  adwords   each item bids on every bin w.p. 1/2 (at least one), p = w = bid,
///            budgets max(1, n/(2m))
///  general   each item eligible for every bin w.p. 1/2 (at least one),
///            independent profit and size in (0,1], capacities uniform in [1,3)
inline GapInstance generate_gap(const GapInstanceParams& params) {
  const auto [m, n, family, seed] = params;
  if (m < 1) throw DomainError("generate_gap: m must be at least 1");
  if (family == GapFamily::kKnapsack && m != 1) throw DomainError("generate_gap: knapsack family requires m = 1");

  CounterRng rng(mix64(seed ^ 0x5eed0002ULL));
  GapInstance gap;
  gap.name = std::string(to_string(family)) + "-m" + std::to_string(m) + "-n" + std::to_string(n) + "-s" +
             std::to_string(seed);
  gap.items.resize(n);

  auto random_subset = [&](GapItem& item, auto&& make_entry) {
    for (std::size_t i = 0; i < m; ++i)
      if (rng.uniform() < 0.5) item.bins.push_back(make_entry(i));
    if (item.bins.empty()) item.bins.push_back(make_entry(static_cast<std::size_t>(rng.below(m))));
  };

  switch (family) {
    case GapFamily::kKnapsack:
      gap.bin_capacities.assign(1, std::max(1.0, static_cast<double>(n) / 8.0));
      for (auto& item : gap.items) {
        const double profit = rng.uniform_open_closed();
        const double size = rng.uniform_open_closed();
        item.bins.push_back({0, profit, size});
      }
      break;
    case GapFamily::kMatching:
      gap.bin_capacities.assign(m, 1.0);
      for (auto& item : gap.items)
        for (std::size_t i = 0; i < m; ++i) item.bins.push_back({i, rng.uniform_open_closed(), 1.0});
      break;
    case GapFamily::kAdwords:
      gap.bin_capacities.assign(m, std::max(1.0, static_cast<double>(n) / (2.0 * static_cast<double>(m))));
      for (auto& item : gap.items)
        random_subset(item, [&](std::size_t i) {
          const double bid = rng.uniform_open_closed();
          return GapEntry{i, bid, bid};
        });
      break;
    case GapFamily::kGeneral:
      gap.bin_capacities.resize(m);
      for (auto& b : gap.bin_capacities) b = 1.0 + 2.0 * rng.uniform();
      for (auto& item : gap.items)
        random_subset(item, [&](std::size_t i) {
          const double profit = rng.uniform_open_closed();
          const double size = rng.uniform_open_closed();
          return GapEntry{i, profit, size};
        });
      break;
  }
  for (auto& item : gap.items)
    std::sort(item.bins.begin(), item.bins.end(), [](const GapEntry& a, const GapEntry& b) { return a.bin < b.bin; });
  return gap;
}

}  // namespace rolp
