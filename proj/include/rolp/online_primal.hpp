#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rolp/errors.hpp"
#include "rolp/instance.hpp"
#include "rolp/rng.hpp"
#include "rolp/simplex.hpp"

namespace rolp {

inline constexpr double kCapacityTol = 1e-9;

/// What happened in one online round.
struct RoundLog {
  std::size_t round = 0;    // 1-based position in the arrival order
  std::size_t request = 0;  // request id
  bool sampled = false;     // observed only, no LP solve and no allocation
  double scaled_lp_objective = 0.0;
  std::optional<std::size_t> tentative_option;
  bool accepted = false;
  double payment = 0.0;  // mechanism runs only
  /// (A y)_i after the round, in normalized units.
  std::vector<double> consumption_after;
  /// Sum of all earlier tentative allocations, in normalized units.
  std::vector<double> tentative_load_before;
};

/// Result of one online execution.
struct RunOutcome {
  std::vector<RoundLog> rounds;
  /// Chosen option per request (std::nullopt: not served).
  std::vector<std::optional<std::size_t>> allocation;
  double alg_value = 0.0;
  double opt_value = 0.0;
  double ratio = 1.0;
};

struct PrimalOptions {
  /// Precomputed fractional optimum of the full instance; solved if absent.
  std::optional<double> known_opt;
  /// Solve P(1, S) instead of P(l/n, S) in every round.
  bool unscaled_capacities = false;
};

/// Draws one option of a sub-distribution row: option k with probability
/// row[k], none with the remaining mass. Consumes exactly one uniform variate.
inline std::optional<std::size_t> round_tentative(std::span<const double> row, CounterRng& rng) {
  double total = 0.0;
  for (double x : row) total += std::max(0.0, x);
  if (total > 1.0 + 1e-9) throw DistributionError("rounding row sums to " + std::to_string(total) + " > 1");
  const double scale = total > 1.0 ? 1.0 / total : 1.0;
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    cumulative += std::max(0.0, row[k]) * scale;
    if (u < cumulative) return k;
  }
  return std::nullopt;
}

inline std::optional<std::size_t> round_tentative(const FractionalSolution& xtilde, std::size_t j, CounterRng& rng) {
  return round_tentative(std::span<const double>(xtilde.values.at(j)), rng);
}

/// True iff adding `option` to the current consumption keeps every
/// resource within its capacity (tolerance 1e-9).
inline bool feasibility_test(std::span<const double> consumption, const Option& option,
                             std::span<const double> capacities) {
  for (const Entry& e : option.consumption)
    if (consumption[e.resource] + e.amount > capacities[e.resource] + kCapacityTol) return false;
  return true;
}

/// Length of the observation phase for sampling fraction p.
inline std::size_t sample_length(double p, std::size_t n) {
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("sampling fraction must lie in [0, 1)");
  return static_cast<std::size_t>(std::floor(p * static_cast<double>(n)));
}

/// Sampling fraction 1 - (1/(2e)) (1/(2d))^(1/(B-1)) for known B >= 2 and d.
inline double default_sampling_p(double B, std::size_t d) {
  if (!(B >= 2.0)) throw DomainError("default_sampling_p requires B >= 2");
  if (d < 1) throw DomainError("default_sampling_p requires d >= 1");
  return 1.0 - std::pow(1.0 / (2.0 * static_cast<double>(d)), 1.0 / (B - 1.0)) / (2.0 * std::numbers::e);
}

inline void require_permutation(std::span<const std::size_t> perm, std::size_t n) {
  if (perm.size() != n) throw std::invalid_argument("arrival order must list every request exactly once");
  std::vector<bool> seen(n, false);
  for (std::size_t j : perm) {
    if (j >= n || seen[j]) throw std::invalid_argument("arrival order must be a permutation of the requests");
    seen[j] = true;
  }
}

inline double ratio_of(double alg, double opt) { return opt > 0.0 ? alg / opt : 1.0; }

namespace detail {

/// Shared round loop of the scaled-LP rounding algorithm with an optional
/// observation phase. `inst` must already be row-normalized.
inline RunOutcome run_scaled_rounding(const PackingInstance& inst, std::span<const std::size_t> perm,
                                      CounterRng& rng, std::size_t sample_len, const PrimalOptions& options) {
  const std::size_t n = inst.request_count();
  const std::size_t m = inst.resource_count();
  require_permutation(perm, n);

  RunOutcome out;
  out.allocation.assign(n, std::nullopt);
  out.rounds.reserve(n);
  std::vector<double> consumption(m, 0.0);
  std::vector<double> tentative_load(m, 0.0);
  IncrementalPackingSolver solver(inst);

  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t j = perm[pos];
    solver.add_request(j);
    RoundLog log;
    log.round = pos + 1;
    log.request = j;
    log.tentative_load_before = tentative_load;
    if (pos < sample_len) {
      log.sampled = true;
    } else {
      const double f = options.unscaled_capacities ? 1.0 : static_cast<double>(pos + 1) / static_cast<double>(n);
      const auto solution = solver.solve(f);
      log.scaled_lp_objective = solution.primal.objective;
      log.tentative_option = round_tentative(solution.primal, j, rng);
      if (log.tentative_option) {
        const Option& opt = inst.requests[j].options[*log.tentative_option];
        for (const Entry& e : opt.consumption) tentative_load[e.resource] += e.amount;
        if (feasibility_test(consumption, opt, inst.capacities)) {
          log.accepted = true;
          for (const Entry& e : opt.consumption) consumption[e.resource] += e.amount;
          out.allocation[j] = log.tentative_option;
          out.alg_value += opt.profit;
        }
      }
    }
    log.consumption_after = consumption;
    out.rounds.push_back(std::move(log));
  }
  out.opt_value = options.known_opt ? *options.known_opt : (n == 0 ? 0.0 : solve_packing(inst, 1.0).primal.objective);
  out.ratio = ratio_of(out.alg_value, out.opt_value);
  return out;
}

}  // namespace detail

/// Online packing by scaled-LP rounding: in round l solve P(l/n, S), round the
/// arriving request's row and keep the tentative option iff it fits the
/// unscaled capacities. The instance is row-normalized on entry.
inline RunOutcome run_primal(const PackingInstance& instance, std::span<const std::size_t> permutation,
                             CounterRng& rng, const PrimalOptions& options = {}) {
  const auto inst = normalize_rows(instance);
  return detail::run_scaled_rounding(inst, permutation, rng, 0, options);
}

/// As run_primal, but the first floor(p n) rounds only reveal their request.
inline RunOutcome run_primal_sampled(const PackingInstance& instance, double p,
                                     std::span<const std::size_t> permutation, CounterRng& rng,
                                     const PrimalOptions& options = {}) {
  const auto inst = normalize_rows(instance);
  return detail::run_scaled_rounding(inst, permutation, rng, sample_length(p, inst.request_count()), options);
}

}  // namespace rolp
