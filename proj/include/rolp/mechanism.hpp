#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rolp/errors.hpp"
#include "rolp/format.hpp"
#include "rolp/instance.hpp"
#include "rolp/online_primal.hpp"
#include "rolp/rng.hpp"
#include "rolp/simplex.hpp"

namespace rolp {

/// True instance plus the profits each bidder reports (reports[j][k]).
struct BidderScenario {
  PackingInstance true_instance;
  std::vector<std::vector<double>> reports;

  /// Scenario in which every bidder reports its true profits.
  static BidderScenario truthful(PackingInstance inst) {
    BidderScenario s;
    s.reports.reserve(inst.request_count());
    for (const auto& req : inst.requests) {
      std::vector<double> row;
      for (const auto& opt : req.options) row.push_back(opt.profit);
      s.reports.push_back(std::move(row));
    }
    s.true_instance = std::move(inst);
    return s;
  }
};

/// How a round treats options that no longer fit.
enum class AllocationRule {
  /// Remove infeasible options before solving, allocate unconditionally.
  kPruneInfeasible,
  /// No pruning; keep the tentative option only if it fits (the plain
  /// rounding algorithm, with VCG payments charged the same way).
  kFeasibilityTest,
};

struct MechanismOptions {
  AllocationRule rule = AllocationRule::kPruneInfeasible;
  /// Observation-phase fraction; 0 disables sampling.
  double sampling_p = 0.0;
  std::optional<double> known_opt;
};

struct MechanismOutcome {
  std::vector<RoundLog> rounds;
  std::vector<std::optional<std::size_t>> allocation;
  /// Charged against reported profits.
  std::vector<double> payments;
  /// True value of the allocated option minus the payment.
  std::vector<double> utilities;
  double welfare = 0.0;
  double opt_value = 0.0;
  double ratio = 1.0;
};

/// Sampling fraction for the truthful variant; uses m in place of d.
inline double default_mechanism_sampling_p(double B, std::size_t m) { return default_sampling_p(B, m); }

/// Options of request j that still fit next to the current consumption.
inline std::vector<std::size_t> prune_infeasible_options(const PackingInstance& inst,
                                                         std::span<const double> consumption, std::size_t j) {
  std::vector<std::size_t> surviving;
  const auto& options = inst.requests.at(j).options;
  for (std::size_t k = 0; k < options.size(); ++k)
    if (feasibility_test(consumption, options[k], inst.capacities)) surviving.push_back(k);
  return surviving;
}

/// VCG payment of bidder j: the optimum of P(f, S \ {j}) minus the welfare
/// the other bidders receive in xtilde, both measured in reported profits.
inline double vcg_payment(const PackingInstance& reported, double f, std::span<const std::size_t> subset, std::size_t j,
                          const FractionalSolution& xtilde, const OptionMask* excluded = nullptr) {
  std::vector<std::size_t> others;
  for (std::size_t q : subset)
    if (q != j) others.push_back(q);
  if (others.empty()) return 0.0;
  SolverOptions opts;
  opts.excluded = excluded;
  const double without_j = solve_packing(reported, f, others, opts).primal.objective;
  double others_welfare = 0.0;
  for (std::size_t q : others) {
    const auto& options = reported.requests[q].options;
    for (std::size_t k = 0; k < options.size(); ++k) others_welfare += options[k].profit * xtilde.values[q][k];
  }
  const double payment = without_j - others_welfare;
  const double tol = 1e-7 * std::max(1.0, without_j);
  if (payment < -tol)
    throw std::logic_error("negative VCG payment " + std::to_string(payment) + ": LP solution is not optimal");
  return std::max(0.0, payment);
}

namespace detail {

inline PackingInstance with_reports(const PackingInstance& inst, const std::vector<std::vector<double>>& reports) {
  if (reports.size() != inst.request_count()) throw std::invalid_argument("reports do not match the bidders");
  PackingInstance out = inst;
  for (std::size_t j = 0; j < reports.size(); ++j) {
    if (reports[j].size() != out.requests[j].options.size())
      throw std::invalid_argument("report of bidder " + std::to_string(j) + " has the wrong number of options");
    for (std::size_t k = 0; k < reports[j].size(); ++k) {
      if (!(reports[j][k] >= 0.0)) throw std::invalid_argument("reported profits must be non-negative");
      out.requests[j].options[k].profit = reports[j][k];
    }
  }
  return out;
}

/// State shared by the Monte-Carlo run and the exact branch enumeration.
struct MechanismState {
  std::vector<double> consumption;
  OptionMask excluded;
};

/// Everything round `pos` computes before the random draw.
struct MechanismRound {
  std::vector<std::size_t> seen;
  double f = 1.0;
  FractionalSolution xtilde;
  double payment = 0.0;
};

inline MechanismRound mechanism_round(const PackingInstance& reported, std::span<const std::size_t> perm,
                                      std::size_t pos, MechanismState& state, AllocationRule rule) {
  const std::size_t n = reported.request_count();
  const std::size_t j = perm[pos];
  MechanismRound out;
  out.seen.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(pos + 1));
  out.f = static_cast<double>(pos + 1) / static_cast<double>(n);
  if (rule == AllocationRule::kPruneInfeasible) {
    const auto& options = reported.requests[j].options;
    for (std::size_t k = 0; k < options.size(); ++k)
      if (!feasibility_test(state.consumption, options[k], reported.capacities)) state.excluded[j][k] = true;
  }
  SolverOptions opts;
  opts.excluded = &state.excluded;
  out.xtilde = solve_packing(reported, out.f, out.seen, opts).primal;
  out.payment = vcg_payment(reported, out.f, out.seen, j, out.xtilde, &state.excluded);
  return out;
}

/// Options reported at zero profit never enter the LP.
inline MechanismState initial_state(const PackingInstance& reported) {
  MechanismState state;
  state.consumption.assign(reported.resource_count(), 0.0);
  state.excluded.resize(reported.request_count());
  for (std::size_t j = 0; j < reported.request_count(); ++j) {
    const auto& options = reported.requests[j].options;
    state.excluded[j].resize(options.size());
    for (std::size_t k = 0; k < options.size(); ++k) state.excluded[j][k] = options[k].profit <= 0.0;
  }
  return state;
}

/// Applies option k of request j under the allocation rule; returns whether
/// it was allocated.
inline bool apply_allocation(const PackingInstance& inst, std::size_t j, std::size_t k, MechanismState& state,
                             AllocationRule rule) {
  const Option& opt = inst.requests[j].options[k];
  if (rule == AllocationRule::kFeasibilityTest && !feasibility_test(state.consumption, opt, inst.capacities))
    return false;
  for (const Entry& e : opt.consumption) state.consumption[e.resource] += e.amount;
  return true;
}

}  // namespace detail

/// Truthful online mechanism: each round prunes the arriving bidder's
/// infeasible options, solves the scaled LP on the reports, charges the VCG
/// payment, rounds and allocates without a feasibility test.
inline MechanismOutcome run_mechanism(const BidderScenario& scenario, std::span<const std::size_t> permutation,
                                      CounterRng& rng, const MechanismOptions& options = {}) {
  const auto truth = normalize_rows(scenario.true_instance);
  const auto reported = detail::with_reports(truth, scenario.reports);
  const std::size_t n = truth.request_count();
  require_permutation(permutation, n);
  const std::size_t sample_len = sample_length(options.sampling_p, n);

  MechanismOutcome out;
  out.allocation.assign(n, std::nullopt);
  out.payments.assign(n, 0.0);
  out.utilities.assign(n, 0.0);
  auto state = detail::initial_state(reported);
  std::vector<double> tentative_load(truth.resource_count(), 0.0);

  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t j = permutation[pos];
    RoundLog log;
    log.round = pos + 1;
    log.request = j;
    log.tentative_load_before = tentative_load;
    if (pos < sample_len) {
      log.sampled = true;
    } else {
      const auto round = detail::mechanism_round(reported, permutation, pos, state, options.rule);
      log.scaled_lp_objective = round.xtilde.objective;
      log.payment = round.payment;
      out.payments[j] = round.payment;
      log.tentative_option = round_tentative(round.xtilde, j, rng);
      if (log.tentative_option) {
        const std::size_t k = *log.tentative_option;
        for (const Entry& e : truth.requests[j].options[k].consumption) tentative_load[e.resource] += e.amount;
        if (detail::apply_allocation(truth, j, k, state, options.rule)) {
          log.accepted = true;
          out.allocation[j] = k;
          out.welfare += truth.requests[j].options[k].profit;
        }
      }
      out.utilities[j] = (out.allocation[j] ? truth.requests[j].options[*out.allocation[j]].profit : 0.0) -
                         out.payments[j];
    }
    log.consumption_after = state.consumption;
    out.rounds.push_back(std::move(log));
  }
  out.opt_value = options.known_opt ? *options.known_opt : (n == 0 ? 0.0 : solve_packing(truth, 1.0).primal.objective);
  out.ratio = ratio_of(out.welfare, out.opt_value);
  return out;
}

namespace detail {

inline double expected_utility_from(const PackingInstance& truth, const PackingInstance& reported,
                                    std::span<const std::size_t> perm, std::size_t pos, std::size_t bidder,
                                    std::size_t sample_len, MechanismState& state, AllocationRule rule) {
  if (pos < sample_len) return expected_utility_from(truth, reported, perm, pos + 1, bidder, sample_len, state, rule);
  const std::size_t j = perm[pos];
  const auto saved_excluded = state.excluded[j];
  const auto round = mechanism_round(reported, perm, pos, state, rule);
  const auto& row = round.xtilde.values[j];
  double expected = 0.0;
  if (j == bidder) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] <= 0.0) continue;
      const Option& opt = truth.requests[j].options[k];
      const bool fits = rule == AllocationRule::kPruneInfeasible ||
                        feasibility_test(state.consumption, opt, truth.capacities);
      if (fits) expected += row[k] * opt.profit;
    }
    state.excluded[j] = saved_excluded;
    return expected - round.payment;
  }
  double none = 1.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (row[k] <= 0.0) continue;
    none -= row[k];
    const auto saved = state.consumption;
    apply_allocation(truth, j, k, state, rule);
    expected += row[k] * expected_utility_from(truth, reported, perm, pos + 1, bidder, sample_len, state, rule);
    state.consumption = saved;
  }
  if (none > 1e-12) expected += none * expected_utility_from(truth, reported, perm, pos + 1, bidder, sample_len, state, rule);
  state.excluded[j] = saved_excluded;
  return expected;
}

}  // namespace detail

inline constexpr std::size_t kMaxExactBidders = 4;
inline constexpr std::size_t kMaxExactOptions = 3;

/// Exact expected utility of `bidder` under a fixed arrival order, by
/// enumerating every rounding branch with its probability.
inline double expected_utility_exact(const BidderScenario& scenario, std::size_t bidder,
                                     std::span<const std::size_t> permutation, const MechanismOptions& options = {}) {
  const auto truth = normalize_rows(scenario.true_instance);
  const std::size_t n = truth.request_count();
  if (n > kMaxExactBidders) throw SizeLimitError("exact utility enumeration supports at most 4 bidders");
  for (const auto& req : truth.requests)
    if (req.options.size() > kMaxExactOptions)
      throw SizeLimitError("exact utility enumeration supports at most 3 options per bidder");
  if (bidder >= n) throw std::invalid_argument("bidder index out of range");
  require_permutation(permutation, n);
  const auto reported = detail::with_reports(truth, scenario.reports);
  auto state = detail::initial_state(reported);
  const std::size_t sample_len = sample_length(options.sampling_p, n);
  const auto bidder_pos = static_cast<std::size_t>(
      std::find(permutation.begin(), permutation.end(), bidder) - permutation.begin());
  if (bidder_pos < sample_len) return 0.0;
  return detail::expected_utility_from(truth, reported, permutation, 0, bidder, sample_len, state, options.rule);
}

struct AuditViolation {
  std::size_t bidder = 0;
  std::vector<std::size_t> permutation;
  std::string deviation;
  std::vector<double> report;
  double truthful_utility = 0.0;
  double deviating_utility = 0.0;
};

struct AuditReport {
  std::size_t checks = 0;
  std::vector<AuditViolation> violations;

  bool passed() const noexcept { return violations.empty(); }
};

/// Checks, for every bidder, every fixed arrival order and every deviation
/// of that bidder's report (others truthful), that truth-telling is at least
/// as good in expectation. Deviations: each multiplier of the whole report
/// vector plus zeroing any single option.
inline AuditReport truthfulness_audit(const PackingInstance& true_instance,
                                      std::span<const double> multipliers = std::vector<double>{0.0, 0.5, 2.0},
                                      const MechanismOptions& options = {}, double tol = 1e-7) {
  const std::size_t n = true_instance.request_count();
  if (n > kMaxExactBidders) throw SizeLimitError("truthfulness audit supports at most 4 bidders");
  const auto truthful = BidderScenario::truthful(true_instance);

  AuditReport report;
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < n; ++j) perm[j] = j;
  do {
    for (std::size_t bidder = 0; bidder < n; ++bidder) {
      const double honest = expected_utility_exact(truthful, bidder, perm, options);
      const auto& truth_row = truthful.reports[bidder];
      std::vector<std::pair<std::string, std::vector<double>>> deviations;
      for (double mult : multipliers) {
        auto row = truth_row;
        for (double& v : row) v *= mult;
        deviations.emplace_back("scale x" + format_real(mult), std::move(row));
      }
      if (truth_row.size() > 1) {
        for (std::size_t k = 0; k < truth_row.size(); ++k) {
          auto row = truth_row;
          row[k] = 0.0;
          deviations.emplace_back("zero option " + std::to_string(k), std::move(row));
        }
      }
      for (auto& [label, row] : deviations) {
        auto scenario = truthful;
        scenario.reports[bidder] = row;
        const double deviating = expected_utility_exact(scenario, bidder, perm, options);
        ++report.checks;
        if (deviating > honest + tol)
          report.violations.push_back({bidder, perm, label, row, honest, deviating});
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return report;
}

inline nlohmann::json to_json(const AuditReport& report) {
  nlohmann::json violations = nlohmann::json::array();
  for (const auto& v : report.violations)
    violations.push_back({{"bidder", v.bidder},
                          {"permutation", v.permutation},
                          {"deviation", v.deviation},
                          {"report", v.report},
                          {"truthful_utility", v.truthful_utility},
                          {"deviating_utility", v.deviating_utility}});
  return {{"passed", report.passed()}, {"checks", report.checks}, {"violations", violations}};
}

}  // namespace rolp
