#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "rolp/errors.hpp"
#include "rolp/format.hpp"
#include "rolp/gap_online.hpp"
#include "rolp/generators.hpp"
#include "rolp/instance.hpp"
#include "rolp/instance_io.hpp"
#include "rolp/mechanism.hpp"
#include "rolp/online_primal.hpp"
#include "rolp/rng.hpp"
#include "rolp/simplex.hpp"

namespace rolp {

enum class Algorithm { kPrimal, kPrimalSampled, kVcg, kGap };

inline std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::kPrimal: return "primal";
    case Algorithm::kPrimalSampled: return "primal-sampled";
    case Algorithm::kVcg: return "vcg";
    case Algorithm::kGap: return "gap";
  }
  return "primal";
}

inline Algorithm parse_algorithm(std::string_view name) {
  if (name == "primal") return Algorithm::kPrimal;
  if (name == "primal-sampled") return Algorithm::kPrimalSampled;
  if (name == "vcg") return Algorithm::kVcg;
  if (name == "gap") return Algorithm::kGap;
  throw DomainError("unknown algorithm '" + std::string(name) + "'");
}

/// Where the instance of an experiment comes from.
using InstanceSource = std::variant<std::string, RandomInstanceParams, GapInstanceParams>;

struct ExperimentConfig {
  InstanceSource source = RandomInstanceParams{};
  Algorithm algorithm = Algorithm::kPrimal;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  /// Sampling fraction: primal-sampled (default from B and d), vcg (default 0),
  /// gap light branch (default 2/3).
  std::optional<double> p;
  /// GAP heads probability (default 1/(1 + 16/(3e))).
  std::optional<double> lambda;
  unsigned workers = 1;
  std::string out;
};

/// Monte-Carlo aggregate of one experiment.
struct ExperimentStats {
  std::string instance;
  Algorithm algorithm = Algorithm::kPrimal;
  double B = 0.0;
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double opt = 0.0;
  double mean_alg = 0.0;
  double mean_ratio = 0.0;
  double ratio_stderr = 0.0;
  std::size_t resources = 0;
  /// exhaustion[l * resources + i]: fraction of trials in which the earlier
  /// tentative allocations exceed b_i - 1 on resource i before round l + 1.
  std::vector<double> exhaustion;
  /// Mean scaled-LP objective per round (0 where no LP is solved).
  std::vector<double> scaled_lp_mean;
};

namespace detail {

struct TrialRecord {
  double alg = 0.0;
  std::vector<std::uint8_t> exhausted;
  std::vector<double> lp_objective;
};

/// Runs body(t) for every trial index on `workers` threads; each call writes
/// only its own slot, so the result does not depend on scheduling.
template <typename Body>
void for_each_trial(std::size_t trials, unsigned workers, Body&& body) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, trials))));
  if (workers == 1) {
    for (std::size_t t = 0; t < trials; ++t) body(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t t = next.fetch_add(1);
        if (t >= trials) return;
        try {
          body(t);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = trials;
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline TrialRecord record_rounds(double alg, const std::vector<RoundLog>& rounds, const std::vector<double>& capacities) {
  TrialRecord rec;
  rec.alg = alg;
  const std::size_t m = capacities.size();
  rec.exhausted.assign(rounds.size() * m, 0);
  rec.lp_objective.assign(rounds.size(), 0.0);
  for (std::size_t l = 0; l < rounds.size(); ++l) {
    rec.lp_objective[l] = rounds[l].scaled_lp_objective;
    for (std::size_t i = 0; i < m; ++i)
      rec.exhausted[l * m + i] = rounds[l].tentative_load_before[i] > capacities[i] - 1.0 ? 1 : 0;
  }
  return rec;
}

/// Order-fixed reduction of the per-trial records.
inline void aggregate(ExperimentStats& stats, const std::vector<TrialRecord>& records) {
  const double count = static_cast<double>(records.size());
  double sum = 0.0;
  for (const auto& r : records) sum += r.alg;
  stats.mean_alg = sum / count;
  double sq = 0.0;
  for (const auto& r : records) sq += (r.alg - stats.mean_alg) * (r.alg - stats.mean_alg);
  const double alg_stderr = records.size() > 1 ? std::sqrt(sq / (count - 1.0) / count) : 0.0;
  stats.mean_ratio = ratio_of(stats.mean_alg, stats.opt);
  stats.ratio_stderr = stats.opt > 0.0 ? alg_stderr / stats.opt : 0.0;

  const std::size_t rounds = records.empty() ? 0 : records.front().lp_objective.size();
  stats.scaled_lp_mean.assign(rounds, 0.0);
  stats.exhaustion.assign(records.empty() ? 0 : records.front().exhausted.size(), 0.0);
  for (const auto& r : records) {
    for (std::size_t l = 0; l < r.lp_objective.size(); ++l) stats.scaled_lp_mean[l] += r.lp_objective[l];
    for (std::size_t x = 0; x < r.exhausted.size(); ++x) stats.exhaustion[x] += r.exhausted[x];
  }
  for (double& v : stats.scaled_lp_mean) v /= count;
  for (double& v : stats.exhaustion) v /= count;
}

}  // namespace detail

struct SimulationOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  std::optional<double> p;
  std::optional<double> lambda;
  unsigned workers = 1;
};

/// Monte-Carlo estimate of E[ALG] / OPT for a packing algorithm. OPT is the
/// fractional optimum, solved once. Trial t draws its arrival order and its
/// rounding variates from its own stream, so results do not depend on the
/// worker count.
inline ExperimentStats simulate(const PackingInstance& instance, Algorithm algorithm, const SimulationOptions& options) {
  if (algorithm == Algorithm::kGap) throw DomainError("the gap algorithm needs a GAP instance");
  if (options.trials < 1) throw DomainError("trials must be at least 1");
  require_valid(instance);
  const auto inst = normalize_rows(instance);
  const std::size_t n = inst.request_count();

  ExperimentStats stats;
  stats.instance = inst.name;
  stats.algorithm = algorithm;
  stats.B = capacity_ratio(inst);
  stats.d = column_sparsity(inst);
  stats.n = n;
  stats.trials = options.trials;
  stats.seed = options.seed;
  stats.resources = inst.resource_count();
  if (n > 0) {
    const auto full = solve_packing(inst, 1.0);
    stats.opt = full.primal.objective;
  }

  double p = 0.0;
  if (algorithm == Algorithm::kPrimalSampled) p = options.p ? *options.p : default_sampling_p(stats.B, stats.d);
  if (algorithm == Algorithm::kVcg) p = options.p.value_or(0.0);
  sample_length(p, n);

  const auto scenario = algorithm == Algorithm::kVcg ? BidderScenario::truthful(inst) : BidderScenario{};
  std::vector<detail::TrialRecord> records(options.trials);
  detail::for_each_trial(options.trials, options.workers, [&](std::size_t t) {
    const CounterRng stream = trial_stream(options.seed, t);
    CounterRng perm_rng = sub_stream(stream, StreamRole::kPermutation);
    CounterRng rng = sub_stream(stream, StreamRole::kRounding);
    const auto perm = sample_permutation(n, perm_rng);
    if (algorithm == Algorithm::kVcg) {
      MechanismOptions mo;
      mo.sampling_p = p;
      mo.known_opt = stats.opt;
      const auto outcome = run_mechanism(scenario, perm, rng, mo);
      records[t] = detail::record_rounds(outcome.welfare, outcome.rounds, inst.capacities);
    } else {
      PrimalOptions po;
      po.known_opt = stats.opt;
      const auto outcome = detail::run_scaled_rounding(inst, perm, rng, sample_length(p, n), po);
      records[t] = detail::record_rounds(outcome.alg_value, outcome.rounds, inst.capacities);
    }
  });
  detail::aggregate(stats, records);
  return stats;
}

/// Monte-Carlo estimate of E[ALG] / OPT for the randomized GAP algorithm,
/// with OPT the fractional optimum of the GAP relaxation.
inline ExperimentStats simulate(const GapInstance& gap, const SimulationOptions& options) {
  if (options.trials < 1) throw DomainError("trials must be at least 1");
  require_valid(gap);
  const double lambda = options.lambda.value_or(default_gap_lambda());
  const double p = options.p.value_or(kDefaultGapSamplingP);
  const auto split = split_heavy_light(gap);
  const auto optima = compute_gap_optima(gap, split);
  const auto embedded = gap_to_packing(gap);

  ExperimentStats stats;
  stats.instance = gap.name;
  stats.algorithm = Algorithm::kGap;
  try {
    stats.B = capacity_ratio(embedded);
  } catch (const DomainError&) {
    stats.B = 0.0;
  }
  stats.d = column_sparsity(embedded);
  stats.n = gap.item_count();
  stats.trials = options.trials;
  stats.seed = options.seed;
  stats.opt = optima.opt;

  std::vector<detail::TrialRecord> records(options.trials);
  detail::for_each_trial(options.trials, options.workers, [&](std::size_t t) {
    const CounterRng stream = trial_stream(options.seed, t);
    CounterRng perm_rng = sub_stream(stream, StreamRole::kPermutation);
    CounterRng rng = sub_stream(stream, StreamRole::kRounding);
    CounterRng coin = sub_stream(stream, StreamRole::kCoin);
    const auto perm = sample_permutation(gap.item_count(), perm_rng);
    records[t].alg = run_gap(gap, split, optima, lambda, p, perm, coin, rng).alg_value;
  });
  detail::aggregate(stats, records);
  return stats;
}

/// Resolves the configured instance source and runs the experiment.
inline ExperimentStats simulate(const ExperimentConfig& config) {
  SimulationOptions options{config.trials, config.seed, config.p, config.lambda, config.workers};
  if (const auto* path = std::get_if<std::string>(&config.source)) {
    const auto doc = load_json_document(*path);
    if (is_gap_document(doc)) {
      if (config.algorithm != Algorithm::kGap) throw DomainError("a GAP instance requires --algorithm gap");
      return simulate(gap_from_json(doc, *path), options);
    }
    if (config.algorithm == Algorithm::kGap) throw DomainError("--algorithm gap requires a GAP instance");
    return simulate(packing_from_json(doc, *path), config.algorithm, options);
  }
  if (const auto* gp = std::get_if<GapInstanceParams>(&config.source)) {
    if (config.algorithm != Algorithm::kGap) throw DomainError("GAP generator parameters require --algorithm gap");
    return simulate(generate_gap(*gp), options);
  }
  return simulate(generate_random(std::get<RandomInstanceParams>(config.source)), config.algorithm, options);
}

enum class SweepAxis { kB, kD, kN };

inline SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "B") return SweepAxis::kB;
  if (name == "d") return SweepAxis::kD;
  if (name == "n") return SweepAxis::kN;
  throw DomainError("unknown sweep axis '" + std::string(name) + "' (expected B, d or n)");
}

/// One simulate() per axis value on freshly generated instances; all other
/// generator parameters stay fixed.
inline std::vector<ExperimentStats> sweep(const RandomInstanceParams& base, Algorithm algorithm, SweepAxis axis,
                                          std::span<const double> values, const SimulationOptions& options) {
  std::vector<ExperimentStats> table;
  table.reserve(values.size());
  for (double value : values) {
    RandomInstanceParams params = base;
    switch (axis) {
      case SweepAxis::kB: params.B = value; break;
      case SweepAxis::kD: params.d = static_cast<std::size_t>(value); break;
      case SweepAxis::kN: params.n = static_cast<std::size_t>(value); break;
    }
    table.push_back(simulate(generate_random(params), algorithm, options));
  }
  return table;
}

inline constexpr std::string_view kStatsCsvHeader =
    "instance,algorithm,B,d,n,trials,seed,opt,mean_alg,mean_ratio,ratio_stderr";
inline constexpr std::string_view kMonitorCsvHeader = "round,resource,exhaustion_freq,scaled_lp_mean";

namespace detail {

inline std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline void emit_csv(std::span<const ExperimentStats> table, std::ostream& out) {
  out << kStatsCsvHeader << '\n';
  for (const auto& s : table) {
    out << detail::csv_field(s.instance) << ',' << to_string(s.algorithm) << ',' << format_real(s.B) << ',' << s.d
        << ',' << s.n << ',' << s.trials << ',' << s.seed << ',' << format_real(s.opt) << ','
        << format_real(s.mean_alg) << ',' << format_real(s.mean_ratio) << ',' << format_real(s.ratio_stderr)
        << '\n';
  }
}

inline void emit_monitors(const ExperimentStats& stats, std::ostream& out) {
  out << kMonitorCsvHeader << '\n';
  for (std::size_t l = 0; l < stats.scaled_lp_mean.size(); ++l)
    for (std::size_t i = 0; i < stats.resources; ++i)
      out << l + 1 << ',' << i << ',' << format_real(stats.exhaustion[l * stats.resources + i]) << ','
          << format_real(stats.scaled_lp_mean[l]) << '\n';
}

/// "<dir>/<stem>.monitors.csv" next to a stats file.
inline std::string monitor_path(const std::string& csv_path) {
  const auto slash = csv_path.find_last_of('/');
  const auto dot = csv_path.find_last_of('.');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? csv_path.substr(0, dot) : csv_path) + ".monitors.csv";
}

/// Writes the stats table to `path` and, for a single record, its monitors
/// to the sibling monitor file.
inline void emit_csv(std::span<const ExperimentStats> table, const std::string& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    emit_csv(table, out);
    if (!out) throw Error("write to '" + path + "' failed");
  }
  if (table.size() == 1) {
    const auto mpath = monitor_path(path);
    std::ofstream out(mpath, std::ios::binary);
    if (!out) throw Error("cannot open '" + mpath + "' for writing");
    emit_monitors(table.front(), out);
  }
}

inline void emit_csv(const ExperimentStats& stats, const std::string& path) {
  emit_csv(std::span<const ExperimentStats>(&stats, 1), path);
}

}  // namespace rolp
