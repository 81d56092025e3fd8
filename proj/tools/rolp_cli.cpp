#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rolp/rolp.hpp"

namespace {

using nlohmann::json;

struct Flags {
  std::string instance;
  std::string algorithm = "primal";
  std::size_t trials = 1000;
  std::optional<std::uint64_t> seed;
  std::optional<double> p;
  std::optional<double> lambda;
  std::string out;
  unsigned workers = 1;
  std::size_t m = 8;
  std::size_t n = 100;
  std::size_t K = 2;
  double B = 10.0;
  std::size_t d = 2;
  std::string family;
  std::string axis = "B";
  std::vector<double> values;
};

std::uint64_t resolve_seed(const Flags& f) {
  if (f.seed) return *f.seed;
  if (const char* env = std::getenv("ROLP_SEED"); env && *env) {
    std::uint64_t value = 0;
    std::istringstream in(env);
    if (!(in >> value) || !in.eof()) throw rolp::DomainError(std::string("ROLP_SEED is not an integer: ") + env);
    return value;
  }
  return 1;
}

rolp::RandomInstanceParams random_params(const Flags& f) {
  return {f.m, f.n, f.K, f.B, f.d, resolve_seed(f)};
}

rolp::GapInstanceParams gap_params(const Flags& f, rolp::GapFamily family) {
  rolp::GapInstanceParams gp{f.m, f.n, family, resolve_seed(f)};
  if (family == rolp::GapFamily::kKnapsack) gp.m = 1;
  return gp;
}

rolp::SimulationOptions sim_options(const Flags& f) {
  return {f.trials, resolve_seed(f), f.p, f.lambda, f.workers};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rolp::Error("cannot open '" + path + "' for writing");
  out << text;
}

void write_stats(const std::vector<rolp::ExperimentStats>& table, const std::string& path) {
  if (path.empty()) {
    rolp::emit_csv(table, std::cout);
    return;
  }
  rolp::emit_csv(table, path);
}

json round_json(const rolp::RoundLog& r) {
  json j = {{"round", r.round},
            {"request", r.request},
            {"sampled", r.sampled},
            {"scaled_lp_objective", r.scaled_lp_objective},
            {"tentative_option", r.tentative_option ? json(*r.tentative_option) : json(nullptr)},
            {"accepted", r.accepted},
            {"consumption_after", r.consumption_after},
            {"tentative_load_before", r.tentative_load_before}};
  return j;
}

json allocation_json(const std::vector<std::optional<std::size_t>>& allocation) {
  json a = json::array();
  for (const auto& k : allocation) a.push_back(k ? json(*k) : json(nullptr));
  return a;
}

int cmd_generate(const Flags& f) {
  if (!f.family.empty()) {
    const auto gap = rolp::generate_gap(gap_params(f, rolp::parse_gap_family(f.family)));
    write_text(f.out, rolp::to_json(gap).dump(2) + "\n");
  } else {
    write_text(f.out, rolp::to_json(rolp::generate_random(random_params(f))).dump(2) + "\n");
  }
  return 0;
}

int cmd_offline(const Flags& f) {
  const auto doc = rolp::load_json_document(f.instance);
  const auto inst = rolp::is_gap_document(doc) ? rolp::gap_to_packing(rolp::gap_from_json(doc, f.instance))
                                               : rolp::packing_from_json(doc, f.instance);
  rolp::require_valid(inst);
  const auto solution = rolp::solve_packing(inst, 1.0);
  std::vector<std::size_t> all(inst.request_count());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
  const double gap = rolp::verify_duality(inst, 1.0, all, solution.primal, solution.dual);
  std::cout << "opt = " << rolp::format_real(solution.primal.objective) << '\n'
            << "dual = " << rolp::format_real(solution.dual.dual_objective) << '\n'
            << "duality_gap = " << rolp::format_real(gap) << '\n'
            << "pivots = " << solution.pivots << '\n';
  return 0;
}

int cmd_run(const Flags& f) {
  const auto algorithm = rolp::parse_algorithm(f.algorithm);
  const auto doc = rolp::load_json_document(f.instance);
  const auto stream = rolp::trial_stream(resolve_seed(f), 0);
  auto perm_rng = rolp::sub_stream(stream, rolp::StreamRole::kPermutation);
  auto rng = rolp::sub_stream(stream, rolp::StreamRole::kRounding);
  json result;

  if (algorithm == rolp::Algorithm::kGap) {
    if (!rolp::is_gap_document(doc)) throw rolp::DomainError("--algorithm gap requires a GAP instance");
    const auto gap = rolp::gap_from_json(doc, f.instance);
    rolp::require_valid(gap);
    auto coin = rolp::sub_stream(stream, rolp::StreamRole::kCoin);
    const auto perm = rolp::sample_permutation(gap.item_count(), perm_rng);
    const auto outcome = rolp::run_gap(gap, f.lambda.value_or(rolp::default_gap_lambda()),
                                       f.p.value_or(rolp::kDefaultGapSamplingP), perm, coin, rng);
    result = {{"instance", gap.name},
              {"algorithm", "gap"},
              {"permutation", perm},
              {"branch", outcome.branch == rolp::GapBranch::kHeavy ? "heavy" : "light"},
              {"assignment", allocation_json(outcome.assignment)},
              {"alg_value", outcome.alg_value},
              {"opt_value", outcome.opt_value},
              {"opt_heavy", outcome.opt_heavy},
              {"opt_light", outcome.opt_light},
              {"ratio", outcome.ratio}};
  } else {
    if (rolp::is_gap_document(doc)) throw rolp::DomainError("a GAP instance requires --algorithm gap");
    const auto inst = rolp::packing_from_json(doc, f.instance);
    rolp::require_valid(inst);
    const auto perm = rolp::sample_permutation(inst.request_count(), perm_rng);
    result = {{"instance", inst.name}, {"algorithm", rolp::to_string(algorithm)}, {"permutation", perm}};
    json rounds = json::array();
    if (algorithm == rolp::Algorithm::kVcg) {
      rolp::MechanismOptions mo;
      mo.sampling_p = f.p.value_or(0.0);
      const auto outcome = rolp::run_mechanism(rolp::BidderScenario::truthful(inst), perm, rng, mo);
      for (const auto& r : outcome.rounds) {
        auto j = round_json(r);
        j["payment"] = r.payment;
        rounds.push_back(std::move(j));
      }
      result["rounds"] = rounds;
      result["allocation"] = allocation_json(outcome.allocation);
      result["payments"] = outcome.payments;
      result["utilities"] = outcome.utilities;
      result["alg_value"] = outcome.welfare;
      result["opt_value"] = outcome.opt_value;
      result["ratio"] = outcome.ratio;
    } else {
      const auto outcome =
          algorithm == rolp::Algorithm::kPrimal
              ? rolp::run_primal(inst, perm, rng)
              : rolp::run_primal_sampled(
                    inst,
                    f.p ? *f.p
                        : rolp::default_sampling_p(rolp::capacity_ratio(rolp::normalize_rows(inst)),
                                                   rolp::column_sparsity(inst)),
                    perm, rng);
      for (const auto& r : outcome.rounds) rounds.push_back(round_json(r));
      result["rounds"] = rounds;
      result["allocation"] = allocation_json(outcome.allocation);
      result["alg_value"] = outcome.alg_value;
      result["opt_value"] = outcome.opt_value;
      result["ratio"] = outcome.ratio;
    }
  }
  write_text(f.out, result.dump(2) + "\n");
  return 0;
}

int cmd_simulate(const Flags& f, bool generator_given) {
  rolp::ExperimentConfig config;
  config.algorithm = rolp::parse_algorithm(f.algorithm);
  if (!f.instance.empty()) {
    config.source = f.instance;
  } else if (config.algorithm == rolp::Algorithm::kGap || !f.family.empty()) {
    config.source = gap_params(f, f.family.empty() ? rolp::GapFamily::kGeneral : rolp::parse_gap_family(f.family));
  } else {
    if (!generator_given) throw rolp::DomainError("simulate needs --instance or generator flags");
    config.source = random_params(f);
  }
  config.trials = f.trials;
  config.seed = resolve_seed(f);
  config.p = f.p;
  config.lambda = f.lambda;
  config.workers = f.workers;
  write_stats({rolp::simulate(config)}, f.out);
  return 0;
}

int cmd_sweep(const Flags& f) {
  const auto algorithm = rolp::parse_algorithm(f.algorithm);
  if (algorithm == rolp::Algorithm::kGap) throw rolp::DomainError("sweep runs packing algorithms only");
  const auto table = rolp::sweep(random_params(f), algorithm, rolp::parse_sweep_axis(f.axis), f.values, sim_options(f));
  write_stats(table, f.out);
  return 0;
}

int cmd_mechanism(const Flags& f) {
  const auto seed = resolve_seed(f);
  rolp::PackingInstance inst =
      f.instance.empty() ? rolp::generate_random(random_params(f)) : rolp::load_json(f.instance);
  const auto stats = rolp::simulate(inst, rolp::Algorithm::kVcg, sim_options(f));

  std::vector<rolp::PackingInstance> scenarios;
  if (inst.request_count() <= rolp::kMaxExactBidders) {
    scenarios.push_back(inst);
  } else {
    for (std::uint64_t s = 0; s < 5; ++s)
      scenarios.push_back(rolp::generate_random({2, 3, 2, 1.0, 1, seed + s}));
  }
  json audits = json::array();
  bool passed = true;
  rolp::MechanismOptions mo;
  mo.sampling_p = f.p.value_or(0.0);
  for (const auto& scenario : scenarios) {
    const auto report = rolp::truthfulness_audit(scenario, std::vector<double>{0.0, 0.5, 2.0}, mo);
    passed = passed && report.passed();
    auto j = rolp::to_json(report);
    j["instance"] = scenario.name;
    audits.push_back(std::move(j));
  }
  const json audit = {{"passed", passed}, {"scenarios", audits}};

  write_stats({stats}, f.out);
  if (f.out.empty()) {
    std::cout << audit.dump(2) << '\n';
  } else {
    const auto slash = f.out.find_last_of('/');
    const auto dot = f.out.find_last_of('.');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    write_text((has_ext ? f.out.substr(0, dot) : f.out) + ".audit.json", audit.dump(2) + "\n");
  }
  return 0;
}

int cmd_gap(const Flags& f) {
  const auto options = sim_options(f);
  const auto gap = f.instance.empty()
                       ? rolp::generate_gap(gap_params(
                             f, f.family.empty() ? rolp::GapFamily::kGeneral : rolp::parse_gap_family(f.family)))
                       : rolp::load_gap_json(f.instance);
  write_stats({rolp::simulate(gap, options)}, f.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online packing in random order: simulators, LP solver and experiment harness", "rolp"};
  app.require_subcommand(1);
  Flags f;

  auto add_instance = [&](CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--instance", f.instance, "Instance JSON file");
    if (required) opt->required();
  };
  auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", f.seed, "Master seed (default: $ROLP_SEED or 1)"); };
  auto add_generator = [&](CLI::App* cmd) {
    cmd->add_option("--m", f.m, "Resources (bins for GAP)")->check(CLI::PositiveNumber);
    cmd->add_option("--n", f.n, "Requests (items for GAP)")->check(CLI::PositiveNumber);
    cmd->add_option("--K", f.K, "Options per request")->check(CLI::PositiveNumber);
    cmd->add_option("--B", f.B, "Capacity ratio");
    cmd->add_option("--d", f.d, "Resources per option")->check(CLI::PositiveNumber);
  };
  auto add_run_params = [&](CLI::App* cmd) {
    cmd->add_option("--algorithm", f.algorithm, "primal | primal-sampled | vcg | gap");
    cmd->add_option("--p", f.p, "Sampling fraction");
    cmd->add_option("--lambda", f.lambda, "GAP coin probability");
  };
  auto add_trials = [&](CLI::App* cmd) {
    cmd->add_option("--trials", f.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
    cmd->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* generate = app.add_subcommand("generate", "Write a random instance as JSON");
  add_generator(generate);
  add_seed(generate);
  generate->add_option("--family", f.family, "GAP family: knapsack | matching | adwords | general");
  generate->add_option("--out", f.out, "Output file (default: stdout)");

  auto* offline = app.add_subcommand("offline", "Solve the fractional offline LP");
  add_instance(offline, true);

  auto* run = app.add_subcommand("run", "Run one trial and print its round log as JSON");
  add_instance(run, true);
  add_run_params(run);
  add_seed(run);
  run->add_option("--out", f.out, "Output file (default: stdout)");

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo estimate of the competitive ratio");
  add_instance(simulate, false);
  add_run_params(simulate);
  add_generator(simulate);
  simulate->add_option("--family", f.family, "GAP family for generated instances");
  add_trials(simulate);
  add_seed(simulate);
  simulate->add_option("--out", f.out, "CSV file; monitors go to <stem>.monitors.csv");

  auto* sweep = app.add_subcommand("sweep", "Simulate over a range of one generator parameter");
  add_run_params(sweep);
  add_generator(sweep);
  add_trials(sweep);
  add_seed(sweep);
  sweep->add_option("--axis", f.axis, "B | d | n")->check(CLI::IsMember({"B", "d", "n"}));
  sweep->add_option("--values", f.values, "Axis values")->delimiter(',')->required();
  sweep->add_option("--out", f.out, "CSV file (default: stdout)");

  auto* mechanism = app.add_subcommand("mechanism", "Simulate the truthful mechanism and audit truthfulness");
  add_instance(mechanism, false);
  add_generator(mechanism);
  add_trials(mechanism);
  add_seed(mechanism);
  mechanism->add_option("--p", f.p, "Sampling fraction");
  mechanism->add_option("--out", f.out, "CSV file; audit goes to <stem>.audit.json");

  auto* gap = app.add_subcommand("gap", "Simulate the randomized GAP algorithm");
  add_instance(gap, false);
  gap->add_option("--family", f.family, "knapsack | matching | adwords | general");
  gap->add_option("--m", f.m, "Bins")->check(CLI::PositiveNumber);
  gap->add_option("--n", f.n, "Items")->check(CLI::PositiveNumber);
  gap->add_option("--p", f.p, "Light-branch sampling fraction");
  gap->add_option("--lambda", f.lambda, "Heavy-branch probability");
  add_trials(gap);
  add_seed(gap);
  gap->add_option("--out", f.out, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*generate) return cmd_generate(f);
    if (*offline) return cmd_offline(f);
    if (*run) return cmd_run(f);
    if (*simulate) {
      bool generator_given = false;
      for (const char* name : {"--m", "--n", "--K", "--B", "--d"})
        generator_given = generator_given || simulate->count(name) > 0;
      return cmd_simulate(f, generator_given);
    }
    if (*sweep) return cmd_sweep(f);
    if (*mechanism) return cmd_mechanism(f);
    if (*gap) return cmd_gap(f);
  } catch (const std::exception& e) {
    std::cerr << "rolp: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
