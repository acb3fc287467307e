// Command-line front end: score rollouts, compute advantages, run the toy
// trainer, compare strategies, and emit consolidated reports.
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "arpo/advantage.hpp"
#include "arpo/io.hpp"
#include "arpo/reward.hpp"
#include "arpo/sim.hpp"

namespace {

using namespace arpo;

struct CommonArgs {
  std::string input;
  std::string output;
  std::string config_path;
  std::string weights;
  long long step = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

AppConfig effective_config(const CommonArgs& args) {
  AppConfig cfg = args.config_path.empty() ? default_config()
                                           : load_config_file(args.config_path);
  if (args.seed_set) {
    cfg.train.seed = args.seed;
    cfg.env.seed = args.seed;
    cfg.pipeline.kmeans.seed = args.seed;
    cfg.train.pipeline = cfg.pipeline;
    cfg.seeds = {args.seed};
  }
  if (!args.weights.empty()) {
    double w[3];
    char extra = 0;
    if (std::sscanf(args.weights.c_str(), "%lf,%lf,%lf%c", &w[0], &w[1], &w[2], &extra) != 3) {
      throw ConfigError("--weights must be three comma-separated numbers");
    }
    cfg.weights = RewardWeights{w[0], w[1], w[2]};
  }
  return cfg;
}

int run_score(const CommonArgs& args) {
  const AppConfig cfg = effective_config(args);
  const std::vector<RolloutRecord> records = load_rollout_file(args.input);
  std::string out;
  for (const RolloutRecord& rec : records) {
    const RewardBreakdown b = score_rollout(rec.response, *rec.ground_truth,
                                            rec.kind, cfg.weights, cfg.reward);
    out += breakdown_to_jsonl_line(rec, b);
    out += '\n';
  }
  atomic_write_file(args.output, out);
  return 0;
}

int run_advantage(const CommonArgs& args) {
  const AppConfig cfg = effective_config(args);
  const std::vector<RolloutRecord> records = load_rollout_file(args.input);
  const std::vector<RolloutGroup> groups = group_rollouts(records, cfg.weights, cfg.reward);
  std::string out;
  SkipReport report;
  if (!groups.empty()) {
    const ArpoResult result = compute_arpo(groups, args.step, cfg.pipeline);
    for (const AdvantageRecord& rec : result.records) {
      out += advantage_record_to_jsonl_line(rec);
      out += '\n';
    }
    report = result.skips;
  }
  out += skip_report_to_json(report);
  out += '\n';
  atomic_write_file(args.output, out);
  return 0;
}

int run_simulate(const CommonArgs& args) {
  const AppConfig cfg = effective_config(args);
  const std::vector<ToyTask> tasks = make_env(cfg.env);
  for (Strategy strategy : cfg.strategies) {
    for (std::uint64_t seed : cfg.seeds) {
      TrainConfig tc = cfg.train;
      tc.strategy = strategy;
      tc.seed = seed;
      const TrainOutcome outcome = run_training(tc, tasks);
      const std::string stem = args.output + "/" + to_string(strategy) + "_" +
                               std::to_string(seed);
      atomic_write_file(stem + "_metrics.csv", metrics_to_csv(outcome.metrics));
      atomic_write_file(stem + "_summary.json",
                        run_summary_to_json(strategy, seed, outcome.metrics) + "\n");
    }
  }
  return 0;
}

int run_compare(const CommonArgs& args) {
  const AppConfig cfg = effective_config(args);
  const std::vector<ToyTask> tasks = make_env(cfg.env);
  const ComparisonReport report =
      compare_strategies(cfg.train, cfg.strategies, cfg.seeds, tasks);
  atomic_write_file(args.output, comparison_to_json(report) + "\n");
  return 0;
}

int run_report(const CommonArgs& args) {
  const AppConfig cfg = effective_config(args);
  const std::vector<RolloutRecord> records = load_rollout_file(args.input);

  struct Accum {
    int count = 0;
    double reward_sum = 0.0;
    int adv_count = 0;
    double abs_adv_sum = 0.0;
  };
  std::array<Accum, kNumDomains> acc{};
  for (const RolloutRecord& rec : records) {
    const RewardBreakdown b = score_rollout(rec.response, *rec.ground_truth,
                                            rec.kind, cfg.weights, cfg.reward);
    auto& a = acc[static_cast<std::size_t>(rec.domain)];
    a.count += 1;
    a.reward_sum += b.total;
  }

  SkipReport skips;
  if (!records.empty()) {
    const std::vector<RolloutGroup> groups = group_rollouts(records, cfg.weights, cfg.reward);
    const ArpoResult result = compute_arpo(groups, args.step, cfg.pipeline);
    skips = result.skips;
    for (const AdvantageRecord& rec : result.records) {
      auto& a = acc[static_cast<std::size_t>(rec.domain)];
      a.adv_count += 1;
      a.abs_adv_sum += std::abs(rec.a_final);
    }
  }

  nlohmann::json domains = nlohmann::json::object();
  for (std::size_t d = 0; d < kNumDomains; ++d) {
    if (acc[d].count == 0) continue;
    const auto name = to_string(static_cast<CognitiveDomain>(d));
    domains[name] = {
        {"records", acc[d].count},
        {"mean_reward", acc[d].reward_sum / acc[d].count},
        {"advantage_records", acc[d].adv_count},
        {"mean_abs_advantage",
         acc[d].adv_count == 0 ? 0.0 : acc[d].abs_adv_sum / acc[d].adv_count},
    };
  }
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["config"] = nlohmann::json::parse(config_to_json(cfg));
  j["step"] = args.step;
  j["domains"] = domains;
  j["skip_report"] = nlohmann::json::parse(skip_report_to_json(skips));
  atomic_write_file(args.output, j.dump(2) + "\n");
  return 0;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_input, bool needs_output,
                bool has_step) {
  if (needs_input) cmd->add_option("--input", args.input, "Input JSONL file")->required();
  if (needs_output) cmd->add_option("--output", args.output, "Output path")->required();
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--weights", args.weights, "Reward weights as task,spatial,fmt");
  if (has_step) cmd->add_option("--step", args.step, "Curriculum step for lambda(t)");
  auto* seed = cmd->add_option("--seed", args.seed, "Seed override for all stochastic stages");
  cmd->callback([&args, seed] { args.seed_set = seed->count() > 0; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ARPO scoring, advantage, and simulation toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* score = app.add_subcommand("score", "Score rollouts with the multi-objective reward");
  add_common(score, args, true, true, false);
  CLI::App* advantage = app.add_subcommand("advantage", "Compute ARPO advantages for grouped rollouts");
  add_common(advantage, args, true, true, true);
  CLI::App* simulate = app.add_subcommand("simulate", "Run toy training per strategy and seed");
  add_common(simulate, args, false, true, false);
  CLI::App* compare = app.add_subcommand("compare", "Compare strategies across seeds");
  add_common(compare, args, false, true, false);
  CLI::App* report = app.add_subcommand("report", "Consolidated report for a rollout file");
  add_common(report, args, true, true, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(score)) return run_score(args);
    if (app.got_subcommand(advantage)) return run_advantage(args);
    if (app.got_subcommand(simulate)) return run_simulate(args);
    if (app.got_subcommand(compare)) return run_compare(args);
    if (app.got_subcommand(report)) return run_report(args);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
