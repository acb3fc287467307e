#ifndef ARPO_IO_HPP_
#define ARPO_IO_HPP_

#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arpo/advantage.hpp"
#include "arpo/reward.hpp"
#include "arpo/sim.hpp"

namespace arpo {

inline constexpr const char* kToolVersion = "0.1.0";

// Data problems: missing/malformed input files, schema violations. Exit 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration problems: unknown keys, invalid values. Exit 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One rollout line, with its source line number for diagnostics.
struct RolloutRecord {
  std::string prompt_id;
  CognitiveDomain domain = CognitiveDomain::SpatialPerception;
  TaskKind kind = TaskKind::SingleChoice;
  std::string response;
  std::optional<GroundTruth> ground_truth;
  double kl = 0.0;
  std::optional<double> ratio;
  int line = 0;
};

// Strict JSONL: unknown keys, unknown kinds or domains, and tag/kind
// mismatches all raise InputError naming the offending line.
std::vector<RolloutRecord> parse_rollout_jsonl(std::istream& in);
std::vector<RolloutRecord> load_rollout_file(const std::string& path);

// Scores each record and folds consecutive same-prompt records into groups.
// Groups must share one size G >= 2 and one domain per prompt; violations
// raise InputError naming the prompt.
std::vector<RolloutGroup> group_rollouts(const std::vector<RolloutRecord>& records,
                                         const RewardWeights& weights,
                                         const RewardConfig& reward_cfg);

struct AppConfig {
  PipelineConfig pipeline;
  TrainConfig train;  // train.pipeline mirrors the pipeline section
  EnvSpec env;
  RewardWeights weights;
  RewardConfig reward;
  std::vector<Strategy> strategies;  // simulate/compare sweep
  std::vector<std::uint64_t> seeds;
};

AppConfig default_config();

// Strict JSON config: every key must be known, every value well-typed.
AppConfig parse_config_json(const std::string& text);
AppConfig load_config_file(const std::string& path);

// Full effective-configuration echo, defaults included.
std::string config_to_json(const AppConfig& cfg);

std::string breakdown_to_jsonl_line(const RolloutRecord& rec, const RewardBreakdown& b);
std::string advantage_record_to_jsonl_line(const AdvantageRecord& rec);
std::string skip_report_to_json(const SkipReport& report);

// step, domain, mean_reward, mean_abs_advantage, skipped rows.
std::string metrics_to_csv(const RunMetrics& metrics);
std::string run_summary_to_json(Strategy strategy, std::uint64_t seed,
                                const RunMetrics& metrics);
std::string comparison_to_json(const ComparisonReport& report);

// Temp file + rename so readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace arpo

#endif  // ARPO_IO_HPP_
