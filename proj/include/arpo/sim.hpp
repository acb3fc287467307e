#ifndef ARPO_SIM_HPP_
#define ARPO_SIM_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arpo/advantage.hpp"
#include "arpo/reward.hpp"

namespace arpo {

// One synthetic prompt: a bandit whose arms stand in for answer options.
// deceptive_action < 0 means no trap arm; a trap arm starts training with
// deceptive_logit already on it.
struct ToyTask {
  std::string prompt_id;
  CognitiveDomain domain = CognitiveDomain::ObjectUnderstanding;
  int action_count = 4;
  int correct_action = 0;
  int deceptive_action = -1;
  double deceptive_logit = 2.0;
};

enum class Strategy { GRPO, DomainOnly, ARPO };

const char* to_string(Strategy s);
std::optional<Strategy> strategy_from_string(const std::string& s);

// One logit vector per prompt; probabilities come from softmax.
struct TabularPolicy {
  std::vector<std::vector<double>> logits;
};

std::vector<double> softmax(const std::vector<double>& logits, double temperature = 1.0);

struct TrainConfig {
  int group_size = 8;
  double clip_eps = 0.2;
  double beta = 0.05;
  double sample_temperature = 0.9;
  double learning_rate = 0.1;
  long long total_steps = 1000;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::ARPO;
  PipelineConfig pipeline;  // curriculum.total_steps is synced to total_steps
};

struct EnvSpec {
  std::map<CognitiveDomain, int> counts;
  int action_count = 4;
  double deceptive_fraction = 1.0;
  CognitiveDomain hard_domain = CognitiveDomain::SceneReasoning;
  double deceptive_logit = 2.0;
  std::uint64_t seed = 0;
};

// Deterministic task set; traps appear only in the hard domain.
// Throws on a non-positive count, action_count < 2, or a fraction outside [0,1].
std::vector<ToyTask> make_env(const EnvSpec& spec);

// Fresh policy for an env: zero logits except each trap arm's elevated prior.
TabularPolicy initial_policy(const std::vector<ToyTask>& tasks);

struct GroupSample {
  std::vector<int> actions;
  std::vector<double> logp_old;  // under the temperature-1 policy at sampling time
};

// i.i.d. draws from the temperature-scaled softmax of one prompt's logits.
GroupSample sample_group(const std::vector<double>& logits, int group_size,
                         double temperature, std::uint64_t seed);

// Categorical KL sum_a pa[a] * log(pa[a]/pb[a]); zero-probability terms drop.
double exact_kl(const std::vector<double>& pa, const std::vector<double>& pb);

// Value of one sample's surrogate term: min(phi*adv, clip(phi)*adv).
double clipped_surrogate_term(double phi, double adv, double clip_eps);

// Ascent gradient w.r.t. one prompt's logits of
//   (1/G) sum_i min(phi_i A_i, clip(phi_i) A_i) - beta * KL(pi_theta || pi_ref).
// A sample whose ratio left the trust region in the unfavorable direction
// contributes nothing to the surrogate part.
std::vector<double> clipped_surrogate_grad(const std::vector<double>& logits,
                                           const GroupSample& group,
                                           const std::vector<double>& advantages,
                                           double clip_eps, double beta,
                                           const std::vector<double>& ref_probs);

struct StepMetrics {
  long long step = 0;
  std::array<double, kNumDomains> mean_reward{};       // over all sampled groups
  std::array<int, kNumDomains> group_count{};          // sampled groups per domain
  std::array<double, kNumDomains> mean_abs_advantage{};  // over retained records
  std::array<int, kNumDomains> record_count{};
  int groups_used = 0;
  int groups_skipped = 0;
};

struct RunMetrics {
  std::vector<StepMetrics> steps;
  std::array<double, kNumDomains> final_accuracy{};  // argmax == correct, per domain
  std::array<int, kNumDomains> domain_task_count{};
  double final_mean_kl = 0.0;  // exact_kl(theta, ref) averaged over prompts
};

struct TrainOutcome {
  RunMetrics metrics;
  TabularPolicy final_policy;
  TabularPolicy reference_policy;
};

// Strategy presets over the advantage pipeline: GRPO turns the hierarchy,
// curriculum, and dampening off; DomainOnly adds domain temperatures;
// ARPO enables everything. The skip rule stays on for all three.
PipelineConfig pipeline_for(Strategy s, const PipelineConfig& base);

// Full-batch loop: sample a group per prompt, score exact-match rewards,
// run compute_arpo, apply clipped-surrogate ascent. One epoch per batch, so
// ratios are 1 during training updates. Deterministic per (cfg, env).
TrainOutcome run_training(const TrainConfig& cfg, const std::vector<ToyTask>& tasks);

struct StrategySeedResult {
  Strategy strategy = Strategy::GRPO;
  std::uint64_t seed = 0;
  std::array<double, kNumDomains> final_accuracy{};
};

struct ComparisonReport {
  std::vector<Strategy> strategies;
  std::vector<std::uint64_t> seeds;
  std::vector<StrategySeedResult> cells;  // strategy-major, seed-minor
  CognitiveDomain minority_domain = CognitiveDomain::SceneReasoning;
  std::vector<double> minority_mean;      // per strategy, over seeds
  // wins[i][j]: seeds where strategy i's minority accuracy >= strategy j's.
  std::vector<std::vector<int>> minority_wins;
};

// Requires >= 2 strategies and >= 3 seeds.
ComparisonReport compare_strategies(const TrainConfig& base,
                                    const std::vector<Strategy>& strategies,
                                    const std::vector<std::uint64_t>& seeds,
                                    const std::vector<ToyTask>& tasks);

}  // namespace arpo

#endif  // ARPO_SIM_HPP_
