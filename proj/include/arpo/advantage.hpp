#ifndef ARPO_ADVANTAGE_HPP_
#define ARPO_ADVANTAGE_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "arpo/kmeans.hpp"
#include "arpo/reward.hpp"

namespace arpo {

// One prompt's sampled responses: total rewards plus per-response KL to the
// reference policy. kl may be empty (treated as all-zero) or match rewards.
struct RolloutGroup {
  std::string prompt_id;
  CognitiveDomain domain = CognitiveDomain::SpatialPerception;
  std::vector<double> rewards;
  std::vector<double> kl;
};

struct SkipReport {
  std::vector<std::string> skipped_prompt_ids;
  int groups_in = 0;
  int groups_retained = 0;
};

struct DomainStats {
  CognitiveDomain domain = CognitiveDomain::SpatialPerception;
  int group_count = 0;
  double mean_reward = 0.0;
  double temperature = 0.0;  // max(N * mu, eps_T)
};

struct ClusterStats {
  CognitiveDomain domain = CognitiveDomain::SpatialPerception;
  int cluster_id = 0;
  std::vector<std::string> prompt_ids;
  double temperature = 0.0;
};

// lambda(t) = (t / total_steps)^exponent.
struct CurriculumSchedule {
  long long total_steps = 1;
  double exponent = 1.0;
};

struct DampeningConfig {
  double percentile = 0.9;
  double floor = 1e-8;  // replaces a non-positive percentile product
};

// Every pipeline stage for one response, in application order.
struct AdvantageRecord {
  std::string prompt_id;
  CognitiveDomain domain = CognitiveDomain::SpatialPerception;
  int index = 0;
  double reward = 0.0;
  double a_grpo = 0.0;
  double s_scaled = 0.0;
  double m = 1.0;
  double a_final = 0.0;
};

struct PipelineConfig {
  double grpo_eps = 1e-4;
  double skip_threshold = 0.05;
  double temperature_floor = 1e-6;
  bool use_domain_temperature = true;
  bool use_cluster_temperature = true;
  bool curriculum_enabled = true;  // false pins lambda(t) = 0
  CurriculumSchedule curriculum;
  bool dampening_enabled = true;
  DampeningConfig dampening;
  bool renorm_per_domain = false;  // renormalize per domain instead of globally
  KMeansConfig kmeans;  // k is capped at the per-subset group count
};

struct ArpoResult {
  std::vector<AdvantageRecord> records;
  SkipReport skips;
  std::vector<DomainStats> domain_stats;
  std::vector<ClusterStats> cluster_stats;
  double lambda = 0.0;
  double batch_std = 0.0;          // population std before renormalization
  bool renorm_degenerate = false;  // zero std: batch passed through unchanged
};

// (r_i - mean) / (population std + eps). All-equal groups yield exact zeros
// even at eps = 0. Throws when G < 2 or eps < 0.
std::vector<double> grpo_advantages(const std::vector<double>& rewards, double eps);

// Drops groups whose reward range (max - min) is strictly below threshold.
std::pair<std::vector<RolloutGroup>, SkipReport> skip_degenerate_groups(
    const std::vector<RolloutGroup>& groups, double threshold);

// max(n * mu, eps_T).
double domain_temperature(long long n, double mu, double eps_T);

// Same law over a cluster's member groups; throws on an empty member list.
double cluster_temperature(const std::vector<RolloutGroup>& members, double eps_T);

// Throws when step is outside [0, total_steps] or the schedule is malformed.
double curriculum_lambda(long long step, const CurriculumSchedule& schedule);

// a_grpo / (T_g * T_cg)^lambda. Exactly a_grpo at lambda = 0.
// Throws on a non-positive temperature.
double hierarchical_scale(double a_grpo, double T_g, double T_cg, double lambda_t);

// Nearest-rank quantile: element at rank ceil(p * n) of the ascending sort.
// Throws on empty input or p outside (0, 1).
double quantile_nearest_rank(std::vector<double> values, double p);

// Batch-wide inverse-linear dampening. t_p is the percentile of the products
// s*kl (floored when non-positive); m_j = t_p / (t_p + max(s_j*kl_j, 0)).
// Returns (m, dampened). Throws on length mismatch or malformed config.
std::pair<std::vector<double>, std::vector<double>> kl_dampen(
    const std::vector<double>& s_scaled, const std::vector<double>& kl,
    const DampeningConfig& cfg);

// Divides by the population std only; no mean shift. A zero-std or too-small
// batch is returned unchanged with *degenerate set.
std::vector<double> batch_renormalize(const std::vector<double>& advs,
                                      bool* degenerate = nullptr);

// Full pipeline: skip -> GRPO -> domain stats -> k-means clusters on sorted
// reward vectors (per domain, per equal group size) -> hierarchical scaling
// under the curriculum -> KL dampening -> batch renormalization.
ArpoResult compute_arpo(const std::vector<RolloutGroup>& groups, long long step,
                        const PipelineConfig& cfg);

}  // namespace arpo

#endif  // ARPO_ADVANTAGE_HPP_
