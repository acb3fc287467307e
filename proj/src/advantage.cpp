#include "arpo/advantage.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>

#include "arpo/rng.hpp"

namespace arpo {

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
  const double mu = mean_of(v);
  double s = 0.0;
  for (double x : v) {
    const double d = x - mu;
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(v.size()));
}

void validate_group(const RolloutGroup& g) {
  if (g.rewards.size() < 2) {
    throw std::invalid_argument("RolloutGroup '" + g.prompt_id + "': G must be >= 2");
  }
  for (double r : g.rewards) {
    if (!std::isfinite(r)) {
      throw std::invalid_argument("RolloutGroup '" + g.prompt_id + "': non-finite reward");
    }
  }
  if (!g.kl.empty() && g.kl.size() != g.rewards.size()) {
    throw std::invalid_argument("RolloutGroup '" + g.prompt_id + "': kl length mismatch");
  }
  for (double k : g.kl) {
    if (!std::isfinite(k)) {
      throw std::invalid_argument("RolloutGroup '" + g.prompt_id + "': non-finite kl");
    }
  }
}

constexpr std::array<CognitiveDomain, kNumDomains> kDomains = {
    CognitiveDomain::SpatialPerception,
    CognitiveDomain::ObjectUnderstanding,
    CognitiveDomain::SceneUnderstanding,
    CognitiveDomain::SceneReasoning,
};

}  // namespace

std::vector<double> grpo_advantages(const std::vector<double>& rewards, double eps) {
  if (rewards.size() < 2) {
    throw std::invalid_argument("grpo_advantages: G must be >= 2");
  }
  if (eps < 0.0) {
    throw std::invalid_argument("grpo_advantages: eps must be >= 0");
  }
  // An all-equal group is exactly zero; the computed mean of equal values can
  // round away from them, so the case is detected on the raw rewards.
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  if (*lo == *hi) return std::vector<double>(rewards.size(), 0.0);
  const double mu = mean_of(rewards);
  const double denom = population_std(rewards) + eps;
  std::vector<double> out(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    const double dev = rewards[i] - mu;
    out[i] = (dev == 0.0 || denom == 0.0) ? 0.0 : dev / denom;
  }
  return out;
}

std::pair<std::vector<RolloutGroup>, SkipReport> skip_degenerate_groups(
    const std::vector<RolloutGroup>& groups, double threshold) {
  std::vector<RolloutGroup> retained;
  SkipReport report;
  report.groups_in = static_cast<int>(groups.size());
  for (const RolloutGroup& g : groups) {
    const auto [lo, hi] = std::minmax_element(g.rewards.begin(), g.rewards.end());
    if (g.rewards.empty() || *hi - *lo < threshold) {
      report.skipped_prompt_ids.push_back(g.prompt_id);
    } else {
      retained.push_back(g);
    }
  }
  report.groups_retained = static_cast<int>(retained.size());
  return {std::move(retained), report};
}

double domain_temperature(long long n, double mu, double eps_T) {
  return std::max(static_cast<double>(n) * mu, eps_T);
}

double cluster_temperature(const std::vector<RolloutGroup>& members, double eps_T) {
  if (members.empty()) {
    throw std::invalid_argument("cluster_temperature: empty cluster");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (const RolloutGroup& g : members) {
    for (double r : g.rewards) sum += r;
    count += g.rewards.size();
  }
  const double mu = count == 0 ? 0.0 : sum / static_cast<double>(count);
  return std::max(static_cast<double>(members.size()) * mu, eps_T);
}

double curriculum_lambda(long long step, const CurriculumSchedule& schedule) {
  if (schedule.total_steps < 1) {
    throw std::invalid_argument("curriculum_lambda: total_steps must be >= 1");
  }
  if (schedule.exponent < 0.0) {
    throw std::invalid_argument("curriculum_lambda: exponent must be >= 0");
  }
  if (step < 0 || step > schedule.total_steps) {
    throw std::invalid_argument("curriculum_lambda: step outside [0, total_steps]");
  }
  const double progress = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
  return std::pow(progress, schedule.exponent);
}

double hierarchical_scale(double a_grpo, double T_g, double T_cg, double lambda_t) {
  if (T_g <= 0.0 || T_cg <= 0.0) {
    throw std::invalid_argument("hierarchical_scale: temperatures must be > 0");
  }
  if (lambda_t == 0.0) return a_grpo;  // pow-free so the identity is bitwise
  return a_grpo / std::pow(T_g * T_cg, lambda_t);
}

double quantile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("quantile_nearest_rank: empty input");
  }
  if (p <= 0.0 || p >= 1.0) {
    throw std::invalid_argument("quantile_nearest_rank: p must be in (0,1)");
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

std::pair<std::vector<double>, std::vector<double>> kl_dampen(
    const std::vector<double>& s_scaled, const std::vector<double>& kl,
    const DampeningConfig& cfg) {
  if (s_scaled.size() != kl.size()) {
    throw std::invalid_argument("kl_dampen: list length mismatch");
  }
  if (cfg.percentile <= 0.0 || cfg.percentile >= 1.0) {
    throw std::invalid_argument("kl_dampen: percentile must be in (0,1)");
  }
  if (cfg.floor <= 0.0) {
    throw std::invalid_argument("kl_dampen: floor must be > 0");
  }
  std::vector<double> m(s_scaled.size(), 1.0);
  std::vector<double> dampened(s_scaled);
  if (s_scaled.empty()) return {std::move(m), std::move(dampened)};

  std::vector<double> products(s_scaled.size());
  for (std::size_t i = 0; i < s_scaled.size(); ++i) {
    products[i] = s_scaled[i] * kl[i];
  }
  double t_p = quantile_nearest_rank(products, cfg.percentile);
  if (t_p <= 0.0) t_p = cfg.floor;
  for (std::size_t i = 0; i < s_scaled.size(); ++i) {
    m[i] = t_p / (t_p + std::max(products[i], 0.0));
    dampened[i] = m[i] * s_scaled[i];
  }
  return {std::move(m), std::move(dampened)};
}

std::vector<double> batch_renormalize(const std::vector<double>& advs,
                                      bool* degenerate) {
  if (degenerate != nullptr) *degenerate = false;
  if (advs.size() < 2) {
    if (degenerate != nullptr) *degenerate = true;
    return advs;
  }
  const double sd = population_std(advs);
  if (sd == 0.0) {
    if (degenerate != nullptr) *degenerate = true;
    return advs;
  }
  std::vector<double> out(advs.size());
  for (std::size_t i = 0; i < advs.size(); ++i) out[i] = advs[i] / sd;
  return out;
}

ArpoResult compute_arpo(const std::vector<RolloutGroup>& groups, long long step,
                        const PipelineConfig& cfg) {
  if (groups.empty()) {
    throw std::invalid_argument("compute_arpo: need at least one group");
  }
  if (cfg.grpo_eps < 0.0 || cfg.skip_threshold < 0.0 || cfg.temperature_floor <= 0.0) {
    throw std::invalid_argument("compute_arpo: malformed pipeline config");
  }
  for (const RolloutGroup& g : groups) validate_group(g);

  ArpoResult res;
  res.lambda = cfg.curriculum_enabled ? curriculum_lambda(step, cfg.curriculum) : 0.0;

  auto [retained, report] = skip_degenerate_groups(groups, cfg.skip_threshold);
  res.skips = std::move(report);
  if (retained.empty()) return res;

  const std::size_t n_groups = retained.size();
  std::vector<std::vector<double>> a_grpo(n_groups);
  for (std::size_t q = 0; q < n_groups; ++q) {
    a_grpo[q] = grpo_advantages(retained[q].rewards, cfg.grpo_eps);
  }

  // Domain temperatures over the retained batch.
  std::array<std::vector<std::size_t>, kNumDomains> by_domain;
  for (std::size_t q = 0; q < n_groups; ++q) {
    by_domain[static_cast<std::size_t>(retained[q].domain)].push_back(q);
  }
  std::array<double, kNumDomains> domain_T;
  domain_T.fill(1.0);
  for (std::size_t d = 0; d < kNumDomains; ++d) {
    if (by_domain[d].empty()) continue;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t q : by_domain[d]) {
      for (double r : retained[q].rewards) sum += r;
      count += retained[q].rewards.size();
    }
    const double mu = sum / static_cast<double>(count);
    const double T = domain_temperature(static_cast<long long>(by_domain[d].size()),
                                        mu, cfg.temperature_floor);
    res.domain_stats.push_back(DomainStats{kDomains[d],
                                           static_cast<int>(by_domain[d].size()),
                                           mu, T});
    if (cfg.use_domain_temperature) domain_T[d] = T;
  }

  // Cluster temperatures: k-means over sorted reward vectors, one run per
  // (domain, group size) subset so every point has one dimension G.
  std::vector<double> cluster_T(n_groups, 1.0);
  if (cfg.use_cluster_temperature) {
    for (std::size_t d = 0; d < kNumDomains; ++d) {
      if (by_domain[d].empty()) continue;
      std::map<std::size_t, std::vector<std::size_t>> by_size;
      for (std::size_t q : by_domain[d]) {
        by_size[retained[q].rewards.size()].push_back(q);
      }
      int next_cluster_id = 0;
      for (const auto& [g_size, members] : by_size) {
        std::vector<std::vector<double>> vectors;
        vectors.reserve(members.size());
        for (std::size_t q : members) {
          std::vector<double> v = retained[q].rewards;
          std::sort(v.begin(), v.end());
          vectors.push_back(std::move(v));
        }
        KMeansConfig kc = cfg.kmeans;
        kc.k = std::min<int>(kc.k, static_cast<int>(members.size()));
        kc.seed = mix_seeds(cfg.kmeans.seed,
                            static_cast<std::uint64_t>(d) * 8191u + g_size);
        const KMeansResult km = kmeans(vectors, kc);
        for (int c = 0; c < km.effective_k; ++c) {
          std::vector<RolloutGroup> cluster_members;
          std::vector<std::size_t> member_idx;
          for (std::size_t j = 0; j < members.size(); ++j) {
            if (km.assignments[j] == c) {
              cluster_members.push_back(retained[members[j]]);
              member_idx.push_back(members[j]);
            }
          }
          if (cluster_members.empty()) continue;
          const double T = cluster_temperature(cluster_members, cfg.temperature_floor);
          ClusterStats stats;
          stats.domain = kDomains[d];
          stats.cluster_id = next_cluster_id++;
          for (const RolloutGroup& g : cluster_members) {
            stats.prompt_ids.push_back(g.prompt_id);
          }
          stats.temperature = T;
          res.cluster_stats.push_back(std::move(stats));
          for (std::size_t q : member_idx) cluster_T[q] = T;
        }
      }
    }
  }

  // Flatten in group order for the batch-level stages.
  std::vector<double> s_scaled;
  std::vector<double> kl_flat;
  for (std::size_t q = 0; q < n_groups; ++q) {
    const auto d = static_cast<std::size_t>(retained[q].domain);
    for (std::size_t i = 0; i < a_grpo[q].size(); ++i) {
      s_scaled.push_back(hierarchical_scale(a_grpo[q][i], domain_T[d],
                                            cluster_T[q], res.lambda));
      const double k = retained[q].kl.empty() ? 0.0 : retained[q].kl[i];
      kl_flat.push_back(std::max(k, 0.0));
    }
  }

  std::vector<double> m(s_scaled.size(), 1.0);
  std::vector<double> dampened = s_scaled;
  if (cfg.dampening_enabled) {
    std::tie(m, dampened) = kl_dampen(s_scaled, kl_flat, cfg.dampening);
  }

  res.batch_std = population_std(dampened);
  std::vector<double> a_final;
  if (cfg.renorm_per_domain) {
    // Each domain's slice is renormalized against its own std; a degenerate
    // slice passes through unchanged without tripping the global flag.
    a_final = dampened;
    for (std::size_t d = 0; d < kDomains.size(); ++d) {
      std::vector<std::size_t> idx;
      std::vector<double> slice;
      std::size_t pos = 0;
      for (std::size_t q = 0; q < n_groups; ++q) {
        for (std::size_t i = 0; i < a_grpo[q].size(); ++i, ++pos) {
          if (static_cast<std::size_t>(retained[q].domain) == d) {
            idx.push_back(pos);
            slice.push_back(dampened[pos]);
          }
        }
      }
      if (slice.empty()) continue;
      bool degenerate = false;
      const std::vector<double> out = batch_renormalize(slice, &degenerate);
      for (std::size_t j = 0; j < idx.size(); ++j) a_final[idx[j]] = out[j];
    }
    res.renorm_degenerate = population_std(dampened) == 0.0;
  } else {
    a_final = batch_renormalize(dampened, &res.renorm_degenerate);
  }

  std::size_t flat = 0;
  for (std::size_t q = 0; q < n_groups; ++q) {
    for (std::size_t i = 0; i < a_grpo[q].size(); ++i, ++flat) {
      AdvantageRecord rec;
      rec.prompt_id = retained[q].prompt_id;
      rec.domain = retained[q].domain;
      rec.index = static_cast<int>(i);
      rec.reward = retained[q].rewards[i];
      rec.a_grpo = a_grpo[q][i];
      rec.s_scaled = s_scaled[flat];
      rec.m = m[flat];
      rec.a_final = a_final[flat];
      res.records.push_back(std::move(rec));
    }
  }
  return res;
}

}  // namespace arpo
