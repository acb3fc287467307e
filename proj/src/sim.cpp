#include "arpo/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "arpo/rng.hpp"

namespace arpo {

namespace {

constexpr std::array<CognitiveDomain, kNumDomains> kDomains = {
    CognitiveDomain::SpatialPerception,
    CognitiveDomain::ObjectUnderstanding,
    CognitiveDomain::SceneUnderstanding,
    CognitiveDomain::SceneReasoning,
};

void validate_task(const ToyTask& t) {
  if (t.action_count < 2) {
    throw std::invalid_argument("ToyTask '" + t.prompt_id + "': A must be >= 2");
  }
  if (t.correct_action < 0 || t.correct_action >= t.action_count) {
    throw std::invalid_argument("ToyTask '" + t.prompt_id + "': correct action out of range");
  }
  if (t.deceptive_action >= 0 &&
      (t.deceptive_action >= t.action_count || t.deceptive_action == t.correct_action)) {
    throw std::invalid_argument("ToyTask '" + t.prompt_id + "': bad deceptive action");
  }
}

void validate_config(const TrainConfig& cfg) {
  if (cfg.group_size < 2) throw std::invalid_argument("TrainConfig: G must be >= 2");
  if (cfg.clip_eps <= 0.0 || cfg.clip_eps >= 1.0) {
    throw std::invalid_argument("TrainConfig: clip_eps must be in (0,1)");
  }
  if (cfg.beta < 0.0) throw std::invalid_argument("TrainConfig: beta must be >= 0");
  if (cfg.sample_temperature <= 0.0) {
    throw std::invalid_argument("TrainConfig: sampling temperature must be > 0");
  }
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw std::invalid_argument("TrainConfig: learning rate must be finite and >= 0");
  }
  if (cfg.total_steps < 1) throw std::invalid_argument("TrainConfig: total_steps must be >= 1");
}

int pick_wrong_action(std::mt19937_64& rng, int action_count, int correct) {
  const int offset = 1 + static_cast<int>(uniform01(rng) * static_cast<double>(action_count - 1));
  return (correct + std::min(offset, action_count - 1)) % action_count;
}

// Exact-match toy reward routed through the reward engine with weights (1,0,0).
double toy_reward(int action, int correct) {
  const auto letter = [](int a) { return static_cast<char>('A' + (a % 26)); };
  const double r_task = score_single_choice(letter(action), letter(correct));
  return combine(r_task, 0.0, 0.0, RewardWeights{1.0, 0.0, 0.0});
}

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::GRPO: return "GRPO";
    case Strategy::DomainOnly: return "DomainOnly";
    case Strategy::ARPO: return "ARPO";
  }
  return "unknown";
}

std::optional<Strategy> strategy_from_string(const std::string& s) {
  if (s == "GRPO") return Strategy::GRPO;
  if (s == "DomainOnly") return Strategy::DomainOnly;
  if (s == "ARPO") return Strategy::ARPO;
  return std::nullopt;
}

std::vector<double> softmax(const std::vector<double>& logits, double temperature) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
  if (temperature <= 0.0) throw std::invalid_argument("softmax: temperature must be > 0");
  double hi = logits[0];
  for (double v : logits) hi = std::max(hi, v);
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t a = 0; a < logits.size(); ++a) {
    p[a] = std::exp((logits[a] - hi) / temperature);
    z += p[a];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<ToyTask> make_env(const EnvSpec& spec) {
  if (spec.action_count < 2) throw std::invalid_argument("make_env: A must be >= 2");
  if (spec.deceptive_fraction < 0.0 || spec.deceptive_fraction > 1.0) {
    throw std::invalid_argument("make_env: deceptive fraction must be in [0,1]");
  }
  for (const auto& [domain, count] : spec.counts) {
    if (count < 1) {
      throw std::invalid_argument(std::string("make_env: count for ") + to_string(domain) +
                                  " must be >= 1");
    }
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<ToyTask> tasks;
  for (CognitiveDomain domain : kDomains) {
    const auto it = spec.counts.find(domain);
    if (it == spec.counts.end()) continue;
    const int count = it->second;
    const auto trap_count = static_cast<int>(
        std::llround(spec.deceptive_fraction * static_cast<double>(count)));
    for (int i = 0; i < count; ++i) {
      ToyTask t;
      t.prompt_id = std::string(to_string(domain)) + "_" + std::to_string(i);
      t.domain = domain;
      t.action_count = spec.action_count;
      t.correct_action = static_cast<int>(uniform01(rng) * static_cast<double>(spec.action_count));
      t.correct_action = std::min(t.correct_action, spec.action_count - 1);
      if (domain == spec.hard_domain && i < trap_count) {
        t.deceptive_action = pick_wrong_action(rng, spec.action_count, t.correct_action);
        t.deceptive_logit = spec.deceptive_logit;
      }
      validate_task(t);
      tasks.push_back(std::move(t));
    }
  }
  return tasks;
}

TabularPolicy initial_policy(const std::vector<ToyTask>& tasks) {
  TabularPolicy policy;
  policy.logits.reserve(tasks.size());
  for (const ToyTask& t : tasks) {
    std::vector<double> logits(static_cast<std::size_t>(t.action_count), 0.0);
    if (t.deceptive_action >= 0) {
      logits[static_cast<std::size_t>(t.deceptive_action)] = t.deceptive_logit;
    }
    policy.logits.push_back(std::move(logits));
  }
  return policy;
}

GroupSample sample_group(const std::vector<double>& logits, int group_size,
                         double temperature, std::uint64_t seed) {
  if (group_size < 2) throw std::invalid_argument("sample_group: G must be >= 2");
  const std::vector<double> p = softmax(logits, temperature);
  const std::vector<double> logp = [&] {
    const std::vector<double> p1 = softmax(logits, 1.0);
    std::vector<double> lp(p1.size());
    for (std::size_t a = 0; a < p1.size(); ++a) lp[a] = std::log(p1[a]);
    return lp;
  }();

  std::mt19937_64 rng(seed);
  GroupSample out;
  out.actions.reserve(static_cast<std::size_t>(group_size));
  out.logp_old.reserve(static_cast<std::size_t>(group_size));
  for (int i = 0; i < group_size; ++i) {
    const double u = uniform01(rng);
    double acc = 0.0;
    int action = static_cast<int>(p.size()) - 1;
    for (std::size_t a = 0; a < p.size(); ++a) {
      acc += p[a];
      if (u < acc) {
        action = static_cast<int>(a);
        break;
      }
    }
    out.actions.push_back(action);
    out.logp_old.push_back(logp[static_cast<std::size_t>(action)]);
  }
  return out;
}

double exact_kl(const std::vector<double>& pa, const std::vector<double>& pb) {
  if (pa.size() != pb.size()) throw std::invalid_argument("exact_kl: size mismatch");
  double kl = 0.0;
  for (std::size_t a = 0; a < pa.size(); ++a) {
    if (pa[a] <= 0.0) continue;
    kl += pa[a] * std::log(pa[a] / pb[a]);
  }
  return kl;
}

double clipped_surrogate_term(double phi, double adv, double clip_eps) {
  const double clipped = std::clamp(phi, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(phi * adv, clipped * adv);
}

std::vector<double> clipped_surrogate_grad(const std::vector<double>& logits,
                                           const GroupSample& group,
                                           const std::vector<double>& advantages,
                                           double clip_eps, double beta,
                                           const std::vector<double>& ref_probs) {
  if (group.actions.size() != group.logp_old.size() ||
      group.actions.size() != advantages.size()) {
    throw std::invalid_argument("clipped_surrogate_grad: group/advantage length mismatch");
  }
  if (ref_probs.size() != logits.size()) {
    throw std::invalid_argument("clipped_surrogate_grad: ref_probs size mismatch");
  }
  const std::size_t A = logits.size();
  const std::vector<double> p = softmax(logits, 1.0);
  std::vector<double> grad(A, 0.0);
  const double inv_g = 1.0 / static_cast<double>(group.actions.size());

  for (std::size_t i = 0; i < group.actions.size(); ++i) {
    const auto a = static_cast<std::size_t>(group.actions[i]);
    if (a >= A) throw std::invalid_argument("clipped_surrogate_grad: action out of range");
    const double adv = advantages[i];
    if (adv == 0.0) continue;
    // Log-space ratio: identical logits give exactly phi = 1.
    const double phi = std::exp(std::log(p[a]) - group.logp_old[i]);
    // min() picks the constant clipped branch exactly when the ratio leaves
    // the trust region in the direction the advantage favors.
    const bool active = (adv > 0.0 && phi <= 1.0 + clip_eps) ||
                        (adv < 0.0 && phi >= 1.0 - clip_eps);
    if (!active) continue;
    const double w = inv_g * adv * phi;  // d(phi*adv)/dlogits = phi*adv*(e_a - p)
    for (std::size_t b = 0; b < A; ++b) {
      grad[b] += w * ((b == a ? 1.0 : 0.0) - p[b]);
    }
  }

  if (beta != 0.0) {
    double kl = 0.0;
    std::vector<double> f(A, 0.0);
    for (std::size_t b = 0; b < A; ++b) {
      f[b] = std::log(p[b]) - std::log(ref_probs[b]);
      kl += p[b] * f[b];
    }
    for (std::size_t b = 0; b < A; ++b) {
      grad[b] -= beta * p[b] * (f[b] - kl);
    }
  }
  return grad;
}

PipelineConfig pipeline_for(Strategy s, const PipelineConfig& base) {
  PipelineConfig p = base;
  switch (s) {
    case Strategy::GRPO:
      p.curriculum_enabled = false;
      p.use_domain_temperature = false;
      p.use_cluster_temperature = false;
      p.dampening_enabled = false;
      break;
    case Strategy::DomainOnly:
      p.curriculum_enabled = true;
      p.use_domain_temperature = true;
      p.use_cluster_temperature = false;
      p.dampening_enabled = true;
      break;
    case Strategy::ARPO:
      p.curriculum_enabled = true;
      p.use_domain_temperature = true;
      p.use_cluster_temperature = true;
      p.dampening_enabled = true;
      break;
  }
  return p;
}

TrainOutcome run_training(const TrainConfig& cfg, const std::vector<ToyTask>& tasks) {
  validate_config(cfg);
  if (tasks.empty()) throw std::invalid_argument("run_training: empty task set");
  for (const ToyTask& t : tasks) validate_task(t);

  const std::size_t P = tasks.size();
  std::unordered_map<std::string, std::size_t> index_of;
  for (std::size_t p = 0; p < P; ++p) {
    if (!index_of.emplace(tasks[p].prompt_id, p).second) {
      throw std::invalid_argument("run_training: duplicate prompt_id " + tasks[p].prompt_id);
    }
  }

  // The reference policy anchors to the same traps the policy starts with.
  TabularPolicy policy = initial_policy(tasks);
  const TabularPolicy reference = policy;
  std::vector<std::vector<double>> ref_probs(P);
  for (std::size_t p = 0; p < P; ++p) ref_probs[p] = softmax(reference.logits[p], 1.0);

  PipelineConfig pipeline = pipeline_for(cfg.strategy, cfg.pipeline);
  pipeline.curriculum.total_steps = cfg.total_steps;

  TrainOutcome out;
  out.metrics.steps.reserve(static_cast<std::size_t>(cfg.total_steps));

  std::vector<GroupSample> samples(P);
  for (long long step = 1; step <= cfg.total_steps; ++step) {
    std::vector<RolloutGroup> groups;
    groups.reserve(P);
    StepMetrics sm;
    sm.step = step;

    for (std::size_t p = 0; p < P; ++p) {
      const ToyTask& task = tasks[p];
      const std::uint64_t group_seed =
          mix_seeds(mix_seeds(cfg.seed, static_cast<std::uint64_t>(step)), p);
      samples[p] = sample_group(policy.logits[p], cfg.group_size,
                                cfg.sample_temperature, group_seed);
      RolloutGroup g;
      g.prompt_id = task.prompt_id;
      g.domain = task.domain;
      g.rewards.reserve(samples[p].actions.size());
      for (int action : samples[p].actions) {
        g.rewards.push_back(toy_reward(action, task.correct_action));
      }
      const double kl = exact_kl(softmax(policy.logits[p], 1.0), ref_probs[p]);
      g.kl.assign(g.rewards.size(), kl);

      const auto d = static_cast<std::size_t>(task.domain);
      double sum = 0.0;
      for (double r : g.rewards) sum += r;
      sm.mean_reward[d] += sum / static_cast<double>(g.rewards.size());
      sm.group_count[d] += 1;
      groups.push_back(std::move(g));
    }
    for (std::size_t d = 0; d < kNumDomains; ++d) {
      if (sm.group_count[d] > 0) {
        sm.mean_reward[d] /= static_cast<double>(sm.group_count[d]);
      }
    }

    const ArpoResult result = compute_arpo(groups, step, pipeline);
    sm.groups_used = result.skips.groups_retained;
    sm.groups_skipped =
        result.skips.groups_in - result.skips.groups_retained;

    // Collect per-prompt advantage vectors aligned with sample order.
    std::unordered_map<std::size_t, std::vector<double>> advantages;
    for (const AdvantageRecord& rec : result.records) {
      const std::size_t p = index_of.at(rec.prompt_id);
      auto& v = advantages[p];
      if (v.empty()) v.resize(samples[p].actions.size(), 0.0);
      v[static_cast<std::size_t>(rec.index)] = rec.a_final;
      const auto d = static_cast<std::size_t>(rec.domain);
      sm.mean_abs_advantage[d] += std::abs(rec.a_final);
      sm.record_count[d] += 1;
    }
    for (std::size_t d = 0; d < kNumDomains; ++d) {
      if (sm.record_count[d] > 0) {
        sm.mean_abs_advantage[d] /= static_cast<double>(sm.record_count[d]);
      }
    }

    // Skipped prompts receive no update this step, KL term included.
    for (const auto& [p, advs] : advantages) {
      const std::vector<double> grad = clipped_surrogate_grad(
          policy.logits[p], samples[p], advs, cfg.clip_eps, cfg.beta, ref_probs[p]);
      for (std::size_t b = 0; b < grad.size(); ++b) {
        policy.logits[p][b] += cfg.learning_rate * grad[b];
      }
    }
    out.metrics.steps.push_back(std::move(sm));
  }

  double kl_sum = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    const auto d = static_cast<std::size_t>(tasks[p].domain);
    out.metrics.domain_task_count[d] += 1;
    if (argmax(policy.logits[p]) == tasks[p].correct_action) {
      out.metrics.final_accuracy[d] += 1.0;
    }
    kl_sum += exact_kl(softmax(policy.logits[p], 1.0), ref_probs[p]);
  }
  for (std::size_t d = 0; d < kNumDomains; ++d) {
    if (out.metrics.domain_task_count[d] > 0) {
      out.metrics.final_accuracy[d] /= static_cast<double>(out.metrics.domain_task_count[d]);
    }
  }
  out.metrics.final_mean_kl = kl_sum / static_cast<double>(P);
  out.final_policy = std::move(policy);
  out.reference_policy = reference;
  return out;
}

ComparisonReport compare_strategies(const TrainConfig& base,
                                    const std::vector<Strategy>& strategies,
                                    const std::vector<std::uint64_t>& seeds,
                                    const std::vector<ToyTask>& tasks) {
  if (strategies.size() < 2) {
    throw std::invalid_argument("compare_strategies: need >= 2 strategies");
  }
  if (seeds.size() < 3) {
    throw std::invalid_argument("compare_strategies: need >= 3 seeds");
  }

  ComparisonReport report;
  report.strategies = strategies;
  report.seeds = seeds;

  std::array<int, kNumDomains> domain_counts{};
  for (const ToyTask& t : tasks) domain_counts[static_cast<std::size_t>(t.domain)] += 1;
  std::size_t minority = 0;
  int best = -1;
  for (std::size_t d = 0; d < kNumDomains; ++d) {
    if (domain_counts[d] == 0) continue;
    if (best < 0 || domain_counts[d] < best) {
      best = domain_counts[d];
      minority = d;
    }
  }
  report.minority_domain = static_cast<CognitiveDomain>(minority);

  for (Strategy s : strategies) {
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.strategy = s;
      cfg.seed = seed;
      const TrainOutcome outcome = run_training(cfg, tasks);
      StrategySeedResult cell;
      cell.strategy = s;
      cell.seed = seed;
      cell.final_accuracy = outcome.metrics.final_accuracy;
      report.cells.push_back(cell);
    }
  }

  const std::size_t S = strategies.size();
  const std::size_t K = seeds.size();
  report.minority_mean.assign(S, 0.0);
  for (std::size_t i = 0; i < S; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      report.minority_mean[i] += report.cells[i * K + k].final_accuracy[minority];
    }
    report.minority_mean[i] /= static_cast<double>(K);
  }
  report.minority_wins.assign(S, std::vector<int>(S, 0));
  for (std::size_t i = 0; i < S; ++i) {
    for (std::size_t j = 0; j < S; ++j) {
      if (i == j) continue;
      for (std::size_t k = 0; k < K; ++k) {
        const double ai = report.cells[i * K + k].final_accuracy[minority];
        const double aj = report.cells[j * K + k].final_accuracy[minority];
        if (ai >= aj) report.minority_wins[i][j] += 1;
      }
    }
  }
  return report;
}

}  // namespace arpo
