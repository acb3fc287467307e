// Acceptance gate: one pass/fail line per shipping criterion, nonzero exit
// when any line fails. Each block is self-contained and uses independent
// oracles (rasterization, exhaustive enumeration, finite differences) rather
// than re-deriving values through the library under test.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "arpo/advantage.hpp"
#include "arpo/geometry.hpp"
#include "arpo/io.hpp"
#include "arpo/kmeans.hpp"
#include "arpo/reward.hpp"
#include "arpo/sim.hpp"
#include "arpo/text_metrics.hpp"
#include "arpo/vcmn.hpp"

namespace fs = std::filesystem;
using namespace arpo;

namespace {

double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0,
                double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c, d);
  return buf;
}

// One criterion's tally; the first failing check is kept for the report line.
struct Crit {
  int checks = 0;
  int fails = 0;
  std::string first;
  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok && fails++ == 0) first = what;
  }
  void near(double got, double want, double tol, const std::string& what) {
    expect(std::abs(got - want) <= tol,
           what + fmt(": got %.17g want %.17g", got, want));
  }
  void exact(double got, double want, const std::string& what) {
    expect(got == want, what + fmt(": got %.17g want %.17g", got, want));
  }
};

int g_failed = 0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(const std::string& name, const Crit& c, double elapsed,
            double budget_s, const std::string& note = "") {
  Crit copy = c;
  if (budget_s > 0.0 && elapsed >= budget_s) {
    copy.expect(false, fmt("runtime %.1f s exceeds %.0f s budget", elapsed, budget_s));
  }
  const bool ok = copy.fails == 0;
  if (!ok) ++g_failed;
  std::printf("[%s] %s", ok ? "PASS" : "FAIL", name.c_str());
  if (!note.empty()) std::printf(" — %s", note.c_str());
  std::printf(" (%d checks, %.1f s)\n", copy.checks, elapsed);
  if (!ok) std::printf("       first failure: %s\n", copy.first.c_str());
  std::fflush(stdout);
}

double pop_std(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / v.size());
}

std::vector<std::size_t> argsort(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

RolloutGroup make_group(const std::string& id, CognitiveDomain d,
                        std::vector<double> rewards,
                        std::vector<double> kl = {}) {
  RolloutGroup g;
  g.prompt_id = id;
  g.domain = d;
  g.rewards = std::move(rewards);
  g.kl = std::move(kl);
  return g;
}

// ---------------------------------------------------------------------------
// 1. Reward suite worked examples plus the rasterization oracle.
// ---------------------------------------------------------------------------

double raster_iou(const Box2D& a, const Box2D& b, int n) {
  auto inside = [](const Box2D& box, double x, double y) {
    return x >= box.x_min && x <= box.x_max && y >= box.y_min && y <= box.y_max;
  };
  long long inter = 0, uni = 0;
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) / n;
    for (int j = 0; j < n; ++j) {
      const double y = (j + 0.5) / n;
      const bool in_a = inside(a, x, y);
      const bool in_b = inside(b, x, y);
      inter += (in_a && in_b) ? 1 : 0;
      uni += (in_a || in_b) ? 1 : 0;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void criterion_reward_examples() {
  const auto t0 = Clock::now();
  Crit c;
  const double tol = 1e-9;

  // Box arithmetic.
  c.near(iou(Box2D{0, 0, 1, 1}, Box2D{0, 0, 1, 1}), 1.0, tol, "iou identical");
  c.near(iou(Box2D{0, 0, 0.5, 1}, Box2D{0.5, 0, 1, 1}), 0.0, tol, "iou touching");
  c.near(iou(Box2D{0, 0, 1, 1}, Box2D{0.5, 0, 1, 1}), 0.5, tol, "iou half overlap");
  c.near(bbox_reward(Box2D{0, 0, 1, 0.6}, Box2D{0, 0, 1, 1}, BBoxRewardVariant::Bonus),
         1.0, tol, "bonus at overlap 0.6");
  c.near(bbox_reward(Box2D{0, 0, 1, 0.5}, Box2D{0, 0, 1, 1}, BBoxRewardVariant::Bonus),
         0.5, tol, "bonus boundary at overlap 0.5");
  c.near(bbox_reward(Box2D{0, 0, 1, 1}, Box2D{0, 0, 1, 1}, BBoxRewardVariant::Plain),
         1.0, tol, "plain identity");

  // Tokenizer and text similarity.
  c.expect(tokenize("Black Measles Fungus.") ==
               std::vector<std::string>{"black", "measles", "fungus"},
           "tokenize lowercases and strips punctuation");
  c.expect(tokenize("").empty(), "tokenize empty string");
  c.expect(tokenize("12,200-12,300 m") ==
               std::vector<std::string>{"12", "200", "12", "300", "m"},
           "tokenize splits on punctuation");
  const TokenSeq abc = {"a", "b", "c"};
  c.expect(lcs_length(abc, abc) == 3, "lcs identity");
  c.expect(lcs_length({"a", "b"}, {"c", "d"}) == 0, "lcs disjoint");
  const TokenSeq crop_a = {"the", "crop", "is", "healthy"};
  const TokenSeq crop_b = {"the", "crop", "looks", "healthy"};
  c.expect(lcs_length(crop_a, crop_b) == 3, "lcs one substitution");
  c.near(rouge_l_f(abc, abc), 1.0, tol, "rouge identity");
  c.near(rouge_l_f({"a", "b"}, {"c", "d"}), 0.0, tol, "rouge disjoint");
  c.near(rouge_l_f(crop_a, crop_b), 0.75, tol, "rouge one substitution");
  c.near(length_penalty(4, 4), 1.0, tol, "length penalty equal");
  c.near(length_penalty(8, 4), 0.5, tol, "length penalty double");
  c.near(length_penalty(2, 4), 1.0, tol, "length penalty short");
  c.near(open_ended_reward("the crop is healthy", "the crop is healthy"), 1.0, tol,
         "open-ended identity");
  // Reference repeated twice: recall 1, precision 1/2, then a 1/2 penalty.
  c.near(open_ended_reward("the crop is healthy the crop is healthy",
                           "the crop is healthy"),
         0.5 * (2.0 * 0.5 * 1.0 / 1.5), tol, "open-ended verbose duplicate");
  c.near(open_ended_reward("completely unrelated words", "the crop is healthy"),
         0.0, tol, "open-ended disjoint");

  // Response parsing.
  const ParsedResponse r1 = parse_response("B", TaskKind::SingleChoice);
  c.expect(r1.parse_ok && std::get<char>(r1.payload) == 'B', "parse single letter");
  const ParsedResponse r2 = parse_response("(0.1, 0.2, 0.5, 0.9)", TaskKind::BBox);
  c.expect(r2.parse_ok, "parse box tuple");
  if (r2.parse_ok) {
    const Box2D b = std::get<Box2D>(r2.payload);
    c.expect(b.x_min == 0.1 && b.y_min == 0.2 && b.x_max == 0.5 && b.y_max == 0.9,
             "parsed box coordinates");
  }
  c.expect(!parse_response("banana", TaskKind::Counting).parse_ok,
           "counting parse fails without digits");

  // Task scorers.
  c.near(score_single_choice('B', 'B'), 1.0, tol, "choice match");
  c.near(score_single_choice('b', 'B'), 1.0, tol, "choice case-insensitive");
  c.near(score_single_choice('A', 'B'), 0.0, tol, "choice mismatch");
  c.near(score_counting(10, 10), 1.0, tol, "count exact");
  c.near(score_counting(8, 10), 0.8, tol, "count off by two of ten");
  c.near(score_counting(3, 0), 0.0, tol, "count against zero truth");
  c.near(score_multi_choice({'A', 'B'}, {'A', 'B'}), 1.0, tol, "multi equal sets");
  c.near(score_multi_choice({'A'}, {'A', 'B'}), 0.5, tol, "multi half recall");
  c.near(score_multi_choice({'C'}, {'A', 'B'}), 0.0, tol, "multi disjoint");
  c.near(score_ordinal(3, 3, 5), 1.0, tol, "ordinal exact");
  c.near(score_ordinal(2, 4, 5), 0.5, tol, "ordinal two steps of four");
  c.near(score_ordinal(0, 4, 5), 0.0, tol, "ordinal maximal distance");
  const TripletSet two = {Triplet{"leaf", "color", "brown"},
                          Triplet{"stem", "state", "dry"}};
  c.near(score_triplets(two, two), 1.0, tol, "triplets identical");
  c.near(score_triplets({Triplet{"leaf", "color", "brown"}}, two), 2.0 / 3.0, tol,
         "triplets one of two");
  c.near(score_triplets({Triplet{"x", "y", "z"}}, two), 0.0, tol, "triplets disjoint");

  // Format and spatial components.
  c.near(score_format(r1, TaskKind::SingleChoice), 1.0, tol, "format valid letter");
  const ParsedResponse bad_box = parse_response("[0.9, 0.2, 0.1, 0.9]", TaskKind::BBox);
  c.near(score_format(bad_box, TaskKind::BBox), 0.0, tol, "format inverted box");
  c.near(score_format(parse_response("banana", TaskKind::Counting), TaskKind::Counting),
         0.0, tol, "format unparsable count");
  const GroundTruth gt_box = GroundTruth::box(Box2D{0, 0, 1, 1});
  c.near(score_spatial(parse_response("[0, 0, 1, 1]", TaskKind::Boundary), gt_box,
                       TaskKind::Boundary),
         1.0, tol, "spatial perfect box");
  c.near(score_spatial(r1, GroundTruth::choice('B'), TaskKind::SingleChoice), 0.0, tol,
         "spatial zero for non-spatial kind");
  c.near(score_spatial(parse_response("(0.5, 0, 1, 1)", TaskKind::BBox), gt_box,
                       TaskKind::BBox),
         0.5, tol, "spatial half overlap");

  // Weighted combination and full scoring.
  const RewardWeights w{};
  c.near(combine(1.0, 0.5, 1.0, w), 0.95, tol, "combine mixed");
  c.near(combine(0.0, 0.0, 0.0, w), 0.0, tol, "combine zeros");
  c.near(combine(1.0, 1.0, 1.0, w), 1.0, tol, "combine all ones");
  const RewardBreakdown perfect_choice =
      score_rollout("B", GroundTruth::choice('B'), TaskKind::SingleChoice, w);
  c.expect(perfect_choice.task == 1.0 && perfect_choice.spatial == 0.0 &&
               perfect_choice.fmt == 1.0,
           "perfect choice breakdown");
  c.near(perfect_choice.total, 0.9, tol, "perfect choice total");
  const RewardBreakdown perfect_boundary =
      score_rollout("[0.1, 0.2, 0.5, 0.9]", GroundTruth::box(Box2D{0.1, 0.2, 0.5, 0.9}),
                    TaskKind::Boundary, w);
  c.expect(perfect_boundary.task == 1.0 && perfect_boundary.spatial == 1.0 &&
               perfect_boundary.fmt == 1.0,
           "perfect boundary breakdown");
  c.near(perfect_boundary.total, 1.0, tol, "perfect boundary total");
  const RewardBreakdown garbage =
      score_rollout("???", GroundTruth::count(4), TaskKind::Counting, w);
  c.expect(garbage.task == 0.0 && garbage.spatial == 0.0 && garbage.fmt == 0.0 &&
               garbage.total == 0.0,
           "garbage scores zero");

  // Rasterization oracle over random pairs. Sides of at least 0.1 keep the
  // union well resolved on the 1000x1000 grid.
  std::mt19937_64 rng(42);
  auto sized_box = [&]() {
    const double wdt = 0.1 + 0.9 * unit(rng);
    const double hgt = 0.1 + 0.9 * unit(rng);
    const double x = (1.0 - wdt) * unit(rng);
    const double y = (1.0 - hgt) * unit(rng);
    return Box2D{x, y, x + wdt, y + hgt};
  };
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Box2D a = sized_box();
    const Box2D b = sized_box();
    worst = std::max(worst, std::abs(iou(a, b) - raster_iou(a, b, 1000)));
  }
  c.expect(worst < 2e-3, fmt("raster oracle worst gap %.6g >= 2e-3", worst));

  report("reward worked examples exact to 1e-9; raster oracle within 2e-3", c,
         seconds_since(t0), 5.0);
}

// ---------------------------------------------------------------------------
// 2. The weighted total for a perfect rollout, every task kind.
// ---------------------------------------------------------------------------

struct PerfectCase {
  TaskKind kind;
  const char* response;
  GroundTruth gt;
};

std::vector<PerfectCase> perfect_cases() {
  return {
      {TaskKind::SingleChoice, "B", GroundTruth::choice('B')},
      {TaskKind::MultiChoice, "A, C", GroundTruth::choices({'A', 'C'})},
      {TaskKind::Counting, "12", GroundTruth::count(12)},
      {TaskKind::BBox, "(0.1, 0.2, 0.5, 0.9)", GroundTruth::box(Box2D{0.1, 0.2, 0.5, 0.9})},
      {TaskKind::Boundary, "[0.1, 0.2, 0.5, 0.9]", GroundTruth::box(Box2D{0.1, 0.2, 0.5, 0.9})},
      {TaskKind::OpenEnded, "the crop is healthy", GroundTruth::text("the crop is healthy")},
      {TaskKind::OrdinalShortAnswer, "2", GroundTruth::ordinal(2, 5)},
      {TaskKind::TripletShortAnswer, "(leaf, color, brown)",
       GroundTruth::triplets({Triplet{"leaf", "color", "brown"}})},
  };
}

void criterion_weighting() {
  const auto t0 = Clock::now();
  Crit c;
  const RewardWeights w{};
  for (const PerfectCase& pc : perfect_cases()) {
    const RewardBreakdown b = score_rollout(pc.response, pc.gt, pc.kind, w);
    const bool spatial = pc.kind == TaskKind::BBox || pc.kind == TaskKind::Boundary;
    const std::string name = to_string(pc.kind);
    c.exact(b.task, 1.0, name + " task");
    c.exact(b.fmt, 1.0, name + " fmt");
    c.exact(b.spatial, spatial ? 1.0 : 0.0, name + " spatial");
    c.exact(b.total, spatial ? 1.0 : 0.9, name + " total");
  }
  report("perfect rollouts total exactly 1.0 (spatial) / 0.9 (non-spatial) for every kind",
         c, seconds_since(t0), 0.0);
}

// ---------------------------------------------------------------------------
// 3. Group-relative advantage invariants.
// ---------------------------------------------------------------------------

void criterion_grpo_invariants() {
  const auto t0 = Clock::now();
  Crit c;
  std::mt19937_64 rng(7);

  for (int t = 0; t < 1000; ++t) {
    const std::size_t g = 2 + rng() % 15;
    std::vector<double> rewards(g);
    for (double& r : rewards) r = unit(rng);
    const auto a = grpo_advantages(rewards, 1e-4);
    const double sum = std::accumulate(a.begin(), a.end(), 0.0);
    c.expect(std::abs(sum) < 1e-9 * static_cast<double>(g),
             fmt("zero-sum violated: |sum| = %.3g at G = %.0f", std::abs(sum),
                 static_cast<double>(g)));
  }

  for (double eps : {0.0, 1e-4}) {
    for (double v : {0.0, 0.7, -1.25}) {
      const auto a = grpo_advantages({v, v, v, v, v}, eps);
      bool zeros = true;
      for (double x : a) zeros = zeros && x == 0.0;
      c.expect(zeros, fmt("all-equal rewards %.3g at eps %.0e not exactly zero", v, eps));
    }
  }

  // Hand case [1, 0, 0.5, 0.5]: mean 0.5, population variance 0.125.
  const double sigma = std::sqrt(0.125);
  for (double eps : {0.0, 1e-4}) {
    const auto a = grpo_advantages({1.0, 0.0, 0.5, 0.5}, eps);
    const double d = sigma + eps;
    c.near(a[0], 0.5 / d, 1e-9, fmt("hand case a[0] at eps %.0e", eps));
    c.near(a[1], -0.5 / d, 1e-9, fmt("hand case a[1] at eps %.0e", eps));
    c.near(a[2], 0.0, 1e-9, fmt("hand case a[2] at eps %.0e", eps));
    c.near(a[3], 0.0, 1e-9, fmt("hand case a[3] at eps %.0e", eps));
  }

  report("group advantages: zero-sum on 1000 random groups, all-equal zeros, hand case",
         c, seconds_since(t0), 5.0);
}

// ---------------------------------------------------------------------------
// 4. Pipeline reduction at zero curriculum and zero KL.
// ---------------------------------------------------------------------------

void criterion_grpo_reduction() {
  const auto t0 = Clock::now();
  Crit c;
  std::mt19937_64 rng(11);
  const std::array<CognitiveDomain, 4> domains = {
      CognitiveDomain::SpatialPerception, CognitiveDomain::ObjectUnderstanding,
      CognitiveDomain::SceneUnderstanding, CognitiveDomain::SceneReasoning};

  for (int batch = 0; batch < 100; ++batch) {
    PipelineConfig cfg;
    cfg.curriculum.total_steps = 1000;
    std::vector<RolloutGroup> groups;
    const int n_groups = 2 + static_cast<int>(rng() % 5);
    for (int g = 0; g < n_groups; ++g) {
      const std::size_t size = 2 + rng() % 7;
      std::vector<double> rewards(size);
      rewards[0] = 0.4 * unit(rng);
      // Randomized spread past the skip threshold keeps every group retained.
      const double spread = 0.06 + 0.3 * unit(rng);
      rewards[1] = rewards[0] + spread;
      for (std::size_t i = 2; i < size; ++i) {
        rewards[i] = rewards[0] + spread * unit(rng);
      }
      groups.push_back(make_group("g" + std::to_string(g),
                                  domains[rng() % domains.size()], rewards));
    }

    const ArpoResult res = compute_arpo(groups, 0, cfg);
    std::vector<double> grpo;
    for (const RolloutGroup& g : groups) {
      const auto a = grpo_advantages(g.rewards, cfg.grpo_eps);
      grpo.insert(grpo.end(), a.begin(), a.end());
    }
    c.expect(res.records.size() == grpo.size(), "record count mismatch");
    if (res.records.size() != grpo.size()) break;

    double scale = 0.0;
    for (std::size_t i = 0; i < grpo.size(); ++i) {
      c.exact(res.records[i].a_grpo, grpo[i], "stored stage value");
      c.exact(res.records[i].m, 1.0, "dampening active despite zero KL");
      if (scale == 0.0 && std::abs(grpo[i]) > 1e-12) {
        scale = res.records[i].a_final / grpo[i];
      }
    }
    c.expect(scale > 0.0, "shared scale not positive");
    std::vector<double> finals;
    for (std::size_t i = 0; i < grpo.size(); ++i) {
      finals.push_back(res.records[i].a_final);
      const double want = scale * grpo[i];
      c.expect(std::abs(res.records[i].a_final - want) <=
                   1e-9 * std::max(1.0, std::abs(want)),
               fmt("record %.0f deviates from shared scaling", static_cast<double>(i)));
    }
    // Order preservation, with inputs one ulp apart allowed to merge: the
    // division by the batch std can round two near-identical advantages onto
    // the same double, so ties are compared as ties instead of by index.
    const auto order = argsort(grpo);
    const auto forder = argsort(finals);
    for (std::size_t r = 1; r < order.size(); ++r) {
      c.expect(finals[order[r]] >= finals[order[r - 1]],
               "inversion: finals decrease along the plain-advantage order");
      c.expect(grpo[forder[r]] >= grpo[forder[r - 1]],
               "inversion: plain advantages decrease along the final order");
    }
  }

  report("zero-curriculum, zero-KL pipeline is plain advantages times one positive scalar",
         c, seconds_since(t0), 0.0);
}

// ---------------------------------------------------------------------------
// 5. Temperature laws.
// ---------------------------------------------------------------------------

void criterion_temperature_laws() {
  const auto t0 = Clock::now();
  Crit c;
  std::mt19937_64 rng(13);
  const double floor = 1e-6;

  for (int t = 0; t < 200; ++t) {
    const long long n = 1 + static_cast<long long>(rng() % 50);
    const double mu = 0.05 + unit(rng);
    const double d_mu = 0.01 + unit(rng);
    c.expect(domain_temperature(n + 1, mu, floor) > domain_temperature(n, mu, floor),
             "temperature not increasing in group count");
    c.expect(domain_temperature(n, mu + d_mu, floor) > domain_temperature(n, mu, floor),
             "temperature not increasing in mean reward");
  }
  c.exact(domain_temperature(3, 0.0, floor), floor, "floor at zero mean");
  c.exact(domain_temperature(4, -0.5, floor), floor, "floor at negative mean");
  c.exact(domain_temperature(1, 1e-9, floor), floor, "floor above tiny product");

  // Two domains with identical per-group reward patterns: only the group count
  // differs, so the smaller domain has the strictly smaller temperature
  // product and must come out of the full-curriculum pipeline strictly larger
  // in magnitude.
  for (int t = 0; t < 50; ++t) {
    const double lo = 0.1 + 0.2 * unit(rng);
    const double hi = std::min(1.0, lo + 0.1 + 0.5 * unit(rng));
    const int n_large = 3 + static_cast<int>(rng() % 4);
    const int n_small = 1 + static_cast<int>(rng() % 2);
    PipelineConfig cfg;
    cfg.curriculum.total_steps = 100;

    std::vector<RolloutGroup> groups;
    for (int g = 0; g < n_large; ++g) {
      groups.push_back(make_group("L" + std::to_string(g),
                                  CognitiveDomain::ObjectUnderstanding, {lo, hi}));
    }
    for (int g = 0; g < n_small; ++g) {
      groups.push_back(make_group("S" + std::to_string(g),
                                  CognitiveDomain::SceneReasoning, {lo, hi}));
    }
    const ArpoResult res = compute_arpo(groups, 100, cfg);
    c.expect(res.lambda == 1.0, "curriculum not saturated at the final step");

    double max_large = 0.0, min_small = 1e300;
    for (const AdvantageRecord& rec : res.records) {
      if (rec.domain == CognitiveDomain::ObjectUnderstanding) {
        max_large = std::max(max_large, std::abs(rec.a_final));
      } else {
        min_small = std::min(min_small, std::abs(rec.a_final));
      }
    }
    c.expect(min_small > max_large,
             fmt("smaller domain not amplified: min %.6g vs max %.6g", min_small,
                 max_large));
  }

  report("temperatures grow with count and mean; cooler domain amplified at full curriculum",
         c, seconds_since(t0), 0.0);
}

// ---------------------------------------------------------------------------
// 6. Dampening laws.
// ---------------------------------------------------------------------------

void criterion_dampening_laws() {
  const auto t0 = Clock::now();
  Crit c;
  std::mt19937_64 rng(17);
  const DampeningConfig dcfg;

  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 4 + rng() % 20;
    std::vector<double> s(n), kl(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = (unit(rng) < 0.3 ? -1.0 : 1.0) * (0.1 + 1.9 * unit(rng));
      kl[i] = 0.01 + unit(rng);
    }
    s[0] = std::abs(s[0]);  // at least one positive product per batch
    const auto [m, damped] = kl_dampen(s, kl, dcfg);

    for (std::size_t i = 0; i < n; ++i) {
      c.expect(m[i] > 0.0 && m[i] <= 1.0, "multiplier outside (0, 1]");
      const double prod = s[i] * kl[i];
      if (prod <= 0.0) {
        c.exact(m[i], 1.0, "non-positive drift not left untouched");
      } else {
        c.expect(m[i] < 1.0, "positive drift not dampened");
      }
      c.exact(damped[i], m[i] * s[i], "dampened value inconsistent with multiplier");
    }

    // Strictly decreasing in the drift product.
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
      const double prod = s[i] * kl[i];
      if (prod > 0.0) pairs.emplace_back(prod, m[i]);
    }
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t i = 1; i < pairs.size(); ++i) {
      if (pairs[i].first >= pairs[i - 1].first * (1.0 + 1e-9)) {
        c.expect(pairs[i].second < pairs[i - 1].second,
                 "multiplier not strictly decreasing in drift");
      }
    }
  }

  // Hand case: every product 0.5, so the percentile is 0.5 and m = 0.5.
  const std::vector<double> ones(6, 1.0);
  const std::vector<double> halves(6, 0.5);
  const auto [m_hand, damped_hand] = kl_dampen(ones, halves, dcfg);
  for (double m : m_hand) c.near(m, 0.5, 1e-12, "hand case multiplier");
  for (double d : damped_hand) c.near(d, 0.5, 1e-12, "hand case dampened value");

  report("dampening in (0,1], identity iff non-positive drift, strictly decreasing; hand case",
         c, seconds_since(t0), 0.0);
}

// ---------------------------------------------------------------------------
// 7. Batch renormalization.
// ---------------------------------------------------------------------------

void criterion_renormalization() {
  const auto t0 = Clock::now();
  Crit c;
  std::mt19937_64 rng(19);

  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng() % 49;
    std::vector<double> v(n);
    for (double& x : v) x = 6.0 * unit(rng) - 3.0;
    v[0] += 1.0;  // guarantees spread even for tiny batches
    bool degenerate = true;
    const auto y = batch_renormalize(v, &degenerate);
    c.expect(!degenerate, "non-degenerate batch flagged degenerate");
    c.near(pop_std(y), 1.0, 1e-9, "population std after renormalization");

    const auto z = batch_renormalize(y, nullptr);
    for (std::size_t i = 0; i < n; ++i) {
      c.expect(std::abs(z[i] - y[i]) <= 1e-12 * std::max(1.0, std::abs(y[i])),
               "renormalization not idempotent");
    }
  }

  // Exactly-unit batch passes through bitwise.
  const std::vector<double> exact = {1.0, -1.0};
  c.expect(batch_renormalize(exact, nullptr) == exact, "unit batch altered");
  const auto halved = batch_renormalize({2.0, -2.0}, nullptr);
  c.expect(halved == exact, "[2, -2] did not renormalize to [1, -1]");

  report("renormalized batches have unit population std; idempotent", c,
         seconds_since(t0), 0.0);
}

// ---------------------------------------------------------------------------
// 8. Skip rule boundary.
// ---------------------------------------------------------------------------

void criterion_skip_rule() {
  const auto t0 = Clock::now();
  Crit c;

  const std::vector<RolloutGroup> groups = {
      make_group("narrow", CognitiveDomain::ObjectUnderstanding, {0.0, 0.04}),
      make_group("exact", CognitiveDomain::ObjectUnderstanding, {0.0, 0.05}),
      make_group("wide", CognitiveDomain::SceneReasoning, {0.1, 0.9}),
  };
  const auto [kept, rep] = skip_degenerate_groups(groups, 0.05);
  c.expect(rep.groups_in == 3, "input count wrong");
  c.expect(rep.groups_retained == 2, "retained count wrong");
  c.expect(kept.size() == 2 && kept[0].prompt_id == "exact" && kept[1].prompt_id == "wide",
           "range 0.05 group was not kept");
  c.expect(rep.skipped_prompt_ids == std::vector<std::string>{"narrow"},
           "range 0.04 group was not skipped");

  PipelineConfig cfg;
  cfg.curriculum.total_steps = 10;
  const ArpoResult res = compute_arpo(groups, 5, cfg);
  c.expect(res.skips.skipped_prompt_ids == std::vector<std::string>{"narrow"},
           "pipeline skip report disagrees");
  for (const AdvantageRecord& rec : res.records) {
    c.expect(rec.prompt_id != "narrow", "skipped group leaked into records");
  }

  report("reward range 0.04 skipped, 0.05 retained", c, seconds_since(t0), 0.0);
}

// ---------------------------------------------------------------------------
// 9. K-means against the exhaustive-assignment optimum.
// ---------------------------------------------------------------------------

double best_sse_exhaustive(const std::vector<std::vector<double>>& pts, int k) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts[0].size();
  double best = 1e300;
  std::vector<int> labels(n, 0);
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= static_cast<std::size_t>(k);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(c % k);
      c /= static_cast<std::size_t>(k);
    }
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      counts[labels[i]] += 1;
      for (std::size_t d = 0; d < dim; ++d) sums[labels[i]][d] += pts[i][d];
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = pts[i][d] - sums[labels[i]][d] / counts[labels[i]];
        sse += diff * diff;
      }
    }
    best = std::min(best, sse);
  }
  return best;
}

void criterion_kmeans_oracle() {
  const auto t0 = Clock::now();
  Crit c;
  std::mt19937_64 rng(23);

  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    std::vector<std::vector<double>> pts(n, std::vector<double>(4));
    for (auto& p : pts) {
      for (double& x : p) x = unit(rng);
    }
    for (int k : {1, 2}) {
      KMeansConfig cfg;
      cfg.k = k;
      cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
      cfg.restarts = 10;
      const KMeansResult res = kmeans(pts, cfg);
      const double best = best_sse_exhaustive(pts, k);
      c.expect(res.sse <= best + 1e-9 * std::max(1.0, best),
               fmt("trial %.0f k=%.0f: sse %.12g above optimum %.12g",
                   static_cast<double>(trial), static_cast<double>(k), res.sse, best));
      const KMeansResult rerun = kmeans(pts, cfg);
      c.expect(rerun.assignments == res.assignments && rerun.sse == res.sse,
               "repeated run differs for the same seed");
    }
  }

  report("k-means ties the exhaustive optimum on 50 small batches in R^4; deterministic",
         c, seconds_since(t0), 0.0);
}

// ---------------------------------------------------------------------------
// 10. Meta-net identity, gradients, equivariance.
// ---------------------------------------------------------------------------

Matrix random_matrix(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  Matrix m(n, d);
  for (double& x : m.data) x = 2.0 * unit(rng) - 1.0;
  return m;
}

Matrix dyadic_matrix(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  Matrix m(n, d);
  for (double& x : m.data) {
    const long long k = static_cast<long long>(rng() % (1u << 21)) - (1 << 20);
    x = static_cast<double>(k) / 1024.0;
  }
  return m;
}

double scalar_loss(const Matrix& out, const Matrix& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.data.size(); ++i) s += out.data[i] * weights.data[i];
  return s;
}

void criterion_vcmn() {
  const auto t0 = Clock::now();
  Crit c;
  std::mt19937_64 rng(29);

  // Identity at initialization, bitwise.
  for (int t = 0; t < 50; ++t) {
    const std::size_t r = std::size_t{1} << (rng() % 4);  // 1, 2, 4, 8
    const std::size_t mult = 1 + rng() % (32 / r);
    const std::size_t D = r * mult;
    const std::size_t N = 1 + rng() % 8;
    const MetaNetParams p = init_params(D, r, rng());
    const Matrix X = random_matrix(N, D, rng);
    const Matrix out = vcmn_forward(p, X);
    c.expect(out.data == X.data,
             fmt("instance %.0f (N=%.0f, D=%.0f) not a bitwise identity",
                 static_cast<double>(t), static_cast<double>(N), static_cast<double>(D)));
  }

  // Central finite differences on every parameter and input entry.
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t r = std::size_t{1} << (rng() % 3);
    const std::size_t mult = 1 + rng() % (32 / r);
    const std::size_t D = r * mult;
    const std::size_t N = 1 + rng() % 8;
    MetaNetParams p = init_params(D, r, rng());
    for (double& w : p.W2.data) w = unit(rng) - 0.5;
    for (double& w : p.W1.data) w += 0.01 * (unit(rng) - 0.5);  // off the ReLU kinks
    const Matrix X = random_matrix(N, D, rng);
    const Matrix G = random_matrix(N, D, rng);
    const VcmnGradients an = vcmn_backward(p, X, G);
    const double h = 1e-5;

    auto fd_vs = [&](Matrix& target, const Matrix& analytic, auto forward) {
      for (std::size_t i = 0; i < target.data.size(); ++i) {
        const double keep = target.data[i];
        target.data[i] = keep + h;
        const double up = scalar_loss(forward(), G);
        target.data[i] = keep - h;
        const double dn = scalar_loss(forward(), G);
        target.data[i] = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double rel = std::abs(fd - analytic.data[i]) /
                           std::max({std::abs(fd), std::abs(analytic.data[i]), 1e-6});
        worst = std::max(worst, rel);
      }
    };
    fd_vs(p.W1, an.dW1, [&] { return vcmn_forward(p, X); });
    fd_vs(p.W2, an.dW2, [&] { return vcmn_forward(p, X); });
    Matrix Xm = X;
    fd_vs(Xm, an.dX, [&] { return vcmn_forward(p, Xm); });
  }
  c.expect(worst < 1e-5, fmt("worst gradient relative error %.3g >= 1e-5", worst));

  // Permutation equivariance, exact on dyadic inputs.
  for (int t = 0; t < 30; ++t) {
    const std::size_t D = 8;
    const std::size_t N = 2 + rng() % 7;
    MetaNetParams p = init_params(D, 4, rng());
    for (double& w : p.W2.data) w = 2.0 * unit(rng) - 1.0;
    const Matrix X = dyadic_matrix(N, D, rng);
    const Matrix out = vcmn_forward(p, X);
    std::vector<std::size_t> perm(N);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix Xp(N, D);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < D; ++j) Xp.at(i, j) = X.at(perm[i], j);
    }
    const Matrix outp = vcmn_forward(p, Xp);
    bool equal = true;
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < D; ++j) {
        equal = equal && outp.at(i, j) == out.at(perm[i], j);
      }
    }
    c.expect(equal, "row permutation changed an output entry");
  }

  report("meta-net: bitwise identity at init, gradcheck < 1e-5, exact equivariance", c,
         seconds_since(t0), 10.0);
}

// ---------------------------------------------------------------------------
// 11. Clipped surrogate value, gradient, and the high-beta anchor.
// ---------------------------------------------------------------------------

void criterion_surrogate() {
  const auto t0 = Clock::now();
  Crit c;

  for (double adv : {2.0, 0.5, 1e-3, 7.25}) {
    c.exact(clipped_surrogate_term(1.5, adv, 0.2), 1.2 * adv,
            fmt("clipped branch at advantage %.3g", adv));
  }

  // With the policy equal to the sampling policy every ratio is exactly 1 and
  // the gradient is the advantage-weighted score function.
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const int n_actions = 3 + static_cast<int>(rng() % 4);
    std::vector<double> logits(n_actions);
    for (double& l : logits) l = 2.0 * unit(rng) - 1.0;
    const int g_size = 2 + static_cast<int>(rng() % 5);
    const GroupSample group = sample_group(logits, g_size, 0.9, rng());
    std::vector<double> advs(g_size);
    for (double& a : advs) a = 2.0 * unit(rng) - 1.0;
    const std::vector<double> probs = softmax(logits, 1.0);

    const auto grad = clipped_surrogate_grad(logits, group, advs, 0.2, 0.0, probs);
    std::vector<double> want(n_actions, 0.0);
    const double inv_g = 1.0 / static_cast<double>(g_size);
    for (int i = 0; i < g_size; ++i) {
      const double w = inv_g * advs[i] * 1.0;
      for (int b = 0; b < n_actions; ++b) {
        want[b] += w * ((b == group.actions[i] ? 1.0 : 0.0) - probs[b]);
      }
    }
    c.expect(grad == want, "unit-ratio gradient is not exactly the score function");
  }

  // A huge KL coefficient pins the policy to the reference on every prompt.
  EnvSpec spec;
  spec.counts = {{CognitiveDomain::ObjectUnderstanding, 6},
                 {CognitiveDomain::SceneReasoning, 4}};
  spec.seed = 3;
  const auto tasks = make_env(spec);
  TrainConfig tc;
  tc.beta = 1e3;
  tc.learning_rate = 0.002;
  tc.total_steps = 200;
  tc.seed = 1;
  tc.strategy = Strategy::ARPO;
  const TrainOutcome out = run_training(tc, tasks);
  double worst_tv = 0.0;
  for (std::size_t p = 0; p < out.final_policy.logits.size(); ++p) {
    const auto pa = softmax(out.final_policy.logits[p], 1.0);
    const auto pb = softmax(out.reference_policy.logits[p], 1.0);
    double tv = 0.0;
    for (std::size_t a = 0; a < pa.size(); ++a) tv += std::abs(pa[a] - pb[a]);
    worst_tv = std::max(worst_tv, 0.5 * tv);
  }
  c.expect(worst_tv <= 0.05,
           fmt("policy drifted: worst total variation %.4f > 0.05", worst_tv));

  report("clipped surrogate: clipped-branch value, exact unit-ratio gradient, high-beta anchor",
         c, seconds_since(t0), 0.0);
}

// ---------------------------------------------------------------------------
// 12. Directional rebalancing on the imbalanced environment.
// ---------------------------------------------------------------------------

void criterion_rebalancing() {
  const auto t0 = Clock::now();
  Crit c;

  EnvSpec spec;
  spec.counts = {{CognitiveDomain::ObjectUnderstanding, 70},
                 {CognitiveDomain::SceneUnderstanding, 15},
                 {CognitiveDomain::SpatialPerception, 8},
                 {CognitiveDomain::SceneReasoning, 7}};
  spec.seed = 0;
  const auto tasks = make_env(spec);

  TrainConfig base;
  base.group_size = 8;
  base.clip_eps = 0.2;
  base.beta = 0.05;
  base.sample_temperature = 0.9;
  // At the library default step size every strategy saturates the deceptive
  // domain and the comparison degenerates to a tie; this rate sits in the
  // window where the escape depends on the advantage pipeline.
  base.learning_rate = 0.003;
  base.total_steps = 1000;

  const std::vector<Strategy> strategies = {Strategy::GRPO, Strategy::ARPO};
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  const ComparisonReport rep = compare_strategies(base, strategies, seeds, tasks);

  c.expect(rep.minority_domain == CognitiveDomain::SceneReasoning,
           "minority domain is not the deceptive one");
  const int wins = rep.minority_wins[1][0];  // ARPO >= GRPO, per seed
  const double gap = rep.minority_mean[1] - rep.minority_mean[0];
  c.expect(wins >= 4, fmt("ARPO >= GRPO on only %.0f of 5 seeds", static_cast<double>(wins)));
  c.expect(gap >= 0.0, fmt("mean minority accuracy gap %.4f < 0", gap));

  report("rebalancing: minority-domain accuracy favors the full pipeline across seeds", c,
         seconds_since(t0), 300.0,
         fmt("ARPO >= GRPO on %.0f/5 seeds, mean gap %+.3f", static_cast<double>(wins), gap));
}

// ---------------------------------------------------------------------------
// 13. CLI determinism.
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<unreadable>";
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ARPO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

void criterion_cli_determinism() {
  const auto t0 = Clock::now();
  Crit c;

  const fs::path dir =
      fs::temp_directory_path() / ("arpo_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);

  std::string rollouts;
  const char* responses1[] = {"B", "A", "no idea", "B"};
  for (const char* r : responses1) {
    rollouts += std::string("{\"prompt_id\":\"p0\",\"domain\":\"ObjectUnderstanding\","
                            "\"task_kind\":\"single_choice\",\"response\":\"") +
                r + "\",\"ground_truth\":{\"choice\":\"B\"}}\n";
  }
  const char* responses2[] = {"4", "5", "0", "none"};
  for (const char* r : responses2) {
    rollouts += std::string("{\"prompt_id\":\"p1\",\"domain\":\"SceneReasoning\","
                            "\"task_kind\":\"counting\",\"response\":\"") +
                r + "\",\"ground_truth\":{\"count\":4}}\n";
  }
  const fs::path input = dir / "rollouts.jsonl";
  std::ofstream(input) << rollouts;

  const fs::path config = dir / "config.json";
  std::ofstream(config) << R"({
    "train": {"group_size": 4, "total_steps": 30, "learning_rate": 0.05},
    "env": {"counts": {"ObjectUnderstanding": 4, "SceneReasoning": 3},
            "action_count": 5, "seed": 0},
    "strategies": ["GRPO", "ARPO"],
    "seeds": [1, 2, 3]
  })";

  const std::string in_q = "\"" + input.string() + "\"";
  const std::string cfg_q = "\"" + config.string() + "\"";
  auto twice = [&](const std::string& verb, const std::string& tail_args,
                   const std::string& out_name, bool is_dir) {
    const fs::path out_a = dir / (out_name + "_a");
    const fs::path out_b = dir / (out_name + "_b");
    for (const fs::path& out : {out_a, out_b}) {
      const int code =
          run_cli(verb + " " + tail_args + " --output \"" + out.string() + "\"");
      c.expect(code == 0, verb + fmt(" exited with %.0f", static_cast<double>(code)));
    }
    if (is_dir) {
      c.expect(fs::is_directory(out_a), verb + " produced no output directory");
      std::size_t files = 0;
      for (const auto& entry : fs::directory_iterator(out_a)) {
        ++files;
        const fs::path twin = out_b / entry.path().filename();
        c.expect(fs::exists(twin) && slurp(entry.path()) == slurp(twin),
                 verb + " rerun differs in " + entry.path().filename().string());
      }
      c.expect(files > 0, verb + " wrote no files");
    } else {
      const std::string bytes = slurp(out_a);
      c.expect(!bytes.empty() && bytes == slurp(out_b), verb + " rerun differs");
    }
  };

  twice("score", "--input " + in_q, "score.jsonl", false);
  twice("advantage", "--input " + in_q + " --step 400 --seed 5", "adv.jsonl", false);
  twice("simulate", "--config " + cfg_q, "sim", true);
  twice("compare", "--config " + cfg_q, "cmp.json", false);
  twice("report", "--input " + in_q + " --step 400", "report.json", false);

  std::error_code ec;
  fs::remove_all(dir, ec);

  report("every CLI command re-run with identical inputs is byte-identical", c,
         seconds_since(t0), 0.0);
}

}  // namespace

int main() {
  criterion_reward_examples();
  criterion_weighting();
  criterion_grpo_invariants();
  criterion_grpo_reduction();
  criterion_temperature_laws();
  criterion_dampening_laws();
  criterion_renormalization();
  criterion_skip_rule();
  criterion_kmeans_oracle();
  criterion_vcmn();
  criterion_surrogate();
  criterion_rebalancing();
  criterion_cli_determinism();

  std::printf("%d/13 criteria passed\n", 13 - g_failed);
  return g_failed == 0 ? 0 : 1;
}
