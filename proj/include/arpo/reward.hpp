#ifndef ARPO_REWARD_HPP_
#define ARPO_REWARD_HPP_

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <variant>

#include "arpo/geometry.hpp"

namespace arpo {

enum class TaskKind {
  SingleChoice,
  MultiChoice,
  Counting,
  BBox,
  Boundary,
  OpenEnded,
  OrdinalShortAnswer,
  TripletShortAnswer,
};

enum class CognitiveDomain {
  SpatialPerception,
  ObjectUnderstanding,
  SceneUnderstanding,
  SceneReasoning,
};

constexpr int kNumDomains = 4;

const char* to_string(TaskKind kind);
const char* to_string(CognitiveDomain domain);
std::optional<TaskKind> task_kind_from_string(const std::string& s);
std::optional<CognitiveDomain> domain_from_string(const std::string& s);

struct Triplet {
  std::string entity;
  std::string attribute;
  std::string value;
  auto operator<=>(const Triplet&) const = default;
};

using LetterSet = std::set<char>;
using TripletSet = std::set<Triplet>;

// Stage index on an ordered scale of size K (indices 0..K-1, K >= 2).
struct OrdinalStage {
  long long index = 0;
  int scale = 2;
};

// Tagged ground-truth payload; the tag must match the rollout's TaskKind.
class GroundTruth {
 public:
  using Value = std::variant<char, LetterSet, long long, Box2D, std::string,
                             OrdinalStage, TripletSet>;

  static GroundTruth choice(char letter);
  static GroundTruth choices(LetterSet letters);
  static GroundTruth count(long long n);
  static GroundTruth box(Box2D b);
  static GroundTruth text(std::string reference);
  static GroundTruth ordinal(long long index, int scale);
  static GroundTruth triplets(TripletSet set);

  bool matches(TaskKind kind) const;

  const Value& value() const { return value_; }
  template <typename T>
  const T& get() const { return std::get<T>(value_); }

 private:
  explicit GroundTruth(Value v) : value_(std::move(v)) {}
  Value value_;
};

// Wrapper so the payload variant can hold both a count and an ordinal index.
struct OrdinalIndex {
  long long value = 0;
};

// Extraction result for one model response. Parse failure is a value, not an
// exception; payload holds monostate in that case.
struct ParsedResponse {
  std::string raw;
  TaskKind kind = TaskKind::SingleChoice;
  bool parse_ok = false;
  std::variant<std::monostate, char, LetterSet, long long, Box2D, std::string,
               OrdinalIndex, TripletSet>
      payload;
};

struct RewardWeights {
  double task = 0.8;
  double spatial = 0.1;
  double fmt = 0.1;
};

struct RewardBreakdown {
  double task = 0.0;
  double spatial = 0.0;
  double fmt = 0.0;
  double total = 0.0;
};

// Which IoU rule backs the task reward of each spatial kind.
struct RewardConfig {
  BBoxRewardVariant bbox_variant = BBoxRewardVariant::Bonus;
  BBoxRewardVariant boundary_variant = BBoxRewardVariant::Plain;
};

ParsedResponse parse_response(const std::string& text, TaskKind kind);

double score_single_choice(char pred, char gt);
double score_counting(long long pred, long long gt);
// sqrt(set-IoU * recall); 0 for empty pred. Throws on empty gt.
double score_multi_choice(const LetterSet& pred, const LetterSet& gt);
// 1 - |pred - gt| / (K - 1). Throws when an index is outside [0, K-1] or K < 2.
double score_ordinal(long long pred_idx, long long gt_idx, int scale);
// Exact-match F1 over triplets. Throws on empty gt.
double score_triplets(const TripletSet& pred, const TripletSet& gt);
// 1 iff the payload parsed and satisfies its type invariants.
double score_format(const ParsedResponse& resp, TaskKind kind);
// IoU against the ground-truth box for BBox/Boundary kinds; 0 otherwise.
double score_spatial(const ParsedResponse& resp, const GroundTruth& gt, TaskKind kind);
// Weighted sum; throws on a negative weight.
double combine(double r_task, double r_spatial, double r_fmt, const RewardWeights& w);

// Full per-response scoring: parse, task scorer for the kind, spatial and
// format components, weighted total. Degenerate outputs score 0 throughout.
RewardBreakdown score_rollout(const std::string& text, const GroundTruth& gt,
                              TaskKind kind, const RewardWeights& w,
                              const RewardConfig& cfg = {});

}  // namespace arpo

#endif  // ARPO_REWARD_HPP_
