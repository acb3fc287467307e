#include "arpo/reward.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "arpo/text_metrics.hpp"

namespace arpo {

namespace {

bool ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

bool ascii_alpha(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }

bool ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

char upper(char c) {
  if (c >= 'a' && c <= 'z') return static_cast<char>(c - 'a' + 'A');
  return c;
}

// A letter counts as an option only when not embedded in a longer word/number.
bool standalone_at(const std::string& s, std::size_t i) {
  const bool left_free = i == 0 || !ascii_alnum(s[i - 1]);
  const bool right_free = i + 1 == s.size() || !ascii_alnum(s[i + 1]);
  return left_free && right_free;
}

std::optional<char> first_option_letter(const std::string& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (ascii_alpha(s[i]) && standalone_at(s, i)) return upper(s[i]);
  }
  return std::nullopt;
}

LetterSet all_option_letters(const std::string& s) {
  LetterSet out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (ascii_alpha(s[i]) && standalone_at(s, i)) out.insert(upper(s[i]));
  }
  return out;
}

std::optional<long long> first_integer(const std::string& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool neg = s[i] == '-' && i + 1 < s.size() && ascii_digit(s[i + 1]);
    if (!ascii_digit(s[i]) && !neg) continue;
    std::size_t j = neg ? i + 1 : i;
    while (j < s.size() && ascii_digit(s[j])) ++j;
    long long v = 0;
    const auto res = std::from_chars(s.data() + i, s.data() + j, v);
    if (res.ec == std::errc()) return v;
    i = j;  // digit run overflows long long; skip it
  }
  return std::nullopt;
}

void skip_spaces(const std::string& s, std::size_t& pos) {
  while (pos < s.size() && ascii_space(s[pos])) ++pos;
}

bool parse_double_at(const std::string& s, std::size_t& pos, double& out) {
  skip_spaces(s, pos);
  const auto res = std::from_chars(s.data() + pos, s.data() + s.size(), out);
  if (res.ec != std::errc()) return false;
  pos = static_cast<std::size_t>(res.ptr - s.data());
  return true;
}

// First bracketed or parenthesized 4-tuple of decimals; bracket styles may
// mix. Range violations are left to score_format, not the parser.
std::optional<Box2D> first_box(const std::string& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '(' && s[i] != '[') continue;
    std::size_t pos = i + 1;
    std::array<double, 4> v{};
    bool ok = true;
    for (int k = 0; k < 4; ++k) {
      if (!parse_double_at(s, pos, v[static_cast<std::size_t>(k)])) {
        ok = false;
        break;
      }
      skip_spaces(s, pos);
      if (k < 3) {
        if (pos < s.size() && s[pos] == ',') {
          ++pos;
        } else {
          ok = false;
          break;
        }
      }
    }
    if (!ok) continue;
    if (pos < s.size() && (s[pos] == ')' || s[pos] == ']')) {
      return Box2D::from_array(v);
    }
  }
  return std::nullopt;
}

std::string trim(std::string_view sv) {
  std::size_t b = 0;
  std::size_t e = sv.size();
  while (b < e && ascii_space(sv[b])) ++b;
  while (e > b && ascii_space(sv[e - 1])) --e;
  return std::string(sv.substr(b, e - b));
}

// Every parenthesized comma-triple becomes one triplet; groups with a part
// count other than 3 or an empty part are skipped.
TripletSet parse_triplet_set(const std::string& s) {
  TripletSet out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '(') {
      ++i;
      continue;
    }
    const std::size_t close = s.find(')', i + 1);
    if (close == std::string::npos) break;
    const std::string_view inner(s.data() + i + 1, close - i - 1);
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = inner.find(',', start);
      if (comma == std::string_view::npos) {
        parts.push_back(trim(inner.substr(start)));
        break;
      }
      parts.push_back(trim(inner.substr(start, comma - start)));
      start = comma + 1;
    }
    if (parts.size() == 3 && !parts[0].empty() && !parts[1].empty() &&
        !parts[2].empty()) {
      out.insert(Triplet{std::move(parts[0]), std::move(parts[1]),
                         std::move(parts[2])});
    }
    i = close + 1;
  }
  return out;
}

}  // namespace

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::SingleChoice: return "single_choice";
    case TaskKind::MultiChoice: return "multi_choice";
    case TaskKind::Counting: return "counting";
    case TaskKind::BBox: return "bbox";
    case TaskKind::Boundary: return "boundary";
    case TaskKind::OpenEnded: return "open_ended";
    case TaskKind::OrdinalShortAnswer: return "ordinal_short_answer";
    case TaskKind::TripletShortAnswer: return "triplet_short_answer";
  }
  return "unknown";
}

const char* to_string(CognitiveDomain domain) {
  switch (domain) {
    case CognitiveDomain::SpatialPerception: return "SpatialPerception";
    case CognitiveDomain::ObjectUnderstanding: return "ObjectUnderstanding";
    case CognitiveDomain::SceneUnderstanding: return "SceneUnderstanding";
    case CognitiveDomain::SceneReasoning: return "SceneReasoning";
  }
  return "unknown";
}

std::optional<TaskKind> task_kind_from_string(const std::string& s) {
  if (s == "single_choice") return TaskKind::SingleChoice;
  if (s == "multi_choice") return TaskKind::MultiChoice;
  if (s == "counting") return TaskKind::Counting;
  if (s == "bbox") return TaskKind::BBox;
  if (s == "boundary") return TaskKind::Boundary;
  if (s == "open_ended") return TaskKind::OpenEnded;
  if (s == "ordinal_short_answer") return TaskKind::OrdinalShortAnswer;
  if (s == "triplet_short_answer") return TaskKind::TripletShortAnswer;
  return std::nullopt;
}

std::optional<CognitiveDomain> domain_from_string(const std::string& s) {
  if (s == "SpatialPerception") return CognitiveDomain::SpatialPerception;
  if (s == "ObjectUnderstanding") return CognitiveDomain::ObjectUnderstanding;
  if (s == "SceneUnderstanding") return CognitiveDomain::SceneUnderstanding;
  if (s == "SceneReasoning") return CognitiveDomain::SceneReasoning;
  return std::nullopt;
}

GroundTruth GroundTruth::choice(char letter) {
  if (!ascii_alpha(static_cast<unsigned char>(letter))) {
    throw std::invalid_argument("GroundTruth::choice: letter must be A-Z");
  }
  return GroundTruth(Value{upper(letter)});
}

GroundTruth GroundTruth::choices(LetterSet letters) {
  if (letters.empty()) {
    throw std::invalid_argument("GroundTruth::choices: set must be nonempty");
  }
  LetterSet upped;
  for (char c : letters) {
    if (!ascii_alpha(static_cast<unsigned char>(c))) {
      throw std::invalid_argument("GroundTruth::choices: letters must be A-Z");
    }
    upped.insert(upper(c));
  }
  return GroundTruth(Value{std::move(upped)});
}

GroundTruth GroundTruth::count(long long n) { return GroundTruth(Value{n}); }

GroundTruth GroundTruth::box(Box2D b) {
  if (!b.valid()) {
    throw std::invalid_argument("GroundTruth::box: box violates 0 <= min <= max <= 1");
  }
  return GroundTruth(Value{b});
}

GroundTruth GroundTruth::text(std::string reference) {
  return GroundTruth(Value{std::move(reference)});
}

GroundTruth GroundTruth::ordinal(long long index, int scale) {
  if (scale < 2) {
    throw std::invalid_argument("GroundTruth::ordinal: scale must be >= 2");
  }
  if (index < 0 || index >= scale) {
    throw std::invalid_argument("GroundTruth::ordinal: index outside [0, K-1]");
  }
  return GroundTruth(Value{OrdinalStage{index, scale}});
}

GroundTruth GroundTruth::triplets(TripletSet set) {
  if (set.empty()) {
    throw std::invalid_argument("GroundTruth::triplets: set must be nonempty");
  }
  return GroundTruth(Value{std::move(set)});
}

bool GroundTruth::matches(TaskKind kind) const {
  switch (kind) {
    case TaskKind::SingleChoice:
      return std::holds_alternative<char>(value_);
    case TaskKind::MultiChoice:
      return std::holds_alternative<LetterSet>(value_);
    case TaskKind::Counting:
      return std::holds_alternative<long long>(value_);
    case TaskKind::BBox:
    case TaskKind::Boundary:
      return std::holds_alternative<Box2D>(value_);
    case TaskKind::OpenEnded:
      return std::holds_alternative<std::string>(value_);
    case TaskKind::OrdinalShortAnswer:
      return std::holds_alternative<OrdinalStage>(value_);
    case TaskKind::TripletShortAnswer:
      return std::holds_alternative<TripletSet>(value_);
  }
  return false;
}

ParsedResponse parse_response(const std::string& text, TaskKind kind) {
  ParsedResponse r;
  r.raw = text;
  r.kind = kind;
  switch (kind) {
    case TaskKind::SingleChoice:
      if (auto c = first_option_letter(text)) {
        r.payload = *c;
        r.parse_ok = true;
      }
      break;
    case TaskKind::MultiChoice: {
      auto set = all_option_letters(text);
      if (!set.empty()) {
        r.payload = std::move(set);
        r.parse_ok = true;
      }
      break;
    }
    case TaskKind::Counting:
      if (auto n = first_integer(text)) {
        r.payload = *n;
        r.parse_ok = true;
      }
      break;
    case TaskKind::OrdinalShortAnswer:
      if (auto n = first_integer(text)) {
        r.payload = OrdinalIndex{*n};
        r.parse_ok = true;
      }
      break;
    case TaskKind::BBox:
    case TaskKind::Boundary:
      if (auto b = first_box(text)) {
        r.payload = *b;
        r.parse_ok = true;
      }
      break;
    case TaskKind::OpenEnded:
      if (!tokenize(text).empty()) {
        r.payload = text;
        r.parse_ok = true;
      }
      break;
    case TaskKind::TripletShortAnswer: {
      auto set = parse_triplet_set(text);
      if (!set.empty()) {
        r.payload = std::move(set);
        r.parse_ok = true;
      }
      break;
    }
  }
  return r;
}

double score_single_choice(char pred, char gt) {
  return upper(pred) == upper(gt) ? 1.0 : 0.0;
}

double score_counting(long long pred, long long gt) {
  const double denom = std::max(std::abs(static_cast<double>(gt)), 1.0);
  const double diff = std::abs(static_cast<double>(pred) - static_cast<double>(gt));
  return std::max(0.0, 1.0 - diff / denom);
}

double score_multi_choice(const LetterSet& pred, const LetterSet& gt) {
  if (gt.empty()) {
    throw std::invalid_argument("score_multi_choice: gt must be nonempty");
  }
  if (pred.empty()) return 0.0;
  std::size_t inter = 0;
  for (char c : pred) inter += gt.count(c);
  const std::size_t uni = pred.size() + gt.size() - inter;
  const double set_iou = static_cast<double>(inter) / static_cast<double>(uni);
  const double recall = static_cast<double>(inter) / static_cast<double>(gt.size());
  return std::sqrt(set_iou * recall);
}

double score_ordinal(long long pred_idx, long long gt_idx, int scale) {
  if (scale < 2) {
    throw std::invalid_argument("score_ordinal: scale must be >= 2");
  }
  if (pred_idx < 0 || pred_idx >= scale || gt_idx < 0 || gt_idx >= scale) {
    throw std::invalid_argument("score_ordinal: index outside [0, K-1]");
  }
  const double dist = std::abs(static_cast<double>(pred_idx - gt_idx));
  return 1.0 - dist / static_cast<double>(scale - 1);
}

double score_triplets(const TripletSet& pred, const TripletSet& gt) {
  if (gt.empty()) {
    throw std::invalid_argument("score_triplets: gt must be nonempty");
  }
  if (pred.empty()) return 0.0;
  std::size_t inter = 0;
  for (const Triplet& t : pred) inter += gt.count(t);
  return 2.0 * static_cast<double>(inter) /
         static_cast<double>(pred.size() + gt.size());
}

double score_format(const ParsedResponse& resp, TaskKind kind) {
  if (!resp.parse_ok) return 0.0;
  if (kind == TaskKind::BBox || kind == TaskKind::Boundary) {
    const auto* box = std::get_if<Box2D>(&resp.payload);
    return box != nullptr && box->valid() ? 1.0 : 0.0;
  }
  return 1.0;
}

double score_spatial(const ParsedResponse& resp, const GroundTruth& gt,
                     TaskKind kind) {
  if (kind != TaskKind::BBox && kind != TaskKind::Boundary) return 0.0;
  if (!resp.parse_ok) return 0.0;
  const auto* box = std::get_if<Box2D>(&resp.payload);
  if (box == nullptr || !box->valid()) return 0.0;
  return iou(*box, gt.get<Box2D>());
}

double combine(double r_task, double r_spatial, double r_fmt,
               const RewardWeights& w) {
  if (w.task < 0.0 || w.spatial < 0.0 || w.fmt < 0.0) {
    throw std::invalid_argument("combine: weights must be non-negative");
  }
  return w.task * r_task + w.spatial * r_spatial + w.fmt * r_fmt;
}

RewardBreakdown score_rollout(const std::string& text, const GroundTruth& gt,
                              TaskKind kind, const RewardWeights& w,
                              const RewardConfig& cfg) {
  if (!gt.matches(kind)) {
    throw std::invalid_argument("score_rollout: ground truth tag does not match task kind");
  }
  const ParsedResponse resp = parse_response(text, kind);
  double r_task = 0.0;
  if (resp.parse_ok) {
    switch (kind) {
      case TaskKind::SingleChoice:
        r_task = score_single_choice(std::get<char>(resp.payload), gt.get<char>());
        break;
      case TaskKind::MultiChoice:
        r_task = score_multi_choice(std::get<LetterSet>(resp.payload),
                                    gt.get<LetterSet>());
        break;
      case TaskKind::Counting:
        r_task = score_counting(std::get<long long>(resp.payload),
                                gt.get<long long>());
        break;
      case TaskKind::BBox:
      case TaskKind::Boundary: {
        const Box2D& box = std::get<Box2D>(resp.payload);
        if (box.valid()) {
          const auto variant = kind == TaskKind::BBox ? cfg.bbox_variant
                                                      : cfg.boundary_variant;
          r_task = bbox_reward(box, gt.get<Box2D>(), variant);
        }
        break;
      }
      case TaskKind::OpenEnded:
        r_task = open_ended_reward(text, gt.get<std::string>());
        break;
      case TaskKind::OrdinalShortAnswer: {
        const OrdinalStage stage = gt.get<OrdinalStage>();
        const long long pred = std::get<OrdinalIndex>(resp.payload).value;
        // Out-of-scale predictions are format-valid integers but score 0.
        if (pred >= 0 && pred < stage.scale) {
          r_task = score_ordinal(pred, stage.index, stage.scale);
        }
        break;
      }
      case TaskKind::TripletShortAnswer:
        r_task = score_triplets(std::get<TripletSet>(resp.payload),
                                gt.get<TripletSet>());
        break;
    }
  }
  const double r_spatial = score_spatial(resp, gt, kind);
  const double r_fmt = score_format(resp, kind);
  RewardBreakdown out;
  out.task = r_task;
  out.spatial = r_spatial;
  out.fmt = r_fmt;
  out.total = combine(r_task, r_spatial, r_fmt, w);
  return out;
}

}  // namespace arpo
