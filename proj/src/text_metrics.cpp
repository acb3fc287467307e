#include "arpo/text_metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace arpo {

namespace {

bool token_char(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char lower(unsigned char c) {
  if (c >= 'A' && c <= 'Z') return static_cast<char>(c - 'A' + 'a');
  return static_cast<char>(c);
}

}  // namespace

TokenSeq tokenize(const std::string& text) {
  TokenSeq out;
  std::string cur;
  for (unsigned char c : text) {
    if (token_char(c)) {
      cur.push_back(lower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  if (a.empty() || b.empty()) return 0;
  // Two-row DP over token sequences.
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_f(const TokenSeq& pred, const TokenSeq& ref) {
  const auto l = static_cast<double>(lcs_length(pred, ref));
  const double p = pred.empty() ? 0.0 : l / static_cast<double>(pred.size());
  const double r = ref.empty() ? 0.0 : l / static_cast<double>(ref.size());
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

double length_penalty(std::size_t pred_len, std::size_t ref_len) {
  if (ref_len == 0) {
    throw std::invalid_argument("length_penalty: ref_len must be >= 1");
  }
  if (pred_len <= ref_len) return 1.0;
  return static_cast<double>(ref_len) / static_cast<double>(pred_len);
}

double open_ended_reward(const std::string& pred, const std::string& ref) {
  const TokenSeq p = tokenize(pred);
  const TokenSeq r = tokenize(ref);
  if (r.empty()) return 0.0;
  return rouge_l_f(p, r) * length_penalty(p.size(), r.size());
}

}  // namespace arpo
