#ifndef ARPO_TEXT_METRICS_HPP_
#define ARPO_TEXT_METRICS_HPP_

#include <cstddef>
#include <string>
#include <vector>

namespace arpo {

using TokenSeq = std::vector<std::string>;

// Lowercases and splits on every non-alphanumeric ASCII byte; punctuation is
// dropped. Bytes >= 0x80 are kept so UTF-8 words survive intact.
TokenSeq tokenize(const std::string& text);

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

// ROUGE-L F1: P = LCS/|pred|, R = LCS/|ref|, F = 2PR/(P+R); 0 on empty sides.
double rouge_l_f(const TokenSeq& pred, const TokenSeq& ref);

// 1 when pred_len <= ref_len, otherwise ref_len/pred_len. Penalizes only
// over-long answers. Throws std::invalid_argument when ref_len == 0.
double length_penalty(std::size_t pred_len, std::size_t ref_len);

// rouge_l_f on tokenized inputs times the length penalty; 0 when the
// reference tokenizes empty.
double open_ended_reward(const std::string& pred, const std::string& ref);

}  // namespace arpo

#endif  // ARPO_TEXT_METRICS_HPP_
