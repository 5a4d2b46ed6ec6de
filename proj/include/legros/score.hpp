#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "legros/error.hpp"

namespace legros {

// Segmentation scores are sums of per-subword terms. Each term is rounded to
// a multiple of 2^-40 and summed as an integer, which makes sums exact and
// independent of evaluation order, so exact ties are real ties.
using score_units = std::int64_t;

inline constexpr double score_scale = 1099511627776.0;  // 2^40

inline score_units to_units(double term) {
  if (!std::isfinite(term) || std::fabs(term) >= 1e6)
    throw numerical_error("segmentation score term out of range: " + std::to_string(term));
  return std::llround(term * score_scale);
}

inline double from_units(score_units units) { return static_cast<double>(units) / score_scale; }

struct scored_segmentation {
  std::vector<std::string> subwords;
  double score = 0;
  bool operator==(const scored_segmentation&) const = default;
};

// Total order on candidate segmentations of the same string: higher score,
// then fewer subwords, then the lexicographically smaller subword sequence.
inline bool better_candidate(score_units a_score, const std::vector<std::string>& a,
                             score_units b_score, const std::vector<std::string>& b) {
  if (a_score != b_score) return a_score > b_score;
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace legros
