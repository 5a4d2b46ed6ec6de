#pragma once

// Independent reference implementations used only by the tests.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "legros/legros.hpp"

namespace legros::oracle {

// All 2^(n-1) surface segmentations of a word, in code points.
inline std::vector<segmentation> all_splits(const std::string& word) {
  auto chars = utf8::split_chars(word);
  const std::size_t n = chars.size();
  std::vector<segmentation> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
    segmentation seg{chars[0]};
    for (std::size_t i = 1; i < n; ++i) {
      if (mask & (std::uint64_t{1} << (i - 1)))
        seg.push_back(chars[i]);
      else
        seg.back() += chars[i];
    }
    out.push_back(std::move(seg));
  }
  return out;
}

struct best_split {
  segmentation subwords;
  score_units score = 0;
};

inline void keep_best(std::optional<best_split>& best, segmentation seg, score_units score) {
  if (!best || better_candidate(score, seg, best->score, best->subwords))
    best = best_split{std::move(seg), score};
}

// Exhaustive search for the similarity-score segmentation.
inline std::optional<best_split> brute_embedding_segment(const std::string& word,
                                                         const vector& word_vec,
                                                         const embedding_table& table,
                                                         double alpha) {
  std::optional<best_split> best;
  for (auto& seg : all_splits(word)) {
    score_units score = 0;
    bool ok = true;
    for (const auto& s : seg) {
      auto row = table.find(s);
      if (!row) {
        ok = false;
        break;
      }
      vector sv = table.row(*row).transpose();
      score += to_units(cosine(word_vec, sv) - alpha);
    }
    if (ok) keep_best(best, std::move(seg), score);
  }
  return best;
}

// Exhaustive search for the bigram segmentation.
inline best_split brute_bigram_segment(const std::string& word, const bigram_model& model) {
  std::optional<best_split> best;
  for (auto& seg : all_splits(word)) {
    score_units score = 0;
    std::string prev(start_symbol);
    bool ok = true;
    for (const auto& s : seg) {
      if (utf8::char_count(s) > 1 && !model.contains(s)) {
        ok = false;
        break;
      }
      score += to_units(model.log_prob(s, prev));
      prev = s;
    }
    if (ok) keep_best(best, std::move(seg), score);
  }
  return *best;
}

// X = T W^T (W W^T + ridge I)^-1 through the normal equations.
inline matrix normal_equations_solve(const matrix& target, const matrix& w_rows, double ridge) {
  const Eigen::Index d = w_rows.cols();
  matrix gram = w_rows.transpose() * w_rows + ridge * matrix::Identity(d, d);
  matrix rhs = (target * w_rows).transpose();
  return gram.ldlt().solve(rhs).transpose();
}

// Ordered-pair co-occurrence counts by direct enumeration of position pairs.
inline std::map<std::pair<std::string, std::string>, std::uint64_t> enumerate_pairs(
    const std::vector<std::string>& lines, const vocabulary& vocab, std::size_t window) {
  std::map<std::pair<std::string, std::string>, std::uint64_t> out;
  for (const auto& line : lines) {
    auto toks = io::split_ws(line);
    for (std::size_t i = 0; i < toks.size(); ++i)
      for (std::size_t j = 0; j < toks.size(); ++j) {
        if (i == j) continue;
        std::size_t dist = i > j ? i - j : j - i;
        if (dist > window) continue;
        if (!vocab.contains(toks[i]) || !vocab.contains(toks[j])) continue;
        ++out[{std::string(toks[i]), std::string(toks[j])}];
      }
  }
  return out;
}

// Applies each merge by repeatedly fusing the leftmost remaining occurrence.
inline segmentation bpe_apply(const std::string& word, const merge_list& merges) {
  auto symbols = utf8::split_chars(word);
  for (const auto& [l, r] : merges.rules()) {
    std::size_t from = 0;
    for (;;) {
      std::size_t hit = symbols.size();
      for (std::size_t i = from; i + 1 < symbols.size(); ++i)
        if (symbols[i] == l && symbols[i + 1] == r) {
          hit = i;
          break;
        }
      if (hit == symbols.size()) break;
      symbols[hit] = l + r;
      symbols.erase(symbols.begin() + static_cast<std::ptrdiff_t>(hit) + 1);
      from = hit + 1;
    }
  }
  return symbols;
}

// Boundary offsets computed from the '|'-joined form of a segmentation.
inline std::set<std::size_t> boundary_set(const segmentation& seg) {
  std::string joined;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (i) joined += '|';
    joined += seg[i];
  }
  std::set<std::size_t> out;
  std::size_t chars = 0;
  for (const auto& c : utf8::split_chars(joined)) {
    if (c == "|")
      out.insert(chars);
    else
      ++chars;
  }
  return out;
}

}  // namespace legros::oracle
