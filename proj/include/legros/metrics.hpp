#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>

#include "legros/error.hpp"
#include "legros/io.hpp"
#include "legros/textio.hpp"
#include "legros/utf8.hpp"

namespace legros {

inline constexpr double default_renyi_alpha = 2.5;

struct boundary_report {
  std::uint64_t true_positives = 0;
  std::uint64_t predicted_boundaries = 0;
  std::uint64_t gold_boundaries = 0;
  double precision = 1;
  double recall = 1;
  double f1 = 1;

  std::string summary() const {
    return "P=" + io::format_double(precision) + " R=" + io::format_double(recall) +
           " F1=" + io::format_double(f1);
  }
};

// Internal character offsets at which a subword ends.
inline std::set<std::size_t> boundaries(const segmentation& subwords) {
  std::set<std::size_t> out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i + 1 < subwords.size(); ++i) {
    pos += utf8::char_count(subwords[i]);
    out.insert(pos);
  }
  return out;
}

// Micro-averaged boundary precision/recall/F1 over the word list. An empty
// denominator yields 1 for precision or recall.
inline boundary_report boundary_prf(const segmented_lexicon& predicted,
                                    const segmented_lexicon& gold) {
  std::string missing;
  for (const auto& [w, s] : gold)
    if (!predicted.count(w)) missing += (missing.empty() ? "" : ", ") + w;
  if (!missing.empty()) throw validation_error("predictions missing for: " + missing);
  for (const auto& [w, s] : predicted)
    if (!gold.count(w)) missing += (missing.empty() ? "" : ", ") + w;
  if (!missing.empty()) throw validation_error("gold segmentation missing for: " + missing);

  boundary_report r;
  for (const auto& [word, gold_seg] : gold) {
    const auto& pred_seg = predicted.at(word);
    check_segmentation(word, gold_seg);
    check_segmentation(word, pred_seg);
    auto g = boundaries(gold_seg);
    auto p = boundaries(pred_seg);
    for (auto b : p) r.true_positives += g.count(b);
    r.predicted_boundaries += p.size();
    r.gold_boundaries += g.size();
  }
  r.precision = r.predicted_boundaries == 0
                    ? 1.0
                    : static_cast<double>(r.true_positives) / static_cast<double>(r.predicted_boundaries);
  r.recall = r.gold_boundaries == 0
                 ? 1.0
                 : static_cast<double>(r.true_positives) / static_cast<double>(r.gold_boundaries);
  r.f1 = r.precision + r.recall == 0 ? 0.0
                                     : 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

struct renyi_report {
  double alpha = default_renyi_alpha;
  double entropy = 0;      // nats
  double max_entropy = 0;  // log(vocab_size)
  double efficiency = 0;

  std::string summary() const {
    return "H=" + io::format_double(entropy) + " Hmax=" + io::format_double(max_entropy) +
           " EFF=" + io::format_double(efficiency);
  }
};

// Renyi entropy of order alpha (Shannon at alpha = 1) of the unigram token
// distribution, divided by log(vocab_size).
template <typename Map>
renyi_report renyi_efficiency(const Map& token_frequencies, std::uint64_t vocab_size,
                              double alpha = default_renyi_alpha) {
  if (!(alpha > 0) || !std::isfinite(alpha)) throw argument_error("Renyi alpha must be positive");
  double total = 0;
  std::uint64_t types = 0;
  for (const auto& [tok, n] : token_frequencies) {
    if (n == 0) continue;
    total += static_cast<double>(n);
    ++types;
  }
  if (types == 0) throw argument_error("token frequencies are empty");
  if (vocab_size < types)
    throw argument_error("vocabulary size " + std::to_string(vocab_size) + " is below the " +
                         std::to_string(types) + " observed token types");

  renyi_report r;
  r.alpha = alpha;
  if (alpha == 1) {
    double h = 0;
    for (const auto& [tok, n] : token_frequencies) {
      if (n == 0) continue;
      double p = static_cast<double>(n) / total;
      h -= p * std::log(p);
    }
    r.entropy = h;
  } else {
    double s = 0;
    for (const auto& [tok, n] : token_frequencies) {
      if (n == 0) continue;
      s += std::pow(static_cast<double>(n) / total, alpha);
    }
    r.entropy = std::log(s) / (1 - alpha);
  }
  if (types == 1) r.entropy = 0;
  r.max_entropy = std::log(static_cast<double>(vocab_size));
  // A one-word vocabulary is trivially used to capacity.
  r.efficiency = vocab_size == 1 ? 1.0 : r.entropy / r.max_entropy;
  return r;
}

}  // namespace legros
