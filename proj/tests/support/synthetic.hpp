#pragma once

// Synthetic agglutinative language: words are stem + suffix, stems co-occur
// with topic words and suffixes with function words. Word embeddings are the
// exact solve E = log(norm(C)) W^-1 for a random output matrix W, so the
// whole pipeline runs without a trained skip-gram model.

#include <random>
#include <set>
#include <string>
#include <vector>

#include "legros/legros.hpp"

namespace legros::synthetic {

struct language {
  std::vector<std::string> stems;
  std::vector<std::string> suffixes;
  std::vector<std::vector<std::string>> topics;     // per stem
  std::vector<std::vector<std::string>> functions;  // per suffix
  std::vector<std::string> corpus;
  segmented_lexicon gold;  // stem | suffix
};

inline std::string random_syllables(std::mt19937_64& rng, std::size_t syllables) {
  static const std::string consonants = "bdfgklmnprstvz";
  static const std::string vowels = "aeiou";
  std::string s;
  for (std::size_t i = 0; i < syllables; ++i) {
    s += consonants[rng() % consonants.size()];
    s += vowels[rng() % vowels.size()];
  }
  return s;
}

inline language make_language(std::size_t n_stems = 20, std::size_t n_suffixes = 8,
                              std::size_t sentences = 4000, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  language lang;
  std::set<std::string> used;
  while (lang.stems.size() < n_stems) {
    auto s = random_syllables(rng, 2) + "lmnrst"[rng() % 6];
    if (used.insert(s).second) lang.stems.push_back(s);
  }
  static const std::vector<std::string> suffix_pool = {"a",  "os", "ek",  "ami", "ul", "en",
                                                       "ito", "ova", "im", "ura", "es", "u"};
  for (std::size_t j = 0; j < n_suffixes; ++j)
    lang.suffixes.push_back(suffix_pool.at(j));
  // Context vocabularies use upper-case letters so they never overlap words.
  for (std::size_t i = 0; i < n_stems; ++i) {
    lang.topics.emplace_back();
    for (int k = 0; k < 3; ++k)
      lang.topics.back().push_back("T" + std::to_string(i) + "ABC"[k]);
  }
  for (std::size_t j = 0; j < n_suffixes; ++j) {
    lang.functions.emplace_back();
    for (int k = 0; k < 3; ++k)
      lang.functions.back().push_back("F" + std::to_string(j) + "XYZ"[k]);
  }
  for (std::size_t i = 0; i < n_stems; ++i)
    for (std::size_t j = 0; j < n_suffixes; ++j)
      lang.gold[lang.stems[i] + lang.suffixes[j]] = {lang.stems[i], lang.suffixes[j]};

  for (std::size_t n = 0; n < sentences; ++n) {
    std::size_t i = rng() % n_stems, j = rng() % n_suffixes, j2 = rng() % n_suffixes;
    const auto& t = lang.topics[i];
    const auto& f = lang.functions[j];
    const auto& f2 = lang.functions[j2];
    std::string line = f[rng() % 3] + " " + t[rng() % 3] + " " + lang.stems[i] +
                       lang.suffixes[j] + " " + t[rng() % 3] + " " + f[rng() % 3] + " " +
                       f2[rng() % 3] + " " + lang.stems[i] + lang.suffixes[j2] + " " +
                       t[rng() % 3];
    lang.corpus.push_back(std::move(line));
  }
  return lang;
}

inline matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  return m;
}

// Everything the refinement needs, built from a corpus.
struct embedding_setup {
  vocabulary vocab;
  cooccurrence_counts counts;
  embedding_table w_rows;  // output matrix W, one row per word
  embedding_table words;   // input matrix E
};

inline embedding_setup make_embeddings(const std::vector<std::string>& corpus, Eigen::Index dim,
                                       double lambda, std::uint64_t seed = 11) {
  embedding_setup s;
  s.vocab = build_vocabulary(corpus, 200000);
  s.counts = count_cooccurrences(corpus, s.vocab, default_window);
  std::vector<std::string> tokens;
  for (const auto& e : s.vocab.entries()) tokens.push_back(e.token);
  s.w_rows = embedding_table(tokens, random_matrix(static_cast<Eigen::Index>(tokens.size()), dim, seed));
  s.words = compute_subword_embeddings(identity_space(s.vocab), s.counts, s.vocab, s.w_rows.rows(),
                                       lambda, default_ridge(s.w_rows.rows()));
  return s;
}

}  // namespace legros::synthetic
