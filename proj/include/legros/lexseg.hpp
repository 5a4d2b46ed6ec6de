#pragma once

// Segmentation by word/subword embedding similarity and the alternating
// refinement of the subword inventory.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "legros/cooccur.hpp"
#include "legros/embeddings.hpp"
#include "legros/error.hpp"
#include "legros/io.hpp"
#include "legros/parallel.hpp"
#include "legros/score.hpp"
#include "legros/subspace.hpp"
#include "legros/textio.hpp"
#include "legros/utf8.hpp"

namespace legros {

inline constexpr double default_alpha = 1.0;
inline constexpr std::size_t default_max_iters = 10;

// Cosine similarity; 0 when either vector is zero.
inline double cosine(const Eigen::Ref<const vector>& a, const Eigen::Ref<const vector>& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) return 0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

// Scores every split of a word into subwords of the table by
//   sum_i cos(E(x), E_s(s_i)) - alpha
// and returns the best one (ties: fewer subwords, then lexicographic).
class embedding_segmenter {
 public:
  explicit embedding_segmenter(const embedding_table& subwords, double alpha = default_alpha)
      : table_(subwords), alpha_(alpha) {
    if (!std::isfinite(alpha)) throw argument_error("alpha must be finite");
  }

  double alpha() const { return alpha_; }
  const embedding_table& table() const { return table_; }

  // Score term of one subword for the given word vector.
  double term(const vector& word_vec, std::size_t subword_row) const {
    return cosine(word_vec, table_.rows().row(static_cast<Eigen::Index>(subword_row)).transpose()) -
           alpha_;
  }

  scored_segmentation segment(std::string_view word, const vector& word_vec) const {
    if (word.empty()) throw argument_error("cannot segment an empty word");
    if (word_vec.size() != table_.dim())
      throw validation_error("word vector of '" + std::string(word) + "' has dimension " +
                             std::to_string(word_vec.size()) + ", subword table has " +
                             std::to_string(table_.dim()));
    if (!word_vec.allFinite())
      throw numerical_error("word vector of '" + std::string(word) + "' is not finite");

    const auto off = utf8::char_offsets(word);
    const std::size_t n = off.size() - 1;

    // best[i]: best segmentation of the first i characters.
    struct cell {
      bool reachable = false;
      score_units score = 0;
      std::vector<std::string> subwords;
    };
    std::vector<cell> best(n + 1);
    best[0].reachable = true;

    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (!best[j].reachable) continue;
        auto sub = word.substr(off[j], off[i] - off[j]);
        auto row = table_.find(sub);
        if (!row) continue;
        score_units score = best[j].score + to_units(term(word_vec, *row));
        auto subwords = best[j].subwords;
        subwords.emplace_back(sub);
        if (!best[i].reachable || better_candidate(score, subwords, best[i].score, best[i].subwords)) {
          best[i].reachable = true;
          best[i].score = score;
          best[i].subwords = std::move(subwords);
        }
      }
    }

    if (!best[n].reachable) {
      for (std::size_t i = 0; i < n; ++i) {
        auto c = word.substr(off[i], off[i + 1] - off[i]);
        if (!table_.contains(c))
          throw validation_error("character '" + std::string(c) + "' of word '" +
                                 std::string(word) + "' has no subword embedding");
      }
      throw internal_error("no segmentation found for '" + std::string(word) + "'");
    }
    return {std::move(best[n].subwords), from_units(best[n].score)};
  }

 private:
  const embedding_table& table_;
  double alpha_;
};

inline scored_segmentation embedding_segment(std::string_view word, const vector& word_vec,
                                             const embedding_table& subwords,
                                             double alpha = default_alpha) {
  return embedding_segmenter(subwords, alpha).segment(word, word_vec);
}

// ---------------------------------------------------------------------------
// Refinement

struct refine_options {
  double alpha = default_alpha;
  double lambda = default_lambda;
  std::optional<double> ridge;  // default_ridge(W) when unset
  std::size_t max_iters = default_max_iters;
  std::size_t threads = 1;
};

struct iteration_stats {
  std::size_t iteration = 0;
  std::size_t changed_words = 0;
  std::size_t subword_count = 0;
  bool operator==(const iteration_stats&) const = default;
};

struct refinement_state {
  std::size_t iteration = 0;
  bool converged = false;
  subword_space space;           // subwords used by `lexicon`, and their incidence
  embedding_table subword_embeddings;  // the table that produced `lexicon`
  segmented_lexicon lexicon;
  std::vector<iteration_stats> history;  // entry 0 describes the initial inventory
};

// One re-segmentation pass of every lexicon word against a fixed subword table.
inline segmented_lexicon resegment(const segmented_lexicon& lexicon,
                                   const embedding_table& word_embeddings,
                                   const embedding_table& subword_embeddings, double alpha,
                                   std::size_t threads = 1) {
  std::vector<const std::string*> words;
  words.reserve(lexicon.size());
  for (const auto& [w, seg] : lexicon) words.push_back(&w);
  std::vector<segmentation> result(words.size());
  embedding_segmenter segmenter(subword_embeddings, alpha);
  for_each_shard(make_shards(words.size(), std::max<std::size_t>(threads, 1) * 4), threads,
                 [&](std::size_t, shard s) {
                   for (std::size_t i = s.begin; i < s.end; ++i) {
                     vector vec = word_embeddings.row(*words[i]).transpose();
                     result[i] = segmenter.segment(*words[i], vec).subwords;
                   }
                 });
  segmented_lexicon out;
  for (std::size_t i = 0; i < words.size(); ++i) out.emplace_hint(out.end(), *words[i], std::move(result[i]));
  return out;
}

// Alternates (1) solving subword embeddings for the current segmentation
// matrix and (2) re-segmenting every lexicon word with them, dropping
// subwords no longer used. Stops when no segmentation changes or after
// `max_iters` passes.
inline refinement_state refine(const segmented_lexicon& initial, const vocabulary& vocab,
                               const embedding_table& word_embeddings,
                               const cooccurrence_counts& counts, const matrix& w_rows,
                               const refine_options& opt = {},
                               std::ostream* diagnostics = nullptr) {
  if (opt.max_iters == 0) throw argument_error("max_iters must be at least 1");
  for (const auto& [word, seg] : initial) {
    check_segmentation(word, seg);
    if (!word_embeddings.contains(word))
      throw validation_error("lexicon word '" + word + "' has no word embedding");
  }
  const double ridge = opt.ridge ? *opt.ridge : default_ridge(w_rows);

  refinement_state state;
  state.lexicon = initial;
  state.space = build_segmentation_matrix(initial, vocab, true);
  state.history.push_back({0, 0, state.space.subwords.size()});
  auto report = [&](const iteration_stats& st) {
    if (diagnostics)
      *diagnostics << st.iteration << '\t' << st.changed_words << '\t' << st.subword_count << '\n';
  };
  report(state.history.back());

  for (std::size_t it = 1; it <= opt.max_iters; ++it) {
    state.subword_embeddings = compute_subword_embeddings(state.space, counts, vocab, w_rows,
                                                          opt.lambda, ridge, opt.threads);
    auto next = resegment(state.lexicon, word_embeddings, state.subword_embeddings, opt.alpha,
                          opt.threads);
    std::size_t changed = 0;
    for (auto a = state.lexicon.begin(), b = next.begin(); a != state.lexicon.end(); ++a, ++b)
      if (a->second != b->second) ++changed;
    state.lexicon = std::move(next);
    state.space = build_segmentation_matrix(state.lexicon, vocab, false);
    state.iteration = it;
    state.history.push_back({it, changed, state.space.subwords.size()});
    report(state.history.back());
    if (changed == 0) {
      state.converged = true;
      break;
    }
  }
  return state;
}

inline refinement_state refine(const segmented_lexicon& initial, const vocabulary& vocab,
                               const embedding_table& word_embeddings,
                               const cooccurrence_counts& counts, const embedding_table& w_rows,
                               const refine_options& opt = {},
                               std::ostream* diagnostics = nullptr) {
  auto aligned = align_to_vocabulary(w_rows, vocab);
  return refine(initial, vocab, word_embeddings, counts, aligned.rows(), opt, diagnostics);
}

// ---------------------------------------------------------------------------
// Applying a word-type segmentation to running text

enum class oov_policy { error, whole, chars };

inline segmentation segment_word(const std::string& word, const segmented_lexicon& lexicon,
                                 oov_policy policy, std::size_t line_no) {
  auto it = lexicon.find(word);
  if (it != lexicon.end()) return it->second;
  switch (policy) {
    case oov_policy::whole:
      return {word};
    case oov_policy::chars:
      return utf8::split_chars(word);
    case oov_policy::error:
      break;
  }
  throw validation_error("out-of-vocabulary word '" + word + "' at line " +
                         std::to_string(line_no));
}

// Writes one segmented line per input line in the continuation-marker format.
inline void segment_corpus(std::istream& in, std::ostream& out, const segmented_lexicon& lexicon,
                           oov_policy policy) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<segmentation> words;
  while (std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    words.clear();
    for (auto tok : io::split_ws(line))
      words.push_back(segment_word(std::string(tok), lexicon, policy, line_no));
    out << format_segmented(words) << '\n';
  }
  if (in.bad()) throw io_error("read failure at line " + std::to_string(line_no + 1));
}

}  // namespace legros
