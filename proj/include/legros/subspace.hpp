#pragma once

// Subword embeddings in the word-embedding space. With a segmentation matrix
// A (subword x word incidence) and word co-occurrence counts C, the subword
// table solves  E_s W ~= log(norm(AC))  in the least-squares sense, keeping the
// skip-gram output matrix W fixed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "legros/cooccur.hpp"
#include "legros/embeddings.hpp"
#include "legros/error.hpp"
#include "legros/parallel.hpp"
#include "legros/textio.hpp"
#include "legros/utf8.hpp"

namespace legros {

inline constexpr double default_lambda = 0.1;
inline constexpr Eigen::Index default_embedding_dim = 200;
inline constexpr std::size_t solve_batch_rows = 256;

// Subword inventory with ids in lexicographic order of the subword text.
class subword_vocabulary {
 public:
  subword_vocabulary() = default;
  explicit subword_vocabulary(const std::set<std::string>& subwords)
      : tokens_(subwords.begin(), subwords.end()) {
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i)
      index_.emplace(tokens_[i], static_cast<token_id>(i));
  }

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(token_id id) const { return tokens_.at(id); }
  bool contains(std::string_view s) const { return index_.count(std::string(s)) > 0; }

  std::optional<token_id> find(std::string_view s) const {
    auto it = index_.find(std::string(s));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const subword_vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, token_id> index_;
};

// Sparse binary incidence: row s lists the (sorted) word ids containing s.
class segmentation_matrix {
 public:
  segmentation_matrix() = default;
  segmentation_matrix(std::size_t words, std::vector<std::vector<token_id>> rows)
      : words_(words), rows_(std::move(rows)) {
    for (auto& r : rows_) {
      std::sort(r.begin(), r.end());
      r.erase(std::unique(r.begin(), r.end()), r.end());
    }
  }

  std::size_t subwords() const { return rows_.size(); }
  std::size_t words() const { return words_; }
  const std::vector<token_id>& row(token_id s) const { return rows_.at(s); }

  bool contains(token_id s, token_id x) const {
    const auto& r = rows_.at(s);
    return std::binary_search(r.begin(), r.end(), x);
  }

  std::size_t nonzeros() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n;
  }

  bool operator==(const segmentation_matrix& other) const = default;

 private:
  std::size_t words_ = 0;
  std::vector<std::vector<token_id>> rows_;
};

struct subword_space {
  subword_vocabulary subwords;
  segmentation_matrix incidence;
};

namespace detail {

inline subword_space make_space(const std::map<std::string, std::set<token_id>>& rows,
                                std::size_t vocab_size) {
  std::set<std::string> names;
  for (const auto& [s, words] : rows)
    if (!words.empty()) names.insert(s);
  subword_vocabulary sv(names);
  std::vector<std::vector<token_id>> incidence(sv.size());
  for (const auto& [s, words] : rows)
    if (auto id = sv.find(s)) incidence[*id].assign(words.begin(), words.end());
  return {std::move(sv), segmentation_matrix(vocab_size, std::move(incidence))};
}

}  // namespace detail

// Lexicon mode: A[s, x] = 1 iff s occurs in the segmentation of x. With
// `augment_characters`, every character of a vocabulary word that is not yet
// a subword is added with A[c, x] = 1 for all words x containing c.
inline subword_space build_segmentation_matrix(const segmented_lexicon& lexicon,
                                               const vocabulary& vocab,
                                               bool augment_characters = true) {
  std::map<std::string, std::set<token_id>> rows;
  for (const auto& [word, subwords] : lexicon) {
    auto x = vocab.find(word);
    if (!x) throw validation_error("lexicon word '" + word + "' is not in the vocabulary");
    check_segmentation(word, subwords);
    for (const auto& s : subwords) rows[s].insert(*x);
  }
  if (augment_characters) {
    std::map<std::string, std::set<token_id>> chars;
    for (token_id x = 0; x < vocab.size(); ++x)
      for (auto& c : utf8::split_chars(vocab.token(x)))
        if (!rows.count(c)) chars[std::move(c)].insert(x);
    rows.merge(chars);
  }
  return detail::make_space(rows, vocab.size());
}

// Enumeration mode: every substring of at most `max_len` characters.
inline subword_space enumerate_substrings(const vocabulary& vocab, std::size_t max_len) {
  if (max_len == 0) throw argument_error("max_len must be at least 1");
  std::map<std::string, std::set<token_id>> rows;
  for (token_id x = 0; x < vocab.size(); ++x) {
    const auto& w = vocab.token(x);
    auto off = utf8::char_offsets(w);
    std::size_t n = off.size() - 1;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j <= std::min(n, i + max_len); ++j)
        rows[w.substr(off[i], off[j] - off[i])].insert(x);
  }
  return detail::make_space(rows, vocab.size());
}

// Each word is its own sole subword; reduces the subword solve to the word solve.
inline subword_space identity_space(const vocabulary& vocab) {
  std::map<std::string, std::set<token_id>> rows;
  for (token_id x = 0; x < vocab.size(); ++x) rows[vocab.token(x)].insert(x);
  return detail::make_space(rows, vocab.size());
}

// Rows [begin, end) of T = log((AC + lambda) / (rowsum(AC) + lambda |V|)).
inline matrix smoothed_log_target(const subword_space& space, const cooccurrence_counts& counts,
                                  const vocabulary& vocab, double lambda, std::size_t begin,
                                  std::size_t end) {
  if (lambda < 0 || !std::isfinite(lambda)) throw argument_error("lambda must be nonnegative");
  const auto& a = space.incidence;
  if (a.words() != counts.vocab_size() || vocab.size() != counts.vocab_size())
    throw validation_error("segmentation matrix, counts and vocabulary sizes disagree");
  const auto n_words = static_cast<Eigen::Index>(counts.vocab_size());
  matrix target(static_cast<Eigen::Index>(end - begin), n_words);
  std::vector<std::uint64_t> acc(counts.vocab_size());
  for (std::size_t s = begin; s < end; ++s) {
    std::fill(acc.begin(), acc.end(), 0);
    std::uint64_t total = 0;
    for (token_id x : a.row(static_cast<token_id>(s)))
      for (const auto& [y, n] : counts.row(x)) {
        acc[y] += n;
        total += n;
      }
    const double denom = static_cast<double>(total) + lambda * static_cast<double>(n_words);
    auto r = static_cast<Eigen::Index>(s - begin);
    for (Eigen::Index y = 0; y < n_words; ++y) {
      double num = static_cast<double>(acc[y]) + lambda;
      if (num <= 0)
        throw numerical_error("zero co-occurrence between subword '" +
                              space.subwords.token(static_cast<token_id>(s)) + "' and word '" +
                              vocab.token(static_cast<token_id>(y)) +
                              "' with lambda = 0; use a positive lambda");
      target(r, y) = std::log(num / denom);
    }
  }
  return target;
}

inline matrix smoothed_log_target(const subword_space& space, const cooccurrence_counts& counts,
                                  const vocabulary& vocab, double lambda) {
  return smoothed_log_target(space, counts, vocab, lambda, 0, space.subwords.size());
}

// ridge = 1e-6 * trace(W W^T) / d
inline double default_ridge(const matrix& w_rows) {
  if (w_rows.cols() == 0) return 0;
  return 1e-6 * w_rows.squaredNorm() / static_cast<double>(w_rows.cols());
}

// Least-squares right inverse of the output matrix W (given as its |V| x d
// transpose): solve(T) minimizes ||X W - T||_F^2 + ridge ||X||_F^2, i.e.
// X = T W^T (W W^T + ridge I)^-1, through a QR factorization of the
// ridge-augmented system [W^T; sqrt(ridge) I].
class right_inverse_solver {
 public:
  right_inverse_solver(const matrix& w_rows, double ridge) : words_(w_rows.rows()) {
    const Eigen::Index d = w_rows.cols();
    if (d == 0) throw argument_error("output matrix has zero dimension");
    if (ridge < 0 || !std::isfinite(ridge)) throw argument_error("ridge must be nonnegative");
    if (ridge == 0 && d > words_)
      throw numerical_error("embedding dimension " + std::to_string(d) +
                            " exceeds the vocabulary size " + std::to_string(words_) +
                            "; W W^T is singular, use a positive ridge");
    if (!w_rows.allFinite()) throw numerical_error("output matrix contains non-finite values");
    matrix system(words_ + d, d);
    system.topRows(words_) = w_rows;
    system.bottomRows(d) = std::sqrt(ridge) * matrix::Identity(d, d);
    qr_.compute(system);
    if (ridge == 0 && qr_.rank() < d)
      throw numerical_error("W W^T is rank deficient (rank " + std::to_string(qr_.rank()) +
                            " < " + std::to_string(d) + "); use a positive ridge");
  }

  Eigen::Index dim() const { return qr_.cols(); }

  // target: b x |V|, returns b x d.
  matrix solve(const matrix& target) const {
    if (target.cols() != words_)
      throw validation_error("target has " + std::to_string(target.cols()) +
                             " columns, expected " + std::to_string(words_));
    matrix rhs = matrix::Zero(qr_.rows(), target.rows());
    rhs.topRows(words_) = target.transpose();
    matrix x = qr_.solve(rhs);
    if (!x.allFinite()) throw numerical_error("least-squares solve produced non-finite values");
    return x.transpose();
  }

 private:
  Eigen::Index words_;
  Eigen::ColPivHouseholderQR<matrix> qr_;
};

inline matrix right_inverse_solve(const matrix& target, const matrix& w_rows, double ridge) {
  return right_inverse_solver(w_rows, ridge).solve(target);
}

// Subword table keyed by subword text. `w_rows` row i is the output vector of
// vocabulary word i. Batches have a fixed size, so the result does not depend
// on `threads`.
inline embedding_table compute_subword_embeddings(const subword_space& space,
                                                  const cooccurrence_counts& counts,
                                                  const vocabulary& vocab, const matrix& w_rows,
                                                  double lambda, double ridge,
                                                  std::size_t threads = 1) {
  if (static_cast<std::size_t>(w_rows.rows()) != vocab.size())
    throw validation_error("output matrix has " + std::to_string(w_rows.rows()) +
                           " rows for a vocabulary of " + std::to_string(vocab.size()));
  right_inverse_solver solver(w_rows, ridge);
  const std::size_t n = space.subwords.size();
  matrix result(static_cast<Eigen::Index>(n), solver.dim());
  std::vector<shard> batches;
  for (std::size_t b = 0; b < n; b += solve_batch_rows)
    batches.push_back({b, std::min(n, b + solve_batch_rows)});
  for_each_shard(batches, threads, [&](std::size_t, shard s) {
    auto target = smoothed_log_target(space, counts, vocab, lambda, s.begin, s.end);
    result.middleRows(static_cast<Eigen::Index>(s.begin),
                      static_cast<Eigen::Index>(s.end - s.begin)) = solver.solve(target);
  });
  return embedding_table(space.subwords.tokens(), std::move(result));
}

inline embedding_table compute_subword_embeddings(const subword_space& space,
                                                  const cooccurrence_counts& counts,
                                                  const vocabulary& vocab,
                                                  const embedding_table& w_rows, double lambda,
                                                  double ridge, std::size_t threads = 1) {
  auto aligned = align_to_vocabulary(w_rows, vocab);
  return compute_subword_embeddings(space, counts, vocab, aligned.rows(), lambda, ridge, threads);
}

}  // namespace legros
