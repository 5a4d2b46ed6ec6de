#pragma once

// Subword bigram model distilled from the output of another segmenter, with
// beam-search segmentation and an exact dynamic program over
// (end position, last subword) states.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "legros/error.hpp"
#include "legros/io.hpp"
#include "legros/parallel.hpp"
#include "legros/score.hpp"
#include "legros/textio.hpp"
#include "legros/utf8.hpp"

namespace legros {

inline constexpr std::string_view start_symbol = "###";
inline constexpr std::size_t default_beam_size = 5;

class bigram_model {
 public:
  using unigram_table = std::map<std::string, std::uint64_t>;
  using bigram_table = std::map<std::pair<std::string, std::string>, std::uint64_t>;

  bigram_model() = default;

  // `unigrams` lists every subword of S with its token count (zero allowed);
  // bigram contexts are subwords of S or the start symbol.
  bigram_model(unigram_table unigrams, bigram_table bigrams)
      : unigrams_(std::move(unigrams)), bigrams_(std::move(bigrams)) {
    if (unigrams_.count(std::string(start_symbol)))
      throw validation_error("the start symbol cannot be a subword");
    for (const auto& [s, n] : unigrams_) {
      if (s.empty()) throw validation_error("empty subword in model");
      total_ += n;
      max_len_ = std::max(max_len_, utf8::char_count(s));
    }
    for (const auto& [key, n] : bigrams_) {
      const auto& [prev, next] = key;
      if (next == start_symbol)
        throw validation_error("start symbol appears as a bigram continuation");
      if (!unigrams_.count(next))
        throw validation_error("bigram continuation '" + next + "' is not a subword");
      if (prev != start_symbol && !unigrams_.count(prev))
        throw validation_error("bigram context '" + prev + "' is not a subword");
      if (n == 0) throw validation_error("zero bigram count for '" + prev + "' '" + next + "'");
      contexts_[prev] += n;
      rows_[prev][next] = n;
    }
  }

  std::size_t subword_count() const { return unigrams_.size(); }
  std::uint64_t total_tokens() const { return total_; }
  std::size_t max_subword_length() const { return max_len_; }
  const unigram_table& unigrams() const { return unigrams_; }
  const bigram_table& bigrams() const { return bigrams_; }
  const std::unordered_map<std::string, std::uint64_t>& contexts() const { return contexts_; }

  bool contains(std::string_view s) const { return unigrams_.count(std::string(s)) > 0; }
  bool is_known_context(std::string_view s) const { return s == start_symbol || contains(s); }

  std::uint64_t unigram_count(const std::string& s) const {
    auto it = unigrams_.find(s);
    return it == unigrams_.end() ? 0 : it->second;
  }

  std::uint64_t context_count(const std::string& prev) const {
    auto it = contexts_.find(prev);
    return it == contexts_.end() ? 0 : it->second;
  }

  std::uint64_t bigram_count(const std::string& prev, const std::string& next) const {
    auto r = rows_.find(prev);
    if (r == rows_.end()) return 0;
    auto it = r->second.find(next);
    return it == r->second.end() ? 0 : it->second;
  }

  // Laplace-smoothed P(next | prev). Unknown contexts fall back to the
  // smoothed unigram probability of `next`, or to 1/|S| when `next` is
  // unknown as well.
  double prob(const std::string& next, const std::string& prev) const {
    if (unigrams_.empty()) throw validation_error("bigram model has an empty subword vocabulary");
    const double s = static_cast<double>(unigrams_.size());
    if (is_known_context(prev))
      return (static_cast<double>(bigram_count(prev, next)) + 1.0) /
             (static_cast<double>(context_count(prev)) + s);
    if (contains(next))
      return (static_cast<double>(unigram_count(next)) + 1.0) / (static_cast<double>(total_) + s);
    return 1.0 / s;
  }

  double log_prob(const std::string& next, const std::string& prev) const {
    return std::log(prob(next, prev));
  }

  bool operator==(const bigram_model& other) const {
    return unigrams_ == other.unigrams_ && bigrams_ == other.bigrams_;
  }

 private:
  unigram_table unigrams_;
  bigram_table bigrams_;
  std::unordered_map<std::string, std::uint64_t> contexts_;
  std::unordered_map<std::string, std::unordered_map<std::string, std::uint64_t>> rows_;
  std::uint64_t total_ = 0;
  std::size_t max_len_ = 0;
};

inline double log_prob(const std::string& next, const std::string& prev, const bigram_model& model) {
  return model.log_prob(next, prev);
}

// ---------------------------------------------------------------------------
// Distillation

namespace detail {

struct bigram_tally {
  std::map<std::string, std::uint64_t> unigrams;
  std::map<std::pair<std::string, std::string>, std::uint64_t> bigrams;
  std::set<std::string> chars;

  void add_word(const segmentation& subwords) {
    std::string prev(start_symbol);
    for (const auto& s : subwords) {
      if (s.empty()) throw validation_error("empty subword in segmented corpus");
      if (s == start_symbol) throw validation_error("the start symbol cannot be a subword");
      ++unigrams[s];
      ++bigrams[{prev, s}];
      for (auto& c : utf8::split_chars(s)) chars.insert(std::move(c));
      prev = s;
    }
  }

  void merge(const bigram_tally& other) {
    for (const auto& [k, n] : other.unigrams) unigrams[k] += n;
    for (const auto& [k, n] : other.bigrams) bigrams[k] += n;
    chars.insert(other.chars.begin(), other.chars.end());
  }

  bigram_model finish() && {
    for (const auto& c : chars) unigrams.emplace(c, 0);
    return bigram_model(std::move(unigrams), std::move(bigrams));
  }
};

}  // namespace detail

// Counts (prev, next) transitions within each word, starting from the start
// symbol. S is every observed subword plus every observed character.
inline bigram_model distill(const std::vector<segmentation>& words) {
  if (words.empty()) throw argument_error("cannot distill from an empty corpus");
  detail::bigram_tally tally;
  for (const auto& w : words) tally.add_word(w);
  return std::move(tally).finish();
}

// Same, over segmented running text (continuation-marker format), sharded by
// line ranges with an exact merge.
inline bigram_model distill(const std::vector<std::string>& lines, std::size_t threads) {
  auto shards = make_shards(lines.size(), threads);
  std::vector<detail::bigram_tally> partial(shards.size());
  std::vector<std::size_t> word_counts(shards.size());
  for_each_shard(shards, threads, [&](std::size_t i, shard s) {
    for (std::size_t l = s.begin; l < s.end; ++l)
      for (const auto& w : parse_segmented(lines[l])) {
        partial[i].add_word(w);
        ++word_counts[i];
      }
  });
  std::size_t words = 0;
  for (auto n : word_counts) words += n;
  if (words == 0) throw argument_error("cannot distill from an empty corpus");
  for (std::size_t i = 1; i < partial.size(); ++i) partial[0].merge(partial[i]);
  return std::move(partial[0]).finish();
}

inline bigram_model distill(std::istream& segmented, std::size_t threads = 1) {
  return distill(io::read_lines(segmented), threads);
}

// ---------------------------------------------------------------------------
// Segmentation

namespace detail {

struct hypothesis {
  std::vector<std::string> subwords;
  score_units score = 0;
};

inline bool admissible(const bigram_model& model, std::string_view sub, std::size_t chars) {
  return chars == 1 || model.contains(sub);
}

inline const std::string& last_subword(const hypothesis& h) {
  static const std::string start(start_symbol);
  return h.subwords.empty() ? start : h.subwords.back();
}

}  // namespace detail

// Beam search: one hypothesis list per end position, each pruned to the
// `beam_size` best. Multi-character pieces must be in S; single characters are
// always admissible.
inline scored_segmentation beam_segment(std::string_view word, const bigram_model& model,
                                        std::size_t beam_size = default_beam_size) {
  if (word.empty()) throw argument_error("cannot segment an empty word");
  if (beam_size == 0) throw argument_error("beam size must be at least 1");
  if (model.subword_count() == 0)
    throw validation_error("bigram model has an empty subword vocabulary");

  const auto off = utf8::char_offsets(word);
  const std::size_t n = off.size() - 1;
  const std::size_t max_len = std::max<std::size_t>(1, model.max_subword_length());
  auto order = [](const detail::hypothesis& a, const detail::hypothesis& b) {
    return better_candidate(a.score, a.subwords, b.score, b.subwords);
  };

  std::vector<std::vector<detail::hypothesis>> lists(n + 1);
  lists[0].push_back({});
  for (std::size_t start = 0; start < n; ++start) {
    for (std::size_t len = 1; len <= max_len && start + len <= n; ++len) {
      std::string sub(word.substr(off[start], off[start + len] - off[start]));
      if (!detail::admissible(model, sub, len)) continue;
      for (const auto& h : lists[start]) {
        auto next = h;
        next.score += to_units(model.log_prob(sub, detail::last_subword(h)));
        next.subwords.push_back(sub);
        lists[start + len].push_back(std::move(next));
      }
    }
    for (std::size_t i = start + 1; i <= n; ++i) {
      auto& l = lists[i];
      if (l.size() > beam_size) {
        std::partial_sort(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(beam_size), l.end(),
                          order);
        l.resize(beam_size);
      }
    }
  }
  if (lists[n].empty()) throw internal_error("beam search found no segmentation");
  const auto& best = *std::min_element(lists[n].begin(), lists[n].end(), order);
  return {best.subwords, from_units(best.score)};
}

// Exact maximum-probability segmentation. A state is (end, length of the last
// subword); the last subword fixes the next transition, so keeping the best
// path per state is exact. O(n * L^2) for n characters and max length L.
inline scored_segmentation exact_segment(std::string_view word, const bigram_model& model) {
  if (word.empty()) throw argument_error("cannot segment an empty word");
  if (model.subword_count() == 0)
    throw validation_error("bigram model has an empty subword vocabulary");

  const auto off = utf8::char_offsets(word);
  const std::size_t n = off.size() - 1;
  const std::size_t max_len = std::max<std::size_t>(1, model.max_subword_length());
  auto piece = [&](std::size_t begin, std::size_t end) {
    return std::string(word.substr(off[begin], off[end] - off[begin]));
  };

  struct state {
    bool reachable = false;
    detail::hypothesis best;
  };
  // states[end][len - 1]
  std::vector<std::vector<state>> states(n + 1, std::vector<state>(max_len));
  for (std::size_t end = 1; end <= n; ++end) {
    for (std::size_t len = 1; len <= std::min(max_len, end); ++len) {
      const std::size_t start = end - len;
      auto sub = piece(start, end);
      if (!detail::admissible(model, sub, len)) continue;
      auto& target = states[end][len - 1];
      auto offer = [&](const detail::hypothesis& prefix) {
        detail::hypothesis cand = prefix;
        cand.score += to_units(model.log_prob(sub, detail::last_subword(prefix)));
        cand.subwords.push_back(sub);
        if (!target.reachable ||
            better_candidate(cand.score, cand.subwords, target.best.score, target.best.subwords)) {
          target.reachable = true;
          target.best = std::move(cand);
        }
      };
      if (start == 0) {
        offer(detail::hypothesis{});
        continue;
      }
      for (const auto& prev : states[start])
        if (prev.reachable) offer(prev.best);
    }
  }
  const detail::hypothesis* best = nullptr;
  for (const auto& s : states[n])
    if (s.reachable &&
        (!best || better_candidate(s.best.score, s.best.subwords, best->score, best->subwords)))
      best = &s.best;
  if (!best) throw internal_error("exact search found no segmentation");
  return {best->subwords, from_units(best->score)};
}

// ---------------------------------------------------------------------------
// Model file

inline constexpr std::string_view bigram_magic = "LEGROS-BIGRAM v1";

inline void write_model(const bigram_model& model, std::ostream& out) {
  out << bigram_magic << '\n';
  out << "|S|=" << model.subword_count() << " total=" << model.total_tokens()
      << " maxlen=" << model.max_subword_length() << '\n';
  out << "#UNIGRAMS\n";
  for (const auto& [s, n] : model.unigrams()) out << s << '\t' << n << '\n';
  out << "#BIGRAMS\n";
  for (const auto& [key, n] : model.bigrams())
    out << key.first << '\t' << key.second << '\t' << n << '\n';
  out << "#CONTEXTS\n";
  std::map<std::string, std::uint64_t> ctx(model.contexts().begin(), model.contexts().end());
  for (const auto& [prev, n] : ctx) out << prev << '\t' << n << '\n';
}

inline bigram_model read_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    io::strip_cr(line);
    return true;
  };
  auto fail = [&](const std::string& what) {
    return validation_error(what + " at line " + std::to_string(line_no));
  };

  if (!next_line() || line != bigram_magic)
    throw validation_error("not a " + std::string(bigram_magic) + " model (line 1)");
  if (!next_line()) throw fail("missing size line");
  auto head = io::split_ws(line);
  std::uint64_t n_subwords = 0, total = 0, max_len = 0;
  if (head.size() != 3 || head[0].substr(0, 4) != "|S|=" ||
      !io::parse_uint(head[0].substr(4), n_subwords) || head[1].substr(0, 6) != "total=" ||
      !io::parse_uint(head[1].substr(6), total) || head[2].substr(0, 7) != "maxlen=" ||
      !io::parse_uint(head[2].substr(7), max_len))
    throw fail("bad size line");

  if (!next_line() || line != "#UNIGRAMS") throw fail("expected #UNIGRAMS");
  bigram_model::unigram_table unigrams;
  bigram_model::bigram_table bigrams;
  std::map<std::string, std::uint64_t> contexts;
  bool have_contexts = false;
  enum { uni, bi, ctx } section = uni;
  while (next_line()) {
    if (line.empty()) continue;
    if (line == "#BIGRAMS" && section == uni) {
      section = bi;
      continue;
    }
    if (line == "#CONTEXTS" && section == bi) {
      section = ctx;
      have_contexts = true;
      continue;
    }
    auto f = io::split_char(line, '\t');
    std::uint64_t n = 0;
    if (section == uni) {
      if (f.size() != 2 || f[0].empty() || !io::parse_uint(f[1], n))
        throw fail("malformed unigram row");
      if (!unigrams.emplace(std::string(f[0]), n).second) throw fail("duplicate unigram");
    } else if (section == bi) {
      if (f.size() != 3 || f[0].empty() || f[1].empty() || !io::parse_uint(f[2], n))
        throw fail("malformed bigram row");
      if (f[1] == start_symbol) throw fail("start symbol in the continuation column");
      if (!bigrams.emplace(std::pair{std::string(f[0]), std::string(f[1])}, n).second)
        throw fail("duplicate bigram");
    } else {
      if (f.size() != 2 || f[0].empty() || !io::parse_uint(f[1], n))
        throw fail("malformed context row");
      if (!contexts.emplace(std::string(f[0]), n).second) throw fail("duplicate context");
    }
  }
  if (in.bad()) throw io_error("read failure at line " + std::to_string(line_no + 1));
  if (section == uni) throw validation_error("missing #BIGRAMS section");

  bigram_model model(std::move(unigrams), std::move(bigrams));
  if (model.subword_count() != n_subwords)
    throw validation_error("|S| declared " + std::to_string(n_subwords) + ", found " +
                           std::to_string(model.subword_count()));
  if (model.total_tokens() != total)
    throw validation_error("total declared " + std::to_string(total) + ", unigrams sum to " +
                           std::to_string(model.total_tokens()));
  if (model.max_subword_length() != max_len)
    throw validation_error("maxlen declared " + std::to_string(max_len) + ", subwords give " +
                           std::to_string(model.max_subword_length()));
  if (have_contexts) {
    std::map<std::string, std::uint64_t> derived(model.contexts().begin(), model.contexts().end());
    for (const auto& [prev, n] : contexts)
      if (derived.count(prev) == 0 || derived[prev] != n)
        throw validation_error("context count of '" + prev + "' is " + std::to_string(n) +
                               " but its bigrams sum to " + std::to_string(derived[prev]));
    if (derived.size() != contexts.size())
      throw validation_error("context section does not list every bigram context");
  }
  return model;
}

inline void save_model(const bigram_model& model, const std::filesystem::path& path) {
  io::write_atomic(path, [&](std::ostream& out) { write_model(model, out); });
}

inline bigram_model load_model(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  try {
    return read_model(in);
  } catch (const error& e) {
    throw error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace legros
