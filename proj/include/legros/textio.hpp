#pragma once

// Corpus, vocabulary and lexicon I/O plus a minimal word-internal BPE used to
// bootstrap an initial segmentation.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "legros/error.hpp"
#include "legros/io.hpp"
#include "legros/parallel.hpp"
#include "legros/utf8.hpp"

namespace legros {

using token_id = std::uint32_t;

// Word-type table. Entries are kept in descending frequency with ties broken
// lexicographically; ids are positions in that order.
class vocabulary {
 public:
  struct entry {
    std::string token;
    std::uint64_t freq = 0;
    bool operator==(const entry&) const = default;
  };

  vocabulary() = default;

  // Entries must already be in canonical order and unique.
  explicit vocabulary(std::vector<entry> entries) : entries_(std::move(entries)) {
    index_.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& e = entries_[i];
      if (e.token.empty())
        throw validation_error("empty token at vocabulary position " + std::to_string(i));
      if (i > 0 && !precedes(entries_[i - 1], e))
        throw validation_error("vocabulary entry '" + e.token +
                               "' breaks frequency/lexicographic order");
      index_.emplace(e.token, static_cast<token_id>(i));
    }
  }

  static vocabulary from_counts(const std::unordered_map<std::string, std::uint64_t>& counts) {
    std::vector<entry> entries;
    entries.reserve(counts.size());
    for (const auto& [tok, n] : counts) entries.push_back({tok, n});
    std::sort(entries.begin(), entries.end(), precedes);
    return vocabulary(std::move(entries));
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(std::string_view tok) const { return index_.count(std::string(tok)) > 0; }

  std::optional<token_id> find(std::string_view tok) const {
    auto it = index_.find(std::string(tok));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  token_id id(std::string_view tok) const {
    auto found = find(tok);
    if (!found) throw validation_error("word '" + std::string(tok) + "' is not in the vocabulary");
    return *found;
  }

  const std::string& token(token_id id) const { return entries_.at(id).token; }
  std::uint64_t freq(token_id id) const { return entries_.at(id).freq; }
  const std::vector<entry>& entries() const { return entries_; }

  bool operator==(const vocabulary& other) const { return entries_ == other.entries_; }

  static bool precedes(const entry& a, const entry& b) {
    if (a.freq != b.freq) return a.freq > b.freq;
    return a.token < b.token;
  }

 private:
  std::vector<entry> entries_;
  std::unordered_map<std::string, token_id> index_;
};

namespace detail {

inline void check_utf8_line(std::string_view line, std::size_t line_no) {
  if (!utf8::is_valid(line))
    throw validation_error("invalid UTF-8 at line " + std::to_string(line_no));
}

}  // namespace detail

// Token frequencies of a pre-tokenized corpus. Shards are line ranges whose
// partial tables are summed, so the result does not depend on `threads`.
inline std::unordered_map<std::string, std::uint64_t> count_tokens(
    const std::vector<std::string>& lines, std::size_t threads = 1) {
  auto shards = make_shards(lines.size(), threads);
  std::vector<std::unordered_map<std::string, std::uint64_t>> partial(shards.size());
  for_each_shard(shards, threads, [&](std::size_t i, shard s) {
    auto& counts = partial[i];
    for (std::size_t l = s.begin; l < s.end; ++l) {
      detail::check_utf8_line(lines[l], l + 1);
      for (auto tok : io::split_ws(lines[l])) ++counts[std::string(tok)];
    }
  });
  std::unordered_map<std::string, std::uint64_t> total;
  for (auto& p : partial)
    for (auto& [tok, n] : p) total[tok] += n;
  return total;
}

inline vocabulary build_vocabulary(const std::vector<std::string>& lines, std::size_t max_size,
                                   std::uint64_t min_freq = 1, std::size_t threads = 1) {
  if (max_size == 0) throw argument_error("max_size must be positive");
  auto counts = count_tokens(lines, threads);
  std::vector<vocabulary::entry> entries;
  for (auto& [tok, n] : counts)
    if (n >= min_freq) entries.push_back({tok, n});
  std::sort(entries.begin(), entries.end(), vocabulary::precedes);
  if (entries.size() > max_size) entries.resize(max_size);
  return vocabulary(std::move(entries));
}

inline vocabulary build_vocabulary(std::istream& corpus, std::size_t max_size,
                                   std::uint64_t min_freq = 1, std::size_t threads = 1) {
  if (max_size == 0) throw argument_error("max_size must be positive");
  return build_vocabulary(io::read_lines(corpus), max_size, min_freq, threads);
}

// Vocabulary file: `token<TAB>freq` per line in id order.
inline void write_vocabulary(const vocabulary& vocab, std::ostream& out) {
  for (const auto& e : vocab.entries()) out << e.token << '\t' << e.freq << '\n';
}

inline vocabulary read_vocabulary(std::istream& in) {
  std::vector<vocabulary::entry> entries;
  std::string line;
  std::size_t line_no = 0;
  std::unordered_map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    if (line.empty()) continue;
    auto fields = io::split_char(line, '\t');
    std::uint64_t freq = 0;
    if (fields.size() != 2 || fields[0].empty() || !io::parse_uint(fields[1], freq))
      throw validation_error("malformed vocabulary row at line " + std::to_string(line_no));
    std::string tok(fields[0]);
    if (!seen.emplace(tok, line_no).second)
      throw validation_error("duplicate vocabulary token '" + tok + "' at line " +
                             std::to_string(line_no));
    entries.push_back({std::move(tok), freq});
  }
  if (in.bad()) throw io_error("read failure at line " + std::to_string(line_no + 1));
  return vocabulary(std::move(entries));
}

inline void save_vocabulary(const vocabulary& vocab, const std::filesystem::path& path) {
  io::write_atomic(path, [&](std::ostream& out) { write_vocabulary(vocab, out); });
}

inline vocabulary load_vocabulary(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  try {
    return read_vocabulary(in);
  } catch (const error& e) {
    throw error(e.kind(), path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Segmented lexicon

using segmentation = std::vector<std::string>;
using segmented_lexicon = std::map<std::string, segmentation>;

inline std::string concat(const segmentation& subwords) {
  std::string out;
  for (const auto& s : subwords) out += s;
  return out;
}

// Throws unless `subwords` is a nonempty surface segmentation of `word`.
inline void check_segmentation(std::string_view word, const segmentation& subwords) {
  if (subwords.empty())
    throw validation_error("empty segmentation for word '" + std::string(word) + "'");
  for (const auto& s : subwords)
    if (s.empty())
      throw validation_error("empty subword in segmentation of '" + std::string(word) + "'");
  if (concat(subwords) != word)
    throw validation_error("segmentation of '" + std::string(word) +
                           "' does not concatenate to the word");
}

inline void write_lexicon(const segmented_lexicon& lexicon, std::ostream& out) {
  for (const auto& [word, subwords] : lexicon) {
    check_segmentation(word, subwords);
    out << word << '\t';
    for (std::size_t i = 0; i < subwords.size(); ++i) {
      if (i) out << ' ';
      out << subwords[i];
    }
    out << '\n';
  }
}

inline segmented_lexicon read_lexicon(std::istream& in) {
  segmented_lexicon lexicon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    if (line.empty()) continue;
    auto fields = io::split_char(line, '\t');
    if (fields.size() != 2 || fields[0].empty() ||
        fields[0].find_first_of(" \r") != std::string_view::npos)
      throw validation_error("malformed lexicon row at line " + std::to_string(line_no));
    if (!utf8::is_valid(line))
      throw validation_error("invalid UTF-8 at line " + std::to_string(line_no));
    std::string word(fields[0]);
    segmentation subwords;
    for (auto s : io::split_ws(fields[1])) subwords.emplace_back(s);
    if (subwords.empty())
      throw validation_error("malformed lexicon row at line " + std::to_string(line_no) +
                             ": no subwords");
    try {
      check_segmentation(word, subwords);
    } catch (const error& e) {
      throw validation_error(std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
    }
    if (!lexicon.emplace(word, std::move(subwords)).second)
      throw validation_error("duplicate lexicon word '" + word + "' at line " +
                             std::to_string(line_no));
  }
  if (in.bad()) throw io_error("read failure at line " + std::to_string(line_no + 1));
  return lexicon;
}

inline void save_lexicon(const segmented_lexicon& lexicon, const std::filesystem::path& path) {
  for (const auto& [word, subwords] : lexicon) check_segmentation(word, subwords);
  io::write_atomic(path, [&](std::ostream& out) { write_lexicon(lexicon, out); });
}

inline segmented_lexicon load_lexicon(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  try {
    return read_lexicon(in);
  } catch (const error& e) {
    throw error(e.kind(), path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Minimal BPE: word-internal, no end-of-word marker.

class merge_list {
 public:
  using rule = std::pair<std::string, std::string>;

  merge_list() = default;
  explicit merge_list(std::vector<rule> rules) : rules_(std::move(rules)) {
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      if (rules_[i].first.empty() || rules_[i].second.empty())
        throw validation_error("empty side in merge rule " + std::to_string(i + 1));
      rank_.emplace(rules_[i], i);  // first occurrence wins
    }
  }

  const std::vector<rule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  std::optional<std::size_t> rank(const std::string& left, const std::string& right) const {
    auto it = rank_.find(rule(left, right));
    if (it == rank_.end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const merge_list& other) const { return rules_ == other.rules_; }

 private:
  std::vector<rule> rules_;
  std::map<rule, std::size_t> rank_;
};

namespace detail {

// Merges every non-overlapping occurrence of (left, right), scanning left to right.
inline bool apply_merge(std::vector<std::string>& symbols, const std::string& left,
                        const std::string& right) {
  bool changed = false;
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size();) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      out.push_back(left + right);
      i += 2;
      changed = true;
    } else {
      out.push_back(std::move(symbols[i]));
      ++i;
    }
  }
  symbols = std::move(out);
  return changed;
}

}  // namespace detail

// Applies the merges in list order, each wherever it is applicable.
inline segmentation bpe_segment(std::string_view word, const merge_list& merges) {
  auto symbols = utf8::split_chars(word);
  std::size_t next_rank = 0;
  while (symbols.size() > 1) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto r = merges.rank(symbols[i], symbols[i + 1]);
      if (r && *r >= next_rank && (!best || *r < *best)) best = r;
    }
    if (!best) break;
    const auto& [left, right] = merges.rules()[*best];
    detail::apply_merge(symbols, left, right);
    next_rank = *best + 1;
  }
  return symbols;
}

// Characters plus merge products, i.e. every symbol bpe_segment can emit on
// words drawn from `charset`.
inline std::set<std::string> induced_vocabulary(const std::set<std::string>& charset,
                                                const merge_list& merges) {
  std::set<std::string> vocab = charset;
  for (const auto& [l, r] : merges.rules()) vocab.insert(l + r);
  return vocab;
}

inline std::set<std::string> charset_of(const std::unordered_map<std::string, std::uint64_t>& words) {
  std::set<std::string> chars;
  for (const auto& [w, n] : words)
    for (auto& c : utf8::split_chars(w)) chars.insert(std::move(c));
  return chars;
}

// Greedy BPE training over word types weighted by frequency. The most
// frequent adjacent pair is merged first; ties go to the lexicographically
// smallest (left, right).
inline merge_list bpe_train(const std::unordered_map<std::string, std::uint64_t>& word_counts,
                            std::size_t target_vocab_size) {
  auto chars = charset_of(word_counts);
  if (target_vocab_size < chars.size())
    throw argument_error("target vocabulary size " + std::to_string(target_vocab_size) +
                         " is below the number of distinct characters " +
                         std::to_string(chars.size()));

  using pair_key = std::pair<std::string, std::string>;
  struct word_state {
    std::vector<std::string> symbols;
    std::uint64_t freq;
  };

  std::vector<std::pair<std::string, std::uint64_t>> sorted_words(word_counts.begin(),
                                                                  word_counts.end());
  std::sort(sorted_words.begin(), sorted_words.end());
  std::vector<word_state> words;
  words.reserve(sorted_words.size());
  for (auto& [w, n] : sorted_words) words.push_back({utf8::split_chars(w), n});

  std::map<pair_key, std::int64_t> counts;
  std::map<pair_key, std::set<std::size_t>> where;
  // Ordered by descending count, then (left, right).
  std::set<std::tuple<std::int64_t, std::string, std::string>> queue;

  auto adjust = [&](const pair_key& key, std::int64_t delta) {
    auto& c = counts[key];
    if (c > 0) queue.erase({-c, key.first, key.second});
    c += delta;
    if (c > 0) queue.insert({-c, key.first, key.second});
  };
  auto add_word = [&](std::size_t wi, int sign) {
    const auto& ws = words[wi];
    for (std::size_t i = 0; i + 1 < ws.symbols.size(); ++i) {
      pair_key key{ws.symbols[i], ws.symbols[i + 1]};
      adjust(key, sign * static_cast<std::int64_t>(ws.freq));
      if (sign > 0) where[key].insert(wi);
    }
  };
  for (std::size_t wi = 0; wi < words.size(); ++wi) add_word(wi, +1);

  std::set<std::string> vocab = chars;
  std::vector<merge_list::rule> rules;
  while (vocab.size() < target_vocab_size && !queue.empty()) {
    auto [neg, left, right] = *queue.begin();
    pair_key key{left, right};
    std::vector<std::size_t> affected(where[key].begin(), where[key].end());
    for (std::size_t wi : affected) {
      add_word(wi, -1);
      detail::apply_merge(words[wi].symbols, left, right);
      add_word(wi, +1);
    }
    where.erase(key);
    vocab.insert(left + right);
    rules.emplace_back(left, right);
  }
  return merge_list(std::move(rules));
}

inline merge_list bpe_train(const std::vector<std::string>& lines, std::size_t target_vocab_size,
                            std::size_t threads = 1) {
  return bpe_train(count_tokens(lines, threads), target_vocab_size);
}

// Merge file: `left<SPACE>right` per line in application order.
inline void write_merges(const merge_list& merges, std::ostream& out) {
  for (const auto& [l, r] : merges.rules()) out << l << ' ' << r << '\n';
}

inline merge_list read_merges(std::istream& in) {
  std::vector<merge_list::rule> rules;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    if (line.empty()) continue;
    auto fields = io::split_char(line, ' ');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw validation_error("malformed merge rule at line " + std::to_string(line_no));
    rules.emplace_back(std::string(fields[0]), std::string(fields[1]));
  }
  if (in.bad()) throw io_error("read failure at line " + std::to_string(line_no + 1));
  return merge_list(std::move(rules));
}

inline void save_merges(const merge_list& merges, const std::filesystem::path& path) {
  io::write_atomic(path, [&](std::ostream& out) { write_merges(merges, out); });
}

inline merge_list load_merges(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  try {
    return read_merges(in);
  } catch (const error& e) {
    throw error(e.kind(), path.string() + ": " + e.what());
  }
}

// BPE segmentation of every vocabulary word, as a lexicon.
inline segmented_lexicon bpe_lexicon(const vocabulary& vocab, const merge_list& merges) {
  segmented_lexicon lexicon;
  for (const auto& e : vocab.entries()) lexicon.emplace(e.token, bpe_segment(e.token, merges));
  return lexicon;
}

// ---------------------------------------------------------------------------
// Segmented running text: words separated by spaces, every non-final subword
// of a word carries the continuation marker, e.g. "un@@ do@@ ing the".

inline constexpr std::string_view continuation_marker = "@@";

inline std::string format_segmented(const std::vector<segmentation>& words) {
  std::string out;
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (std::size_t i = 0; i < words[w].size(); ++i) {
      if (!out.empty()) out += ' ';
      out += words[w][i];
      if (i + 1 < words[w].size()) out += continuation_marker;
    }
  }
  return out;
}

inline std::vector<segmentation> parse_segmented(std::string_view line) {
  std::vector<segmentation> words;
  segmentation current;
  for (auto tok : io::split_ws(line)) {
    bool continues = tok.size() > continuation_marker.size() &&
                     tok.substr(tok.size() - continuation_marker.size()) == continuation_marker;
    if (continues) tok.remove_suffix(continuation_marker.size());
    current.emplace_back(tok);
    if (!continues) words.push_back(std::move(current)), current.clear();
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

}  // namespace legros
