#pragma once

// Symmetric word co-occurrence counts within a fixed context window.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "legros/error.hpp"
#include "legros/io.hpp"
#include "legros/parallel.hpp"
#include "legros/textio.hpp"

namespace legros {

inline constexpr std::size_t default_window = 5;

class cooccurrence_counts {
 public:
  using cell = std::pair<token_id, std::uint64_t>;
  using row_type = std::vector<cell>;

  cooccurrence_counts() = default;
  cooccurrence_counts(std::size_t vocab_size, std::size_t window)
      : window_(window), rows_(vocab_size) {}

  // Builds from (x, y) -> count cells; both orientations must be present.
  static cooccurrence_counts from_cells(
      std::size_t vocab_size, std::size_t window,
      const std::unordered_map<std::uint64_t, std::uint64_t>& cells) {
    cooccurrence_counts c(vocab_size, window);
    for (const auto& [key, n] : cells) {
      if (n == 0) continue;
      auto x = static_cast<token_id>(key >> 32);
      auto y = static_cast<token_id>(key & 0xffffffffu);
      c.rows_.at(x).emplace_back(y, n);
    }
    for (auto& r : c.rows_) std::sort(r.begin(), r.end());
    return c;
  }

  static std::uint64_t key(token_id x, token_id y) {
    return (static_cast<std::uint64_t>(x) << 32) | y;
  }

  std::size_t window() const { return window_; }
  std::size_t vocab_size() const { return rows_.size(); }
  const row_type& row(token_id x) const { return rows_.at(x); }

  std::uint64_t count(token_id x, token_id y) const {
    const auto& r = rows_.at(x);
    auto it = std::lower_bound(r.begin(), r.end(), cell{y, 0},
                               [](const cell& a, const cell& b) { return a.first < b.first; });
    return it != r.end() && it->first == y ? it->second : 0;
  }

  std::uint64_t row_sum(token_id x) const {
    std::uint64_t s = 0;
    for (const auto& [y, n] : rows_.at(x)) s += n;
    return s;
  }

  std::size_t nonzeros() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n;
  }

  bool is_symmetric() const {
    for (token_id x = 0; x < rows_.size(); ++x)
      for (const auto& [y, n] : rows_[x])
        if (count(y, x) != n) return false;
    return true;
  }

  bool operator==(const cooccurrence_counts& other) const = default;

 private:
  std::size_t window_ = default_window;
  std::vector<row_type> rows_;
};

// Ordered-pair counts: count(x, y) is the number of position pairs (i, j),
// i != j, |i - j| <= window, on the same line with token i = x and token j = y.
// Out-of-vocabulary tokens keep their position but are not counted.
inline cooccurrence_counts count_cooccurrences(const std::vector<std::string>& lines,
                                               const vocabulary& vocab,
                                               std::size_t window = default_window,
                                               std::size_t threads = 1) {
  if (window == 0) throw argument_error("window must be at least 1");
  auto shards = make_shards(lines.size(), threads);
  std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> partial(shards.size());
  for_each_shard(shards, threads, [&](std::size_t si, shard s) {
    auto& cells = partial[si];
    std::vector<std::int64_t> ids;
    for (std::size_t l = s.begin; l < s.end; ++l) {
      ids.clear();
      for (auto tok : io::split_ws(lines[l])) {
        auto id = vocab.find(tok);
        ids.push_back(id ? static_cast<std::int64_t>(*id) : -1);
      }
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0) continue;
        std::size_t hi = std::min(ids.size(), i + window + 1);
        for (std::size_t j = i + 1; j < hi; ++j) {
          if (ids[j] < 0) continue;
          auto x = static_cast<token_id>(ids[i]);
          auto y = static_cast<token_id>(ids[j]);
          ++cells[cooccurrence_counts::key(x, y)];
          ++cells[cooccurrence_counts::key(y, x)];
        }
      }
    }
  });
  auto& merged = partial.front();
  for (std::size_t i = 1; i < partial.size(); ++i)
    for (const auto& [k, n] : partial[i]) merged[k] += n;
  return cooccurrence_counts::from_cells(vocab.size(), window, merged);
}

inline cooccurrence_counts count_cooccurrences(std::istream& corpus, const vocabulary& vocab,
                                               std::size_t window = default_window,
                                               std::size_t threads = 1) {
  if (window == 0) throw argument_error("window must be at least 1");
  return count_cooccurrences(io::read_lines(corpus), vocab, window, threads);
}

// Count file: header `#COOC v1 |V|=<n> window=<w>`, then `id1<TAB>id2<TAB>count`
// with id1 <= id2, sorted.
inline void write_counts(const cooccurrence_counts& counts, std::ostream& out) {
  out << "#COOC v1 |V|=" << counts.vocab_size() << " window=" << counts.window() << '\n';
  for (token_id x = 0; x < counts.vocab_size(); ++x)
    for (const auto& [y, n] : counts.row(x))
      if (x <= y) out << x << '\t' << y << '\t' << n << '\n';
}

inline cooccurrence_counts read_counts(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw validation_error("missing #COOC header at line 1");
  io::strip_cr(line);
  auto head = io::split_ws(line);
  std::uint64_t vsize = 0, window = 0;
  if (head.size() != 4 || head[0] != "#COOC" || head[1] != "v1" ||
      head[2].substr(0, 4) != "|V|=" || !io::parse_uint(head[2].substr(4), vsize) ||
      head[3].substr(0, 7) != "window=" || !io::parse_uint(head[3].substr(7), window) ||
      window == 0)
    throw validation_error("bad #COOC header at line 1");

  std::unordered_map<std::uint64_t, std::uint64_t> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    if (line.empty()) continue;
    auto where = " at line " + std::to_string(line_no);
    auto f = io::split_char(line, '\t');
    std::uint64_t x = 0, y = 0, n = 0;
    if (f.size() != 3 || !io::parse_uint(f[0], x) || !io::parse_uint(f[1], y))
      throw validation_error("malformed count triple" + where);
    if (!io::parse_uint(f[2], n) || n == 0)
      throw validation_error("count must be a positive integer" + where);
    if (x >= vsize || y >= vsize) throw validation_error("id out of range" + where);
    if (x > y) throw validation_error("triple not in id1 <= id2 order" + where);
    auto tx = static_cast<token_id>(x), ty = static_cast<token_id>(y);
    if (!cells.emplace(cooccurrence_counts::key(tx, ty), n).second)
      throw validation_error("duplicate triple" + where);
    if (tx != ty) cells.emplace(cooccurrence_counts::key(ty, tx), n);
  }
  if (in.bad()) throw io_error("read failure at line " + std::to_string(line_no + 1));
  return cooccurrence_counts::from_cells(vsize, window, cells);
}

inline void save_counts(const cooccurrence_counts& counts, const std::filesystem::path& path) {
  io::write_atomic(path, [&](std::ostream& out) { write_counts(counts, out); });
}

inline cooccurrence_counts load_counts(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  try {
    return read_counts(in);
  } catch (const error& e) {
    throw error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace legros
