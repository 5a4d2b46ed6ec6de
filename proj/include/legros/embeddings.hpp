#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "legros/error.hpp"
#include "legros/io.hpp"
#include "legros/textio.hpp"

namespace legros {

using matrix = Eigen::MatrixXd;
using vector = Eigen::VectorXd;

// Dense row-per-token vectors keyed by token text.
class embedding_table {
 public:
  embedding_table() = default;

  embedding_table(std::vector<std::string> tokens, matrix rows)
      : tokens_(std::move(tokens)), rows_(std::move(rows)) {
    if (static_cast<std::size_t>(rows_.rows()) != tokens_.size())
      throw validation_error("embedding table has " + std::to_string(rows_.rows()) +
                             " rows for " + std::to_string(tokens_.size()) + " tokens");
    if (!tokens_.empty() && rows_.cols() == 0)
      throw validation_error("embedding dimension must be positive");
    if (!rows_.allFinite()) throw numerical_error("embedding table contains non-finite values");
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i)
      if (!index_.emplace(tokens_[i], i).second)
        throw validation_error("duplicate embedding token '" + tokens_[i] + "'");
  }

  std::size_t size() const { return tokens_.size(); }
  Eigen::Index dim() const { return rows_.cols(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const matrix& rows() const { return rows_; }

  bool contains(std::string_view tok) const { return index_.count(std::string(tok)) > 0; }

  std::optional<std::size_t> find(std::string_view tok) const {
    auto it = index_.find(std::string(tok));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  auto row(std::size_t i) const { return rows_.row(static_cast<Eigen::Index>(i)); }

  auto row(std::string_view tok) const {
    auto i = find(tok);
    if (!i) throw validation_error("no embedding for '" + std::string(tok) + "'");
    return row(*i);
  }

  bool operator==(const embedding_table& other) const {
    return tokens_ == other.tokens_ && rows_.rows() == other.rows_.rows() &&
           rows_.cols() == other.rows_.cols() && rows_ == other.rows_;
  }

 private:
  std::vector<std::string> tokens_;
  matrix rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Reorders `table` so that row i belongs to vocabulary id i.
inline embedding_table align_to_vocabulary(const embedding_table& table, const vocabulary& vocab) {
  matrix rows(static_cast<Eigen::Index>(vocab.size()), table.dim());
  std::vector<std::string> tokens;
  tokens.reserve(vocab.size());
  for (token_id id = 0; id < vocab.size(); ++id) {
    const auto& tok = vocab.token(id);
    auto i = table.find(tok);
    if (!i) throw validation_error("vocabulary word '" + tok + "' has no embedding row");
    rows.row(id) = table.row(*i);
    tokens.push_back(tok);
  }
  return embedding_table(std::move(tokens), std::move(rows));
}

// Text format: header `<rows> <dim>`, then `token v1 ... v<dim>` per line.
inline void write_embeddings(const embedding_table& table, std::ostream& out) {
  out << table.size() << ' ' << table.dim() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.tokens()[i];
    for (Eigen::Index k = 0; k < table.dim(); ++k)
      out << ' ' << io::format_double(table.rows()(static_cast<Eigen::Index>(i), k));
    out << '\n';
  }
}

inline embedding_table read_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw validation_error("missing embedding header at line 1");
  io::strip_cr(line);
  auto head = io::split_ws(line);
  std::uint64_t n = 0, dim = 0;
  if (head.size() != 2 || !io::parse_uint(head[0], n) || !io::parse_uint(head[1], dim) ||
      dim == 0)
    throw validation_error("bad embedding header at line 1");

  std::vector<std::string> tokens;
  tokens.reserve(n);
  matrix rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  std::size_t line_no = 1;
  while (tokens.size() < n && std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    // Tokens never contain spaces, so the first space ends the token.
    auto fields = io::split_char(line, ' ');
    while (!fields.empty() && fields.back().empty()) fields.pop_back();
    if (fields.size() != dim + 1 || fields[0].empty())
      throw validation_error("expected token and " + std::to_string(dim) + " values at line " +
                             std::to_string(line_no));
    auto r = static_cast<Eigen::Index>(tokens.size());
    for (std::size_t k = 0; k < dim; ++k) {
      double v = 0;
      if (!io::parse_double(fields[k + 1], v) || !std::isfinite(v))
        throw validation_error("bad value '" + std::string(fields[k + 1]) + "' at line " +
                               std::to_string(line_no));
      rows(r, static_cast<Eigen::Index>(k)) = v;
    }
    tokens.emplace_back(fields[0]);
  }
  if (in.bad()) throw io_error("read failure at line " + std::to_string(line_no + 1));
  if (tokens.size() != n)
    throw validation_error("header declares " + std::to_string(n) + " rows, found " +
                           std::to_string(tokens.size()));
  return embedding_table(std::move(tokens), std::move(rows));
}

inline void save_embeddings(const embedding_table& table, const std::filesystem::path& path) {
  io::write_atomic(path, [&](std::ostream& out) { write_embeddings(table, out); });
}

inline embedding_table load_embeddings(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  try {
    return read_embeddings(in);
  } catch (const error& e) {
    throw error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace legros
