#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace legros::utf8 {

// Length in bytes of the sequence introduced by lead byte `c`, 0 if invalid.
inline std::size_t sequence_length(unsigned char c) {
  if (c < 0x80) return 1;
  if ((c >> 5) == 0x6) return 2;
  if ((c >> 4) == 0xe) return 3;
  if ((c >> 3) == 0x1e) return 4;
  return 0;
}

inline bool is_valid(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t len = sequence_length(static_cast<unsigned char>(s[i]));
    if (len == 0 || i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(s[i + k]) & 0xc0) != 0x80) return false;
    i += len;
  }
  return true;
}

// Byte offsets of every character start, followed by s.size().
// Invalid bytes are treated as one-byte characters.
inline std::vector<std::size_t> char_offsets(std::string_view s) {
  std::vector<std::size_t> offsets;
  offsets.reserve(s.size() + 1);
  std::size_t i = 0;
  while (i < s.size()) {
    offsets.push_back(i);
    std::size_t len = sequence_length(static_cast<unsigned char>(s[i]));
    if (len == 0 || i + len > s.size()) len = 1;
    i += len;
  }
  offsets.push_back(s.size());
  return offsets;
}

inline std::size_t char_count(std::string_view s) {
  return char_offsets(s).size() - 1;
}

inline std::vector<std::string> split_chars(std::string_view s) {
  auto offsets = char_offsets(s);
  std::vector<std::string> chars;
  chars.reserve(offsets.size() - 1);
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i)
    chars.emplace_back(s.substr(offsets[i], offsets[i + 1] - offsets[i]));
  return chars;
}

}  // namespace legros::utf8
