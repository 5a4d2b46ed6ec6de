#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace legros {

// Half-open index range handed to one worker.
struct shard {
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline std::vector<shard> make_shards(std::size_t n, std::size_t parts) {
  parts = std::max<std::size_t>(1, std::min(parts, std::max<std::size_t>(n, 1)));
  std::vector<shard> shards;
  shards.reserve(parts);
  for (std::size_t p = 0; p < parts; ++p)
    shards.push_back({n * p / parts, n * (p + 1) / parts});
  return shards;
}

// Runs fn(shard_index, shard) for every shard, on up to `threads` threads.
// The first exception thrown by any worker is rethrown on the caller.
template <typename Fn>
void for_each_shard(const std::vector<shard>& shards, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || shards.size() <= 1) {
    for (std::size_t i = 0; i < shards.size(); ++i) fn(i, shards[i]);
    return;
  }
  std::vector<std::exception_ptr> errors(shards.size());
  std::vector<std::thread> pool;
  const std::size_t workers = std::min(threads, shards.size());
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < shards.size(); i += workers) {
        try {
          fn(i, shards[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace legros
