#pragma once

#include "loorisk/types.hpp"

#include <atomic>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace loorisk {

/// Thread count: explicit request, else LOORISK_THREADS, else hardware concurrency.
int resolve_threads(std::optional<int> requested = std::nullopt);

/// Calls fn(k) for k in [0, count) on up to `threads` workers. Work items
/// must write only to their own slots. If any item throws, the exception of
/// the lowest failing index is rethrown after all workers finish.
template <typename F>
void parallel_for(Index count, int threads, F&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  const auto run = [&](Index k) {
    try {
      fn(k);
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  };
  if (threads <= 1 || count <= 1) {
    for (Index k = 0; k < count; ++k) run(k);
  } else {
    std::atomic<Index> next{0};
    std::vector<std::jthread> pool;
    const Index workers = std::min<Index>(threads, count);
    for (Index w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (Index k = next++; k < count; k = next++) run(k);
      });
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace loorisk
