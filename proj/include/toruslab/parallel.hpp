#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace toruslab {

/// Run body(i) for i in [0, count) on up to `threads` workers.
/// Work is handed out dynamically; the first exception thrown is rethrown.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
}

/// Sum `parts` by a fixed binary tree so the result is independent of how the
/// parts were computed. `add(a, b)` accumulates b into a. Consumes the input.
template <class T, class Add>
T pairwise_reduce(std::vector<T> parts, Add&& add) {
  if (parts.empty()) return T{};
  for (std::size_t stride = 1; stride < parts.size(); stride *= 2) {
    for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) {
      add(parts[i], parts[i + stride]);
    }
  }
  return std::move(parts.front());
}

/// Sum of per-item contributions over [0, count) into a vector of `length`
/// entries. Items are grouped in fixed blocks of `block` and the block sums
/// are pairwise reduced, so the result does not depend on `threads`.
/// body(first, last, acc) adds items [first, last) into acc.
template <class T, class Body>
std::vector<T> blocked_sum(std::size_t count, std::size_t length, unsigned threads, Body&& body,
                           std::size_t block = 8) {
  const std::size_t blocks = (count + block - 1) / block;
  std::vector<std::vector<T>> partial(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    partial[b].assign(length, T{});
    body(b * block, std::min(count, (b + 1) * block), partial[b]);
  });
  if (partial.empty()) return std::vector<T>(length);
  return pairwise_reduce(std::move(partial), [](std::vector<T>& acc, const std::vector<T>& more) {
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += more[k];
  });
}

}  // namespace toruslab
