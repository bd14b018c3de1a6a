#pragma once

#include <cstddef>
#include <functional>

namespace rytov {

/// Worker count used by internal parallel loops. Results never depend on it:
/// work is split into fixed-size chunks and reductions run in chunk order.
void set_thread_count(int n);
int thread_count();

namespace detail {

constexpr std::size_t kChunk = 1024;

inline std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

/// Runs worker(chunk_index, begin, end) for every chunk of [0, n). Chunk
/// boundaries are fixed, so per-chunk outputs are identical for any worker
/// count; callers combine them sequentially by chunk index.
void for_each_chunk(std::size_t n,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& worker);

/// Runs body(i) for i in [0, n) with deterministic independent iterations.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace detail
}  // namespace rytov
