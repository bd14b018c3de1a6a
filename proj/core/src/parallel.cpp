#include "rytov/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace rytov {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads.store(std::max(1, n)); }
int thread_count() { return g_threads.load(); }

namespace detail {

void for_each_chunk(std::size_t n,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& worker) {
    const std::size_t chunks = chunk_count(n);
    const int nw = std::min<std::size_t>(thread_count(), chunks);
    if (nw <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) {
            worker(c, c * kChunk, std::min(n, (c + 1) * kChunk));
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            worker(c, c * kChunk, std::min(n, (c + 1) * kChunk));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(nw - 1);
    for (int t = 1; t < nw; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    for_each_chunk(n, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) body(i);
    });
}

}  // namespace detail
}  // namespace rytov
