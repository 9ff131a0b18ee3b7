#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lbs {

/// Fixed chunk size for path-parallel loops. Reductions are accumulated per
/// chunk and combined in chunk order, so results do not depend on the number
/// of workers.
inline constexpr std::size_t kChunk = 1024;

inline std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

/// Runs body(chunk_index, begin, end) for every chunk of [0, n) on up to
/// `threads` workers. Exceptions are rethrown on the calling thread.
template <class Body>
void parallel_chunks(std::size_t n, unsigned threads, Body&& body) {
    const std::size_t chunks = chunk_count(n);
    if (chunks == 0) return;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), chunks));
    auto run = [&](std::size_t c) { body(c, c * kChunk, std::min(n, (c + 1) * kChunk)); };
    if (workers == 1) {
        for (std::size_t c = 0; c < chunks; ++c) run(c);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t c = w; c < chunks; c += workers) run(c);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace lbs
