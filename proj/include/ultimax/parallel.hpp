/**
 * @file parallel.hpp
 * @brief Deterministic block-parallel loops.
 *
 * Work items are cut into fixed-size blocks independent of the thread count.
 * Each block produces a partial result; partials are combined in block order,
 * so the reduction is bit-identical for any number of threads.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace ultimax {

inline constexpr std::size_t kParallelBlock = 4096;

/// Process-wide default for the number of worker threads (CLI --threads).
inline std::size_t& default_threads() {
    static std::size_t threads = 1;
    return threads;
}

/**
 * Runs body(begin, end, partial) over [0, n) in blocks, then folds the
 * partials in block order with combine(total, partial).
 */
template <typename Partial, typename Body, typename Combine>
Partial parallel_reduce(std::size_t n, std::size_t threads, Body body, Combine combine,
                        Partial init = Partial{}) {
    const std::size_t n_blocks = (n + kParallelBlock - 1) / kParallelBlock;
    std::vector<Partial> partials(n_blocks, init);
    auto run_block = [&](std::size_t b) {
        const std::size_t begin = b * kParallelBlock;
        const std::size_t end = std::min(n, begin + kParallelBlock);
        body(begin, end, partials[b]);
    };

    threads = std::max<std::size_t>(1, std::min(threads, n_blocks));
    if (threads == 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t b = next++; b < n_blocks && !failed; b = next++) {
                    try {
                        run_block(b);
                    } catch (...) {
                        if (!failed.exchange(true)) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    Partial total = init;
    for (auto& p : partials) combine(total, p);
    return total;
}

/// Unordered side-effect loop over [0, n); body(i) must write disjoint data.
template <typename Body>
void parallel_for(std::size_t n, std::size_t threads, Body body) {
    struct Nothing {};
    parallel_reduce<Nothing>(
        n, threads,
        [&](std::size_t begin, std::size_t end, Nothing&) {
            for (std::size_t i = begin; i < end; ++i) body(i);
        },
        [](Nothing&, Nothing&) {});
}

}  // namespace ultimax
