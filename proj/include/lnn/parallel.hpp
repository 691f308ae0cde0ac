#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <initializer_list>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace lnn {

inline unsigned default_threads()
{
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1u : n;
}

//! Runs f(i) for i in [0, n) on up to `threads` workers. Work items must
//! write to disjoint outputs; the schedule does not affect results. The
//! exception raised by the lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f)
{
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            f(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::atomic<std::size_t> next{0};
    std::mutex mtx;
    std::size_t failed_at = n;
    std::exception_ptr failure;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mtx);
                if (i < failed_at) {
                    failed_at = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w)
        pool.emplace_back(run);
    run();
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

using Rng = std::mt19937_64;

//! Stage tags mixed into substream seeds so that different uses of the same
//! (seed, index) pair never share random numbers.
enum class Stage : std::uint64_t {
    data = 0x64617461,
    regressors = 0x72656772,
    errors = 0x6572726f,
    bootstrap = 0x626f6f74,
    kernel = 0x6b65726e,
};

//! Generator for the substream identified by the master seed and a list of
//! counters (replication index, stage, ...).
inline Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
{
    std::vector<std::uint32_t> words;
    words.reserve(2 * (keys.size() + 1));
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto k : keys)
        push(k);
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

inline Rng substream(std::uint64_t seed, Stage stage, std::uint64_t index)
{
    return substream(seed, {static_cast<std::uint64_t>(stage), index});
}

} // namespace lnn
