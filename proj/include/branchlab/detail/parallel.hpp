#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace branchlab::detail
{

// Call fn(i) for i in [0, count) on up to `threads` workers (0: hardware
// concurrency). Each index is handled exactly once; fn must only write
// state owned by its index.
template<class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn)
{
    if (threads == 0)
    {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < count; i = next++)
        {
            fn(i);
        }
    };
    if (threads <= 1)
    {
        worker();
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i)
    {
        pool.emplace_back(worker);
    }
}

}  // namespace branchlab::detail
