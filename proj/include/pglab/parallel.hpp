#pragma once

#include <algorithm>
#include <future>
#include <thread>
#include <vector>

namespace pglab {

// Order-stable parallel map: output i always comes from items[i], whatever
// the worker count, so parallel runs are byte-identical to serial ones.
// Items are split into contiguous chunks, one task per chunk.
template <typename T, typename Fn>
auto parallel_map(const std::vector<T>& items, Fn fn, std::size_t workers = 0)
    -> std::vector<decltype(fn(items.front()))> {
    using Out = decltype(fn(items.front()));
    std::vector<Out> out(items.size());
    if (items.empty()) return out;
    if (workers == 0) workers = std::max<std::size_t>(std::thread::hardware_concurrency(), 1);
    workers = std::min(workers, items.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < items.size(); ++i) out[i] = fn(items[i]);
        return out;
    }
    const std::size_t chunk = (items.size() + workers - 1) / workers;
    std::vector<std::future<void>> tasks;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(lo + chunk, items.size());
        if (lo >= hi) break;
        tasks.push_back(std::async(std::launch::async, [&items, &out, &fn, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) out[i] = fn(items[i]);
        }));
    }
    for (auto& t : tasks) t.get();
    return out;
}

}  // namespace pglab
