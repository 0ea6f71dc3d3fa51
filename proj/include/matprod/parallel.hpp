#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace matprod {

// --workers value if positive, else MATPROD_WORKERS, else hardware concurrency
inline unsigned resolve_workers(int requested = 0)
{
    if (requested > 0)
        return unsigned(requested);
    if (const char* env = std::getenv("MATPROD_WORKERS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0)
                return unsigned(v);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, count). Results must be written by index so the
// outcome does not depend on scheduling.
template <class F>
void parallel_for(std::size_t count, F&& body, int workers = 0)
{
    const unsigned w = std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(count, 1));
    if (w <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    auto run = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lk(mu);
                if (!err)
                    err = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < w; ++t)
        pool.emplace_back(run);
    for (auto& t : pool)
        t.join();
    if (err)
        std::rethrow_exception(err);
}

} // namespace matprod
