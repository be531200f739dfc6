#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "kcm/rng.hpp"

namespace kcm {

// Worker count: KCM_WORKERS if set, else hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("KCM_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs f(i) for i in [0, count) on a pool of workers; f must only write slot i.
template <class F>
void parallel_for(std::size_t count, F&& f, unsigned workers = 0) {
    if (workers == 0) workers = worker_count();
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= count) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lk(err_mu);
                    if (!err) err = std::current_exception();
                    next.store(count);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

// Per-replica seed derived from a master seed.
constexpr std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica) {
    const auto c = rng::philox4x32({static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32),
                                    0x52455031u, 0x0u},
                                   rng::seed_key(seed));
    return (static_cast<std::uint64_t>(c[0]) << 32) | c[1];
}

}  // namespace kcm
