#include "thinlimit/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace thinlimit {

int worker_count()
{
    if (const char* env = std::getenv("THINLIMIT_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body)
{
    constexpr std::size_t chunk = 256;
    const std::size_t chunks = (count + chunk - 1) / chunk;
    const int workers = static_cast<int>(std::min<std::size_t>(worker_count(), chunks));
    if (workers <= 1) {
        if (count) body(0, count);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (std::size_t c = next++; c < chunks; c = next++) {
            try {
                body(c * chunk, std::min(count, (c + 1) * chunk));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace thinlimit
