#pragma once

#include <algorithm>
#include <barrier>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace softdtw {

inline unsigned resolve_threads(unsigned requested)
{
    if (requested != 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Splits [0, count) into one contiguous chunk per worker and runs
/// fn(begin, end) on each. Serial when a single worker suffices.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn &&fn)
{
    const unsigned w = resolve_threads(threads);
    if (w <= 1 || count <= 1) {
        fn(std::size_t{0}, count);
        return;
    }
    const std::size_t chunk = (count + w - 1) / w;
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (unsigned t = 0; t < w; ++t) {
        const std::size_t begin = std::min(count, t * chunk);
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto &t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

/// A fixed team of workers stepping through a sequence of barrier-separated
/// phases. body(worker_id, workers, barrier_wait) is run on every worker and
/// must not throw (signal errors through shared state and check after the
/// sweep); barrier_wait() must be called the same number of times by each.
class WorkerTeam {
  public:
    template <class Body>
    static void run(unsigned workers, Body &&body)
    {
        if (workers <= 1) {
            body(0u, 1u, [] {});
            return;
        }
        std::barrier<> bar(workers);
        auto wait = [&bar] { bar.arrive_and_wait(); };
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t)
            pool.emplace_back([&, t] { body(t, workers, wait); });
        for (auto &t : pool) t.join();
    }
};

}  // namespace softdtw
