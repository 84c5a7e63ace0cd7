#include "gsjbu/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "gsjbu/planar_map.hpp"

namespace gsjbu {

namespace {

std::atomic<int> g_threads{0};

int resolve(int n) {
    if (n > 0)
        return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

} // namespace

void set_thread_count(int n) {
    if (n < 0)
        throw InvalidInput("thread count must be >= 0, got " + std::to_string(n));
    g_threads.store(n);
}

int thread_count() {
    return resolve(g_threads.load());
}

void parallel_for_rows(int rows, const std::function<void(int)>& fn) {
    int workers = std::min(thread_count(), rows);
    if (workers <= 1) {
        for (int r = 0; r < rows; ++r)
            fn(r);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto body = [&] {
        try {
            for (int r = next.fetch_add(1); r < rows; r = next.fetch_add(1))
                fn(r);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!error)
                error = std::current_exception();
            next.store(rows); // stop the other workers
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int i = 1; i < workers; ++i)
        pool.emplace_back(body);
    body();
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace gsjbu
