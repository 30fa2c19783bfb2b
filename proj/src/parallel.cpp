#include "idcv/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace idcv {

namespace {
int g_thread_cap = 0;
thread_local bool t_in_worker = false;
}

void set_thread_cap(int n) { g_thread_cap = n < 0 ? 0 : n; }

int thread_cap() {
    if (g_thread_cap > 0) return g_thread_cap;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int count, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    // Nested calls run serially; the outer loop already owns the workers.
    const int workers = t_in_worker ? 1 : std::min(thread_cap(), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&]() {
            t_in_worker = true;
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace idcv
