#include "l2ac/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace l2ac {

int thread_hint() {
    const char* env = std::getenv("L2AC_THREADS");
    if (!env) return 1;
    const int n = std::atoi(env);
    return n < 1 ? 1 : n;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }

    const int workers = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        // Contiguous chunks: worker w handles [w*chunk, min((w+1)*chunk, n)).
        const int chunk = (n + workers - 1) / workers;
        const int begin = w * chunk;
        const int end = std::min(begin + chunk, n);
        if (begin >= end) break;
        pool.emplace_back([begin, end, &fn] {
            for (int i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace l2ac
