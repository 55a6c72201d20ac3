#include "graphixs/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace graphixs {

int thread_count() {
    const char* env = std::getenv("GRAPHIXS_THREADS");
    if (!env) return 1;
    const int n = std::atoi(env);
    if (n <= 0) return 1;
    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    return std::min(n, std::max(1, hw));
}

int num_chunks(std::size_t n) {
    const int threads = thread_count();
    return static_cast<int>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
}

void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t, int)>& fn) {
    if (n == 0) return;
    const int chunks = num_chunks(n);
    if (chunks == 1) {
        fn(0, n, 0);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(chunks);
    const std::size_t per = (n + chunks - 1) / chunks;
    for (int c = 0; c < chunks; ++c) {
        const std::size_t begin = per * c;
        const std::size_t end = std::min(n, begin + per);
        if (begin >= end) break;
        workers.emplace_back([&fn, begin, end, c] { fn(begin, end, c); });
    }
    for (auto& w : workers) w.join();
}

} // namespace graphixs
