#ifndef WMDX_PARALLEL_HPP
#define WMDX_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace wmdx {

/// Turns a requested worker count into an actual one (0 = hardware).
inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Runs fn(begin, end) over contiguous chunks of [0, count) on `threads`
/// workers. Chunk boundaries depend only on count and the worker count, so
/// writes into preallocated per-index slots stay deterministic. The first
/// exception (by chunk order) is rethrown after all workers join.
template <typename Fn>
void parallel_chunks(std::size_t count, unsigned threads, Fn&& fn) {
    const unsigned workers = resolve_threads(threads);
    if (count == 0) return;
    if (workers <= 1 || count == 1) {
        fn(std::size_t{0}, count);
        return;
    }
    const std::size_t nchunks = std::min<std::size_t>(workers, count);
    std::vector<std::exception_ptr> errors(nchunks);
    std::vector<std::thread> pool;
    pool.reserve(nchunks);
    for (std::size_t c = 0; c < nchunks; ++c) {
        const std::size_t begin = count * c / nchunks;
        const std::size_t end = count * (c + 1) / nchunks;
        pool.emplace_back([&, c, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
}

} // namespace wmdx

#endif
