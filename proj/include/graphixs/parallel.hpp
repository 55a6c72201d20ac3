/// @file parallel.hpp
/// @brief Deterministic chunked parallel-for.
///
/// Thread count comes from the GRAPHIXS_THREADS environment variable; unset
/// or 0 selects single-thread mode. Work is split into contiguous index
/// chunks and callers merge per-chunk results in chunk order, so a given
/// thread count always produces the same reduction order.

#pragma once

#include <cstddef>
#include <functional>

namespace graphixs {

int thread_count();

/// Invokes fn(begin, end, chunk_index) over disjoint contiguous ranges that
/// cover [0, n). chunk_index is dense in [0, num_chunks).
void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t, int)>& fn);

int num_chunks(std::size_t n);

} // namespace graphixs
