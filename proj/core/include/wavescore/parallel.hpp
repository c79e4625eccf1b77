#ifndef WAVESCORE_PARALLEL_HPP
#define WAVESCORE_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace wavescore {

/// Worker count: min(WAVESCORE_THREADS, hardware concurrency), at least 1.
int thread_count();

/// Override the worker count (0 restores the environment/hardware default).
void set_thread_count(int n);

/// Run fn(begin, end) over a static contiguous partition of [0, n).
/// Results must be written to disjoint locations per index; with that
/// contract the output is bit-identical for any worker count.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace wavescore

#endif  // WAVESCORE_PARALLEL_HPP
