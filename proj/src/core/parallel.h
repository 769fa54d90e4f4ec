#pragma once

#include <cstdint>
#include <functional>

namespace canonify {

// Sets the worker count for parallel_for. 0 restores the hardware default.
void set_thread_count(int n);
int thread_count();

// Runs fn(begin, end) over a fixed contiguous partition of [0, n).
// Each index is processed by exactly one invocation, so results are
// bitwise independent of the worker count as long as invocations only
// write to their own indices.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

// Convenience wrapper calling fn(i) per index.
void parallel_for_each(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace canonify
