#pragma once

#include <cstddef>
#include <functional>

namespace stabpade {

// Process-wide cap on worker threads; 0 means hardware concurrency.
void set_thread_count(unsigned count);
unsigned thread_count();

// Runs body(i) for i in [0, n).  Results must be written to per-index slots;
// if any call throws, the exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace stabpade
