#pragma once

#include <cstddef>
#include <functional>

namespace rn {

// Thread count from RN_DEGEN_THREADS (default: hardware concurrency, at least 1).
std::size_t worker_count();

// Runs body(i) for i in [0, n). Exceptions from workers are rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rn
